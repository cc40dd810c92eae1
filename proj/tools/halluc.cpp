// Command-line front end: synthesize, evaluate, agreement.
//
// Exit codes: 0 success, 1 input error, 2 inference-service error,
// 3 internal invariant violation.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "halluc/error.hpp"
#include "halluc/parallel.hpp"
#include "halluc/pipeline.hpp"

namespace {

struct Overrides {
    std::string task = "mt";
    std::uint64_t seed = 1;
    std::optional<double> hm, hr, p_ins, dropout, mlm_prob, alpha;
    std::string infiller = "identity";
    std::string endpoint;
    std::size_t workers = halluc::default_workers();
    std::size_t max_inflight = 8;
    bool use_paraphrase = false;
    bool no_mlm_source = false;
    int beam_size = 4;
    double length_penalty = 3.0;
    std::string input, output, format, mask = "<mask>", sep = "</s>";
};

halluc::PipelineConfig resolve(const Overrides& o) {
    auto task = halluc::parse_task(o.task);
    if (!task) throw halluc::InputError("unknown task '" + o.task + "'");
    auto cfg = halluc::PipelineConfig::preset(*task);
    cfg.apply_seed(o.seed);
    if (o.hm) cfg.noise.max_mask = *o.hm;
    if (o.hr) cfg.noise.max_replace = *o.hr;
    if (o.p_ins) cfg.noise.insert_rate = *o.p_ins;
    if (o.dropout) cfg.train.dropout_rate = *o.dropout;
    if (o.mlm_prob) cfg.train.mlm_mask_prob = *o.mlm_prob;
    if (o.alpha) cfg.train.alpha = *o.alpha;
    cfg.train.mlm_mask_source = !o.no_mlm_source;

    auto kind = halluc::parse_infiller(o.infiller);
    if (!kind) throw halluc::InputError("unknown infiller '" + o.infiller + "'");
    cfg.infiller = *kind;
    cfg.endpoint = o.endpoint;
    if (cfg.endpoint.empty()) {
        if (const char* env = std::getenv("HALLUC_ENDPOINT")) cfg.endpoint = env;
    }
    cfg.max_inflight = o.max_inflight;
    cfg.workers = o.workers;
    cfg.use_paraphrase = o.use_paraphrase;
    cfg.beam_size = o.beam_size;
    cfg.length_penalty = o.length_penalty;
    cfg.markers.mask = o.mask;
    cfg.markers.sep = o.sep;
    cfg.input = o.input;
    cfg.output_dir = o.output;
    if (o.format == "tsv") cfg.format = halluc::BitextFormat::tsv;
    else if (o.format == "jsonl") cfg.format = halluc::BitextFormat::jsonl;
    else if (!o.format.empty()) throw halluc::InputError("unknown format '" + o.format + "'");
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic hallucination data and token-level hallucination evaluation"};
    app.require_subcommand(1);

    Overrides o;
    auto* synth = app.add_subcommand("synthesize", "noise, infill and label a bitext corpus");
    synth->add_option("-i,--input", o.input, "bitext (tsv or jsonl)")->required();
    synth->add_option("-o,--output", o.output, "output directory")->required();
    synth->add_option("--format", o.format, "tsv or jsonl (default: by extension)");
    synth->add_option("--task", o.task, "mt or summarization")->capture_default_str();
    synth->add_option("--seed", o.seed)->capture_default_str();
    synth->add_option("--hm", o.hm, "upper bound of the per-sentence mask rate");
    synth->add_option("--hr", o.hr, "upper bound of the per-sentence replacement rate");
    synth->add_option("--p-ins", o.p_ins, "mask insertion rate");
    synth->add_option("--dropout", o.dropout, "reference token dropout rate");
    synth->add_option("--mlm-prob", o.mlm_prob, "MLM mask probability");
    synth->add_option("--alpha", o.alpha, "MLM loss weight recorded for training");
    synth->add_flag("--no-mlm-source", o.no_mlm_source, "mask only the target in MLM examples");
    synth->add_option("--infiller", o.infiller, "identity, stochastic or remote")->capture_default_str();
    synth->add_option("--endpoint", o.endpoint, "inference service URL (falls back to HALLUC_ENDPOINT)");
    synth->add_option("--max-inflight", o.max_inflight, "concurrent service requests")->capture_default_str();
    synth->add_option("--workers", o.workers)->capture_default_str();
    synth->add_flag("--use-paraphrase", o.use_paraphrase, "noise the paraphrase column instead of the target");
    synth->add_option("--beam-size", o.beam_size)->capture_default_str();
    synth->add_option("--length-penalty", o.length_penalty)->capture_default_str();
    synth->add_option("--mask-token", o.mask)->capture_default_str();
    synth->add_option("--sep-token", o.sep)->capture_default_str();

    std::string gold, pred, report;
    auto* evaluate = app.add_subcommand("evaluate", "token and sentence level metrics");
    evaluate->add_option("--gold", gold, "gold eval records (jsonl)")->required();
    evaluate->add_option("--pred", pred, "predictions keyed by id (jsonl); omit if gold carries them");
    evaluate->add_option("--report", report, "write the JSON report here");

    std::vector<std::string> annotations, ratings;
    std::string benchmark, agreement_report;
    auto* agreement = app.add_subcommand("agreement", "Fleiss' kappa across annotators");
    agreement->add_option("annotations", annotations, "annotation files, one per annotator")->required();
    agreement->add_option("--ratings", ratings, "sentence rating files, one per annotator");
    agreement->add_option("--benchmark", benchmark, "write the majority-voted annotations here");
    agreement->add_option("--report", agreement_report, "write the JSON report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*synth) {
            const auto cfg = resolve(o);
            const auto summary = halluc::cmd_synthesize(cfg);
            std::cout << summary.to_text(cfg);
        } else if (*evaluate) {
            std::cout << halluc::cmd_evaluate(gold, pred, report).to_json();
        } else if (*agreement) {
            std::cout << halluc::cmd_agreement(annotations, ratings, benchmark, agreement_report).to_json();
        }
    } catch (const halluc::RemoteError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const halluc::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const halluc::DegenerateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
