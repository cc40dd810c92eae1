#include "halluc/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "halluc/error.hpp"
#include "halluc/infill.hpp"

namespace halluc {

namespace {

using ojson = nlohmann::ordered_json;

std::string join(const std::vector<std::string>& pieces) {
    std::string out;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        if (i) out += ' ';
        out += pieces[i];
    }
    return out;
}

std::ofstream create(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path);
    return out;
}

std::unique_ptr<Infiller> make_infiller(const PipelineConfig& cfg, const Vocab& vocab) {
    switch (cfg.infiller) {
        case InfillerKind::identity:
            return std::make_unique<IdentityInfiller>();
        case InfillerKind::stochastic:
            return std::make_unique<StochasticInfiller>(vocab);
        case InfillerKind::remote: {
            if (cfg.endpoint.empty()) throw InputError("remote infiller needs --endpoint or HALLUC_ENDPOINT");
            auto remote = std::make_unique<RemoteInfiller>(ServiceOptions{cfg.endpoint, cfg.max_inflight});
            if (!remote->client().healthy()) throw TransportError("inference service at " + cfg.endpoint + " is not ready");
            return remote;
        }
    }
    throw InputError("unknown infiller");
}

}  // namespace

std::optional<Task> parse_task(std::string_view name) {
    if (name == "mt") return Task::mt;
    if (name == "summarization") return Task::summarization;
    return std::nullopt;
}

std::optional<InfillerKind> parse_infiller(std::string_view name) {
    if (name == "identity") return InfillerKind::identity;
    if (name == "stochastic") return InfillerKind::stochastic;
    if (name == "remote") return InfillerKind::remote;
    return std::nullopt;
}

PipelineConfig PipelineConfig::preset(Task task) {
    PipelineConfig cfg;
    cfg.task = task;
    if (task == Task::mt) {
        cfg.noise.max_mask = 0.6;
        cfg.noise.max_replace = 0.3;
        cfg.train.dropout_rate = 0.3;
        cfg.train.alpha = 0.6;
    } else {
        cfg.noise.max_mask = 0.4;
        cfg.noise.max_replace = 0.2;
        cfg.train.dropout_rate = 0.5;
        cfg.train.alpha = 0.5;
    }
    cfg.noise.insert_rate = 0.2;
    cfg.train.mlm_mask_prob = 0.3;
    cfg.apply_seed(cfg.seed);
    return cfg;
}

void PipelineConfig::apply_seed(std::uint64_t value) {
    seed = value;
    noise.seed = value;
    train.seed = value;
}

std::string SynthesisSummary::to_text(const PipelineConfig& cfg) const {
    std::ostringstream os;
    os << "task: " << (cfg.task == Task::mt ? "mt" : "summarization") << "\n"
       << "h_m: " << cfg.noise.max_mask << "\n"
       << "h_r: " << cfg.noise.max_replace << "\n"
       << "p_ins: " << cfg.noise.insert_rate << "\n"
       << "dropout: " << cfg.train.dropout_rate << "\n"
       << "mlm_prob: " << cfg.train.mlm_mask_prob << "\n"
       << "alpha: " << cfg.train.alpha << "\n"
       << "records: " << records << "\n"
       << "mean_label_density: " << mean_label_density << "\n"
       << "mean_mask_rate: " << mean_mask_rate << "\n"
       << "mean_replace_rate: " << mean_replace_rate << "\n"
       << "inserted_masks: " << inserted_masks << "\n";
    return os.str();
}

std::string training_example_json(const SyntheticRecord& rec) {
    ojson j;
    j["id"] = rec.record_id;
    j["source"] = join(rec.example.segment(Segment::source));
    j["reference"] = join(rec.example.segment(Segment::reference));
    j["target_prime"] = join(rec.example.segment(Segment::target));
    j["labels"] = std::vector<int>(rec.example.labels.begin(), rec.example.labels.end());
    return j.dump();
}

std::string mlm_example_json(const SyntheticRecord& rec) {
    ojson j;
    j["id"] = rec.record_id;
    j["masked_pieces"] = rec.mlm.pieces;
    j["mask_positions"] = rec.mlm.mask_positions;
    j["originals"] = rec.mlm.originals;
    return j.dump();
}

SynthesisSummary cmd_synthesize(const PipelineConfig& cfg) {
    if (cfg.output_dir.empty()) throw InputError("no output directory given");
    const auto format = cfg.format.value_or(guess_bitext_format(cfg.input));
    const auto bitext = load_bitext(cfg.input, format, cfg.markers);
    if (bitext.empty()) throw InputError(cfg.input + " contains no records");
    const auto vocab = build_vocab(bitext);
    const auto infiller = make_infiller(cfg, vocab);

    SynthesisOptions opts;
    opts.noise = cfg.noise;
    opts.train = cfg.train;
    opts.markers = cfg.markers;
    opts.use_paraphrase = cfg.use_paraphrase;
    opts.beam_size = cfg.beam_size;
    opts.length_penalty = cfg.length_penalty;
    opts.workers = cfg.workers;
    const auto records = build_synthetic_dataset(bitext, vocab, *infiller, opts);

    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw InputError("cannot create " + cfg.output_dir + ": " + ec.message());
    const auto dir = std::filesystem::path(cfg.output_dir);
    SynthesisSummary summary;
    summary.train_path = (dir / "train.jsonl").string();
    summary.mlm_path = (dir / "mlm.jsonl").string();
    summary.noised_path = (dir / "noised.tsv").string();
    auto train = create(summary.train_path);
    auto mlm = create(summary.mlm_path);
    auto noised = create(summary.noised_path);

    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        train << training_example_json(rec) << '\n';
        mlm << mlm_example_json(rec) << '\n';
        noised << bitext[i].source.text() << '\t' << rec.base.text() << '\t' << join(rec.noised.tokens()) << '\n';

        const auto& labels = rec.hallucinated.labels;
        const auto ones = static_cast<double>(std::count(labels.begin(), labels.end(), Label{1}));
        summary.mean_label_density += ones / static_cast<double>(labels.size());
        summary.mean_mask_rate += rec.rates.mask;
        summary.mean_replace_rate += rec.rates.replace;
        summary.inserted_masks += rec.noised.count(Origin::inserted_mask);
    }
    summary.records = records.size();
    const auto n = static_cast<double>(records.size());
    summary.mean_label_density /= n;
    summary.mean_mask_rate /= n;
    summary.mean_replace_rate /= n;
    return summary;
}

std::vector<EvalRecord> join_predictions(const std::vector<EvalRecord>& gold, const std::vector<EvalRecord>& pred) {
    std::unordered_map<std::string, const EvalRecord*> by_id;
    for (const auto& p : pred) {
        if (!by_id.emplace(p.id, &p).second) throw InputError("record " + p.id + ": duplicate prediction id");
    }
    std::set<std::string> seen;
    std::vector<EvalRecord> out;
    out.reserve(gold.size());
    for (const auto& g : gold) {
        if (!seen.insert(g.id).second) throw InputError("record " + g.id + ": duplicate gold id");
        auto it = by_id.find(g.id);
        if (it == by_id.end()) throw InputError("record " + g.id + ": no prediction");
        const auto& p = *it->second;
        if (!p.output.empty() && p.output != g.output)
            throw InputError("record " + g.id + ": prediction output differs from gold output");
        EvalRecord merged = g;
        merged.pred_labels = p.pred_labels;
        merged.pred_probs = p.pred_probs;
        for (const auto& [name, v] : p.external_scores) merged.external_scores[name] = v;
        merged.validate();
        out.push_back(std::move(merged));
    }
    for (const auto& p : pred) {
        if (!seen.count(p.id)) throw InputError("record " + p.id + ": prediction without gold record");
    }
    return out;
}

EvalReport cmd_evaluate(const std::string& gold_path, const std::string& pred_path, const std::string& report_path) {
    auto gold = load_eval_records(gold_path);
    std::vector<EvalRecord> records;
    if (pred_path.empty()) {
        for (const auto& r : gold) r.validate();
        records = std::move(gold);
    } else {
        records = join_predictions(gold, load_eval_records(pred_path));
    }
    auto report = evaluate(records);
    if (!report_path.empty()) create(report_path) << report.to_json();
    return report;
}

std::string AgreementReport::to_json() const {
    ojson j;
    j["annotators"] = annotators;
    j["sentences"] = sentences;
    j["tokens"] = tokens;
    j["token_kappa"] = token_kappa ? ojson(*token_kappa) : ojson(nullptr);
    j["sentence_kappa"] = sentence_kappa ? ojson(*sentence_kappa) : ojson(nullptr);
    j["dropped_incomprehensible"] = dropped_incomprehensible;
    j["benchmark_sentences"] = benchmark_sentences;
    return j.dump(2) + "\n";
}

AgreementReport cmd_agreement(const std::vector<std::string>& annotation_paths,
                              const std::vector<std::string>& rating_paths, const std::string& benchmark_path,
                              const std::string& report_path) {
    if (annotation_paths.size() < 2) throw InputError("agreement needs at least two annotation files");
    if (!rating_paths.empty() && rating_paths.size() != annotation_paths.size())
        throw InputError("need one rating file per annotation file");

    std::vector<std::vector<LabeledSeq>> per_annotator;
    for (const auto& path : annotation_paths) per_annotator.push_back(load_annotations(path));
    std::vector<std::vector<SentenceRating>> ratings;
    for (const auto& path : rating_paths) ratings.push_back(load_ratings(path));

    // Validates alignment (same sentence count, same tokens) before any statistic.
    auto consolidated = consolidate(per_annotator, ratings);

    AgreementReport report;
    report.annotators = per_annotator.size();
    report.sentences = per_annotator.front().size();
    report.dropped_incomprehensible = consolidated.dropped_incomprehensible;
    report.benchmark_sentences = consolidated.benchmark.size();

    std::vector<std::vector<Labels>> sentences(report.sentences);
    for (std::size_t s = 0; s < report.sentences; ++s) {
        for (const auto& a : per_annotator) sentences[s].push_back(a[s].labels);
        report.tokens += per_annotator.front()[s].tokens.size();
    }
    try {
        report.token_kappa = fleiss_kappa(RatingMatrix::from_token_labels(sentences));
    } catch (const DegenerateError&) {
    }
    if (!ratings.empty() && report.sentences > 0) {
        std::vector<std::vector<std::size_t>> counts(report.sentences, std::vector<std::size_t>(3, 0));
        for (const auto& r : ratings) {
            for (std::size_t s = 0; s < report.sentences; ++s) ++counts[s][static_cast<int>(r[s])];
        }
        try {
            report.sentence_kappa = fleiss_kappa(RatingMatrix(std::move(counts)));
        } catch (const DegenerateError&) {
        }
    }

    if (!benchmark_path.empty()) {
        auto out = create(benchmark_path);
        for (const auto& seq : consolidated.benchmark) out << serialize_annotation_line(seq) << '\n';
    }
    if (!report_path.empty()) create(report_path) << report.to_json();
    return report;
}

}  // namespace halluc
