#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "halluc/corpus.hpp"
#include "halluc/error.hpp"
#include "halluc/eval.hpp"
#include "halluc/infill.hpp"
#include "halluc/labeling.hpp"
#include "halluc/noising.hpp"
#include "halluc/pipeline.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

using Ranges = std::vector<std::pair<std::size_t, std::size_t>>;

const char* op_name(halluc::EditOp op) {
    switch (op) {
        case halluc::EditOp::match: return "match";
        case halluc::EditOp::substitute: return "substitute";
        case halluc::EditOp::remove: return "remove";
        case halluc::EditOp::insert: return "insert";
    }
    return "?";
}

const char* origin_name(halluc::Origin origin) {
    switch (origin) {
        case halluc::Origin::kept: return "kept";
        case halluc::Origin::masked: return "masked";
        case halluc::Origin::replaced: return "replaced";
        case halluc::Origin::inserted_mask: return "inserted_mask";
    }
    return "?";
}

py::object index_or_none(std::size_t i) {
    return i == halluc::EditStep::npos ? py::none() : py::object(py::int_(i));
}

py::dict prf_dict(const halluc::TokenPRF& r) {
    return py::dict("precision"_a = r.precision, "recall"_a = r.recall, "f1"_a = r.f1, "tp"_a = r.tp, "fp"_a = r.fp,
                    "fn"_a = r.fn, "degenerate"_a = r.degenerate);
}

py::object json_loads(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

halluc::NoisedSeq noised_from_tokens(const std::vector<std::string>& tokens, const std::string& mask) {
    halluc::NoisedSeq seq;
    for (const auto& t : tokens)
        seq.items.push_back({t, t == mask ? halluc::Origin::masked : halluc::Origin::kept, t == mask ? "" : t});
    return seq;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Token-level hallucination detection: synthetic data, labels and metrics";

    auto error = py::register_exception<halluc::Error>(m, "Error", PyExc_RuntimeError);
    auto input = py::register_exception<halluc::InputError>(m, "InputError", error.ptr());
    py::register_exception<halluc::ParseError>(m, "ParseError", input.ptr());
    py::register_exception<halluc::DegenerateError>(m, "DegenerateError", error.ptr());
    auto remote = py::register_exception<halluc::RemoteError>(m, "RemoteError", error.ptr());
    py::register_exception<halluc::TransportError>(m, "TransportError", remote.ptr());
    py::register_exception<halluc::ProtocolError>(m, "ProtocolError", remote.ptr());
    py::register_exception<halluc::SentinelError>(m, "SentinelError", remote.ptr());

    m.def(
        "parse_annotation_line",
        [](const std::string& line) {
            auto seq = halluc::parse_annotation_line(line);
            return py::make_tuple(seq.tokens.tokens(), std::vector<int>(seq.labels.begin(), seq.labels.end()));
        },
        "line"_a, "Returns (tokens, labels) for a `word[0] word[1]` line.");
    m.def(
        "serialize_annotation_line",
        [](const std::vector<std::string>& tokens, const halluc::Labels& labels) {
            return halluc::serialize_annotation_line({halluc::TokenSeq(tokens), labels, std::nullopt});
        },
        "tokens"_a, "labels"_a);
    m.def(
        "majority_vote", [](const std::vector<halluc::Labels>& annotations) { return halluc::majority_vote(annotations); },
        "annotations"_a, "Strict per-token majority; ties resolve to 0.");

    m.def(
        "edit_script",
        [](const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
            auto script = halluc::edit_script(hyp, ref);
            py::list steps;
            for (const auto& s : script.steps)
                steps.append(py::make_tuple(op_name(s.op), index_or_none(s.hyp), index_or_none(s.ref)));
            return py::make_tuple(script.cost, steps);
        },
        "hyp"_a, "ref"_a, "Returns (cost, [(op, hyp_index, ref_index), ...]) turning hyp into ref.");
    m.def(
        "assign_labels",
        [](const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
            auto seq = halluc::assign_labels(halluc::TokenSeq(hyp), halluc::TokenSeq(ref));
            return std::vector<int>(seq.labels.begin(), seq.labels.end());
        },
        "hyp"_a, "ref"_a, "1 for hyp tokens removed or substituted on the way to ref.");
    m.def(
        "project_word_labels",
        [](const halluc::Labels& labels, Ranges ranges) {
            return halluc::project_word_labels(labels, halluc::SubwordMap(std::move(ranges)));
        },
        "subword_labels"_a, "ranges"_a);
    m.def(
        "project_word_probs",
        [](const std::vector<double>& probs, Ranges ranges) {
            return halluc::project_word_probs(probs, halluc::SubwordMap(std::move(ranges)));
        },
        "subword_probs"_a, "ranges"_a);

    m.def(
        "token_prf", [](const halluc::Labels& gold, const halluc::Labels& pred) { return prf_dict(halluc::token_prf(gold, pred)); },
        "gold"_a, "pred"_a);
    m.def(
        "hard_labels", [](const std::vector<double>& probs, double t) { return halluc::hard_labels(probs, t); }, "probs"_a,
        "threshold"_a = 0.5);
    m.def(
        "sentence_score_prob", [](const std::vector<double>& probs) { return halluc::sentence_score_prob(probs); },
        "probs"_a);
    m.def(
        "sentence_score_ratio", [](const halluc::Labels& labels) { return halluc::sentence_score_ratio(labels); },
        "labels"_a);
    m.def(
        "spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return halluc::spearman(x, y); },
        "x"_a, "y"_a);
    m.def(
        "fleiss_kappa",
        [](std::vector<std::vector<std::size_t>> counts) { return halluc::fleiss_kappa(halluc::RatingMatrix(std::move(counts))); },
        "counts"_a, "counts[item][category]; every row sums to the same rater count.");
    m.def(
        "token_kappa",
        [](const std::vector<std::vector<halluc::Labels>>& sentences) {
            return halluc::fleiss_kappa(halluc::RatingMatrix::from_token_labels(sentences));
        },
        "sentences"_a, "sentences[s][annotator] is that annotator's label list.");
    m.def(
        "corpus_hallucination_pct",
        [](const std::vector<halluc::Labels>& labels) {
            std::vector<halluc::EvalRecord> records(labels.size());
            for (std::size_t i = 0; i < labels.size(); ++i) {
                records[i].id = std::to_string(i);
                records[i].output = halluc::TokenSeq(std::vector<std::string>(labels[i].size(), "w"));
                records[i].gold_labels = labels[i];
            }
            return halluc::corpus_hallucination_pct(records, halluc::LabelSource::gold);
        },
        "labels"_a);
    m.def(
        "align_score", [](const std::vector<std::vector<double>>& sim) { return halluc::align_score(sim); },
        "similarity"_a, "Fraction of rows whose argmax is mutual.");
    m.def(
        "align_score_tokens",
        [](const std::vector<std::string>& output, const std::vector<std::string>& source,
           const halluc::SimilarityProvider& sim) {
            return halluc::align_score(halluc::TokenSeq(output), halluc::TokenSeq(source), sim);
        },
        "output"_a, "source"_a, "similarity"_a);
    m.def(
        "evaluate_file",
        [](const std::string& gold, const std::string& pred) {
            return json_loads(halluc::cmd_evaluate(gold, pred, {}).to_json());
        },
        "gold"_a, "pred"_a = "", "Joins predictions onto gold records by id and returns the report.");

    m.def(
        "apply_noise",
        [](const std::vector<std::string>& tokens, double mask_rate, double replace_rate, double insert_rate,
           std::map<std::string, std::uint64_t> vocab, std::uint64_t seed) {
            halluc::Rng rng(seed);
            auto seq = halluc::apply_noise(halluc::TokenSeq(tokens), {mask_rate, replace_rate}, insert_rate,
                                           halluc::Vocab(std::move(vocab)), rng);
            std::vector<std::string> origins;
            for (const auto& item : seq.items) origins.emplace_back(origin_name(item.origin));
            return py::make_tuple(seq.tokens(), origins);
        },
        "tokens"_a, "mask_rate"_a, "replace_rate"_a, "insert_rate"_a, "vocab"_a = std::map<std::string, std::uint64_t>{},
        "seed"_a = 0, "Returns (noised_tokens, origins).");

    m.def(
        "synthesize",
        [](const std::vector<std::pair<std::string, std::string>>& pairs, const std::string& task,
           const std::string& infiller, std::uint64_t seed, std::size_t workers) {
            auto kind = halluc::parse_task(task);
            if (!kind) throw halluc::InputError("unknown task '" + task + "'");
            auto which = halluc::parse_infiller(infiller);
            if (!which || *which == halluc::InfillerKind::remote)
                throw halluc::InputError("infiller must be identity or stochastic");
            auto cfg = halluc::PipelineConfig::preset(*kind);
            cfg.apply_seed(seed);
            std::vector<halluc::BitextRecord> bitext;
            for (std::size_t i = 0; i < pairs.size(); ++i)
                bitext.push_back({i, halluc::TokenSeq::from_text(pairs[i].first),
                                  halluc::TokenSeq::from_text(pairs[i].second), std::nullopt});
            halluc::SynthesisOptions opts;
            opts.noise = cfg.noise;
            opts.train = cfg.train;
            opts.workers = workers;
            std::vector<halluc::SyntheticRecord> records;
            {
                py::gil_scoped_release release;
                auto vocab = halluc::build_vocab(bitext);
                std::unique_ptr<halluc::Infiller> impl;
                if (*which == halluc::InfillerKind::identity)
                    impl = std::make_unique<halluc::IdentityInfiller>();
                else
                    impl = std::make_unique<halluc::StochasticInfiller>(vocab);
                records = halluc::build_synthetic_dataset(bitext, vocab, *impl, opts);
            }
            py::list out;
            for (const auto& rec : records) {
                auto row = json_loads(halluc::training_example_json(rec));
                row["noised"] = rec.noised.tokens();
                row["base"] = rec.base.tokens();
                out.append(row);
            }
            return out;
        },
        "pairs"_a, "task"_a = "mt", "infiller"_a = "identity", "seed"_a = 1, "workers"_a = 1,
        "One training example per (source, target) pair.");

    py::class_<halluc::ServiceClient>(m, "ServiceClient")
        .def(py::init([](const std::string& endpoint, std::size_t max_inflight, int timeout_s) {
                 return std::make_unique<halluc::ServiceClient>(
                     halluc::ServiceOptions{endpoint, max_inflight, std::chrono::seconds(timeout_s)});
             }),
             "endpoint"_a, "max_inflight"_a = 8, "timeout_s"_a = 60)
        .def("healthy", &halluc::ServiceClient::healthy, py::call_guard<py::gil_scoped_release>())
        .def(
            "infill",
            [](const halluc::ServiceClient& c, const std::vector<std::string>& tokens, int beam_size,
               double length_penalty) {
                halluc::InfillRequest req{noised_from_tokens(tokens, "<mask>"), beam_size, length_penalty};
                py::gil_scoped_release release;
                return c.infill(req);
            },
            "tokens"_a, "beam_size"_a = 4, "length_penalty"_a = 3.0)
        .def("predict", &halluc::ServiceClient::predict, "source"_a, "target"_a, "reference"_a = py::none(),
             py::call_guard<py::gil_scoped_release>());
}
