#include "halluc/labeling.hpp"

#include <algorithm>

#include "halluc/error.hpp"
#include "halluc/parallel.hpp"

namespace halluc {

std::size_t EditScript::count(EditOp op) const {
    return static_cast<std::size_t>(
        std::count_if(steps.begin(), steps.end(), [&](const EditStep& s) { return s.op == op; }));
}

EditScript edit_script(std::span<const std::string> hyp, std::span<const std::string> ref) {
    const auto n = hyp.size();
    const auto m = ref.size();
    const auto width = m + 1;
    std::vector<std::size_t> dist((n + 1) * width);
    auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return dist[i * width + j]; };

    for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
    for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            const auto diag = at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
            at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
        }
    }

    EditScript script;
    script.cost = at(n, m);
    script.steps.reserve(std::max(n, m));
    std::size_t i = n;
    std::size_t j = m;
    while (i > 0 || j > 0) {
        const auto here = at(i, j);
        if (i > 0 && j > 0 && hyp[i - 1] == ref[j - 1] && at(i - 1, j - 1) == here) {
            script.steps.push_back({EditOp::match, --i, --j});
        } else if (i > 0 && j > 0 && at(i - 1, j - 1) + 1 == here) {
            script.steps.push_back({EditOp::substitute, --i, --j});
        } else if (i > 0 && at(i - 1, j) + 1 == here) {
            script.steps.push_back({EditOp::remove, --i, EditStep::npos});
        } else {
            script.steps.push_back({EditOp::insert, EditStep::npos, --j});
        }
    }
    std::reverse(script.steps.begin(), script.steps.end());
    return script;
}

LabeledSeq assign_labels(const TokenSeq& hyp, const TokenSeq& ref) {
    if (hyp.empty()) throw InputError("cannot label an empty hypothesis");
    Labels labels(hyp.size(), 0);
    for (const auto& step : edit_script(hyp.view(), ref.view()).steps) {
        if (step.op == EditOp::substitute || step.op == EditOp::remove) labels[step.hyp] = 1;
    }
    return LabeledSeq{hyp, std::move(labels), std::nullopt};
}

SubwordMap::SubwordMap(std::vector<std::pair<std::size_t, std::size_t>> ranges) : ranges_(std::move(ranges)) {
    std::size_t expected = 0;
    for (std::size_t w = 0; w < ranges_.size(); ++w) {
        const auto [first, last] = ranges_[w];
        if (first != expected || last < first)
            throw InputError("subword range of word " + std::to_string(w) + " is not contiguous with the previous one");
        expected = last + 1;
    }
}

namespace {

void check_coverage(std::size_t have, const SubwordMap& map) {
    if (have != map.subwords())
        throw InputError("got " + std::to_string(have) + " subword predictions for a map over " +
                         std::to_string(map.subwords()) + " subwords");
}

}  // namespace

Labels project_word_labels(std::span<const Label> subword_labels, const SubwordMap& map) {
    check_coverage(subword_labels.size(), map);
    Labels out;
    out.reserve(map.words());
    for (const auto& [first, last] : map.ranges()) {
        Label any = 0;
        for (auto k = first; k <= last; ++k) any |= subword_labels[k] ? 1 : 0;
        out.push_back(any);
    }
    return out;
}

std::vector<double> project_word_probs(std::span<const double> subword_probs, const SubwordMap& map) {
    check_coverage(subword_probs.size(), map);
    std::vector<double> out;
    out.reserve(map.words());
    for (const auto& [first, last] : map.ranges()) {
        out.push_back(*std::max_element(subword_probs.begin() + static_cast<std::ptrdiff_t>(first),
                                        subword_probs.begin() + static_cast<std::ptrdiff_t>(last) + 1));
    }
    return out;
}

void TrainConfig::validate() const {
    if (!(dropout_rate >= 0.0 && dropout_rate <= 1.0)) throw InputError("dropout_rate must lie in [0,1]");
    if (!(mlm_mask_prob >= 0.0 && mlm_mask_prob <= 1.0)) throw InputError("mlm_mask_prob must lie in [0,1]");
    if (!(alpha > 0.0)) throw InputError("alpha must be positive");
}

std::vector<std::string> TrainingExample::segment(Segment which) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        if (segments[i] == which) out.push_back(pieces[i]);
    }
    return out;
}

std::vector<std::string> MlmExample::restored() const {
    auto out = pieces;
    for (std::size_t k = 0; k < mask_positions.size(); ++k) out[mask_positions[k]] = originals[k];
    return out;
}

TrainingExample make_training_example(const TokenSeq& source, const TokenSeq& reference, const LabeledSeq& hallucinated,
                                      const TrainConfig& cfg, Rng& rng, const Markers& markers) {
    hallucinated.validate();
    TrainingExample ex;
    const auto total = source.size() + reference.size() + hallucinated.tokens.size() + 2;
    ex.pieces.reserve(total);
    ex.segments.reserve(total);
    auto push = [&](const std::string& piece, Segment seg) {
        ex.pieces.push_back(piece);
        ex.segments.push_back(seg);
    };
    for (const auto& t : source) push(t, Segment::source);
    push(markers.sep, Segment::separator);
    for (const auto& t : reference) {
        if (!rng.bernoulli(cfg.dropout_rate)) push(t, Segment::reference);
    }
    push(markers.sep, Segment::separator);
    for (const auto& t : hallucinated.tokens) push(t, Segment::target);
    ex.labels = hallucinated.labels;
    return ex;
}

MlmExample make_mlm_example(const TokenSeq& source, const TokenSeq& target, const TrainConfig& cfg, Rng& rng,
                            const Markers& markers) {
    MlmExample ex;
    ex.pieces.reserve(source.size() + target.size() + 1);
    auto maybe_mask = [&](const std::string& token) {
        if (rng.bernoulli(cfg.mlm_mask_prob)) {
            ex.mask_positions.push_back(ex.pieces.size());
            ex.originals.push_back(token);
            ex.pieces.push_back(markers.mask);
        } else {
            ex.pieces.push_back(token);
        }
    };
    for (const auto& t : source) {
        if (cfg.mlm_mask_source)
            maybe_mask(t);
        else
            ex.pieces.push_back(t);
    }
    ex.pieces.push_back(markers.sep);
    for (const auto& t : target) maybe_mask(t);
    return ex;
}

std::vector<SyntheticRecord> build_synthetic_dataset(std::span<const BitextRecord> bitext, const Vocab& vocab,
                                                     const Infiller& infiller, const SynthesisOptions& options) {
    options.noise.validate();
    options.train.validate();
    if (options.beam_size < 1) throw InputError("beam_size must be at least 1");
    if (options.use_paraphrase) {
        for (const auto& rec : bitext) {
            if (!rec.paraphrase)
                throw InputError("record " + std::to_string(rec.record_id) + " has no paraphrase");
        }
    }

    return ordered_map(bitext.size(), options.workers, [&](std::size_t idx) {
        const auto& rec = bitext[idx];
        SyntheticRecord out;
        out.record_id = rec.record_id;
        out.base = options.use_paraphrase ? *rec.paraphrase : rec.target;

        auto noise_rng = Rng::for_record(options.noise.seed, rec.record_id, Stream::noise);
        out.rates = sample_rates(options.noise, noise_rng);
        out.noised = apply_noise(out.base, out.rates, options.noise.insert_rate, vocab, noise_rng, options.markers.mask);

        InfillRequest req{out.noised, options.beam_size, options.length_penalty, options.markers.mask};
        auto infill_rng = Rng::for_record(options.noise.seed, rec.record_id, Stream::infill);
        auto filled = infiller.infill(req, infill_rng).filled;
        if (filled.contains_reserved(options.markers))
            throw SentinelError("record " + std::to_string(rec.record_id) + ": " + infiller.name() +
                                " infiller emitted a reserved token");

        out.hallucinated = assign_labels(filled, out.base);

        auto dropout_rng = Rng::for_record(options.train.seed, rec.record_id, Stream::dropout);
        out.example = make_training_example(rec.source, rec.target, out.hallucinated, options.train, dropout_rng,
                                            options.markers);
        auto mlm_rng = Rng::for_record(options.train.seed, rec.record_id, Stream::mlm);
        out.mlm = make_mlm_example(rec.source, rec.target, options.train, mlm_rng, options.markers);
        return out;
    });
}

}  // namespace halluc
