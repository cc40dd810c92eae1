#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "halluc/corpus.hpp"
#include "halluc/infill.hpp"
#include "halluc/noising.hpp"
#include "halluc/rng.hpp"

namespace halluc {

enum class EditOp { match, substitute, remove, insert };

/// One edit step turning the hypothesis (T') into the base (T). `hyp` indexes
/// T' and is npos for inserts; `ref` indexes T and is npos for removals.
struct EditStep {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    EditOp op;
    std::size_t hyp = npos;
    std::size_t ref = npos;

    friend bool operator==(const EditStep&, const EditStep&) = default;
};

struct EditScript {
    std::vector<EditStep> steps;
    std::size_t cost = 0;

    std::size_t count(EditOp op) const;
};

/// Minimal unit-cost script from `hyp` to `ref`. Among equally cheap scripts
/// the backtrace, walking from the end of both sequences, takes match before
/// substitute before remove before insert.
EditScript edit_script(std::span<const std::string> hyp, std::span<const std::string> ref);

/// Marks every T' position that the edit script removes or substitutes.
LabeledSeq assign_labels(const TokenSeq& hyp, const TokenSeq& ref);

/// Word -> inclusive subword index range. Ranges are contiguous and cover
/// every subword in order.
class SubwordMap {
public:
    explicit SubwordMap(std::vector<std::pair<std::size_t, std::size_t>> ranges);

    std::size_t words() const noexcept { return ranges_.size(); }
    std::size_t subwords() const noexcept { return ranges_.empty() ? 0 : ranges_.back().second + 1; }
    const std::vector<std::pair<std::size_t, std::size_t>>& ranges() const noexcept { return ranges_; }

private:
    std::vector<std::pair<std::size_t, std::size_t>> ranges_;
};

/// A word is hallucinated if any of its subwords is.
Labels project_word_labels(std::span<const Label> subword_labels, const SubwordMap& map);
/// Word probability is the max over its subwords.
std::vector<double> project_word_probs(std::span<const double> subword_probs, const SubwordMap& map);

struct TrainConfig {
    double dropout_rate = 0.3;
    double mlm_mask_prob = 0.3;
    double alpha = 0.6;
    bool mlm_mask_source = true;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class Segment { source, separator, reference, target };

/// [S, sep, T_dropped, sep, T'] with labels over the T' segment only.
struct TrainingExample {
    std::vector<std::string> pieces;
    std::vector<Segment> segments;
    Labels labels;

    std::vector<std::string> segment(Segment which) const;
};

/// [S, sep, T] with some positions replaced by the mask token.
struct MlmExample {
    std::vector<std::string> pieces;
    std::vector<std::size_t> mask_positions;
    std::vector<std::string> originals;

    /// Pieces with the masked positions restored.
    std::vector<std::string> restored() const;
};

TrainingExample make_training_example(const TokenSeq& source, const TokenSeq& reference, const LabeledSeq& hallucinated,
                                      const TrainConfig& cfg, Rng& rng, const Markers& markers = {});

MlmExample make_mlm_example(const TokenSeq& source, const TokenSeq& target, const TrainConfig& cfg, Rng& rng,
                            const Markers& markers = {});

struct SynthesisOptions {
    NoiseConfig noise;
    TrainConfig train;
    Markers markers;
    bool use_paraphrase = false;
    int beam_size = 4;
    double length_penalty = 3.0;
    std::size_t workers = 1;
};

struct SyntheticRecord {
    std::uint64_t record_id = 0;
    SampledRates rates;
    NoisedSeq noised;
    TokenSeq base;
    LabeledSeq hallucinated;
    TrainingExample example;
    MlmExample mlm;
};

/// Noise -> infill -> label -> assemble for every record. Labels are always
/// computed against the noised base (the paraphrase in paraphrase mode).
/// Each record draws from its own RNG streams, so the output does not depend
/// on the worker count.
std::vector<SyntheticRecord> build_synthetic_dataset(std::span<const BitextRecord> bitext, const Vocab& vocab,
                                                     const Infiller& infiller, const SynthesisOptions& options);

}  // namespace halluc
