#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "halluc/corpus.hpp"
#include "halluc/rng.hpp"

namespace halluc {

/// Upper bounds of the per-sentence noise rates plus the mask insertion rate.
struct NoiseConfig {
    double max_mask = 0.6;
    double max_replace = 0.3;
    double insert_rate = 0.2;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SampledRates {
    double mask = 0.0;
    double replace = 0.0;
};

enum class Origin { kept, masked, replaced, inserted_mask };

struct NoisedToken {
    std::string token;
    Origin origin = Origin::kept;
    /// Token this position held before noising; empty for inserted masks.
    std::string original;

    friend bool operator==(const NoisedToken&, const NoisedToken&) = default;
};

struct NoisedSeq {
    std::vector<NoisedToken> items;

    std::vector<std::string> tokens() const;
    /// Number of non-inserted positions, i.e. the length of the clean input.
    std::size_t original_length() const;
    std::size_t count(Origin origin) const;

    friend bool operator==(const NoisedSeq&, const NoisedSeq&) = default;
};

/// Unigram counts over target-side tokens. Iteration order is lexicographic,
/// which keeps sampling reproducible.
class Vocab {
public:
    Vocab() = default;
    explicit Vocab(std::map<std::string, std::uint64_t> counts);

    void add(const std::string& token, std::uint64_t n = 1);

    bool empty() const noexcept { return total_ == 0; }
    std::uint64_t total() const noexcept { return total_; }
    std::size_t distinct() const noexcept { return tokens_.size(); }
    std::uint64_t count(std::string_view token) const;
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    /// Frequency-weighted draw.
    const std::string& sample(Rng& rng) const;

    /// Frequency-weighted draw restricted to tokens not in `excluded` (sorted).
    /// Returns nullptr when every vocabulary token is excluded.
    const std::string* sample_excluding(Rng& rng, std::span<const std::string> excluded) const;

private:
    std::vector<std::string> tokens_;
    std::vector<std::uint64_t> counts_;
    std::vector<std::uint64_t> cumulative_;
    std::uint64_t total_ = 0;
};

/// Counts target-side tokens. Throws InputError on an empty corpus.
Vocab build_vocab(std::span<const BitextRecord> corpus);

/// p_m ~ U[0, max_mask], p_r ~ U[0, max_replace], drawn in that order.
SampledRates sample_rates(const NoiseConfig& config, Rng& rng);

/// Word-level corruption. Each token is masked with probability `rates.mask`,
/// otherwise replaced with probability `rates.replace`; after each token a
/// mask is inserted with probability `insert_rate`. Replacement tokens are
/// drawn from `vocab` excluding every token already in the sentence, so a
/// replacement always introduces a word the clean sentence does not contain.
/// When no such token exists the position is kept.
NoisedSeq apply_noise(const TokenSeq& tokens, const SampledRates& rates, double insert_rate, const Vocab& vocab,
                      Rng& rng, std::string_view mask = "<mask>");

}  // namespace halluc
