#include "halluc/noising.hpp"

#include <algorithm>

#include "halluc/error.hpp"

namespace halluc {

namespace {

void check_unit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw InputError(std::string(name) + " must lie in [0,1]");
}

}  // namespace

void NoiseConfig::validate() const {
    check_unit(max_mask, "max_mask");
    check_unit(max_replace, "max_replace");
    check_unit(insert_rate, "insert_rate");
}

std::vector<std::string> NoisedSeq::tokens() const {
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back(item.token);
    return out;
}

std::size_t NoisedSeq::original_length() const {
    return items.size() - count(Origin::inserted_mask);
}

std::size_t NoisedSeq::count(Origin origin) const {
    return static_cast<std::size_t>(
        std::count_if(items.begin(), items.end(), [&](const NoisedToken& t) { return t.origin == origin; }));
}

Vocab::Vocab(std::map<std::string, std::uint64_t> counts) {
    for (auto& [token, n] : counts) add(token, n);
}

void Vocab::add(const std::string& token, std::uint64_t n) {
    if (n == 0) return;
    auto it = std::lower_bound(tokens_.begin(), tokens_.end(), token);
    auto idx = static_cast<std::size_t>(it - tokens_.begin());
    if (it != tokens_.end() && *it == token) {
        counts_[idx] += n;
    } else {
        tokens_.insert(it, token);
        counts_.insert(counts_.begin() + static_cast<std::ptrdiff_t>(idx), n);
    }
    total_ += n;
    cumulative_.resize(counts_.size());
    // Prefix sums before idx are unaffected by the insertion.
    std::uint64_t acc = idx > 0 ? cumulative_[idx - 1] : 0;
    for (std::size_t i = idx; i < counts_.size(); ++i) {
        acc += counts_[i];
        cumulative_[i] = acc;
    }
}

std::uint64_t Vocab::count(std::string_view token) const {
    auto it = std::lower_bound(tokens_.begin(), tokens_.end(), token);
    if (it == tokens_.end() || *it != token) return 0;
    return counts_[static_cast<std::size_t>(it - tokens_.begin())];
}

const std::string& Vocab::sample(Rng& rng) const {
    if (empty()) throw InputError("cannot sample from an empty vocabulary");
    const auto target = rng.below(total_);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    return tokens_[static_cast<std::size_t>(it - cumulative_.begin())];
}

const std::string* Vocab::sample_excluding(Rng& rng, std::span<const std::string> excluded) const {
    if (empty()) throw InputError("cannot sample from an empty vocabulary");
    auto is_excluded = [&](const std::string& t) { return std::binary_search(excluded.begin(), excluded.end(), t); };
    // Rejection first; exact filtered draw if the excluded mass is large.
    for (int attempt = 0; attempt < 16; ++attempt) {
        const auto& t = sample(rng);
        if (!is_excluded(t)) return &t;
    }
    std::uint64_t allowed = 0;
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!is_excluded(tokens_[i])) allowed += counts_[i];
    }
    if (allowed == 0) return nullptr;
    auto target = rng.below(allowed);
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (is_excluded(tokens_[i])) continue;
        if (target < counts_[i]) return &tokens_[i];
        target -= counts_[i];
    }
    return nullptr;
}

Vocab build_vocab(std::span<const BitextRecord> corpus) {
    if (corpus.empty()) throw InputError("cannot build a vocabulary from an empty corpus");
    std::map<std::string, std::uint64_t> counts;
    for (const auto& rec : corpus) {
        for (const auto& t : rec.target) ++counts[t];
    }
    return Vocab(std::move(counts));
}

SampledRates sample_rates(const NoiseConfig& config, Rng& rng) {
    SampledRates r;
    r.mask = rng.uniform(0.0, config.max_mask);
    r.replace = rng.uniform(0.0, config.max_replace);
    return r;
}

NoisedSeq apply_noise(const TokenSeq& tokens, const SampledRates& rates, double insert_rate, const Vocab& vocab,
                      Rng& rng, std::string_view mask) {
    if (tokens.empty()) throw InputError("cannot noise an empty sentence");
    if (rates.replace > 0.0 && vocab.empty()) throw InputError("replacement noise needs a nonempty vocabulary");

    std::vector<std::string> present(tokens.begin(), tokens.end());
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());

    NoisedSeq out;
    out.items.reserve(tokens.size() + tokens.size() / 4 + 1);
    for (const auto& token : tokens) {
        if (rng.bernoulli(rates.mask)) {
            out.items.push_back({std::string(mask), Origin::masked, token});
        } else if (rng.bernoulli(rates.replace)) {
            if (const auto* repl = vocab.sample_excluding(rng, present))
                out.items.push_back({*repl, Origin::replaced, token});
            else
                out.items.push_back({token, Origin::kept, token});
        } else {
            out.items.push_back({token, Origin::kept, token});
        }
        if (rng.bernoulli(insert_rate)) out.items.push_back({std::string(mask), Origin::inserted_mask, {}});
    }
    return out;
}

}  // namespace halluc
