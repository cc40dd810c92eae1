#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "halluc/corpus.hpp"

namespace halluc {

/// Scores for the hallucinated class (label 1).
struct TokenPRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    /// Set when precision or recall had a zero denominator and was reported as 0.
    bool degenerate = false;
};

/// Mergeable confusion counts; merging is associative and commutative.
struct PrfCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    void add(std::span<const Label> gold, std::span<const Label> pred);
    PrfCounts& operator+=(const PrfCounts& other);
    TokenPRF finish() const;
};

TokenPRF token_prf(std::span<const Label> gold, std::span<const Label> pred);

/// Probabilities to hard labels; p >= threshold is hallucinated.
Labels hard_labels(std::span<const double> probs, double threshold = 0.5);

/// Mean token probability.
double sentence_score_prob(std::span<const double> probs);
/// Fraction of hallucinated labels.
double sentence_score_ratio(std::span<const Label> labels);
double sentence_score_ratio(std::span<const double> probs);

/// Average ranks (1-based); tied values share the mean of their ranks.
std::vector<double> average_ranks(std::span<const double> xs);

/// Pearson correlation of average ranks. Throws DegenerateError when either
/// side is constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

/// items x categories matrix of rater counts with a constant rater count.
class RatingMatrix {
public:
    RatingMatrix(std::vector<std::vector<std::size_t>> counts);

    /// One item per token, two categories, from k aligned label lists per sentence.
    static RatingMatrix from_token_labels(std::span<const std::vector<Labels>> sentences);

    std::size_t items() const noexcept { return counts_.size(); }
    std::size_t categories() const noexcept { return counts_.empty() ? 0 : counts_.front().size(); }
    std::size_t raters() const noexcept { return raters_; }
    const std::vector<std::vector<std::size_t>>& counts() const noexcept { return counts_; }

private:
    std::vector<std::vector<std::size_t>> counts_;
    std::size_t raters_ = 0;
};

double fleiss_kappa(const RatingMatrix& m);

enum class LabelSource { gold, pred };

/// Labels a record contributes for `which`; pred falls back to thresholded
/// pred_probs. Throws InputError naming the record when absent.
Labels record_labels(const EvalRecord& record, LabelSource which);

/// Pooled percentage of hallucinated tokens.
double corpus_hallucination_pct(std::span<const EvalRecord> records, LabelSource which);

using SimilarityProvider = std::function<double(const std::string& output_token, const std::string& source_token)>;

/// Fraction of rows (output tokens) that have a mutual-argmax partner column.
/// Ties within a row or column prefer the entry nearest the diagonal, then the
/// lowest index; a row or column of more than one entry whose values are all
/// equal carries no alignment.
double align_score(const std::vector<std::vector<double>>& similarity);
double align_score(const TokenSeq& output, const TokenSeq& source, const SimilarityProvider& sim);

/// 1 - P_e for "entailment", the raw value for anything else.
double ingest_external_score(const EvalRecord& record, const std::string& name);

struct EvalReport {
    std::size_t records = 0;
    std::size_t tokens = 0;
    TokenPRF prf;
    std::optional<double> spearman_prob;
    std::optional<double> spearman_ratio;
    std::map<std::string, std::optional<double>> spearman_external;
    double pct_gold = 0.0;
    double pct_pred = 0.0;

    std::string to_json() const;
};

/// Full report over records that carry gold and predicted labels. The human
/// sentence score is the gold hallucination ratio.
EvalReport evaluate(std::span<const EvalRecord> records);

}  // namespace halluc
