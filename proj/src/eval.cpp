#include "halluc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "halluc/error.hpp"

namespace halluc {

void PrfCounts::add(std::span<const Label> gold, std::span<const Label> pred) {
    if (gold.size() != pred.size())
        throw InputError("gold has " + std::to_string(gold.size()) + " labels, pred has " + std::to_string(pred.size()));
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const bool g = gold[i] != 0;
        const bool p = pred[i] != 0;
        tp += g && p;
        fp += !g && p;
        fn += g && !p;
    }
}

PrfCounts& PrfCounts::operator+=(const PrfCounts& other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
    return *this;
}

TokenPRF PrfCounts::finish() const {
    TokenPRF r;
    r.tp = tp;
    r.fp = fp;
    r.fn = fn;
    if (tp + fp > 0)
        r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    else
        r.degenerate = true;
    if (tp + fn > 0)
        r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    else
        r.degenerate = true;
    if (r.precision + r.recall > 0.0) r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

TokenPRF token_prf(std::span<const Label> gold, std::span<const Label> pred) {
    PrfCounts c;
    c.add(gold, pred);
    return c.finish();
}

Labels hard_labels(std::span<const double> probs, double threshold) {
    Labels out;
    out.reserve(probs.size());
    for (double p : probs) out.push_back(p >= threshold ? 1 : 0);
    return out;
}

double sentence_score_prob(std::span<const double> probs) {
    if (probs.empty()) throw InputError("sentence score of an empty sentence");
    return std::accumulate(probs.begin(), probs.end(), 0.0) / static_cast<double>(probs.size());
}

double sentence_score_ratio(std::span<const Label> labels) {
    if (labels.empty()) throw InputError("sentence score of an empty sentence");
    auto ones = std::count_if(labels.begin(), labels.end(), [](Label l) { return l != 0; });
    return static_cast<double>(ones) / static_cast<double>(labels.size());
}

double sentence_score_ratio(std::span<const double> probs) {
    auto labels = hard_labels(probs);
    return sentence_score_ratio(std::span<const Label>(labels));
}

std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw InputError("spearman needs equal-length inputs");
    if (xs.size() < 2) throw DegenerateError("spearman needs at least two observations");
    for (double v : xs)
        if (!std::isfinite(v)) throw InputError("spearman input is not finite");
    for (double v : ys)
        if (!std::isfinite(v)) throw InputError("spearman input is not finite");

    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    const double n = static_cast<double>(xs.size());
    const double mean = (n + 1.0) / 2.0;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateError("spearman is undefined for constant input");
    return sxy / std::sqrt(sxx * syy);
}

RatingMatrix::RatingMatrix(std::vector<std::vector<std::size_t>> counts) : counts_(std::move(counts)) {
    if (counts_.empty()) throw InputError("rating matrix has no items");
    const auto cats = counts_.front().size();
    if (cats == 0) throw InputError("rating matrix has no categories");
    raters_ = std::accumulate(counts_.front().begin(), counts_.front().end(), std::size_t{0});
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        if (counts_[i].size() != cats) throw InputError("rating matrix rows differ in width");
        if (std::accumulate(counts_[i].begin(), counts_[i].end(), std::size_t{0}) != raters_)
            throw InputError("item " + std::to_string(i) + " has a different rater count");
    }
}

RatingMatrix RatingMatrix::from_token_labels(std::span<const std::vector<Labels>> sentences) {
    std::vector<std::vector<std::size_t>> counts;
    for (std::size_t s = 0; s < sentences.size(); ++s) {
        const auto& annotators = sentences[s];
        if (annotators.empty()) throw InputError("sentence " + std::to_string(s) + " has no annotators");
        const auto len = annotators.front().size();
        for (const auto& a : annotators) {
            if (a.size() != len) throw InputError("sentence " + std::to_string(s) + ": annotators are not token-aligned");
        }
        for (std::size_t t = 0; t < len; ++t) {
            std::vector<std::size_t> row(2, 0);
            for (const auto& a : annotators) ++row[a[t] ? 1 : 0];
            counts.push_back(std::move(row));
        }
    }
    return RatingMatrix(std::move(counts));
}

double fleiss_kappa(const RatingMatrix& m) {
    if (m.items() < 2) throw DegenerateError("fleiss kappa needs at least two items");
    if (m.raters() < 2) throw DegenerateError("fleiss kappa needs at least two raters");
    const double n = static_cast<double>(m.raters());
    const double items = static_cast<double>(m.items());

    std::vector<double> marginal(m.categories(), 0.0);
    double agreement = 0.0;
    for (const auto& row : m.counts()) {
        double sq = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            const double c = static_cast<double>(row[j]);
            sq += c * c;
            marginal[j] += c;
        }
        agreement += (sq - n) / (n * (n - 1.0));
    }
    agreement /= items;

    double chance = 0.0;
    for (double c : marginal) {
        const double p = c / (items * n);
        chance += p * p;
    }
    if (chance >= 1.0) throw DegenerateError("fleiss kappa is undefined when every rating falls in one category");
    return (agreement - chance) / (1.0 - chance);
}

Labels record_labels(const EvalRecord& record, LabelSource which) {
    if (which == LabelSource::gold) {
        if (record.gold_labels.size() != record.output.size())
            throw InputError("record " + record.id + ": gold_labels missing or misaligned");
        return record.gold_labels;
    }
    if (record.pred_labels) {
        if (record.pred_labels->size() != record.output.size())
            throw InputError("record " + record.id + ": pred_labels misaligned");
        return *record.pred_labels;
    }
    if (record.pred_probs) {
        if (record.pred_probs->size() != record.output.size())
            throw InputError("record " + record.id + ": pred_probs misaligned");
        return hard_labels(*record.pred_probs);
    }
    throw InputError("record " + record.id + ": no predicted labels");
}

double corpus_hallucination_pct(std::span<const EvalRecord> records, LabelSource which) {
    std::size_t ones = 0;
    std::size_t total = 0;
    for (const auto& rec : records) {
        const auto labels = record_labels(rec, which);
        ones += static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](Label l) { return l != 0; }));
        total += labels.size();
    }
    if (total == 0) throw DegenerateError("corpus has no tokens");
    return 100.0 * static_cast<double>(ones) / static_cast<double>(total);
}

namespace {

constexpr std::size_t none = static_cast<std::size_t>(-1);

/// Integer distance to the diagonal of an rows x cols grid, scaled by 2*rows*cols.
std::size_t diagonal_distance(std::size_t i, std::size_t rows, std::size_t j, std::size_t cols) {
    const auto a = (2 * i + 1) * cols;
    const auto b = (2 * j + 1) * rows;
    return a > b ? a - b : b - a;
}

/// Argmax over `len` entries read via get(k); `dist(k)` breaks ties.
template <typename Get, typename Dist>
std::size_t tie_broken_argmax(std::size_t len, Get get, Dist dist) {
    if (len == 0) return none;
    double lo = get(0);
    double hi = get(0);
    std::size_t best = 0;
    for (std::size_t k = 1; k < len; ++k) {
        const double v = get(k);
        lo = std::min(lo, v);
        if (v > hi || (v == hi && dist(k) < dist(best))) {
            hi = v;
            best = k;
        }
    }
    if (len > 1 && lo == hi) return none;
    return best;
}

}  // namespace

double align_score(const std::vector<std::vector<double>>& similarity) {
    const auto rows = similarity.size();
    if (rows == 0) throw InputError("alignment needs a nonempty output");
    const auto cols = similarity.front().size();
    if (cols == 0) throw InputError("alignment needs a nonempty source");
    for (const auto& row : similarity) {
        if (row.size() != cols) throw InputError("similarity matrix rows differ in width");
        for (double v : row)
            if (!std::isfinite(v)) throw InputError("similarity is not finite");
    }

    std::vector<std::size_t> col_best(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        col_best[j] = tie_broken_argmax(
            rows, [&](std::size_t i) { return similarity[i][j]; },
            [&](std::size_t i) { return diagonal_distance(i, rows, j, cols); });
    }
    std::size_t aligned = 0;
    for (std::size_t i = 0; i < rows; ++i) {
        const auto j = tie_broken_argmax(
            cols, [&](std::size_t k) { return similarity[i][k]; },
            [&](std::size_t k) { return diagonal_distance(i, rows, k, cols); });
        if (j != none && col_best[j] == i) ++aligned;
    }
    return static_cast<double>(aligned) / static_cast<double>(rows);
}

double align_score(const TokenSeq& output, const TokenSeq& source, const SimilarityProvider& sim) {
    std::vector<std::vector<double>> m(output.size(), std::vector<double>(source.size()));
    for (std::size_t i = 0; i < output.size(); ++i) {
        for (std::size_t j = 0; j < source.size(); ++j) m[i][j] = sim(output[i], source[j]);
    }
    return align_score(m);
}

double ingest_external_score(const EvalRecord& record, const std::string& name) {
    auto it = record.external_scores.find(name);
    if (it == record.external_scores.end())
        throw InputError("record " + record.id + " has no external score '" + name + "'");
    return name == "entailment" ? 1.0 - it->second : it->second;
}

namespace {

std::optional<double> spearman_or_null(const std::vector<double>& xs, const std::vector<double>& ys) {
    try {
        return spearman(xs, ys);
    } catch (const DegenerateError&) {
        return std::nullopt;
    }
}

nlohmann::ordered_json nullable(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

EvalReport evaluate(std::span<const EvalRecord> records) {
    EvalReport report;
    report.records = records.size();
    PrfCounts counts;
    std::vector<double> human;
    std::vector<double> by_prob;
    std::vector<double> by_ratio;
    bool all_probs = true;
    std::set<std::string> external;
    for (const auto& rec : records) {
        for (const auto& [name, _] : rec.external_scores) external.insert(name);
    }

    for (const auto& rec : records) {
        rec.validate();
        const auto gold = record_labels(rec, LabelSource::gold);
        const auto pred = record_labels(rec, LabelSource::pred);
        counts.add(gold, pred);
        report.tokens += gold.size();
        if (gold.empty()) continue;
        human.push_back(sentence_score_ratio(std::span<const Label>(gold)));
        by_ratio.push_back(sentence_score_ratio(std::span<const Label>(pred)));
        if (rec.pred_probs)
            by_prob.push_back(sentence_score_prob(*rec.pred_probs));
        else
            all_probs = false;
    }
    report.prf = counts.finish();
    report.spearman_ratio = spearman_or_null(human, by_ratio);
    if (all_probs) report.spearman_prob = spearman_or_null(human, by_prob);

    for (const auto& name : external) {
        std::vector<double> xs;
        std::vector<double> ys;
        bool complete = true;
        for (const auto& rec : records) {
            if (rec.output.empty()) continue;
            if (!rec.external_scores.count(name)) {
                complete = false;
                break;
            }
            xs.push_back(sentence_score_ratio(std::span<const Label>(rec.gold_labels)));
            ys.push_back(ingest_external_score(rec, name));
        }
        report.spearman_external[name] = complete ? spearman_or_null(xs, ys) : std::nullopt;
    }

    if (report.tokens > 0) {
        report.pct_gold = corpus_hallucination_pct(records, LabelSource::gold);
        report.pct_pred = corpus_hallucination_pct(records, LabelSource::pred);
    }
    return report;
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["records"] = records;
    j["tokens"] = tokens;
    j["precision"] = prf.precision;
    j["recall"] = prf.recall;
    j["f1"] = prf.f1;
    j["tp"] = prf.tp;
    j["fp"] = prf.fp;
    j["fn"] = prf.fn;
    j["degenerate"] = prf.degenerate;
    j["spearman_prob"] = nullable(spearman_prob);
    j["spearman_ratio"] = nullable(spearman_ratio);
    nlohmann::ordered_json ext = nlohmann::ordered_json::object();
    for (const auto& [name, v] : spearman_external) ext[name] = nullable(v);
    j["spearman_external"] = ext;
    j["pct_gold"] = pct_gold;
    j["pct_pred"] = pct_pred;
    return j.dump(2) + "\n";
}

}  // namespace halluc
