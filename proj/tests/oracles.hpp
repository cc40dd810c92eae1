#pragma once

// Reference implementations used only by tests. They share no code with the
// library and favour directness over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// Operation codes ordered by backtrace preference.
enum Op { M = 0, S = 1, D = 2, I = 3 };

/// Top-down memoized Levenshtein distance.
class Levenshtein {
public:
    Levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b) : a_(a), b_(b) {}

    int dist(std::size_t i, std::size_t j) {
        auto key = std::make_pair(i, j);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        int d;
        if (i == 0) {
            d = static_cast<int>(j);
        } else if (j == 0) {
            d = static_cast<int>(i);
        } else {
            d = std::min({dist(i - 1, j - 1) + (a_[i - 1] == b_[j - 1] ? 0 : 1), dist(i - 1, j) + 1, dist(i, j - 1) + 1});
        }
        memo_[key] = d;
        return d;
    }

    int dist() { return dist(a_.size(), b_.size()); }

    /// Ops available at (i, j) that stay on some optimal path, in preference order.
    std::vector<Op> optimal_moves(std::size_t i, std::size_t j) {
        std::vector<Op> out;
        const int here = dist(i, j);
        if (i > 0 && j > 0 && a_[i - 1] == b_[j - 1] && dist(i - 1, j - 1) == here) out.push_back(M);
        if (i > 0 && j > 0 && a_[i - 1] != b_[j - 1] && dist(i - 1, j - 1) + 1 == here) out.push_back(S);
        if (i > 0 && dist(i - 1, j) + 1 == here) out.push_back(D);
        if (j > 0 && dist(i, j - 1) + 1 == here) out.push_back(I);
        return out;
    }

    /// Lexicographically smallest optimal script read from the end, returned
    /// in forward order. Computed by recursion over (i, j).
    std::vector<Op> preferred_script(std::size_t i, std::size_t j) {
        if (i == 0 && j == 0) return {};
        const auto moves = optimal_moves(i, j);
        const Op op = moves.front();
        auto [pi, pj] = prev(op, i, j);
        auto rest = preferred_script(pi, pj);
        rest.push_back(op);
        return rest;
    }

    std::vector<Op> preferred_script() { return preferred_script(a_.size(), b_.size()); }

    /// Every optimal script, in forward order.
    void all_scripts(std::size_t i, std::size_t j, std::vector<Op>& suffix, std::vector<std::vector<Op>>& out) {
        if (i == 0 && j == 0) {
            out.emplace_back(suffix.rbegin(), suffix.rend());
            return;
        }
        for (Op op : optimal_moves(i, j)) {
            auto [pi, pj] = prev(op, i, j);
            suffix.push_back(op);
            all_scripts(pi, pj, suffix, out);
            suffix.pop_back();
        }
    }

    /// Labels over `a` for a forward script.
    std::vector<int> labels_for(const std::vector<Op>& script) const {
        std::vector<int> labels(a_.size(), 0);
        std::size_t i = 0;
        for (Op op : script) {
            if (op == S || op == D) labels[i] = 1;
            if (op != I) ++i;
        }
        return labels;
    }

private:
    static std::pair<std::size_t, std::size_t> prev(Op op, std::size_t i, std::size_t j) {
        switch (op) {
            case M:
            case S: return {i - 1, j - 1};
            case D: return {i - 1, j};
            default: return {i, j - 1};
        }
    }

    const std::vector<std::string>& a_;
    const std::vector<std::string>& b_;
    std::map<std::pair<std::size_t, std::size_t>, int> memo_;
};

/// Spearman without ties: 1 - 6 sum d^2 / (n (n^2 - 1)).
inline double spearman_no_ties(const std::vector<double>& x, const std::vector<double>& y) {
    auto rank = [](const std::vector<double>& v) {
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            int less = 0;
            for (double w : v) less += w < v[i];
            r[i] = less + 1;
        }
        return r;
    };
    auto rx = rank(x), ry = rank(y);
    double d2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
    const double n = static_cast<double>(x.size());
    return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

/// Mutual argmax by exhaustive comparison (assumes no ties).
inline double mutual_argmax_fraction(const std::vector<std::vector<double>>& m) {
    std::size_t aligned = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m[i].size(); ++j) {
            bool row_max = true, col_max = true;
            for (std::size_t k = 0; k < m[i].size(); ++k) row_max &= k == j || m[i][k] < m[i][j];
            for (std::size_t k = 0; k < m.size(); ++k) col_max &= k == i || m[k][j] < m[i][j];
            if (row_max && col_max) {
                ++aligned;
                break;
            }
        }
    }
    return static_cast<double>(aligned) / static_cast<double>(m.size());
}

/// Kahan-Babuska compensated mean.
inline double compensated_mean(const std::vector<double>& v) {
    double sum = 0.0, c = 0.0;
    for (double x : v) {
        const double t = sum + x;
        c += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    return (sum + c) / static_cast<double>(v.size());
}

/// Fleiss' kappa written out term by term.
inline double fleiss(const std::vector<std::vector<int>>& counts) {
    const double N = static_cast<double>(counts.size());
    double n = 0;
    for (int c : counts[0]) n += c;
    double pbar = 0;
    std::vector<double> pj(counts[0].size(), 0.0);
    for (const auto& row : counts) {
        double agree_pairs = 0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            agree_pairs += row[j] * (row[j] - 1.0);
            pj[j] += row[j];
        }
        pbar += agree_pairs / (n * (n - 1.0));
    }
    pbar /= N;
    double pe = 0;
    for (double p : pj) pe += (p / (N * n)) * (p / (N * n));
    return (pbar - pe) / (1.0 - pe);
}

}  // namespace oracle
