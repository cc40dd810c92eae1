#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace halluc {

using Label = std::uint8_t;
using Labels = std::vector<Label>;

/// Reserved strings that never appear as ordinary tokens.
struct Markers {
    std::string mask = "<mask>";
    std::string sep = "</s>";

    bool reserved(std::string_view token) const { return token == mask || token == sep; }
};

/// A whitespace-tokenized sentence. Tokens are never empty.
class TokenSeq {
public:
    TokenSeq() = default;
    explicit TokenSeq(std::vector<std::string> tokens);

    /// Splits on ASCII whitespace.
    static TokenSeq from_text(std::string_view text);

    const std::vector<std::string>& tokens() const noexcept { return tokens_; }
    std::span<const std::string> view() const noexcept { return tokens_; }
    std::size_t size() const noexcept { return tokens_.size(); }
    bool empty() const noexcept { return tokens_.empty(); }
    const std::string& operator[](std::size_t i) const { return tokens_[i]; }
    auto begin() const noexcept { return tokens_.begin(); }
    auto end() const noexcept { return tokens_.end(); }

    /// Space-joined form.
    std::string text() const;

    bool contains_reserved(const Markers& markers) const;

    friend bool operator==(const TokenSeq&, const TokenSeq&) = default;

private:
    std::vector<std::string> tokens_;
};

struct LabeledSeq {
    TokenSeq tokens;
    Labels labels;
    std::optional<std::vector<double>> probs;

    /// Throws InputError on length mismatch or a label outside {0,1}.
    void validate() const;

    friend bool operator==(const LabeledSeq&, const LabeledSeq&) = default;
};

struct BitextRecord {
    std::uint64_t record_id = 0;
    TokenSeq source;
    TokenSeq target;
    std::optional<TokenSeq> paraphrase;
};

enum class SentenceRating { incomprehensible, faithful, hallucinated };

std::optional<SentenceRating> parse_rating(std::string_view text);
std::string_view to_string(SentenceRating rating);

struct AnnotationRecord {
    TokenSeq source;
    std::vector<LabeledSeq> annotators;
    std::vector<std::optional<SentenceRating>> ratings;

    /// All annotators must label the same token sequence.
    void validate() const;
};

struct EvalRecord {
    std::string id;
    TokenSeq source;
    TokenSeq output;
    Labels gold_labels;
    std::optional<Labels> pred_labels;
    std::optional<std::vector<double>> pred_probs;
    std::map<std::string, double> external_scores;

    void validate() const;
};

/// `word[0] word[1] ...`. Errors carry the offending token index.
LabeledSeq parse_annotation_line(std::string_view line);
std::string serialize_annotation_line(const LabeledSeq& seq);

/// Per-position strict majority; ties resolve to 0.
Labels majority_vote(std::span<const Labels> annotations);

/// Strict-majority rating, or nullopt when no rating has more than half the votes.
std::optional<SentenceRating> majority_rating(std::span<const std::optional<SentenceRating>> ratings);

enum class BitextFormat { tsv, jsonl };

/// Picks jsonl for `.jsonl`/`.json` extensions, tsv otherwise.
BitextFormat guess_bitext_format(std::string_view path);

std::vector<BitextRecord> read_bitext(std::istream& in, BitextFormat format, const Markers& markers = {});
std::vector<BitextRecord> load_bitext(const std::string& path, BitextFormat format, const Markers& markers = {});

/// One annotation line per sentence; blank lines are rejected.
std::vector<LabeledSeq> read_annotations(std::istream& in);
std::vector<LabeledSeq> load_annotations(const std::string& path);

/// One rating word per line, aligned with an annotation file.
std::vector<SentenceRating> load_ratings(const std::string& path);

/// Missing `id` fields default to the zero-based line index.
std::vector<EvalRecord> read_eval_records(std::istream& in);
std::vector<EvalRecord> load_eval_records(const std::string& path);
std::string eval_record_to_json(const EvalRecord& record);

struct Consolidated {
    std::vector<LabeledSeq> benchmark;
    /// Index of each kept sentence in the input.
    std::vector<std::size_t> kept;
    std::size_t dropped_incomprehensible = 0;
};

/// Majority-votes token labels across annotators, dropping sentences whose
/// majority rating is incomprehensible. `per_annotator[a][s]` is annotator a's
/// labels for sentence s; `ratings` is empty or has one list per annotator.
Consolidated consolidate(std::span<const std::vector<LabeledSeq>> per_annotator,
                         std::span<const std::vector<SentenceRating>> ratings = {});

}  // namespace halluc
