#include "halluc/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "halluc/error.hpp"

namespace halluc {

namespace {

using nlohmann::json;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::vector<std::string_view> split_ws(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        if (j > i) out.push_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

bool blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(), is_space);
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    return in;
}

std::string where(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

TokenSeq checked_seq(std::string_view text, const Markers& markers, std::size_t line_no, const char* field) {
    auto seq = TokenSeq::from_text(text);
    if (seq.empty()) throw InputError(where(line_no) + "empty " + field);
    if (seq.contains_reserved(markers)) throw InputError(where(line_no) + field + " contains a reserved token");
    return seq;
}

template <typename T>
std::optional<std::vector<T>> optional_array(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    return it->get<std::vector<T>>();
}

}  // namespace

TokenSeq::TokenSeq(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (tokens_[i].empty()) throw InputError("empty token at position " + std::to_string(i));
    }
}

TokenSeq TokenSeq::from_text(std::string_view text) {
    std::vector<std::string> tokens;
    for (auto piece : split_ws(text)) tokens.emplace_back(piece);
    return TokenSeq(std::move(tokens));
}

std::string TokenSeq::text() const {
    std::string out;
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (i) out += ' ';
        out += tokens_[i];
    }
    return out;
}

bool TokenSeq::contains_reserved(const Markers& markers) const {
    return std::any_of(tokens_.begin(), tokens_.end(), [&](const std::string& t) {
        return t.find(markers.mask) != std::string::npos || t.find(markers.sep) != std::string::npos;
    });
}

void LabeledSeq::validate() const {
    if (labels.size() != tokens.size())
        throw InputError("label count " + std::to_string(labels.size()) + " != token count " +
                         std::to_string(tokens.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] > 1) throw InputError("label at position " + std::to_string(i) + " is not 0 or 1");
    }
    if (probs) {
        if (probs->size() != tokens.size()) throw InputError("probability count != token count");
        for (double p : *probs) {
            if (!(p >= 0.0 && p <= 1.0)) throw InputError("probability outside [0,1]");
        }
    }
}

std::optional<SentenceRating> parse_rating(std::string_view text) {
    if (text == "incomprehensible") return SentenceRating::incomprehensible;
    if (text == "faithful") return SentenceRating::faithful;
    if (text == "hallucinated") return SentenceRating::hallucinated;
    return std::nullopt;
}

std::string_view to_string(SentenceRating rating) {
    switch (rating) {
        case SentenceRating::incomprehensible: return "incomprehensible";
        case SentenceRating::faithful: return "faithful";
        case SentenceRating::hallucinated: return "hallucinated";
    }
    return "";
}

void AnnotationRecord::validate() const {
    if (annotators.empty()) throw InputError("annotation record without annotators");
    for (const auto& a : annotators) {
        a.validate();
        if (a.tokens != annotators.front().tokens) throw InputError("annotators labeled different token sequences");
    }
    if (!ratings.empty() && ratings.size() != annotators.size())
        throw InputError("rating count != annotator count");
}

void EvalRecord::validate() const {
    const auto n = output.size();
    auto fail = [&](const std::string& what) { throw InputError("record " + id + ": " + what); };
    if (gold_labels.size() != n) fail("gold_labels length != output length");
    if (std::any_of(gold_labels.begin(), gold_labels.end(), [](Label l) { return l > 1; }))
        fail("gold_labels must be 0 or 1");
    if (pred_labels) {
        if (pred_labels->size() != n) fail("pred_labels length != output length");
        if (std::any_of(pred_labels->begin(), pred_labels->end(), [](Label l) { return l > 1; }))
            fail("pred_labels must be 0 or 1");
    }
    if (pred_probs) {
        if (pred_probs->size() != n) fail("pred_probs length != output length");
        for (double p : *pred_probs) {
            if (!(p >= 0.0 && p <= 1.0)) fail("pred_probs outside [0,1]");
        }
    }
}

LabeledSeq parse_annotation_line(std::string_view line) {
    auto pieces = split_ws(line);
    if (pieces.empty()) throw ParseError(0, "empty annotation line");
    std::vector<std::string> tokens;
    Labels labels;
    tokens.reserve(pieces.size());
    labels.reserve(pieces.size());
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        auto piece = pieces[i];
        if (piece.size() < 4 || piece[piece.size() - 3] != '[' || piece.back() != ']')
            throw ParseError(i, "missing [0]/[1] suffix in '" + std::string(piece) + "'");
        char digit = piece[piece.size() - 2];
        if (digit != '0' && digit != '1') throw ParseError(i, "label must be 0 or 1 in '" + std::string(piece) + "'");
        auto word = piece.substr(0, piece.size() - 3);
        if (word.find_first_of("[]") != std::string_view::npos)
            throw ParseError(i, "bracket inside word '" + std::string(word) + "'");
        tokens.emplace_back(word);
        labels.push_back(static_cast<Label>(digit - '0'));
    }
    return LabeledSeq{TokenSeq(std::move(tokens)), std::move(labels), std::nullopt};
}

std::string serialize_annotation_line(const LabeledSeq& seq) {
    seq.validate();
    std::string out;
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
        const auto& token = seq.tokens[i];
        if (token.find_first_of("[]") != std::string::npos)
            throw InputError("token " + std::to_string(i) + " contains a bracket: '" + token + "'");
        if (std::any_of(token.begin(), token.end(), is_space))
            throw InputError("token " + std::to_string(i) + " contains whitespace");
        if (i) out += ' ';
        out += token;
        out += seq.labels[i] ? "[1]" : "[0]";
    }
    return out;
}

Labels majority_vote(std::span<const Labels> annotations) {
    if (annotations.empty()) throw InputError("majority_vote needs at least one annotator");
    const auto n = annotations.front().size();
    for (const auto& a : annotations) {
        if (a.size() != n) throw InputError("annotators disagree on sentence length");
    }
    Labels out(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t ones = 0;
        for (const auto& a : annotations) ones += a[i] ? 1 : 0;
        out[i] = 2 * ones > annotations.size() ? 1 : 0;
    }
    return out;
}

std::optional<SentenceRating> majority_rating(std::span<const std::optional<SentenceRating>> ratings) {
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& r : ratings) {
        if (r) ++counts[static_cast<int>(*r)];
    }
    for (int c = 0; c < 3; ++c) {
        if (2 * counts[c] > ratings.size()) return static_cast<SentenceRating>(c);
    }
    return std::nullopt;
}

BitextFormat guess_bitext_format(std::string_view path) {
    auto ends_with = [&](std::string_view suffix) {
        return path.size() >= suffix.size() && path.substr(path.size() - suffix.size()) == suffix;
    };
    return ends_with(".jsonl") || ends_with(".json") ? BitextFormat::jsonl : BitextFormat::tsv;
}

std::vector<BitextRecord> read_bitext(std::istream& in, BitextFormat format, const Markers& markers) {
    std::vector<BitextRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(std::move(line));
        if (blank(line)) continue;
        BitextRecord rec;
        rec.record_id = out.size();
        if (format == BitextFormat::tsv) {
            std::vector<std::string_view> cols;
            std::string_view rest = line;
            for (;;) {
                auto tab = rest.find('\t');
                cols.push_back(rest.substr(0, tab));
                if (tab == std::string_view::npos) break;
                rest = rest.substr(tab + 1);
            }
            if (cols.size() < 2) throw InputError(where(line_no) + "missing target column");
            if (cols.size() > 3) throw InputError(where(line_no) + "too many columns");
            rec.source = checked_seq(cols[0], markers, line_no, "source");
            rec.target = checked_seq(cols[1], markers, line_no, "target");
            if (cols.size() == 3 && !blank(cols[2])) rec.paraphrase = checked_seq(cols[2], markers, line_no, "paraphrase");
        } else {
            json obj;
            try {
                obj = json::parse(line);
            } catch (const json::exception& e) {
                throw InputError(where(line_no) + e.what());
            }
            if (!obj.is_object()) throw InputError(where(line_no) + "expected an object");
            for (const char* key : {"source", "target"}) {
                if (!obj.contains(key) || !obj[key].is_string()) throw InputError(where(line_no) + "missing " + key);
            }
            rec.source = checked_seq(obj["source"].get<std::string>(), markers, line_no, "source");
            rec.target = checked_seq(obj["target"].get<std::string>(), markers, line_no, "target");
            if (auto it = obj.find("paraphrase"); it != obj.end() && !it->is_null()) {
                if (!it->is_string()) throw InputError(where(line_no) + "paraphrase must be a string");
                rec.paraphrase = checked_seq(it->get<std::string>(), markers, line_no, "paraphrase");
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<BitextRecord> load_bitext(const std::string& path, BitextFormat format, const Markers& markers) {
    auto in = open_or_throw(path);
    return read_bitext(in, format, markers);
}

std::vector<LabeledSeq> read_annotations(std::istream& in) {
    std::vector<LabeledSeq> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        try {
            out.push_back(parse_annotation_line(strip_cr(line)));
        } catch (const ParseError& e) {
            throw InputError(where(line_no) + e.what());
        }
    }
    return out;
}

std::vector<LabeledSeq> load_annotations(const std::string& path) {
    auto in = open_or_throw(path);
    try {
        return read_annotations(in);
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
}

std::vector<SentenceRating> load_ratings(const std::string& path) {
    auto in = open_or_throw(path);
    std::vector<SentenceRating> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto words = split_ws(line);
        if (words.size() != 1) throw InputError(path + ": " + where(line_no) + "expected one rating");
        auto rating = parse_rating(words.front());
        if (!rating) throw InputError(path + ": " + where(line_no) + "unknown rating '" + std::string(words.front()) + "'");
        out.push_back(*rating);
    }
    return out;
}

std::vector<EvalRecord> read_eval_records(std::istream& in) {
    std::vector<EvalRecord> out;
    std::string line;
    std::size_t line_no = 0;
    std::size_t index = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        EvalRecord rec;
        try {
            auto obj = json::parse(line);
            if (!obj.is_object()) throw InputError("expected an object");
            if (auto it = obj.find("id"); it != obj.end() && !it->is_null())
                rec.id = it->is_string() ? it->get<std::string>() : it->dump();
            else
                rec.id = std::to_string(index);
            rec.source = TokenSeq::from_text(obj.value("source", std::string{}));
            if (!obj.contains("output")) throw InputError("missing output");
            rec.output = TokenSeq::from_text(obj.at("output").get<std::string>());
            if (auto gold = optional_array<int>(obj, "gold_labels")) {
                rec.gold_labels.assign(gold->begin(), gold->end());
                if (std::any_of(gold->begin(), gold->end(), [](int v) { return v < 0 || v > 1; }))
                    throw InputError("gold_labels must be 0 or 1");
            }
            if (auto pred = optional_array<int>(obj, "pred_labels")) {
                if (std::any_of(pred->begin(), pred->end(), [](int v) { return v < 0 || v > 1; }))
                    throw InputError("pred_labels must be 0 or 1");
                rec.pred_labels = Labels(pred->begin(), pred->end());
            }
            rec.pred_probs = optional_array<double>(obj, "pred_probs");
            if (auto it = obj.find("external_scores"); it != obj.end() && !it->is_null())
                rec.external_scores = it->get<std::map<std::string, double>>();
        } catch (const json::exception& e) {
            throw InputError(where(line_no) + e.what());
        } catch (const InputError& e) {
            throw InputError(where(line_no) + e.what());
        }
        out.push_back(std::move(rec));
        ++index;
    }
    return out;
}

std::vector<EvalRecord> load_eval_records(const std::string& path) {
    auto in = open_or_throw(path);
    try {
        return read_eval_records(in);
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
}

std::string eval_record_to_json(const EvalRecord& record) {
    json obj;
    obj["id"] = record.id;
    obj["source"] = record.source.text();
    obj["output"] = record.output.text();
    obj["gold_labels"] = std::vector<int>(record.gold_labels.begin(), record.gold_labels.end());
    if (record.pred_labels) obj["pred_labels"] = std::vector<int>(record.pred_labels->begin(), record.pred_labels->end());
    if (record.pred_probs) obj["pred_probs"] = *record.pred_probs;
    if (!record.external_scores.empty()) obj["external_scores"] = record.external_scores;
    return obj.dump();
}

Consolidated consolidate(std::span<const std::vector<LabeledSeq>> per_annotator,
                         std::span<const std::vector<SentenceRating>> ratings) {
    if (per_annotator.empty()) throw InputError("no annotators");
    const auto n_sent = per_annotator.front().size();
    for (std::size_t a = 0; a < per_annotator.size(); ++a) {
        if (per_annotator[a].size() != n_sent)
            throw InputError("annotator " + std::to_string(a) + " has " + std::to_string(per_annotator[a].size()) +
                             " sentences, expected " + std::to_string(n_sent));
    }
    if (!ratings.empty()) {
        if (ratings.size() != per_annotator.size()) throw InputError("need one rating file per annotator");
        for (const auto& r : ratings) {
            if (r.size() != n_sent) throw InputError("rating count != sentence count");
        }
    }

    Consolidated out;
    for (std::size_t s = 0; s < n_sent; ++s) {
        AnnotationRecord rec;
        for (std::size_t a = 0; a < per_annotator.size(); ++a) {
            rec.annotators.push_back(per_annotator[a][s]);
            if (!ratings.empty()) rec.ratings.push_back(ratings[a][s]);
        }
        try {
            rec.validate();
        } catch (const InputError& e) {
            throw InputError("sentence " + std::to_string(s) + ": " + e.what());
        }
        if (majority_rating(rec.ratings) == SentenceRating::incomprehensible) {
            ++out.dropped_incomprehensible;
            continue;
        }
        std::vector<Labels> votes;
        for (const auto& a : rec.annotators) votes.push_back(a.labels);
        out.benchmark.push_back(LabeledSeq{rec.annotators.front().tokens, majority_vote(votes), std::nullopt});
        out.kept.push_back(s);
    }
    return out;
}

}  // namespace halluc
