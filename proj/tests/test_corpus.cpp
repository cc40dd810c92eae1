#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "halluc/corpus.hpp"
#include "halluc/error.hpp"

using namespace halluc;

namespace {

constexpr const char* kReferenceLine =
    "next,[0] we[0] use[0] fig.[0] 5[0] -[0] 7[0] to[0] explain[0] the[0] disposition[0] pattern[0] with[0] pm-2.[1]";

LabeledSeq random_seq(std::mt19937& gen) {
    static const std::string alphabet = "abcxyz,.-0123456789";
    std::uniform_int_distribution<int> len(1, 12), wlen(1, 6), ch(0, static_cast<int>(alphabet.size()) - 1), bit(0, 1);
    std::vector<std::string> tokens;
    Labels labels;
    const int n = len(gen);
    for (int i = 0; i < n; ++i) {
        std::string w;
        for (int k = wlen(gen); k > 0; --k) w += alphabet[static_cast<std::size_t>(ch(gen))];
        tokens.push_back(w);
        labels.push_back(static_cast<Label>(bit(gen)));
    }
    return {TokenSeq(tokens), labels, std::nullopt};
}

}  // namespace

TEST_CASE("parse_annotation_line reads a published example") {
    auto seq = parse_annotation_line("next,[0] we[0] use[0]");
    CHECK(seq.tokens.tokens() == std::vector<std::string>{"next,", "we", "use"});
    CHECK(seq.labels == Labels{0, 0, 0});

    auto single = parse_annotation_line("a[1]");
    CHECK(single.tokens.tokens() == std::vector<std::string>{"a"});
    CHECK(single.labels == Labels{1});
}

TEST_CASE("parse_annotation_line reports the offending token") {
    try {
        parse_annotation_line("a[2]");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.token_index() == 0);
    }
    try {
        parse_annotation_line("a[0] b c[1]");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.token_index() == 1);
    }
    CHECK_THROWS_AS(parse_annotation_line(""), ParseError);
    CHECK_THROWS_AS(parse_annotation_line("   "), ParseError);
    CHECK_THROWS_AS(parse_annotation_line("[1]"), ParseError);
    CHECK_THROWS_AS(parse_annotation_line("a[b][1]"), ParseError);
}

TEST_CASE("serialize_annotation_line canonical form and errors") {
    LabeledSeq seq{TokenSeq({"we"}), {0}, std::nullopt};
    CHECK(serialize_annotation_line(seq) == "we[0]");
    CHECK_THROWS_AS(serialize_annotation_line({TokenSeq({"a]"}), {0}, std::nullopt}), InputError);
    CHECK_THROWS_AS(serialize_annotation_line({TokenSeq({"[a"}), {1}, std::nullopt}), InputError);
    CHECK_THROWS_AS(serialize_annotation_line({TokenSeq({"a", "b"}), {1}, std::nullopt}), InputError);
}

TEST_CASE("published annotation line round-trips byte-identically") {
    CHECK(serialize_annotation_line(parse_annotation_line(kReferenceLine)) == kReferenceLine);
}

TEST_CASE("serialize then parse is the identity (property)") {
    std::mt19937 gen(7);
    for (int trial = 0; trial < 500; ++trial) {
        auto seq = random_seq(gen);
        REQUIRE(parse_annotation_line(serialize_annotation_line(seq)) == seq);
    }
}

TEST_CASE("majority_vote examples") {
    CHECK(majority_vote(std::vector<Labels>{{1, 0}, {1, 0}, {0, 0}}) == Labels{1, 0});
    CHECK(majority_vote(std::vector<Labels>{{0}, {0}, {0}}) == Labels{0});
    CHECK(majority_vote(std::vector<Labels>{{1}, {0}}) == Labels{0});
    CHECK_THROWS_AS(majority_vote(std::vector<Labels>{{1, 0}, {1}}), InputError);
    CHECK_THROWS_AS(majority_vote(std::vector<Labels>{}), InputError);
}

TEST_CASE("majority_vote tie rule over every two-annotator input") {
    // Stated rule: 1 only with a strict majority, so both annotators must say 1.
    for (int a = 0; a <= 1; ++a) {
        for (int b = 0; b <= 1; ++b) {
            auto out = majority_vote(std::vector<Labels>{{static_cast<Label>(a)}, {static_cast<Label>(b)}});
            CHECK(out == Labels{static_cast<Label>(a && b)});
        }
    }
}

TEST_CASE("majority_vote properties") {
    std::mt19937 gen(11);
    std::uniform_int_distribution<int> bit(0, 1), k(1, 6), len(0, 10);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = len(gen);
        std::vector<Labels> ann(static_cast<std::size_t>(k(gen)));
        for (auto& a : ann)
            for (int i = 0; i < n; ++i) a.push_back(static_cast<Label>(bit(gen)));
        const auto out = majority_vote(ann);
        CHECK(out.size() == static_cast<std::size_t>(n));
        auto shuffled = ann;
        std::shuffle(shuffled.begin(), shuffled.end(), gen);
        CHECK(majority_vote(shuffled) == out);
        std::vector<Labels> same(ann.size(), ann.front());
        CHECK(majority_vote(same) == ann.front());
    }
}

TEST_CASE("majority_rating needs more than half the votes") {
    using R = SentenceRating;
    std::vector<std::optional<R>> three{R::incomprehensible, R::incomprehensible, R::faithful};
    CHECK(majority_rating(three) == R::incomprehensible);
    std::vector<std::optional<R>> split{R::incomprehensible, R::faithful, R::hallucinated};
    CHECK_FALSE(majority_rating(split).has_value());
    CHECK_FALSE(majority_rating(std::vector<std::optional<R>>{}).has_value());
}

TEST_CASE("read_bitext tsv") {
    std::istringstream in("a b\tx y\nc\tz\tzz\n");
    auto recs = read_bitext(in, BitextFormat::tsv);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].record_id == 0);
    CHECK(recs[1].record_id == 1);
    CHECK(recs[0].target.tokens() == std::vector<std::string>{"x", "y"});
    CHECK_FALSE(recs[0].paraphrase.has_value());
    REQUIRE(recs[1].paraphrase.has_value());
    CHECK(recs[1].paraphrase->text() == "zz");

    std::istringstream empty("");
    CHECK(read_bitext(empty, BitextFormat::tsv).empty());
}

TEST_CASE("read_bitext errors carry line numbers") {
    std::istringstream missing("only source\n");
    try {
        read_bitext(missing, BitextFormat::tsv);
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
    std::istringstream reserved("a\tb <mask>\n");
    CHECK_THROWS_AS(read_bitext(reserved, BitextFormat::tsv), InputError);
    std::istringstream empty_target("a\t \n");
    CHECK_THROWS_AS(read_bitext(empty_target, BitextFormat::tsv), InputError);
}

TEST_CASE("read_bitext jsonl") {
    std::istringstream in(R"({"source":"s t","target":"a b","paraphrase":"c d"})"
                          "\n"
                          R"({"source":"u","target":"v"})"
                          "\n");
    auto recs = read_bitext(in, BitextFormat::jsonl);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].paraphrase->text() == "c d");
    CHECK(recs[1].source.text() == "u");

    std::istringstream bad(R"({"source":"s"})");
    try {
        read_bitext(bad, BitextFormat::jsonl);
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
    CHECK(guess_bitext_format("x.jsonl") == BitextFormat::jsonl);
    CHECK(guess_bitext_format("x.tsv") == BitextFormat::tsv);
}

TEST_CASE("eval records parse and validate") {
    std::istringstream in(R"({"id":"r1","source":"s","output":"a b","gold_labels":[0,1],"pred_probs":[0.2,0.9],"external_scores":{"entailment":0.4}})"
                          "\n"
                          R"({"source":"s","output":"c","gold_labels":[1]})"
                          "\n");
    auto recs = read_eval_records(in);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].id == "r1");
    CHECK(recs[1].id == "1");
    CHECK(recs[0].external_scores.at("entailment") == doctest::Approx(0.4));
    recs[0].validate();

    auto again = std::istringstream(eval_record_to_json(recs[0]) + "\n");
    auto back = read_eval_records(again);
    CHECK(back[0].pred_probs == recs[0].pred_probs);
    CHECK(back[0].gold_labels == recs[0].gold_labels);

    EvalRecord bad = recs[1];
    bad.pred_labels = Labels{1, 0};
    CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("consolidate drops incomprehensible sentences and votes tokens") {
    auto s = [](const char* line) { return parse_annotation_line(line); };
    std::vector<std::vector<LabeledSeq>> ann{
        {s("a[1] b[0]"), s("c[0]")},
        {s("a[1] b[1]"), s("c[1]")},
        {s("a[0] b[0]"), s("c[1]")},
    };
    using R = SentenceRating;
    std::vector<std::vector<R>> ratings{
        {R::hallucinated, R::incomprehensible},
        {R::hallucinated, R::incomprehensible},
        {R::faithful, R::hallucinated},
    };
    auto out = consolidate(ann, ratings);
    CHECK(out.dropped_incomprehensible == 1);
    REQUIRE(out.benchmark.size() == 1);
    CHECK(out.benchmark[0].labels == Labels{1, 0});
    CHECK(out.kept == std::vector<std::size_t>{0});

    auto no_ratings = consolidate(ann);
    CHECK(no_ratings.benchmark.size() == 2);
    CHECK(no_ratings.benchmark[1].labels == Labels{1});

    std::vector<std::vector<LabeledSeq>> misaligned{{s("a[1] b[0]")}, {s("a[1] x[0]")}};
    CHECK_THROWS_AS(consolidate(misaligned), InputError);
}

TEST_CASE("TokenSeq rejects empty tokens") {
    CHECK_THROWS_AS(TokenSeq({"a", ""}), InputError);
    CHECK(TokenSeq::from_text("  a \t b  ").tokens() == std::vector<std::string>{"a", "b"});
}
