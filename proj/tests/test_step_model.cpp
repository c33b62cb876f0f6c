#include <doctest.h>

#include <random>

#include "errors.hpp"
#include "step_model.hpp"
#include "support/oracles.hpp"

using namespace steproute;

namespace {

SegmentationConfig seg(const std::string& sep = "\n\n", const std::string& eos = "<eos>") {
    SegmentationConfig c;
    c.separator = sep;
    c.eos_marker = eos;
    return c;
}

} // namespace

TEST_SUITE_BEGIN("step_model");

TEST_CASE("splits on every separator occurrence") {
    auto steps = segment_steps("a\n\nb\n\nc", seg());
    REQUIRE(steps.size() == 3);
    CHECK(steps[0].content == "a");
    CHECK(steps[1].content == "b");
    CHECK(steps[2].content == "c");
    for (const auto& s : steps) CHECK_FALSE(s.is_terminal);
}

TEST_CASE("empty input yields an empty list") {
    CHECK(segment_steps("", seg()).empty());
}

TEST_CASE("eos suffix marks the final step terminal") {
    auto steps = segment_steps("solve.\n\nAnswer: 4<eos>", seg());
    REQUIRE(steps.size() == 2);
    CHECK(steps[0].content == "solve.");
    CHECK_FALSE(steps[0].is_terminal);
    CHECK(steps[1].content == "Answer: 4");
    CHECK(steps[1].is_terminal);
}

TEST_CASE("segmentation matches the independent scanner on a 20-case corpus") {
    const std::string corpus[] = {
        "a\n\nb\n\nc",       "solve.\n\nAnswer: 4<eos>",
        "x",                 "x<eos>",
        "\n\n",              "a\n\n",
        "\n\na",             "a\n\n\n\nb",
        "one step only",     "tail\n\nmid\n\nend<eos>",
        "a\nb",              "a\nb\n\nc\nd",
        "<eos>",             "a<eos>b\n\nc",
        "  \n\n  ",          "step with <eos> inside\n\nlast",
        "\n\n\n\n",          "first\n\n<eos>",
        "0\n\n1\n\n2\n\n3",  "x\n\ny<eos>",
    };
    for (const auto& text : corpus) {
        auto got = segment_steps(text, seg());
        auto [pieces, terminal] = testing::independent_split(text, "\n\n", "<eos>");
        REQUIRE(got.size() == pieces.size());
        for (size_t i = 0; i < pieces.size(); ++i) {
            CHECK(got[i].content == pieces[i]);
            CHECK(got[i].is_terminal == (terminal && i + 1 == pieces.size()));
        }
    }
}

TEST_CASE("separators inside the eos suffix are literal text") {
    // eos marker containing the separator must not create extra boundaries
    auto cfg = seg("\n\n", "\n\n[DONE]");
    auto steps = segment_steps("a\n\nb\n\n[DONE]", cfg);
    REQUIRE(steps.size() == 2);
    CHECK(steps[1].content == "b");
    CHECK(steps[1].is_terminal);
}

TEST_CASE("consecutive separators preserve the empty step") {
    auto steps = segment_steps("a\n\n\n\nb", seg());
    REQUIRE(steps.size() == 3);
    CHECK(steps[1].content.empty());
    CHECK(steps[1].length_units == 0);
}

TEST_CASE("length_units is zero exactly for empty content") {
    for (const auto& s : segment_steps("a\n\n\n\nbc<eos>", seg()))
        CHECK((s.length_units == 0) == s.content.empty());
}

TEST_CASE("join is the definitional inverse") {
    std::vector<StepText> steps(2);
    steps[0].content = "a";
    steps[1].content = "b";
    CHECK(join_steps(steps, seg()) == "a\n\nb");

    std::vector<StepText> terminal(1);
    terminal[0].content = "x";
    terminal[0].is_terminal = true;
    CHECK(join_steps(terminal, seg()) == "x<eos>");
}

TEST_CASE("join rejects a non-final terminal step and an empty list") {
    std::vector<StepText> steps(2);
    steps[0].content = "a";
    steps[0].is_terminal = true;
    steps[1].content = "b";
    CHECK_THROWS_AS(join_steps(steps, seg()), InvariantError);
    CHECK_THROWS_AS(join_steps({}, seg()), InvariantError);
}

TEST_CASE("round-trip identity on 100 random multi-step strings") {
    std::mt19937_64 rng(20240811);
    std::uniform_int_distribution<int> step_count(1, 8);
    std::uniform_int_distribution<int> piece_len(0, 12);
    std::uniform_int_distribution<int> charset(0, 25);
    std::bernoulli_distribution newline(0.15), terminal(0.4);

    auto cfg = seg();
    for (int iter = 0; iter < 100; ++iter) {
        std::string text;
        const int n = step_count(rng);
        for (int i = 0; i < n; ++i) {
            if (i > 0) text += cfg.separator;
            const int len = piece_len(rng);
            for (int c = 0; c < len; ++c)
                text += newline(rng) ? '\n' : static_cast<char>('a' + charset(rng));
        }
        if (terminal(rng)) text += cfg.eos_marker;

        auto steps = segment_steps(text, cfg);
        // count law over the pre-eos body
        std::string body = text;
        if (body.ends_with(cfg.eos_marker)) body.resize(body.size() - cfg.eos_marker.size());
        size_t occurrences = 0, pos = 0;
        while ((pos = body.find(cfg.separator, pos)) != std::string::npos) {
            ++occurrences;
            pos += cfg.separator.size();
        }
        if (!text.empty()) CHECK(steps.size() == occurrences + 1);
        for (const auto& s : steps)
            CHECK(s.content.find(cfg.separator) == std::string::npos);
        if (!steps.empty()) CHECK(join_steps(steps, cfg) == text);
    }
}

TEST_CASE("config validation") {
    SegmentationConfig c;
    c.separator = "";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.separator = "X";
    c.eos_marker = "X";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.eos_marker = "Y";
    c.max_steps = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_SUITE_END();
