#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "errors.hpp"
#include "scripted_world.hpp"
#include "util.hpp"

using namespace steproute;

namespace {

GeneratorRef ref_of(Role role, long max_units = 4096) {
    GeneratorRef r;
    r.role = role;
    r.endpoint = "scripted";
    r.stop = "\n\n";
    r.eos_marker = "<eos>";
    r.max_units = max_units;
    r.unit_price = role == Role::draft ? 1.0 : 8.0;
    return r;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_SUITE_BEGIN("backends");

TEST_CASE("scripted lookup returns the table entry") {
    auto world = std::make_shared<ScriptedWorld>();
    world->add_generation("Q1", Role::draft, -1, "Step one.");
    ScriptedGenerator gen(world, ref_of(Role::draft));
    auto out = gen.generate("Q1", 0);
    CHECK(out.step.content == "Step one.");
    CHECK(out.producer == Role::draft);
    CHECK_FALSE(out.step.is_terminal);
    CHECK_FALSE(out.truncated);
    CHECK(out.cost.units == 9);
    CHECK(out.cost.wall_time == 0.0);
}

TEST_CASE("unit cap truncates and flags") {
    auto world = std::make_shared<ScriptedWorld>();
    world->add_generation("Q", Role::draft, -1, "abcdef");
    ScriptedGenerator gen(world, ref_of(Role::draft, 3));
    auto out = gen.generate("Q", 0);
    CHECK(out.step.content == "abc");
    CHECK(out.truncated);
    CHECK(out.step.length_units == 3);
}

TEST_CASE("first completed marker wins") {
    auto world = std::make_shared<ScriptedWorld>();
    world->add_generation("A", Role::draft, -1, "one\n\ntwo");
    world->add_generation("B", Role::draft, -1, "done<eos>");
    world->add_generation("C", Role::draft, -1, "head\n\ntail<eos>");
    world->add_generation("D", Role::draft, -1, "before<eos>\n\nafter");
    ScriptedGenerator gen(world, ref_of(Role::draft));

    auto a = gen.generate("A", 0);
    CHECK(a.step.content == "one");
    CHECK_FALSE(a.step.is_terminal);

    auto b = gen.generate("B", 0);
    CHECK(b.step.content == "done");
    CHECK(b.step.is_terminal);

    auto c = gen.generate("C", 0);
    CHECK(c.step.content == "head");
    CHECK_FALSE(c.step.is_terminal);

    auto d = gen.generate("D", 0);
    CHECK(d.step.content == "before");
    CHECK(d.step.is_terminal);
}

TEST_CASE("cap can cut before a later separator completes") {
    auto world = std::make_shared<ScriptedWorld>();
    world->add_generation("Q", Role::draft, -1, "abcdef\n\ngh");
    ScriptedGenerator gen(world, ref_of(Role::draft, 3));
    auto out = gen.generate("Q", 0);
    CHECK(out.step.content == "abc");
    CHECK(out.truncated);
}

TEST_CASE("normalization maps raw scores through the configured bounds") {
    ScoreBounds bounds{0.0, 5.0};
    bool clamped = true;
    CHECK(bounds.normalize(3.2, &clamped) == doctest::Approx(0.64));
    CHECK_FALSE(clamped);
    CHECK(bounds.normalize(6.0, &clamped) == 1.0);
    CHECK(clamped);
    CHECK(bounds.normalize(-1.0) == 0.0);
}

TEST_CASE("scorer normalizes and counts clamp warnings") {
    auto world = std::make_shared<ScriptedWorld>();
    world->add_reward("Q", "s", 3.2);
    world->add_reward("Q", "hot", 6.0);
    ScriptedScorer scorer(world, ScoreBounds{0.0, 5.0});
    StepText step;
    step.content = "s";
    CHECK(scorer.score("Q", step) == doctest::Approx(0.64));
    CHECK(scorer.clamp_warnings() == 0);
    step.content = "hot";
    CHECK(scorer.score("Q", step) == 1.0);
    CHECK(scorer.clamp_warnings() == 1);
}

TEST_CASE("fifty random table entries replay exactly") {
    auto world = std::make_shared<ScriptedWorld>();
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::pair<std::string, double>> entries;
    for (int i = 0; i < 50; ++i) {
        std::string ctx = "ctx" + std::to_string(i);
        double reward = unit(rng);
        world->add_reward(ctx, "step", reward);
        entries.emplace_back(ctx, reward);
    }
    ScriptedScorer scorer(world, ScoreBounds{0.0, 1.0});
    StepText step;
    step.content = "step";
    for (const auto& [ctx, expected] : entries) CHECK(scorer.score(ctx, step) == expected);
}

TEST_CASE("missing script entry names the key") {
    auto world = std::make_shared<ScriptedWorld>();
    ScriptedGenerator gen(world, ref_of(Role::draft));
    CHECK_THROWS_WITH_AS(gen.generate("nowhere", 0),
                         doctest::Contains("nowhere"), ConfigError);
}

TEST_CASE("fallback is deterministic and respects the seed") {
    auto world = std::make_shared<ScriptedWorld>();
    world->enable_fallback(7);
    auto a = world->generation_for("ctx", Role::draft, 0);
    auto b = world->generation_for("ctx", Role::draft, 0);
    CHECK(a == b);
    CHECK(world->reward_for("ctx", "anything") == world->reward_for("ctx", "anything"));
    double r = world->reward_for("ctx", "anything");
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);

    auto world2 = std::make_shared<ScriptedWorld>();
    world2->enable_fallback(8);
    CHECK(world2->generation_for("ctx", Role::draft, 0) != a);
}

TEST_CASE("sample-specific entries shadow the sample-agnostic one") {
    auto world = std::make_shared<ScriptedWorld>();
    world->add_generation("Q", Role::target, -1, "generic");
    world->add_generation("Q", Role::target, 1, "special");
    CHECK(world->generation_for("Q", Role::target, 0) == "generic");
    CHECK(world->generation_for("Q", Role::target, 1) == "special");
}

TEST_CASE("load_script: minimal file, duplicates, audit count") {
    const std::string path = temp_path("sr_world_min.jsonl");
    {
        std::ofstream f(path);
        f << R"({"context":"Q1","role":"draft","text":"d"})" << "\n";
        f << R"({"context":"Q1","role":"target","text":"t"})" << "\n";
        f << R"({"context":"Q1","step":"d","reward":0.3})" << "\n";
        f << R"({"context":"Q1","step":"t","reward":0.6})" << "\n";
    }
    auto world = ScriptedWorld::load(path, ScriptedWorld::KeyMode::exact);
    CHECK(world.generation_count() == 2);
    CHECK(world.reward_count() == 2);

    // independent line-count audit
    size_t role_lines = 0, reward_lines = 0;
    for (const auto& line : read_lines(path)) {
        if (line.find("\"role\"") != std::string::npos) ++role_lines;
        if (line.find("\"reward\"") != std::string::npos) ++reward_lines;
    }
    CHECK(world.generation_count() == role_lines);
    CHECK(world.reward_count() == reward_lines);
    std::remove(path.c_str());
}

TEST_CASE("load_script rejects duplicates with the line number") {
    const std::string path = temp_path("sr_world_dup.jsonl");
    {
        std::ofstream f(path);
        f << R"({"context":"Q1","role":"draft","text":"a"})" << "\n";
        f << R"({"context":"Q1","role":"draft","text":"b"})" << "\n";
    }
    CHECK_THROWS_WITH_AS(ScriptedWorld::load(path, ScriptedWorld::KeyMode::exact),
                         doctest::Contains(":2"), IoError);
    std::remove(path.c_str());
}

TEST_CASE("load_script reports parse errors with the line number") {
    const std::string path = temp_path("sr_world_bad.jsonl");
    {
        std::ofstream f(path);
        f << R"({"context":"Q1","role":"draft","text":"a"})" << "\n";
        f << "{not json\n";
    }
    CHECK_THROWS_WITH_AS(ScriptedWorld::load(path, ScriptedWorld::KeyMode::exact),
                         doctest::Contains(":2"), IoError);
    std::remove(path.c_str());
}

TEST_CASE("hash key mode resolves through the stable hash") {
    auto world = std::make_shared<ScriptedWorld>();
    world->set_key_mode(ScriptedWorld::KeyMode::hash);
    const std::string context = "some very long context that we do not want to store";
    world->add_generation(stable_hash_hex(context), Role::draft, -1, "step");
    CHECK(world->generation_for(context, Role::draft, 0) == "step");
}

TEST_SUITE_END();
