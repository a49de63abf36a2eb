#include <doctest.h>

#include <set>

#include "nsg/counterfactual/moral.hpp"

using namespace nsg;

TEST_CASE("moral scenario generation is seeded and deterministic") {
    const auto vocab = make_default_moral_vocabulary();
    const auto a = generate_moral_scenarios(200, 31, vocab);
    const auto b = generate_moral_scenarios(200, 31, vocab);
    REQUIRE(a.size() == 200);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].scenario_id == b[i].scenario_id);
        CHECK(a[i].text_case1 == b[i].text_case1);
    }
    const auto c = generate_moral_scenarios(200, 32, vocab);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) any_diff |= a[i].scenario_id != c[i].scenario_id;
    CHECK(any_diff);
}

TEST_CASE("gender scenarios mirror counterpart roles with identical counts") {
    const auto vocab = make_default_moral_vocabulary();
    std::map<std::string, std::string> counterpart;
    for (const auto& [left, right] : vocab.pairs.at(MoralDimension::gender)) {
        counterpart[left] = right;
        counterpart[right] = left;
    }
    const auto scenarios = generate_moral_scenarios(3000, 9, vocab);
    int checked = 0;
    for (const auto& s : scenarios) {
        if (s.dimension != MoralDimension::gender) continue;
        ++checked;
        REQUIRE(!s.group_a.empty());
        REQUIRE(!s.group_b.empty());
        std::size_t total_a = 0, total_b = 0;
        for (const auto& [type, count] : s.group_a) {
            REQUIRE(counterpart.count(type));
            CHECK(s.group_b.at(counterpart.at(type)) == count);
            total_a += static_cast<std::size_t>(count);
        }
        for (const auto& [_, count] : s.group_b) total_b += static_cast<std::size_t>(count);
        CHECK(total_a == total_b);
        CHECK(total_a >= 1);
        CHECK(total_a <= 6);
    }
    CHECK(checked > 300);
}

TEST_CASE("utilitarian scenarios differ only in counts of the same types") {
    const auto vocab = make_default_moral_vocabulary();
    const auto scenarios = generate_moral_scenarios(2000, 13, vocab);
    int checked = 0;
    for (const auto& s : scenarios) {
        if (s.dimension != MoralDimension::utilitarianism) continue;
        ++checked;
        REQUIRE(s.group_a.size() == s.group_b.size());
        std::size_t total_a = 0, total_b = 0;
        for (const auto& [type, count] : s.group_a) {
            REQUIRE(s.group_b.count(type));
            total_a += static_cast<std::size_t>(count);
            total_b += static_cast<std::size_t>(s.group_b.at(type));
        }
        CHECK(total_b > total_a);
    }
    CHECK(checked > 200);
}

TEST_CASE("scenario text follows the dilemma wording") {
    const auto vocab = make_default_moral_vocabulary();
    const auto scenarios = generate_moral_scenarios(50, 21, vocab);
    for (const auto& s : scenarios) {
        CHECK(s.text_case1.find("A self-driving car with sudden brake failure") == 0);
        CHECK(s.text_case2.find("A self-driving car with sudden brake failure") == 0);
        CHECK(s.text_case1.find("This will result in the death of") != std::string::npos);
        CHECK(s.text_case1.find("Meanwhile, it will spare") != std::string::npos);
        const bool case1_swerves = s.text_case1.find("will swerve") != std::string::npos;
        CHECK(case1_swerves == s.is_interventionism);
        if (s.is_in_car) {
            CHECK(moral_question_text(s).find("inside the car") != std::string::npos);
        }
        if (s.is_law) {
            CHECK(moral_question_text(s).find("flouting the law") != std::string::npos);
        }
    }
}

TEST_CASE("pairing keeps the feature set fixed and varies only counts") {
    const auto vocab = make_default_moral_vocabulary();
    const auto scenarios = generate_moral_scenarios(5000, 17, vocab);
    std::map<std::string, const MoralScenario*> by_id;
    for (const auto& s : scenarios) by_id[s.scenario_id] = &s;

    const auto pairs = pair_moral_scenarios(scenarios, 17);
    REQUIRE(!pairs.empty());
    std::set<std::string> groups_seen;
    for (const auto& p : pairs) {
        const auto* fact = by_id.at(p.factual_id);
        const auto* cf = by_id.at(p.counterfactual_id);
        CHECK(fact->feature_set_key() == cf->feature_set_key());
        CHECK(fact->count_signature() != cf->count_signature());
        CHECK(p.distance >= 1);
        CHECK(static_cast<int>(p.changed.size()) == p.distance);
        CHECK(!p.dimension.empty());
        // one pair per feature-set group
        CHECK(groups_seen.insert(fact->feature_set_key()).second);
    }
}

TEST_CASE("a group with a single count configuration contributes no pair") {
    const auto vocab = make_default_moral_vocabulary();
    auto scenarios = generate_moral_scenarios(2, 77, vocab);
    // Force both scenarios into the same group with identical counts.
    scenarios[1] = scenarios[0];
    CHECK(pair_moral_scenarios(scenarios, 1).empty());
}

TEST_CASE("15000 scenarios pair down to roughly a thousand counterfactuals") {
    const auto vocab = make_default_moral_vocabulary();
    const auto scenarios = generate_moral_scenarios(15000, 4, vocab);
    REQUIRE(scenarios.size() == 15000);
    const auto pairs = pair_moral_scenarios(scenarios, 4);
    CHECK(pairs.size() >= 800);
    CHECK(pairs.size() <= 1200);
}
