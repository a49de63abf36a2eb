#include <doctest.h>

#include "nsg/metrics/cross_model.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace nsg;

namespace {

struct CrossFixture {
    PredictionTable table;

    // Three families; A2 shares A1's family so its explanations must never
    // count as cross-model for A1.
    const std::vector<std::pair<std::string, std::string>> references = {
        {"A1", "famA"}, {"B1", "famB"}, {"C1", "famC"}};
    const std::vector<std::pair<std::string, std::string>> predictors = {
        {"Pa", "famA"}, {"Pb", "famB"}, {"Pc", "famC"}, {"Pd", "famD"}};

    explicit CrossFixture(std::uint64_t seed, int questions = 20) {
        Rng rng = derive_stream(seed, "cross_fixture");
        for (int q = 0; q < questions; ++q) {
            const std::string pair_id = "q" + std::to_string(q);
            for (const auto& [ref, ref_family] : references) {
                for (const auto& [pred, pred_family] : predictors) {
                    add_row(rng, pair_id, ref, ref_family, pred, pred_family, ref, ref_family,
                            PredictorCondition::baseline, true);
                    add_row(rng, pair_id, ref, ref_family, pred, pred_family, ref, ref_family,
                            PredictorCondition::with_explanation, true);
                    for (const auto& [explainer, explainer_family] : references) {
                        if (explainer == ref) continue;
                        // Answer matching is a property of (ref, question,
                        // explainer), constant across predictors.
                        const bool matched =
                            stable_coin(seed, pair_id + ref + explainer) || q % 5 == 0;
                        add_row(rng, pair_id, ref, ref_family, pred, pred_family, explainer,
                                explainer_family, PredictorCondition::with_explanation,
                                matched);
                    }
                    // Same-family explainer rows: present but must be ignored.
                    if (ref == "A1") {
                        add_row(rng, pair_id, ref, ref_family, pred, pred_family, "A2", "famA",
                                PredictorCondition::with_explanation, true);
                    }
                }
            }
        }
    }

    void add_row(Rng& rng, const std::string& pair_id, const std::string& ref,
                 const std::string& ref_family, const std::string& pred,
                 const std::string& pred_family, const std::string& explainer,
                 const std::string& explainer_family, PredictorCondition condition,
                 bool matched) {
        PredictionRow r;
        r.reference_model = ref;
        r.reference_family = ref_family;
        r.predictor_model = pred;
        r.predictor_family = pred_family;
        r.dataset_id = "fixture";
        r.pair_id = pair_id;
        r.condition = condition;
        r.actual = "YES";
        r.correct = rng.bernoulli(condition == PredictorCondition::baseline ? 0.6 : 0.8);
        r.predicted = r.correct ? "YES" : "NO";
        r.explainer_model = explainer;
        r.explainer_family = explainer_family;
        r.answer_matched = matched;
        table.push_back(std::move(r));
    }
};

}  // namespace

TEST_CASE("cross-model accuracies match a brute-force evaluation of the formulas") {
    CrossFixture fixture(2718);
    BootstrapParams params;
    params.iterations = 200;
    const auto report = cross_model_metrics(fixture.table, params);
    REQUIRE(report.per_model.size() == 3);

    for (const auto& result : report.per_model) {
        const auto oracle =
            nsgtest::oracle_cross_model(fixture.table, result.model, result.family);
        CHECK(result.acc_same == doctest::Approx(oracle.acc_same).epsilon(1e-12));
        CHECK(result.acc_cross == doctest::Approx(oracle.acc_cross).epsilon(1e-12));
        CHECK(result.acc_baseline == doctest::Approx(oracle.acc_baseline).epsilon(1e-12));
        CHECK(static_cast<int>(result.questions_excluded) == oracle.questions_excluded);

        const double nsg_same = (oracle.acc_same - oracle.acc_baseline) /
                                (1.0 - oracle.acc_baseline);
        const double nsg_cross = (oracle.acc_cross - oracle.acc_baseline) /
                                 (1.0 - oracle.acc_baseline);
        CHECK(result.nsg_same == doctest::Approx(nsg_same).epsilon(1e-12));
        CHECK(result.uplift == doctest::Approx(nsg_same - nsg_cross).epsilon(1e-12));
    }

    REQUIRE(report.per_family.size() == 3);
    for (const auto& family : report.per_family) {
        double same = 0, cross = 0, base = 0;
        int n = 0;
        for (const auto& m : report.per_model) {
            if (m.family != family.family) continue;
            same += m.acc_same;
            cross += m.acc_cross;
            base += m.acc_baseline;
            ++n;
        }
        CHECK(family.acc_same == doctest::Approx(same / n));
        const double nsg_same = (family.acc_same - family.acc_baseline) /
                                (1.0 - family.acc_baseline);
        const double nsg_cross = (family.acc_cross - family.acc_baseline) /
                                 (1.0 - family.acc_baseline);
        CHECK(family.uplift == doctest::Approx(nsg_same - nsg_cross));
        CHECK(family.uplift_ci.lo <= family.uplift);
        CHECK(family.uplift_ci.hi >= family.uplift);
    }
}

TEST_CASE("questions with no answer-matched cross explainer are excluded") {
    CrossFixture fixture(5);
    // Force one question to have no valid explainer for A1.
    for (auto& row : fixture.table) {
        if (row.pair_id == "q3" && row.reference_model == "A1" &&
            !row.is_self_explanation()) {
            row.answer_matched = false;
        }
    }
    BootstrapParams params;
    params.iterations = 50;
    const auto report = cross_model_metrics(fixture.table, params);
    for (const auto& result : report.per_model) {
        const auto oracle =
            nsgtest::oracle_cross_model(fixture.table, result.model, result.family);
        CHECK(result.acc_cross == doctest::Approx(oracle.acc_cross).epsilon(1e-12));
        if (result.model == "A1") {
            CHECK(result.questions_excluded >= 1);
        }
    }
}

TEST_CASE("a table with self-explanations only cannot produce cross metrics") {
    CrossFixture fixture(9);
    PredictionTable self_only;
    for (const auto& row : fixture.table) {
        if (row.is_self_explanation()) self_only.push_back(row);
    }
    CHECK_THROWS_AS(cross_model_metrics(self_only, {}), MetricsError);
}
