#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fame/backbone.hpp"
#include "fame/calibration.hpp"
#include "fame/metrics.hpp"
#include "fame/rng.hpp"

using namespace fame;

namespace {

// Brute-force oracle: walk every unique score, apply the same selection rules
// independently of the implementation's percentile/search machinery.
struct OracleResult {
    double tau, f1, recall;
};

OracleResult oracle_threshold(const std::vector<double>& scores, const std::vector<int>& labels,
                              double floor) {
    std::set<double> unique(scores.begin(), scores.end());
    std::uint64_t n_pos = 0;
    for (int y : labels) n_pos += (y == 1);
    bool have_feasible = false;
    OracleResult feasible{0.5, -1.0, -1.0}, fallback{0.5, -1.0, -1.0};
    for (double tau : unique) {
        std::uint64_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (scores[i] >= tau) (labels[i] == 1 ? tp : fp) += 1;
        double recall = n_pos ? static_cast<double>(tp) / n_pos : 0.0;
        double precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
        double f1 = tp ? 2.0 * precision * recall / (precision + recall) : 0.0;
        if (recall >= floor && (!have_feasible || f1 > feasible.f1)) {
            feasible = {tau, f1, recall};
            have_feasible = true;
        }
        if (recall > fallback.recall || (recall == fallback.recall && f1 > fallback.f1))
            fallback = {tau, f1, recall};
    }
    return have_feasible ? feasible : fallback;
}

} // namespace

TEST_CASE("perfectly separated scores give F1 1 at a feasible threshold") {
    std::vector<double> scores{0.9, 0.8, 0.1, 0.2};
    std::vector<int> labels{1, 1, 0, 0};
    ThresholdResult res = calibrate_threshold(scores, labels);
    CHECK(res.f1 == doctest::Approx(1.0));
    CHECK(res.recall == doctest::Approx(1.0));
    CHECK(res.tau > 0.2);
    CHECK(res.tau <= 0.8);
    CHECK(res.floor_met);
}

TEST_CASE("recall floor forces the low threshold") {
    // anomalies {0.9, 0.4}, normal {0.5}: floor 0.9 admits only tau <= 0.4,
    // where F1 = 2*(2/3)*1 / (2/3 + 1) = 0.8.
    std::vector<double> scores{0.9, 0.4, 0.5};
    std::vector<int> labels{1, 1, 0};
    ThresholdResult res = calibrate_threshold(scores, labels);
    CHECK(res.tau == doctest::Approx(0.4));
    CHECK(res.recall == doctest::Approx(1.0));
    CHECK(res.f1 == doctest::Approx(0.8));
}

TEST_CASE("three unique scores search exactly three candidates") {
    // With <= 1000 unique values the search is the exhaustive unique-score
    // walk; equality with the oracle on every field proves it.
    std::vector<double> scores{0.9, 0.4, 0.5, 0.4, 0.9};
    std::vector<int> labels{1, 1, 0, 1, 0};
    ThresholdResult res = calibrate_threshold(scores, labels);
    OracleResult oracle = oracle_threshold(scores, labels, 0.9);
    CHECK(res.tau == oracle.tau);
    CHECK(res.f1 == oracle.f1);
    CHECK(res.recall == oracle.recall);
}

TEST_CASE("zero anomalies degenerate to tau 0.5 with a warning") {
    std::vector<double> scores{0.1, 0.2, 0.3};
    std::vector<int> labels{0, 0, 0};
    ThresholdResult res = calibrate_threshold(scores, labels);
    CHECK(res.degenerate);
    CHECK(res.tau == 0.5);
}

TEST_CASE("oracle equivalence over random score sets") {
    Rng rng(606);
    for (int trial = 0; trial < 60; ++trial) {
        std::size_t n = 5 + rng.below(400);
        std::vector<double> scores;
        std::vector<int> labels;
        bool any_pos = false;
        for (std::size_t i = 0; i < n; ++i) {
            // Quantized scores so duplicates occur.
            scores.push_back(rng.below(50) / 50.0);
            int y = rng.unit() < 0.3 ? 1 : 0;
            any_pos |= (y == 1);
            labels.push_back(y);
        }
        if (!any_pos) labels[0] = 1;
        ThresholdResult res = calibrate_threshold(scores, labels);
        OracleResult oracle = oracle_threshold(scores, labels, 0.9);
        CHECK(res.tau == oracle.tau);
        CHECK(res.f1 == oracle.f1);
        CHECK(res.recall == oracle.recall);
        if (oracle.recall >= 0.9) CHECK(res.floor_met);
    }
}

TEST_CASE("percentile path stays within the multiset and respects the floor") {
    Rng rng(17);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 5000; ++i) {
        scores.push_back(rng.unit()); // ~5000 unique values: percentile path
        labels.push_back(rng.unit() < 0.2 ? 1 : 0);
    }
    ThresholdResult res = calibrate_threshold(scores, labels);
    CHECK(std::find(scores.begin(), scores.end(), res.tau) != scores.end());
    CHECK(res.recall >= 0.9);
}

TEST_CASE("fusion identities") {
    CHECK(fuse_universal(0.5, 0.5, 0.7) == doctest::Approx(0.5));
    CHECK(fuse_universal(0.31, 0.9, 0.0) == 0.31); // w = 0 is the exact identity
    double s = sigmoid(1.0);                        // logit(s) == 1
    CHECK(fuse_universal(s, s, 1.0) == doctest::Approx(sigmoid(2.0)).epsilon(1e-9));
    // Monotone in s_u for fixed gate and w >= 0.
    double prev = -1.0;
    for (double su = 0.05; su < 1.0; su += 0.05) {
        double fused = fuse_universal(su, 0.7, 1.5);
        CHECK(fused > prev);
        prev = fused;
    }
    // s_u = 0.5 reduces to sigma(w * logit(g)).
    CHECK(fuse_universal(0.5, 0.8, 2.0) ==
          doctest::Approx(sigmoid(2.0 * std::log(0.8 / 0.2))).epsilon(1e-9));
    // Extreme scores clamp instead of overflowing.
    CHECK(std::isfinite(fuse_universal(1.0, 1.0, 2.0)));
    CHECK(std::isfinite(fuse_universal(0.0, 0.0, 2.0)));
}

TEST_CASE("universal calibration: uninformative gate ties break to w=0") {
    std::vector<double> s_u{0.9, 0.8, 0.1, 0.2, 0.85, 0.15};
    std::vector<double> gate(6, 0.5); // logit 0: every w gives identical fused scores
    std::vector<int> labels{1, 1, 0, 0, 1, 0};
    std::vector<double> grid{0.0, 0.25, 0.5, 1.0, 2.0};
    UniversalCalibration res = calibrate_universal(s_u, gate, labels, grid);
    CHECK(res.w == 0.0);
    CHECK(res.threshold.f1 == doctest::Approx(1.0));
}

TEST_CASE("universal calibration matches an exhaustive grid-times-threshold oracle") {
    Rng rng(77);
    std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t n = 40 + rng.below(100);
        std::vector<double> s_u, gate;
        std::vector<int> labels;
        for (std::size_t i = 0; i < n; ++i) {
            int y = rng.unit() < 0.35 ? 1 : 0;
            labels.push_back(y);
            s_u.push_back(rng.below(20) / 20.0 * 0.6 + (y ? 0.3 : 0.05));
            // Gate anti-correlated with the label on a chunk of lines.
            gate.push_back(y ? rng.below(10) / 20.0 : 0.5 + rng.below(10) / 20.0);
        }
        UniversalCalibration res = calibrate_universal(s_u, gate, labels, grid);
        // Oracle: best F1 over the full grid, ties to smaller w.
        double best_f1 = -1.0, best_w = 0.0;
        for (double w : grid) {
            std::vector<double> fused(n);
            for (std::size_t i = 0; i < n; ++i) fused[i] = fuse_universal(s_u[i], gate[i], w);
            OracleResult o = oracle_threshold(fused, labels, 0.9);
            if (o.f1 > best_f1) {
                best_f1 = o.f1;
                best_w = w;
            }
        }
        CHECK(res.w == best_w);
        CHECK(res.threshold.f1 == doctest::Approx(best_f1).epsilon(1e-12));
    }
}

TEST_CASE("empty universal subset degenerates to w=0 tau=0.5") {
    UniversalCalibration res = calibrate_universal({}, {}, {}, std::vector<double>{0.0, 1.0});
    CHECK(res.w == 0.0);
    CHECK(res.threshold.tau == 0.5);
    CHECK(res.threshold.degenerate);
}
