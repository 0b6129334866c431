#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <json.hpp>

namespace fame {

struct ThresholdResult {
    double tau = 0.5;
    double f1 = 0.0;
    double recall = 0.0;
    double precision = 0.0;
    bool floor_met = false;
    bool degenerate = false; // no anomalies in the calibration subset
};

struct CalibrationConfig {
    double recall_floor = 0.90;
    std::size_t percentile_candidates = 1000;
};

// Max-F1 threshold under a recall floor, searched over 1000 nearest-rank score
// percentiles, or over every unique score when there are at most 1000 of them.
// Decision rule is score >= tau.
ThresholdResult calibrate_threshold(std::span<const double> scores, std::span<const int> labels,
                                    const CalibrationConfig& config = {});

// Eq. 4: sigma(logit(s_u) + w * logit(g)), logits clamped to +-16. w == 0 is
// the exact identity on s_u.
double fuse_universal(double s_u, double gate_score, double w);

struct UniversalCalibration {
    double w = 0.0;
    ThresholdResult threshold;
};

UniversalCalibration calibrate_universal(std::span<const double> s_u,
                                         std::span<const double> gate_scores,
                                         std::span<const int> labels,
                                         std::span<const double> w_grid,
                                         const CalibrationConfig& config = {});

// Everything inference needs to turn scores into decisions. `tau` covers the
// mixed domains; the universal path carries its own fused threshold.
struct CalibrationResult {
    std::map<std::uint32_t, ThresholdResult> tau;
    double fusion_weight = 0.0;
    double tau_universal = 0.5;
    bool universal_degenerate = false;

    nlohmann::json to_json(const std::vector<std::string>& domain_names) const;
};

} // namespace fame
