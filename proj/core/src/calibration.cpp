#include "fame/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fame/backbone.hpp"

namespace fame {

namespace {

struct Candidate {
    double tau;
    double f1;
    double recall;
    double precision;
};

Candidate evaluate(double tau, std::span<const double> scores, std::span<const int> labels,
                   std::uint64_t n_pos) {
    std::uint64_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] >= tau) (labels[i] == 1 ? tp : fp) += 1;
    }
    const std::uint64_t fn = n_pos - tp;
    Candidate c{tau, 0.0, 0.0, 0.0};
    c.recall = n_pos == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(n_pos);
    c.precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp > 0) c.f1 = 2.0 * c.precision * c.recall / (c.precision + c.recall);
    (void)fn;
    return c;
}

} // namespace

ThresholdResult calibrate_threshold(std::span<const double> scores, std::span<const int> labels,
                                    const CalibrationConfig& config) {
    if (scores.size() != labels.size())
        throw std::runtime_error("calibration: scores/labels size mismatch");
    ThresholdResult out;
    std::uint64_t n_pos = 0;
    for (int y : labels) n_pos += (y == 1);
    if (scores.empty() || n_pos == 0) {
        out.tau = 0.5;
        out.degenerate = true;
        return out;
    }

    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> unique_scores(sorted);
    unique_scores.erase(std::unique(unique_scores.begin(), unique_scores.end()),
                        unique_scores.end());

    std::vector<double> candidates;
    if (unique_scores.size() <= config.percentile_candidates) {
        candidates = unique_scores;
    } else {
        // Nearest-rank percentiles k/1000 over the score multiset.
        candidates.reserve(config.percentile_candidates);
        const std::size_t n = sorted.size();
        for (std::size_t k = 1; k <= config.percentile_candidates; ++k) {
            std::size_t rank = (k * n + config.percentile_candidates - 1) /
                               config.percentile_candidates; // ceil(k*n/1000)
            candidates.push_back(sorted[rank - 1]);
        }
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    }

    bool have_feasible = false;
    Candidate best_feasible{0.5, -1.0, -1.0, 0.0};
    Candidate best_fallback{0.5, -1.0, -1.0, 0.0};
    for (double tau : candidates) {
        Candidate c = evaluate(tau, scores, labels, n_pos);
        if (c.recall >= config.recall_floor) {
            // Ties favor the lower threshold; candidates ascend, so strict >.
            if (!have_feasible || c.f1 > best_feasible.f1) {
                best_feasible = c;
                have_feasible = true;
            }
        }
        if (c.recall > best_fallback.recall ||
            (c.recall == best_fallback.recall && c.f1 > best_fallback.f1)) {
            best_fallback = c;
        }
    }

    const Candidate& chosen = have_feasible ? best_feasible : best_fallback;
    out.tau = chosen.tau;
    out.f1 = chosen.f1;
    out.recall = chosen.recall;
    out.precision = chosen.precision;
    out.floor_met = have_feasible;
    return out;
}

double fuse_universal(double s_u, double gate_score, double w) {
    if (w == 0.0) return s_u;
    double ls = clamp_logit(std::log(clamp_probability(s_u) / (1.0 - clamp_probability(s_u))));
    double lg = clamp_logit(
        std::log(clamp_probability(gate_score) / (1.0 - clamp_probability(gate_score))));
    return sigmoid(ls + w * lg);
}

UniversalCalibration calibrate_universal(std::span<const double> s_u,
                                         std::span<const double> gate_scores,
                                         std::span<const int> labels,
                                         std::span<const double> w_grid,
                                         const CalibrationConfig& config) {
    if (s_u.size() != gate_scores.size() || s_u.size() != labels.size())
        throw std::runtime_error("calibration: fused input size mismatch");
    UniversalCalibration out;
    std::uint64_t n_pos = 0;
    for (int y : labels) n_pos += (y == 1);
    if (s_u.empty() || n_pos == 0) {
        out.w = 0.0;
        out.threshold.tau = 0.5;
        out.threshold.degenerate = true;
        return out;
    }

    bool first = true;
    std::vector<double> fused(s_u.size());
    for (double w : w_grid) {
        for (std::size_t i = 0; i < s_u.size(); ++i)
            fused[i] = fuse_universal(s_u[i], gate_scores[i], w);
        ThresholdResult res = calibrate_threshold(fused, labels, config);
        // Ties prefer the smaller w, then the lower tau; the grid ascends.
        bool better = first || res.f1 > out.threshold.f1;
        if (better) {
            out.w = w;
            out.threshold = res;
            first = false;
        }
    }
    return out;
}

nlohmann::json CalibrationResult::to_json(const std::vector<std::string>& domain_names) const {
    nlohmann::json thresholds = nlohmann::json::object();
    for (const auto& [domain, res] : tau) {
        thresholds[domain_names.at(domain)] = {{"tau", res.tau},
                                               {"f1", res.f1},
                                               {"recall", res.recall},
                                               {"floor_met", res.floor_met},
                                               {"degenerate", res.degenerate}};
    }
    return nlohmann::json{{"thresholds", std::move(thresholds)},
                          {"universal", {{"w", fusion_weight},
                                         {"tau", tau_universal},
                                         {"degenerate", universal_degenerate}}}};
}

} // namespace fame
