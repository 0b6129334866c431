#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace fame {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
};

std::optional<double> precision_of(const ConfusionCounts& c);
std::optional<double> recall_of(const ConfusionCounts& c);
std::optional<double> f1_of(const ConfusionCounts& c);

// Tie-aware Mann-Whitney AUROC: probability a random positive outscores a
// random negative, ties counted half. nullopt when either class is absent.
std::optional<double> auroc(std::span<const double> scores, std::span<const int> labels);

} // namespace fame
