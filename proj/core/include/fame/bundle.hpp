#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fame/backbone.hpp"
#include "fame/calibration.hpp"
#include "fame/drain.hpp"
#include "fame/experts.hpp"
#include "fame/partition.hpp"
#include "fame/router.hpp"

namespace fame {

// Everything online inference needs, loadable without any training data.
// On disk: a directory with manifest.json, templates.json and one flat
// little-endian float32 array per model.
struct ModelBundle {
    CertifiedPartition partition;
    TemplateTable templates{DrainConfig{}};
    BackboneState backbone;
    GateModel gate;
    SelectorModel selector;
    std::vector<ExpertModel> experts; // indexed by domain; untrained slots for pure domains
    CalibrationResult calibration;

    std::uint64_t root_seed = 0;
    std::string config_hash;
    nlohmann::json diagnostics; // stopping metrics, dataset sizes, warnings

    void validate() const;
    void save(const std::filesystem::path& dir) const;
    static ModelBundle load(const std::filesystem::path& dir);
};

void write_f32_array(const std::filesystem::path& file, std::span<const float> values);
std::vector<float> read_f32_array(const std::filesystem::path& file, std::size_t expected);

} // namespace fame
