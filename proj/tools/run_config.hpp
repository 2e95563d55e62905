// run_config.hpp: YAML run configuration for qdfsim

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qdf/analysis.hpp"
#include "qdf/correlations.hpp"
#include "qdf/photostream.hpp"

namespace qdfsim {

enum class SystemKind { TwoLevel, Biexciton };

/// Either explicit values or min/max/points on a linear or log scale.
struct Axis {
    std::vector<double> values;
    bool given{false};
};

struct HbtSettings {
    qdf::StreamConfig stream;
    std::int64_t bin_ps{5};
    std::int64_t span_ps{20000};
    double window_ns{6.5};
    std::vector<qdf::ExcludedPeak> excluded;
};

struct FitSettings {
    qdf::Branch branch{qdf::Branch::Exciton};
    double tau_2x_ps{158.0};
    double tau_x_ps{294.0};
    double irf_sigma_ps{40.0};
    std::optional<double> amplitude;  // defaults to the data maximum
    std::optional<double> offset_ps;  // defaults to the time of the data maximum
};

struct RunConfig {
    SystemKind system{SystemKind::TwoLevel};
    qdf::TwoLevelConfig two_level;
    qdf::BiexcitonConfig biexciton{qdf::BiexcitonConfig::two_photon_resonant(300.0)};
    qdf::PolarizationState polarization;
    qdf::GaussianPulse pulse;
    bool area_given{false};
    qdf::SensorConfig sensor;
    bool sensor_detuning_given{false};
    bool sensor_bandwidth_given{false};
    qdf::Observed observed{std::string("sigma")};
    bool observed_given{false};
    qdf::FilterOptions filter;
    Axis axis;
    Axis curves;
    HbtSettings hbt;
    FitSettings fit;
    std::string output;
    std::uint64_t seed{1};
};

/// Parses a YAML document. Errors are ConfigError with "line L, column C" of
/// the offending node; every module invariant is checked here.
RunConfig parse_config(const std::string& text, const std::string& source_name);
RunConfig load_config(const std::string& path);

nlohmann::json to_json(const RunConfig& config);

}  // namespace qdfsim
