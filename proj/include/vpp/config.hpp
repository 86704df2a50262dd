#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vpp/climate.hpp"
#include "vpp/coalition.hpp"
#include "vpp/formation.hpp"
#include "vpp/prosumer.hpp"

namespace vpp {

struct WeatherStation {
    std::filesystem::path path;
    CellCoord cell{};
};

/// Where the climate comes from. The synthetic generator's rng seed is not
/// configured: it is derived from the realization seed.
struct ClimateSection {
    enum class Source { synthetic, csv };
    Source source = Source::synthetic;
    SyntheticClimateParams synthetic{};
    std::vector<WeatherStation> stations;  ///< csv: one per lattice cell
    ColumnMap columns{};
};

/// Either a random pool (seeded per realization) or an explicit agent list.
struct PoolSection {
    std::optional<RandomPoolSpec> random;
    std::vector<ProsumerConfig> agents;
    /// Explicit agents without an "rng_seed" get one derived per realization.
    std::vector<bool> derive_noise_seed;
};

struct AlgorithmSelection {
    bool percolation = false;
    std::size_t random_repeats = 0;  ///< 0: random baseline not run
    bool correlated = false;

    bool any() const noexcept { return percolation || random_repeats > 0 || correlated; }
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::size_t realizations = 1;
    ClimateSection climate{};
    PoolSection pool{};
    std::vector<double> phi{0.1};
    std::vector<double> p_min{0.0};
    std::vector<std::size_t> n_coal{10};
    AlgorithmSelection algorithms{};
    FormationOptions formation{};
    double split = 0.8;
    int deseasonalize_window_days = kDefaultDeseasonalizeWindowDays;
    ContractMode mode = ContractMode::analytic;
    /// Multiplier applied to p_min for display; 1e-5 gives tenths of MW.
    double p_min_display_scale = 1e-5;
    std::filesystem::path output_dir;

    /// Canonical JSON of everything that affects results. The growth schedule
    /// is left out: both schedules give the same structures.
    nlohmann::json canonical() const;
    /// Stable 16-hex-digit digest of `canonical()`.
    std::string id() const;
};

/// Throws ConfigError naming the offending field path (e.g. `pool.random.count`).
/// Relative station paths are resolved against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const ProsumerConfig& cfg);

}  // namespace vpp
