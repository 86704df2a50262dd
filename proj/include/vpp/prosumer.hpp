#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "vpp/climate.hpp"
#include "vpp/timeseries.hpp"

namespace vpp {

struct TurbineParams {
    double cut_in = 3.0;         ///< m/s
    double rated_speed = 12.0;   ///< m/s
    double cut_out = 25.0;       ///< m/s
    double rated_power = 20e3;   ///< W

    void validate() const;
    bool operator==(const TurbineParams&) const = default;
};

struct PVParams {
    double panel_area = 30.0;            ///< m^2
    double efficiency = 0.18;            ///< (0, 1]
    double degradation_exponent = 3.4;   ///< cloud degradation exponent

    void validate() const;
    bool operator==(const PVParams&) const = default;
};

struct ProsumerConfig {
    AgentId id{};
    CellCoord cell{};
    int n_turbines = 0;
    TurbineParams turbine{};
    int n_pv = 0;
    PVParams pv{};
    double base_load = 2000.0;          ///< W
    double morning_peak_gain = 1.0;
    double evening_peak_gain = 1.0;
    double comfort_temperature = 19.0;  ///< degrees Celsius
    double heating_gain = 100.0;        ///< W per degree below comfort
    double noise_level = 0.1;           ///< half-width of the multiplicative noise
    std::uint64_t rng_seed = 0;

    void validate() const;
    bool operator==(const ProsumerConfig&) const = default;
};

/// Cubic ramp between cut-in and rated speed, flat to cut-out, zero outside.
double wind_power(double wind_speed, const TurbineParams& params);

inline constexpr double kSolarConstantClearSky = 1000.0;  // W/m^2

/// Clear-sky irradiance S0 * sin(elevation), zero when the sun is down.
/// Clock time is taken as local solar time.
double clear_sky_irradiance(Timestamp time, double latitude_deg);

/// Solar elevation in degrees from declination and hour angle.
double solar_elevation_deg(Timestamp time, double latitude_deg);

/// irradiance * (1 - 0.75 c^k) * area * efficiency.
double pv_power(double irradiance, double cloudiness, const PVParams& params);

/// Relative household load for an hour of day: night trough at 1-5h,
/// morning peak at 7-9h and evening peak at 18-21h.
double daily_profile(int hour, double morning_gain, double evening_gain);

/// Load in watts. Draws one uniform variate from `rng` when noise_level > 0.
double consumption(Timestamp time, double temperature, const ProsumerConfig& cfg,
                   std::mt19937_64& rng);

/// Production minus consumption.
double available_power(const ProsumerConfig& cfg, const ClimateVector& climate, Timestamp time,
                       double latitude_deg, std::mt19937_64& rng);

/// One hourly series per agent. The grid must be hourly. Agents are evaluated
/// in parallel; each agent draws from its own stream seeded by cfg.rng_seed.
SeriesPanel simulate_pool(std::span<const ProsumerConfig> pool, const ClimateGrid& grid);

/// Single-threaded reference for `simulate_pool`.
SeriesPanel simulate_pool_serial(std::span<const ProsumerConfig> pool, const ClimateGrid& grid);

struct RealRange {
    double lo = 0.0;
    double hi = 0.0;
};

struct IntRange {
    int lo = 0;
    int hi = 0;
};

/// Parameter ranges for a randomly drawn pool; every draw is uniform.
/// The defaults are assumptions of this engine (no published distribution).
struct RandomPoolSpec {
    std::size_t count = 200;
    std::uint64_t master_seed = 1;
    IntRange n_turbines{1, 2};
    RealRange turbine_rated_power{15e3, 40e3};
    RealRange turbine_cut_in{2.5, 3.5};
    RealRange turbine_rated_speed{11.0, 13.0};
    RealRange turbine_cut_out{22.0, 25.0};
    IntRange n_pv{1, 3};
    RealRange pv_area{40.0, 80.0};
    RealRange pv_efficiency{0.15, 0.20};
    RealRange base_load{1000.0, 4000.0};
    RealRange morning_peak_gain{0.5, 1.5};
    RealRange evening_peak_gain{0.5, 1.5};
    RealRange comfort_temperature{18.0, 21.0};
    RealRange heating_gain{50.0, 300.0};
    RealRange noise_level{0.05, 0.3};
};

/// Agents with ids 0..count-1 placed uniformly on a width x height lattice.
std::vector<ProsumerConfig> generate_random_pool(const RandomPoolSpec& spec, int width, int height);

}  // namespace vpp
