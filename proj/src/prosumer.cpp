#include "vpp/prosumer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "vpp/errors.hpp"
#include "vpp/random.hpp"

namespace vpp {

void TurbineParams::validate() const {
    if (!(0.0 < cut_in && cut_in < rated_speed && rated_speed < cut_out)) {
        throw InvalidArgument("turbine speeds must satisfy 0 < cut_in < rated_speed < cut_out");
    }
    if (!(rated_power > 0.0)) {
        throw InvalidArgument("turbine rated_power must be positive");
    }
}

void PVParams::validate() const {
    if (!(panel_area > 0.0)) {
        throw InvalidArgument("pv panel_area must be positive");
    }
    if (!(efficiency > 0.0 && efficiency <= 1.0)) {
        throw InvalidArgument("pv efficiency must lie in (0, 1]");
    }
    if (!(degradation_exponent >= 0.0)) {
        throw InvalidArgument("pv degradation_exponent must be >= 0");
    }
}

void ProsumerConfig::validate() const {
    if (n_turbines < 0 || n_pv < 0) {
        throw InvalidArgument("agent " + to_string(id) + ": generator counts must be >= 0");
    }
    if (n_turbines > 0) {
        turbine.validate();
    }
    if (n_pv > 0) {
        pv.validate();
    }
    if (!(base_load >= 0.0) || !(heating_gain >= 0.0) || !(noise_level >= 0.0) ||
        !(morning_peak_gain >= 0.0) || !(evening_peak_gain >= 0.0)) {
        throw InvalidArgument("agent " + to_string(id) +
                              ": load, gains and noise level must be >= 0");
    }
    if (!std::isfinite(comfort_temperature)) {
        throw InvalidArgument("agent " + to_string(id) + ": comfort temperature must be finite");
    }
    if (n_turbines == 0 && n_pv == 0 && base_load == 0.0 && heating_gain == 0.0) {
        throw InvalidArgument("agent " + to_string(id) + " neither produces nor consumes");
    }
}

double wind_power(double v, const TurbineParams& p) {
    if (v < p.cut_in || v > p.cut_out) {
        return 0.0;
    }
    if (v >= p.rated_speed) {
        return p.rated_power;
    }
    const double ci3 = p.cut_in * p.cut_in * p.cut_in;
    const double r3 = p.rated_speed * p.rated_speed * p.rated_speed;
    return p.rated_power * (v * v * v - ci3) / (r3 - ci3);
}

double solar_elevation_deg(Timestamp time, double latitude_deg) {
    constexpr double deg = std::numbers::pi / 180.0;
    const double doy = static_cast<double>(day_of_year(time));
    const double declination = 23.44 * std::sin(2.0 * std::numbers::pi * (284.0 + doy) / 365.0);
    const double hour_angle = 15.0 * (hour_of_day(time) - 12.0);
    const double s = std::sin(latitude_deg * deg) * std::sin(declination * deg) +
                     std::cos(latitude_deg * deg) * std::cos(declination * deg) *
                         std::cos(hour_angle * deg);
    return std::asin(std::clamp(s, -1.0, 1.0)) / deg;
}

double clear_sky_irradiance(Timestamp time, double latitude_deg) {
    if (!(std::abs(latitude_deg) <= 90.0)) {
        throw InvalidArgument("latitude must lie in [-90, 90]");
    }
    const double elevation = solar_elevation_deg(time, latitude_deg);
    if (elevation <= 0.0) {
        return 0.0;
    }
    return kSolarConstantClearSky * std::sin(elevation * std::numbers::pi / 180.0);
}

double pv_power(double irradiance, double cloudiness, const PVParams& p) {
    const double degradation = 1.0 - 0.75 * std::pow(cloudiness, p.degradation_exponent);
    return irradiance * degradation * p.panel_area * p.efficiency;
}

namespace {

// Base shape, then the extra load of the morning (7-9h) and evening (18-21h)
// peaks per unit gain.
constexpr std::array<double, 24> kBaseProfile{
    0.55, 0.45, 0.40, 0.40, 0.40, 0.45, 0.60, 0.80, 0.80, 0.75, 0.70, 0.70,
    0.75, 0.70, 0.65, 0.65, 0.70, 0.80, 0.90, 0.95, 0.90, 0.85, 0.75, 0.65};
constexpr std::array<double, 24> kMorningPeak{
    0, 0, 0, 0, 0, 0, 0.10, 0.50, 0.60, 0.40, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
constexpr std::array<double, 24> kEveningPeak{
    0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0.10, 0.50, 0.70, 0.60, 0.40, 0, 0};

}  // namespace

double daily_profile(int hour, double morning_gain, double evening_gain) {
    const auto h = static_cast<std::size_t>(((hour % 24) + 24) % 24);
    return kBaseProfile[h] + morning_gain * kMorningPeak[h] + evening_gain * kEveningPeak[h];
}

double consumption(Timestamp time, double temperature, const ProsumerConfig& cfg,
                   std::mt19937_64& rng) {
    const double load =
        cfg.base_load * daily_profile(hour_index(time), cfg.morning_peak_gain,
                                      cfg.evening_peak_gain) +
        cfg.heating_gain * std::max(0.0, cfg.comfort_temperature - temperature);
    if (cfg.noise_level <= 0.0) {
        return load;
    }
    std::uniform_real_distribution<double> noise(1.0 - cfg.noise_level, 1.0 + cfg.noise_level);
    return load * noise(rng);
}

double available_power(const ProsumerConfig& cfg, const ClimateVector& climate, Timestamp time,
                       double latitude_deg, std::mt19937_64& rng) {
    double production = 0.0;
    if (cfg.n_turbines > 0) {
        production += cfg.n_turbines * wind_power(climate.wind_speed, cfg.turbine);
    }
    if (cfg.n_pv > 0) {
        production += cfg.n_pv * pv_power(clear_sky_irradiance(time, latitude_deg),
                                          climate.cloudiness, cfg.pv);
    }
    return production - consumption(time, climate.temperature, cfg, rng);
}

namespace {

void check_pool(std::span<const ProsumerConfig> pool, const ClimateGrid& grid) {
    if (grid.interval() != kHour) {
        throw InvalidArgument("simulate_pool requires an hourly climate grid");
    }
    std::vector<AgentId> ids;
    ids.reserve(pool.size());
    for (const auto& cfg : pool) {
        cfg.validate();
        if (!grid.contains(cfg.cell)) {
            throw ConfigError("pool.agents[" + to_string(cfg.id) + "].cell",
                              "cell (" + std::to_string(cfg.cell.x) + ", " +
                                  std::to_string(cfg.cell.y) + ") outside the climate grid");
        }
        ids.push_back(cfg.id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw ConfigError("pool.agents", "duplicate agent ids");
    }
}

std::vector<double> simulate_agent(const ProsumerConfig& cfg, const ClimateGrid& grid) {
    std::mt19937_64 rng(cfg.rng_seed);
    const auto climate = grid.cell_series(cfg.cell);
    std::vector<double> values(grid.samples());
    for (std::size_t k = 0; k < values.size(); ++k) {
        values[k] =
            available_power(cfg, climate[k], grid.time_at(k), grid.latitude_of_origin(), rng);
    }
    return values;
}

SeriesPanel assemble(std::span<const ProsumerConfig> pool, const ClimateGrid& grid,
                     std::vector<std::vector<double>>& traces) {
    SeriesPanel panel(grid.start(), grid.samples());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        panel.add(pool[i].id, traces[i]);
    }
    return panel;
}

}  // namespace

SeriesPanel simulate_pool(std::span<const ProsumerConfig> pool, const ClimateGrid& grid) {
    check_pool(pool, grid);
    std::vector<std::vector<double>> traces(pool.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < pool.size(); ++i) {
        traces[i] = simulate_agent(pool[i], grid);
    }
    return assemble(pool, grid, traces);
}

SeriesPanel simulate_pool_serial(std::span<const ProsumerConfig> pool, const ClimateGrid& grid) {
    check_pool(pool, grid);
    std::vector<std::vector<double>> traces(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        traces[i] = simulate_agent(pool[i], grid);
    }
    return assemble(pool, grid, traces);
}

std::vector<ProsumerConfig> generate_random_pool(const RandomPoolSpec& spec, int width,
                                                 int height) {
    if (width <= 0 || height <= 0) {
        throw InvalidArgument("random pool needs a non-empty lattice");
    }
    std::vector<ProsumerConfig> pool;
    pool.reserve(spec.count);
    for (std::size_t i = 0; i < spec.count; ++i) {
        std::mt19937_64 rng(derive_seed(spec.master_seed, {0x706f6f6cULL, i}));
        const auto real = [&rng](RealRange r) {
            return r.lo == r.hi ? r.lo : std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
        };
        const auto integer = [&rng](IntRange r) {
            return std::uniform_int_distribution<int>(r.lo, r.hi)(rng);
        };
        ProsumerConfig cfg;
        cfg.id = AgentId{static_cast<std::uint32_t>(i)};
        cfg.cell = {integer({0, width - 1}), integer({0, height - 1})};
        cfg.n_turbines = integer(spec.n_turbines);
        cfg.turbine.rated_power = real(spec.turbine_rated_power);
        cfg.turbine.cut_in = real(spec.turbine_cut_in);
        cfg.turbine.rated_speed = real(spec.turbine_rated_speed);
        cfg.turbine.cut_out = real(spec.turbine_cut_out);
        cfg.n_pv = integer(spec.n_pv);
        cfg.pv.panel_area = real(spec.pv_area);
        cfg.pv.efficiency = real(spec.pv_efficiency);
        cfg.base_load = real(spec.base_load);
        cfg.morning_peak_gain = real(spec.morning_peak_gain);
        cfg.evening_peak_gain = real(spec.evening_peak_gain);
        cfg.comfort_temperature = real(spec.comfort_temperature);
        cfg.heating_gain = real(spec.heating_gain);
        cfg.noise_level = real(spec.noise_level);
        cfg.rng_seed = derive_seed(spec.master_seed, {0x6e6f697365ULL, i});
        pool.push_back(cfg);
    }
    return pool;
}

}  // namespace vpp
