#include "vpp/climate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include "vpp/csv.hpp"
#include "vpp/errors.hpp"
#include "vpp/random.hpp"

namespace vpp {

bool is_valid(const ClimateVector& v) noexcept {
    return std::isfinite(v.wind_speed) && v.wind_speed >= 0.0 && v.cloudiness >= 0.0 &&
           v.cloudiness <= 1.0 && std::isfinite(v.temperature);
}

ClimateGrid::ClimateGrid(int width, int height, Timestamp start, Seconds interval,
                         std::size_t samples, double latitude_of_origin)
    : width_(width),
      height_(height),
      start_(start),
      interval_(interval),
      samples_(samples),
      latitude_(latitude_of_origin) {
    if (width <= 0 || height <= 0) {
        throw InvalidArgument("climate grid dimensions must be positive");
    }
    if (interval <= Seconds{0}) {
        throw InvalidArgument("climate sampling interval must be positive");
    }
    if (kDay % interval != Seconds{0}) {
        throw InvalidArgument("climate sampling interval must divide one day evenly");
    }
    if (!(std::abs(latitude_of_origin) <= 90.0)) {
        throw InvalidArgument("latitude must lie in [-90, 90]");
    }
    data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * samples);
}

std::size_t ClimateGrid::offset(CellCoord c) const {
    if (!contains(c)) {
        throw InvalidArgument("cell (" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                              ") outside the climate grid");
    }
    return (static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(c.x)) *
           samples_;
}

std::span<const ClimateVector> ClimateGrid::cell_series(CellCoord c) const {
    return {data_.data() + offset(c), samples_};
}

std::span<ClimateVector> ClimateGrid::cell_series(CellCoord c) {
    return {data_.data() + offset(c), samples_};
}

void ClimateGrid::validate() const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!is_valid(data_[i])) {
            const std::size_t cell = i / std::max<std::size_t>(samples_, 1);
            throw InvalidArgument("invalid climate vector in cell " + std::to_string(cell) +
                                  " at " + format_timestamp(time_at(i % samples_)));
        }
    }
}

namespace {

/// Sparse smoothing weights mapping a padded lattice of independent noise
/// sources onto the cells. Each cell's weight vector has unit norm, so every
/// cell's field has unit variance.
struct SmoothingKernel {
    std::size_t n_sources = 0;
    std::vector<std::vector<std::pair<std::size_t, double>>> weights;  // per cell
};

SmoothingKernel make_kernel(int width, int height, double corr_length) {
    SmoothingKernel k;
    const std::size_t n_cells = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    k.weights.resize(n_cells);
    if (std::isinf(corr_length)) {
        k.n_sources = 1;
        for (auto& w : k.weights) {
            w.emplace_back(0, 1.0);
        }
        return k;
    }
    if (corr_length <= 0.0) {
        k.n_sources = n_cells;
        for (std::size_t c = 0; c < n_cells; ++c) {
            k.weights[c].emplace_back(c, 1.0);
        }
        return k;
    }
    // Gaussian kernel exp(-d^2 / (2 L^2)); the induced cell correlation is
    // exp(-d^2 / (4 L^2)) on an unbounded lattice.
    const int margin = static_cast<int>(std::ceil(3.0 * corr_length));
    const int sw = width + 2 * margin;
    const int sh = height + 2 * margin;
    k.n_sources = static_cast<std::size_t>(sw) * static_cast<std::size_t>(sh);
    const double radius2 = 9.0 * corr_length * corr_length;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            auto& w = k.weights[static_cast<std::size_t>(y * width + x)];
            double norm2 = 0.0;
            for (int sy = 0; sy < sh; ++sy) {
                for (int sx = 0; sx < sw; ++sx) {
                    const double dx = static_cast<double>(sx - margin - x);
                    const double dy = static_cast<double>(sy - margin - y);
                    const double d2 = dx * dx + dy * dy;
                    if (d2 > radius2) {
                        continue;
                    }
                    const double v = std::exp(-d2 / (2.0 * corr_length * corr_length));
                    w.emplace_back(static_cast<std::size_t>(sy * sw + sx), v);
                    norm2 += v * v;
                }
            }
            const double inv = 1.0 / std::sqrt(norm2);
            for (auto& [idx, v] : w) {
                v *= inv;
            }
        }
    }
    return k;
}

/// AR(1) unit-variance noise on the sources, smoothed onto the cells.
/// Returns a cell-major matrix [cell][sample].
std::vector<double> correlated_noise(const SmoothingKernel& kernel, std::size_t samples,
                                     double memory_hours, Seconds interval, std::uint64_t seed) {
    const double step_hours = static_cast<double>(interval.count()) / 3600.0;
    const double a = memory_hours > 0.0 ? std::exp(-step_hours / memory_hours) : 0.0;
    const double b = std::sqrt(1.0 - a * a);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> sources(kernel.n_sources);
    for (auto& s : sources) {
        s = normal(rng);
    }
    const std::size_t n_cells = kernel.weights.size();
    std::vector<double> out(n_cells * samples);
    for (std::size_t k = 0; k < samples; ++k) {
        if (k > 0) {
            for (auto& s : sources) {
                s = a * s + b * normal(rng);
            }
        }
        for (std::size_t c = 0; c < n_cells; ++c) {
            double acc = 0.0;
            for (const auto& [idx, w] : kernel.weights[c]) {
                acc += w * sources[idx];
            }
            out[c * samples + k] = acc;
        }
    }
    return out;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

ClimateGrid generate_synthetic_climate(const SyntheticClimateParams& p) {
    if (p.width <= 0 || p.height <= 0) {
        throw InvalidArgument("synthetic climate dimensions must be positive");
    }
    if (p.interval <= Seconds{0}) {
        throw InvalidArgument("synthetic climate interval must be positive");
    }
    if (p.duration < p.interval) {
        throw InvalidArgument("synthetic climate duration shorter than one interval");
    }
    if (std::isnan(p.spatial_corr_length) || p.spatial_corr_length < 0.0) {
        throw InvalidArgument("spatial correlation length must be >= 0");
    }
    const auto samples = static_cast<std::size_t>(p.duration / p.interval) + 1;
    ClimateGrid grid(p.width, p.height, p.start, p.interval, samples, p.latitude_of_origin);

    const auto kernel = make_kernel(p.width, p.height, p.spatial_corr_length);
    const auto& s = p.shape;
    const auto wind = correlated_noise(kernel, samples, s.wind_memory_hours, p.interval,
                                       derive_seed(p.rng_seed, {1}));
    const auto cloud = correlated_noise(kernel, samples, s.cloud_memory_hours, p.interval,
                                        derive_seed(p.rng_seed, {2}));
    const auto temp = correlated_noise(kernel, samples, s.temperature_memory_hours, p.interval,
                                       derive_seed(p.rng_seed, {3}));

    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double cloud_logit = std::log(s.cloud_mean / (1.0 - s.cloud_mean));
    const std::size_t n_cells = kernel.weights.size();

    std::vector<double> annual(samples);
    std::vector<double> daily(samples);
    for (std::size_t k = 0; k < samples; ++k) {
        const Timestamp t = grid.time_at(k);
        const double hod = hour_of_day(t);
        const double day = static_cast<double>(day_of_year(t) - 1) + hod / 24.0;
        // Coldest and windiest in mid January; warmest at 15h.
        annual[k] = std::cos(two_pi * (day - 15.0) / 365.25);
        daily[k] = -std::cos(two_pi * (hod - 3.0) / 24.0);
    }

#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < n_cells; ++c) {
        const CellCoord cell{static_cast<int>(c % static_cast<std::size_t>(p.width)),
                             static_cast<int>(c / static_cast<std::size_t>(p.width))};
        auto series = grid.cell_series(cell);
        for (std::size_t k = 0; k < samples; ++k) {
            const std::size_t i = c * samples + k;
            ClimateVector& v = series[k];
            v.temperature = s.temperature_mean - s.temperature_annual_amplitude * annual[k] +
                            s.temperature_daily_amplitude * daily[k] + s.temperature_noise * temp[i];
            v.wind_speed = std::max(
                0.0, s.wind_mean + s.wind_annual_amplitude * annual[k] + s.wind_noise * wind[i]);
            v.cloudiness = logistic(cloud_logit + s.cloud_noise_logit * cloud[i]);
        }
    }
    return grid;
}

namespace {

struct FieldSamples {
    std::vector<std::optional<double>> values;
};

void fill_gaps(FieldSamples& field, const ClimateGrid& grid, const std::string& name) {
    auto& v = field.values;
    const std::size_t n = v.size();
    std::size_t i = 0;
    while (i < n) {
        if (v[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !v[j]) {
            ++j;
        }
        const std::size_t run = j - i;
        const std::string span_text =
            format_timestamp(grid.time_at(i)) + " .. " + format_timestamp(grid.time_at(j - 1));
        if (run > 2) {
            throw DataQualityError("gap of " + std::to_string(run) + " samples in '" + name +
                                   "' from " + span_text);
        }
        if (i == 0 || j == n) {
            throw DataQualityError("missing '" + name + "' samples at the edge of the grid span: " +
                                   span_text);
        }
        const double lo = *v[i - 1];
        const double hi = *v[j];
        for (std::size_t k = i; k < j; ++k) {
            const double frac = static_cast<double>(k - (i - 1)) / static_cast<double>(run + 1);
            v[k] = lo + (hi - lo) * frac;
        }
        i = j;
    }
}

}  // namespace

ClimateGrid ingest_weather_csv(const std::filesystem::path& path, const ColumnMap& columns,
                               CellCoord cell, ClimateGrid grid) {
    if (!grid.contains(cell)) {
        throw InvalidArgument("cell outside the climate grid");
    }
    csv::Reader reader(path);
    const auto require = [&](const std::string& name) {
        const auto idx = reader.column(name);
        if (!idx) {
            throw SchemaError("'" + path.string() + "' lacks required column '" + name + "'");
        }
        return *idx;
    };
    const std::size_t ts_col = require(columns.timestamp);
    const std::size_t wind_col = require(columns.wind_speed);
    const std::size_t temp_col = require(columns.temperature);
    const auto okta_col = reader.column(columns.cloud_okta);
    const auto frac_col = reader.column(columns.cloud_fraction);
    if (!okta_col && !frac_col) {
        throw SchemaError("'" + path.string() + "' lacks a cloud column ('" + columns.cloud_okta +
                          "' or '" + columns.cloud_fraction + "')");
    }

    const std::size_t n = grid.samples();
    FieldSamples wind{std::vector<std::optional<double>>(n)};
    FieldSamples cloud{std::vector<std::optional<double>>(n)};
    FieldSamples temp{std::vector<std::optional<double>>(n)};

    const auto field_value = [](const std::vector<std::string>& row,
                                std::size_t col) -> std::optional<double> {
        if (col >= row.size() || row[col].empty()) {
            return std::nullopt;
        }
        return csv::parse_double(row[col]);
    };

    std::vector<std::string> row;
    while (reader.next(row)) {
        if (ts_col >= row.size()) {
            throw SchemaError("short record at line " + std::to_string(reader.line_number()));
        }
        const Timestamp t = parse_timestamp(row[ts_col]);
        const auto delta = t - grid.start();
        if (delta % grid.interval() != Seconds{0}) {
            throw DataQualityError("timestamp " + row[ts_col] + " is off the " +
                                   std::to_string(grid.interval().count()) + "s sampling clock");
        }
        if (delta < Seconds{0}) {
            continue;
        }
        const auto k = static_cast<std::size_t>(delta / grid.interval());
        if (k >= n) {
            continue;
        }
        wind.values[k] = field_value(row, wind_col);
        temp.values[k] = field_value(row, temp_col);
        std::optional<double> c;
        if (okta_col) {
            if (auto okta = field_value(row, *okta_col)) {
                c = *okta / 8.0;
            }
        }
        if (!c && frac_col) {
            c = field_value(row, *frac_col);
        }
        cloud.values[k] = c;
    }

    fill_gaps(wind, grid, columns.wind_speed);
    fill_gaps(cloud, grid, "cloud");
    fill_gaps(temp, grid, columns.temperature);

    auto series = grid.cell_series(cell);
    for (std::size_t k = 0; k < n; ++k) {
        ClimateVector v{*wind.values[k], *cloud.values[k], *temp.values[k]};
        if (!is_valid(v)) {
            throw DataQualityError("out-of-range climate values at " +
                                   format_timestamp(grid.time_at(k)));
        }
        series[k] = v;
    }
    return grid;
}

namespace {

// Clamped to the bracketing pair so rounding never leaves their hull.
double lerp_within(double a, double b, double w) {
    return std::clamp(a + w * (b - a), std::min(a, b), std::max(a, b));
}

}  // namespace

ClimateGrid resample_hourly(const ClimateGrid& grid) {
    if (grid.samples() == 0) {
        throw InvalidArgument("cannot resample an empty climate grid");
    }
    if (grid.interval() < kHour) {
        throw InvalidArgument("climate interval shorter than one hour");
    }
    if (grid.interval() == kHour) {
        return grid;
    }
    const Seconds span = grid.interval() * static_cast<long>(grid.samples() - 1);
    const auto hours = static_cast<std::size_t>(span / kHour) + 1;
    ClimateGrid out(grid.width(), grid.height(), grid.start(), kHour, hours,
                    grid.latitude_of_origin());
    const auto step = static_cast<double>(grid.interval().count());

#pragma omp parallel for schedule(static)
    for (int c = 0; c < grid.width() * grid.height(); ++c) {
        const CellCoord cell{c % grid.width(), c / grid.width()};
        const auto src = grid.cell_series(cell);
        auto dst = out.cell_series(cell);
        for (std::size_t h = 0; h < hours; ++h) {
            const double pos = static_cast<double>(h) * 3600.0 / step;
            auto k = static_cast<std::size_t>(pos);
            if (k >= src.size() - 1) {
                dst[h] = src.back();
                continue;
            }
            const double w = pos - static_cast<double>(k);
            const ClimateVector& a = src[k];
            const ClimateVector& b = src[k + 1];
            dst[h] = ClimateVector{lerp_within(a.wind_speed, b.wind_speed, w),
                                   lerp_within(a.cloudiness, b.cloudiness, w),
                                   lerp_within(a.temperature, b.temperature, w)};
        }
    }
    return out;
}

}  // namespace vpp
