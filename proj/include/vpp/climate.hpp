#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vpp/calendar.hpp"

namespace vpp {

/// Weather state attached to one lattice cell at one instant.
struct ClimateVector {
    double wind_speed = 0.0;   ///< m/s, >= 0
    double cloudiness = 0.0;   ///< covered sky fraction in [0, 1]
    double temperature = 0.0;  ///< degrees Celsius

    bool operator==(const ClimateVector&) const = default;
};

bool is_valid(const ClimateVector& v) noexcept;

struct CellCoord {
    int x = 0;
    int y = 0;

    bool operator==(const CellCoord&) const = default;
};

/// Lattice of per-cell climate traces sharing a single uniform clock.
///
/// All agents located in one cell read the same vectors. Storage is
/// cell-major: the series of cell (x, y) is contiguous.
class ClimateGrid {
public:
    ClimateGrid() = default;
    ClimateGrid(int width, int height, Timestamp start, Seconds interval, std::size_t samples,
                double latitude_of_origin);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    Timestamp start() const noexcept { return start_; }
    Seconds interval() const noexcept { return interval_; }
    std::size_t samples() const noexcept { return samples_; }
    double latitude_of_origin() const noexcept { return latitude_; }

    Timestamp time_at(std::size_t k) const { return start_ + interval_ * static_cast<long>(k); }
    bool contains(CellCoord c) const noexcept {
        return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_;
    }

    std::span<const ClimateVector> cell_series(CellCoord c) const;
    std::span<ClimateVector> cell_series(CellCoord c);
    const ClimateVector& at(CellCoord c, std::size_t k) const { return cell_series(c)[k]; }

    /// Throws InvalidArgument if any stored vector violates its bounds.
    void validate() const;

    bool operator==(const ClimateGrid&) const = default;

private:
    std::size_t offset(CellCoord c) const;

    int width_ = 0;
    int height_ = 0;
    Timestamp start_{};
    Seconds interval_{kHour};
    std::size_t samples_ = 0;
    double latitude_ = 0.0;
    std::vector<ClimateVector> data_;
};

/// Deterministic seasonal templates and noise scales for the synthetic generator.
struct ClimateTemplate {
    double temperature_mean = 11.0;
    double temperature_annual_amplitude = 7.0;
    double temperature_daily_amplitude = 4.0;
    double temperature_noise = 3.0;
    double temperature_memory_hours = 48.0;

    double wind_mean = 8.0;
    double wind_annual_amplitude = 1.5;
    double wind_noise = 1.2;
    double wind_memory_hours = 18.0;

    double cloud_mean = 0.6;
    double cloud_noise_logit = 0.8;
    double cloud_memory_hours = 12.0;
};

struct SyntheticClimateParams {
    int width = 4;
    int height = 4;
    Timestamp start{};
    Seconds duration{kDay * 365};
    Seconds interval{kHour * 3};
    /// Lattice distance over which noise correlation decays. Use infinity for
    /// a single shared realization across all cells, 0 for independent cells.
    double spatial_corr_length = 6.0;
    std::uint64_t rng_seed = 0;
    double latitude_of_origin = 46.5;
    ClimateTemplate shape{};
};

inline constexpr double kInfiniteCorrelationLength = std::numeric_limits<double>::infinity();

/// Seasonal + diurnal templates plus spatially smoothed AR(1) noise.
ClimateGrid generate_synthetic_climate(const SyntheticClimateParams& params);

/// Column names used when reading a weather CSV.
struct ColumnMap {
    std::string timestamp = "timestamp";
    std::string wind_speed = "wind_speed_ms";
    std::string cloud_okta = "cloud_okta";
    std::string cloud_fraction = "cloud_frac";
    std::string temperature = "temp_c";
};

/// Replaces the series of `cell` with the contents of a weather CSV.
///
/// Rows must fall on the grid clock; rows outside the grid span are ignored.
/// Runs of at most two missing samples are linearly interpolated; longer
/// runs raise DataQualityError naming the first and last missing timestamp.
ClimateGrid ingest_weather_csv(const std::filesystem::path& path, const ColumnMap& columns,
                               CellCoord cell, ClimateGrid grid);

/// Linear interpolation onto an hourly clock spanning the same range.
ClimateGrid resample_hourly(const ClimateGrid& grid);

}  // namespace vpp
