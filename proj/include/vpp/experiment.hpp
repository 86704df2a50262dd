#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vpp/config.hpp"

namespace vpp {

/// Realization 0 runs on the master seed itself, so `simulate` + `form`
/// reproduce the first realization of a sweep.
std::uint64_t realization_seed(std::uint64_t master, std::size_t realization);

struct Simulation {
    ClimateGrid climate;  ///< hourly
    std::vector<ProsumerConfig> agents;
    SeriesPanel series;
};

Simulation simulate(const RunConfig& config, std::uint64_t seed);

/// Long format `timestamp,agent_id,watts`, agent-major, shortest round-trip
/// doubles.
void write_series_csv(std::ostream& out, const SeriesPanel& panel);
void write_series_csv(const std::filesystem::path& path, const SeriesPanel& panel);
/// Rebuilds the panel; every agent must cover the same hourly clock.
SeriesPanel read_series_csv(const std::filesystem::path& path);

/// Chronological split. Both parts are deseasonalized separately and then
/// shifted by each agent's raw train mean, which the residuals would
/// otherwise lose.
struct PreparedSeries {
    SeriesPanel train;
    SeriesPanel test;  ///< empty when split = 1
};

PreparedSeries prepare_series(const SeriesPanel& raw, double split, int window_days);

/// One row of the long-format report: one (point, algorithm, realization,
/// repeat) combination.
struct SweepRow {
    std::string config_id;
    double phi = 0.0;
    double p_min = 0.0;
    double p_min_display = 0.0;
    std::size_t n_coal = 0;
    Algorithm algorithm = Algorithm::percolation;
    std::size_t realization = 0;
    std::size_t repeat = 0;
    std::uint64_t seed = 0;
    double welfare = 0.0;
    double acceptance = 0.0;
    std::size_t n_coalitions = 0;
    std::size_t n_valid = 0;
    std::optional<double> epsilon_star;
    std::optional<double> heldout_reliability;  ///< mean over valid coalitions
    std::string status = "ok";                  ///< ok | degraded | infeasible
};

struct CoalitionRow {
    std::size_t row = 0;  ///< index into SweepResult::rows
    std::size_t index = 0;
    Coalition coalition;
    std::optional<double> heldout_reliability;
};

struct MonotonicityViolation {
    Algorithm algorithm = Algorithm::percolation;
    std::size_t realization = 0;
    std::size_t repeat = 0;
    double phi = 0.0;
    std::size_t n_coal = 0;
    double p_min_low = 0.0;
    double p_min_high = 0.0;
    double acceptance_low = 0.0;
    double acceptance_high = 0.0;
};

struct InfeasiblePoint {
    std::size_t row = 0;
    std::size_t max_achievable = 0;
    std::string message;
};

struct SweepResult {
    std::string config_id;
    std::vector<InfeasiblePoint> infeasible;
    std::vector<SweepRow> rows;
    std::vector<CoalitionRow> coalitions;
    std::vector<MonotonicityViolation> violations;
    /// Structures of realization 0, kept for `form` output.
    std::vector<CoalitionStructure> first_structures;
};

/// Runs every (realization, n_coal, phi, p_min, algorithm) combination.
/// Each realization is simulated once and reused across all points. With
/// `series` given, realization 0 uses it instead of simulating.
SweepResult run_sweep(const RunConfig& config, const SeriesPanel* series = nullptr,
                      bool keep_structures = false);

/// Acceptance must not rise with p_min for a fixed partition. Random and
/// correlated partitions are fixed across p_min, so a rise there is a bug
/// (std::logic_error); percolation regrows per point and is only reported.
std::vector<MonotonicityViolation> check_acceptance_monotone(const std::vector<SweepRow>& rows);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_coalitions_csv(std::ostream& out, const SweepResult& result);
/// One row per n_coal; a mean and std column per (algorithm, phi, p_min).
void write_welfare_vs_ncoal(std::ostream& out, const std::vector<SweepRow>& rows);
/// One row per p_min; a mean and std column per (algorithm, phi, n_coal).
void write_acceptance_vs_pmin(std::ostream& out, const std::vector<SweepRow>& rows);
nlohmann::json sweep_manifest(const RunConfig& config, const SweepResult& result);

/// Writes sweep.csv, coalitions.csv, the two pivots and sweep_manifest.json.
void write_sweep_outputs(const std::filesystem::path& dir, const RunConfig& config,
                         const SweepResult& result);

std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path);

struct ReportRow {
    double phi = 0.0;
    double p_min = 0.0;
    double p_min_display = 0.0;
    std::size_t n_coal = 0;
    Algorithm algorithm = Algorithm::percolation;
    std::size_t count = 0;
    double welfare_mean = 0.0;
    double welfare_std = 0.0;
    double acceptance_mean = 0.0;
    double acceptance_std = 0.0;
    std::size_t reliability_count = 0;
    double reliability_mean = 0.0;
    double reliability_std = 0.0;
};

/// Mean and population std per (phi, p_min, n_coal, algorithm) across
/// realizations and repeats. Throws DataQualityError when rows come from
/// different configs.
std::vector<ReportRow> aggregate_report(const std::vector<SweepRow>& rows);
void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);

}  // namespace vpp
