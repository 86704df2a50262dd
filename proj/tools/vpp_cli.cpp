// vpp: simulate prosumer pools, form coalitions, sweep requirement grids and
// aggregate sweep reports.
//
// Exit codes: 0 success, 1 other failure, 2 invalid configuration,
// 3 infeasible clique seeding.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>

#include "vpp/config.hpp"
#include "vpp/errors.hpp"
#include "vpp/experiment.hpp"

namespace fs = std::filesystem;
using namespace vpp;

namespace {

struct CommonOptions {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "run configuration (JSON)")->required();
    cmd->add_option("--out", o.out, "output directory (overrides config output_dir)");
    cmd->add_option("--seed", o.seed, "master seed (overrides config)");
    cmd->add_option("--mode", o.mode, "contract mode: analytic or empirical");
    cmd->add_option("--threads", o.threads, "OpenMP threads (0: runtime default)");
}

RunConfig load(const CommonOptions& o, fs::path& out_dir) {
    RunConfig c = load_run_config(o.config);
    if (o.seed) {
        c.seed = *o.seed;
    }
    if (o.mode) {
        try {
            c.mode = parse_contract_mode(*o.mode);
        } catch (const Error& e) {
            throw ConfigError("--mode", e.what());
        }
        if (c.mode == ContractMode::analytic) {
            for (const double phi : c.phi) {
                if (phi <= 0.0 || phi >= 1.0) {
                    throw ConfigError("requirements.phi", "analytic mode needs 0 < phi < 1");
                }
            }
        }
    }
    out_dir = o.out.empty() ? c.output_dir : fs::path(o.out);
    if (out_dir.empty()) {
        throw ConfigError("output_dir", "no output directory (set output_dir or pass --out)");
    }
    if (o.threads > 0) {
        omp_set_num_threads(o.threads);
    }
    return c;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << '\n';
    if (!out) {
        throw Error("cannot write " + path.string());
    }
}

int cmd_simulate(const CommonOptions& o) {
    fs::path dir;
    const RunConfig c = load(o, dir);
    fs::create_directories(dir);
    const Simulation sim = simulate(c, c.seed);
    write_series_csv(dir / "series.csv", sim.series);
    nlohmann::json agents = nlohmann::json::array();
    for (const auto& a : sim.agents) {
        agents.push_back(to_json(a));
    }
    write_json(dir / "series_manifest.json",
               {{"config_id", c.id()},
                {"config", c.canonical()},
                {"seed", c.seed},
                {"start", format_timestamp(sim.series.start())},
                {"hours", sim.series.length()},
                {"agents", agents}});
    std::cout << "wrote " << sim.series.size() << " series of " << sim.series.length()
              << " hours to " << (dir / "series.csv").string() << '\n';
    return 0;
}

int cmd_form(const CommonOptions& o, const std::string& series_path) {
    fs::path dir;
    RunConfig c = load(o, dir);
    if (c.phi.size() != 1 || c.p_min.size() != 1 || c.n_coal.size() != 1) {
        throw ConfigError("requirements", "form takes a single phi, p_min and n_coal; use sweep");
    }
    c.realizations = 1;
    std::optional<SeriesPanel> series;
    if (!series_path.empty()) {
        series = read_series_csv(series_path);
    }
    const SweepResult result = run_sweep(c, series ? &*series : nullptr, true);
    if (!result.infeasible.empty()) {
        const auto& first = result.infeasible.front();
        throw InfeasibleError(first.max_achievable, first.message);
    }
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "summary.csv", std::ios::binary);
        write_sweep_csv(out, result.rows);
    }
    {
        std::ofstream out(dir / "coalitions.csv", std::ios::binary);
        write_coalitions_csv(out, result);
    }
    nlohmann::json structures = nlohmann::json::array();
    for (const auto& cs : result.first_structures) {
        structures.push_back(to_json(cs));
    }
    write_json(dir / "structures.json", {{"config_id", result.config_id}, {"structures", structures}});
    for (const auto& row : result.rows) {
        if (row.algorithm != Algorithm::random || row.repeat == 0) {
            std::cout << to_string(row.algorithm) << ": welfare " << row.welfare
                      << ", acceptance " << row.acceptance << " (" << row.n_valid << "/"
                      << row.n_coalitions << " valid)\n";
        }
    }
    return 0;
}

int cmd_sweep(const CommonOptions& o) {
    fs::path dir;
    const RunConfig c = load(o, dir);
    if (c.phi.size() * c.p_min.size() * c.n_coal.size() < 2) {
        std::cerr << "note: single-point sweep (same output as form)\n";
    }
    const SweepResult result = run_sweep(c);
    write_sweep_outputs(dir, c, result);
    for (const auto& v : result.violations) {
        std::cerr << "warning: percolation acceptance rose from " << v.acceptance_low << " to "
                  << v.acceptance_high << " between p_min " << v.p_min_low << " and "
                  << v.p_min_high << " (realization " << v.realization << ", phi " << v.phi
                  << ", n_coal " << v.n_coal << ")\n";
    }
    std::cout << "wrote " << result.rows.size() << " rows to " << (dir / "sweep.csv").string()
              << '\n';
    return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_dir) {
    std::vector<SweepRow> rows;
    for (const auto& path : inputs) {
        auto part = read_sweep_csv(path);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    const auto report = aggregate_report(rows);
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "report.csv", std::ios::binary);
    write_report_csv(out, report);
    std::cout << "wrote " << report.size() << " aggregate rows\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coalition formation of prosumers for virtual power plants"};
    app.require_subcommand(1);

    CommonOptions sim_opts, form_opts, sweep_opts;
    auto* sim = app.add_subcommand("simulate", "simulate a pool and write its hourly series");
    add_common(sim, sim_opts);

    auto* form = app.add_subcommand("form", "form coalitions at one requirement point");
    add_common(form, form_opts);
    std::string series_path;
    form->add_option("--series", series_path, "series CSV from simulate (default: simulate)");

    auto* sweep = app.add_subcommand("sweep", "sweep the phi x p_min x n_coal grid");
    add_common(sweep, sweep_opts);

    auto* report = app.add_subcommand("report", "mean and std per point across realizations");
    std::vector<std::string> inputs;
    std::string report_out;
    report->add_option("inputs", inputs, "sweep.csv files")->required();
    report->add_option("--out", report_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            return cmd_simulate(sim_opts);
        }
        if (form->parsed()) {
            return cmd_form(form_opts, series_path);
        }
        if (sweep->parsed()) {
            return cmd_sweep(sweep_opts);
        }
        return cmd_report(inputs, report_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << " (max achievable: " << e.max_achievable()
                  << ")\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
