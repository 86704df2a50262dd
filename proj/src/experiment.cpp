#include "vpp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "vpp/csv.hpp"
#include "vpp/errors.hpp"
#include "vpp/random.hpp"

namespace vpp {

namespace {

// Stream labels for derive_seed.
constexpr std::uint64_t kRealizationStream = 0x7265616c;
constexpr std::uint64_t kClimateStream = 1;
constexpr std::uint64_t kPoolStream = 2;
constexpr std::uint64_t kAgentNoiseStream = 3;
constexpr std::uint64_t kRandomPartitionStream = 4;

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    return out;
}

std::string opt(const std::optional<double>& v) {
    return v ? csv::format_double(*v) : std::string();
}

}  // namespace

std::uint64_t realization_seed(std::uint64_t master, std::size_t realization) {
    return realization == 0 ? master : derive_seed(master, {kRealizationStream, realization});
}

Simulation simulate(const RunConfig& config, std::uint64_t seed) {
    Simulation sim;
    const auto& p = config.climate.synthetic;
    if (config.climate.source == ClimateSection::Source::synthetic) {
        auto params = p;
        params.rng_seed = derive_seed(seed, {kClimateStream});
        sim.climate = resample_hourly(generate_synthetic_climate(params));
    } else {
        const auto samples = static_cast<std::size_t>(p.duration / p.interval) + 1;
        ClimateGrid grid(p.width, p.height, p.start, p.interval, samples, p.latitude_of_origin);
        for (const auto& station : config.climate.stations) {
            grid = ingest_weather_csv(station.path, config.climate.columns, station.cell,
                                      std::move(grid));
        }
        sim.climate = resample_hourly(grid);
    }

    if (config.pool.random) {
        auto spec = *config.pool.random;
        spec.master_seed = derive_seed(seed, {kPoolStream});
        sim.agents = generate_random_pool(spec, p.width, p.height);
    } else {
        sim.agents = config.pool.agents;
        for (std::size_t i = 0; i < sim.agents.size(); ++i) {
            if (config.pool.derive_noise_seed[i]) {
                sim.agents[i].rng_seed =
                    derive_seed(seed, {kAgentNoiseStream, to_index(sim.agents[i].id)});
            }
        }
    }
    // The climate grid includes its closing sample so interpolation reaches
    // the last hour; the series cover the half-open span [start, start + duration).
    const auto hours = static_cast<std::size_t>(p.duration / kHour);
    sim.series = simulate_pool(sim.agents, sim.climate).slice(0, hours);
    return sim;
}

void write_series_csv(std::ostream& out, const SeriesPanel& panel) {
    out << "timestamp,agent_id,watts\n";
    std::vector<std::string> stamps(panel.length());
    for (std::size_t k = 0; k < panel.length(); ++k) {
        stamps[k] = format_timestamp(panel.start() + kHour * static_cast<long>(k));
    }
    for (std::size_t i = 0; i < panel.size(); ++i) {
        const auto id = std::to_string(to_index(panel.id(i)));
        const auto row = panel.row(i);
        for (std::size_t k = 0; k < row.size(); ++k) {
            out << stamps[k] << ',' << id << ',' << csv::format_double(row[k]) << '\n';
        }
    }
}

void write_series_csv(const std::filesystem::path& path, const SeriesPanel& panel) {
    auto out = open_output(path);
    write_series_csv(out, panel);
}

SeriesPanel read_series_csv(const std::filesystem::path& path) {
    csv::Reader reader(path);
    const auto ts_col = reader.column("timestamp");
    const auto id_col = reader.column("agent_id");
    const auto w_col = reader.column("watts");
    if (!ts_col || !id_col || !w_col) {
        throw SchemaError(path.string() + ": expected columns timestamp, agent_id, watts");
    }
    std::map<std::uint32_t, std::vector<std::pair<Timestamp, double>>> by_agent;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        const auto where = path.string() + ":" + std::to_string(reader.line_number());
        if (fields.size() != reader.header().size()) {
            throw SchemaError(where + ": wrong number of fields");
        }
        try {
            const auto id = std::stoul(fields[*id_col]);
            by_agent[static_cast<std::uint32_t>(id)].emplace_back(parse_timestamp(fields[*ts_col]),
                                                                  csv::parse_double(fields[*w_col]));
        } catch (const std::logic_error&) {
            throw SchemaError(where + ": malformed agent id");
        } catch (const Error& e) {
            throw SchemaError(where + ": " + e.what());
        }
    }
    if (by_agent.empty()) {
        throw DataQualityError(path.string() + ": no series rows");
    }
    auto& first = by_agent.begin()->second;
    std::sort(first.begin(), first.end());
    const Timestamp start = first.front().first;
    const std::size_t length = first.size();
    SeriesPanel panel(start, length);
    std::vector<double> values(length);
    for (auto& [id, samples] : by_agent) {
        std::sort(samples.begin(), samples.end());
        if (samples.size() != length) {
            throw DataQualityError(path.string() + ": agent " + std::to_string(id) + " has " +
                                   std::to_string(samples.size()) + " samples, expected " +
                                   std::to_string(length));
        }
        for (std::size_t k = 0; k < length; ++k) {
            if (samples[k].first != start + kHour * static_cast<long>(k)) {
                throw DataQualityError(path.string() + ": agent " + std::to_string(id) +
                                       " is off the hourly clock at " +
                                       format_timestamp(samples[k].first));
            }
            values[k] = samples[k].second;
        }
        panel.add(AgentId{id}, values);
    }
    return panel;
}

namespace {

SeriesPanel deseasonalize_part(const SeriesPanel& part, const std::vector<double>& level,
                               int window_days) {
    SeriesPanel out(part.start(), part.length());
    for (std::size_t i = 0; i < part.size(); ++i) {
        auto d = deseasonalize(part.series(i), window_days);
        for (auto& v : d.values) {
            v += level[i];
        }
        out.add(d);
    }
    return out;
}

}  // namespace

PreparedSeries prepare_series(const SeriesPanel& raw, double split, int window_days) {
    if (!(split >= 0.5 && split <= 1.0)) {
        throw InvalidArgument("split fraction must lie in [0.5, 1]");
    }
    const std::size_t n_train =
        static_cast<std::size_t>(std::floor(split * static_cast<double>(raw.length())));
    const std::size_t n_test = raw.length() - n_train;
    const std::size_t need = 2 * static_cast<std::size_t>(window_days) * 24;
    if (n_train < need) {
        throw LengthError("train split has " + std::to_string(n_train) +
                          " hours; deseasonalizing with a " + std::to_string(window_days) +
                          "-day window needs " + std::to_string(need));
    }
    if (n_test > 0 && n_test < need) {
        throw LengthError("test split has " + std::to_string(n_test) +
                          " hours; deseasonalizing with a " + std::to_string(window_days) +
                          "-day window needs " + std::to_string(need) +
                          " (lengthen the series or raise the split)");
    }
    const SeriesPanel train = raw.slice(0, n_train);
    std::vector<double> level(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        level[i] = stats(train.row(i)).mean;
    }
    PreparedSeries out;
    out.train = deseasonalize_part(train, level, window_days);
    if (n_test > 0) {
        out.test = deseasonalize_part(raw.slice(n_train, n_test), level, window_days);
    }
    return out;
}

namespace {

struct Tally {
    double welfare = 0.0;
    std::size_t valid = 0;
};

std::optional<double> mean_reliability(const std::vector<std::optional<double>>& r) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : r) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    if (n == 0) {
        return std::nullopt;
    }
    return sum / static_cast<double>(n);
}

class SweepBuilder {
public:
    SweepBuilder(const RunConfig& config, SweepResult& result, bool keep)
        : config_(config), result_(result), keep_(keep) {}

    void add(const CoalitionStructure& cs, std::size_t realization, std::size_t repeat,
             std::uint64_t seed, const std::vector<std::optional<double>>& reliability,
             std::string status) {
        SweepRow row = base(cs.requirements, cs.provenance, realization, repeat, seed);
        row.welfare = social_welfare(cs);
        row.acceptance = cs.coalitions.empty() ? 0.0 : acceptance_percentage(cs);
        row.n_coalitions = cs.coalitions.size();
        row.n_valid = static_cast<std::size_t>(std::count_if(
            cs.coalitions.begin(), cs.coalitions.end(), [](const Coalition& c) { return c.valid; }));
        row.epsilon_star = cs.epsilon_star;
        std::vector<std::optional<double>> valid_reliability;
        for (std::size_t i = 0; i < cs.coalitions.size(); ++i) {
            if (cs.coalitions[i].valid) {
                valid_reliability.push_back(reliability[i]);
            }
        }
        row.heldout_reliability = mean_reliability(valid_reliability);
        row.status = std::move(status);
        const std::size_t index = result_.rows.size();
        result_.rows.push_back(std::move(row));
        for (std::size_t i = 0; i < cs.coalitions.size(); ++i) {
            result_.coalitions.push_back({index, i, cs.coalitions[i],
                                          cs.coalitions[i].valid ? reliability[i] : std::nullopt});
        }
        if (keep_ && realization == 0) {
            result_.first_structures.push_back(cs);
        }
    }

    void add_infeasible(const GridRequirements& req, Algorithm algorithm, std::size_t realization,
                        std::uint64_t seed) {
        SweepRow row = base(req, algorithm, realization, 0, seed);
        row.status = "infeasible";
        result_.rows.push_back(std::move(row));
    }

private:
    SweepRow base(const GridRequirements& req, Algorithm algorithm, std::size_t realization,
                  std::size_t repeat, std::uint64_t seed) const {
        SweepRow row;
        row.config_id = result_.config_id;
        row.phi = req.phi;
        row.p_min = req.p_min;
        row.p_min_display = req.p_min * config_.p_min_display_scale;
        row.n_coal = req.n_coal;
        row.algorithm = algorithm;
        row.realization = realization;
        row.repeat = repeat;
        row.seed = seed;
        return row;
    }

    const RunConfig& config_;
    SweepResult& result_;
    bool keep_;
};

std::vector<std::optional<double>> reliabilities(const std::vector<Coalition>& coalitions,
                                                 const SeriesPanel& test) {
    std::vector<std::optional<double>> out(coalitions.size());
    if (test.empty()) {
        return out;
    }
    for (std::size_t i = 0; i < coalitions.size(); ++i) {
        if (coalitions[i].valid) {
            out[i] = empirical_reliability(coalitions[i], test);
        }
    }
    return out;
}

// Held-out shortfall for every block at its P_phi, whether or not the block
// ends up valid; validity only depends on p_min, which is applied later.
std::vector<std::optional<double>> block_reliabilities(
    const std::vector<std::vector<AgentId>>& blocks, const std::vector<ContractStats>& stats,
    const SeriesPanel& test) {
    std::vector<std::optional<double>> out(blocks.size());
    if (test.empty()) {
        return out;
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        Coalition c = make_coalition(blocks[b], stats[b], -std::numeric_limits<double>::infinity());
        out[b] = empirical_reliability(c, test);
    }
    return out;
}

}  // namespace

SweepResult run_sweep(const RunConfig& config, const SeriesPanel* series, bool keep_structures) {
    SweepResult result;
    result.config_id = config.id();
    SweepBuilder builder(config, result, keep_structures);
    const auto& alg = config.algorithms;

    for (std::size_t r = 0; r < config.realizations; ++r) {
        const std::uint64_t rs = realization_seed(config.seed, r);
        const SeriesPanel raw = (r == 0 && series) ? *series : simulate(config, rs).series;
        const PreparedSeries prepared =
            prepare_series(raw, config.split, config.deseasonalize_window_days);
        const SeriesPanel& train = prepared.train;
        const SeriesPanel& test = prepared.test;

        std::optional<PercolationFormer> former;
        if (alg.percolation) {
            former.emplace(train, config.formation);
        }
        std::optional<CorrelationMatrix> corr;
        if (alg.correlated) {
            corr = former ? former->correlations() : correlation_matrix_excluding_degenerate(train);
        }

        for (const std::size_t n_coal : config.n_coal) {
            const bool partitionable = n_coal <= train.size();
            std::vector<std::vector<std::vector<AgentId>>> random_blocks;
            std::vector<std::uint64_t> random_seeds;
            if (partitionable) {
                for (std::size_t j = 0; j < alg.random_repeats; ++j) {
                    random_seeds.push_back(derive_seed(rs, {kRandomPartitionStream, n_coal, j}));
                    random_blocks.push_back(
                        random_partition_members(train.ids(), n_coal, random_seeds.back()));
                }
            }
            std::vector<std::vector<AgentId>> correlated_blocks;
            if (alg.correlated && partitionable) {
                correlated_blocks = correlated_partition_members(train.ids(), *corr, n_coal);
            }

            for (const double phi : config.phi) {
                std::vector<std::vector<ContractStats>> random_stats;
                std::vector<std::vector<std::optional<double>>> random_rel;
                for (const auto& blocks : random_blocks) {
                    random_stats.push_back(partition_stats(blocks, train, phi, config.mode));
                    random_rel.push_back(block_reliabilities(blocks, random_stats.back(), test));
                }
                std::vector<ContractStats> correlated_stats;
                std::vector<std::optional<double>> correlated_rel;
                if (!correlated_blocks.empty()) {
                    correlated_stats = partition_stats(correlated_blocks, train, phi, config.mode);
                    correlated_rel = block_reliabilities(correlated_blocks, correlated_stats, test);
                }

                for (const double p_min : config.p_min) {
                    const GridRequirements req{phi, p_min, n_coal};
                    if (alg.percolation) {
                        try {
                            const auto cs = former->form(req, config.mode);
                            builder.add(cs, r, 0, rs, reliabilities(cs.coalitions, test),
                                        cs.degraded ? "degraded" : "ok");
                        } catch (const InfeasibleError& e) {
                            result.infeasible.push_back(
                                {result.rows.size(), e.max_achievable(), e.what()});
                            builder.add_infeasible(req, Algorithm::percolation, r, rs);
                        }
                    }
                    if (alg.random_repeats > 0 && !partitionable) {
                        builder.add_infeasible(req, Algorithm::random, r, rs);
                    }
                    for (std::size_t j = 0; j < random_blocks.size(); ++j) {
                        auto cs = structure_from_stats(random_blocks[j], random_stats[j], train,
                                                       req, config.mode, Algorithm::random);
                        cs.seed = random_seeds[j];
                        builder.add(cs, r, j, random_seeds[j], random_rel[j], "ok");
                    }
                    if (alg.correlated) {
                        if (!partitionable) {
                            builder.add_infeasible(req, Algorithm::correlated, r, rs);
                        } else {
                            const auto cs =
                                structure_from_stats(correlated_blocks, correlated_stats, train,
                                                     req, config.mode, Algorithm::correlated);
                            builder.add(cs, r, 0, rs, correlated_rel, "ok");
                        }
                    }
                }
            }
        }
    }
    result.violations = check_acceptance_monotone(result.rows);
    return result;
}

std::vector<MonotonicityViolation> check_acceptance_monotone(const std::vector<SweepRow>& rows) {
    using Key = std::tuple<int, std::size_t, std::size_t, double, std::size_t>;
    std::map<Key, std::vector<const SweepRow*>> groups;
    for (const auto& row : rows) {
        if (row.status == "infeasible") {
            continue;
        }
        groups[{static_cast<int>(row.algorithm), row.realization, row.repeat, row.phi, row.n_coal}]
            .push_back(&row);
    }
    std::vector<MonotonicityViolation> out;
    for (auto& [key, members] : groups) {
        std::stable_sort(members.begin(), members.end(),
                         [](const SweepRow* a, const SweepRow* b) { return a->p_min < b->p_min; });
        for (std::size_t i = 1; i < members.size(); ++i) {
            const SweepRow& lo = *members[i - 1];
            const SweepRow& hi = *members[i];
            if (hi.p_min > lo.p_min && hi.acceptance > lo.acceptance) {
                if (lo.algorithm != Algorithm::percolation) {
                    throw std::logic_error("acceptance of a fixed " +
                                           std::string(to_string(lo.algorithm)) +
                                           " partition rose with p_min");
                }
                out.push_back({lo.algorithm, lo.realization, lo.repeat, lo.phi, lo.n_coal,
                               lo.p_min, hi.p_min, lo.acceptance, hi.acceptance});
            }
        }
    }
    return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "config_id,phi,p_min,p_min_display,n_coal,algorithm,realization,repeat,seed,welfare,"
           "acceptance,n_coalitions,n_valid,epsilon_star,heldout_reliability,status\n";
    for (const auto& r : rows) {
        out << r.config_id << ',' << csv::format_double(r.phi) << ','
            << csv::format_double(r.p_min) << ',' << csv::format_double(r.p_min_display) << ','
            << r.n_coal << ',' << to_string(r.algorithm) << ',' << r.realization << ','
            << r.repeat << ',' << r.seed << ',' << csv::format_double(r.welfare) << ','
            << csv::format_double(r.acceptance) << ',' << r.n_coalitions << ',' << r.n_valid << ','
            << opt(r.epsilon_star) << ',' << opt(r.heldout_reliability) << ',' << r.status
            << '\n';
    }
}

void write_coalitions_csv(std::ostream& out, const SweepResult& result) {
    out << "config_id,phi,p_min,n_coal,algorithm,realization,repeat,coalition,size,mu,sigma,"
           "p_phi,valid,utility,contract,heldout_reliability,members\n";
    for (const auto& c : result.coalitions) {
        const SweepRow& r = result.rows[c.row];
        const Coalition& co = c.coalition;
        out << r.config_id << ',' << csv::format_double(r.phi) << ','
            << csv::format_double(r.p_min) << ',' << r.n_coal << ',' << to_string(r.algorithm)
            << ',' << r.realization << ',' << r.repeat << ',' << c.index << ',' << co.size() << ','
            << csv::format_double(co.mu) << ',' << csv::format_double(co.sigma) << ','
            << csv::format_double(co.p_phi) << ',' << (co.valid ? 1 : 0) << ','
            << csv::format_double(co.utility) << ',' << opt(co.contract) << ','
            << opt(c.heldout_reliability) << ',';
        for (std::size_t i = 0; i < co.members.size(); ++i) {
            out << (i ? ";" : "") << to_index(co.members[i]);
        }
        out << '\n';
    }
}

namespace {

struct MeanStd {
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
    MeanStd out;
    out.n = v.size();
    if (v.empty()) {
        out.mean = std::nan("");
        out.std = std::nan("");
        return out;
    }
    double sum = 0.0;
    for (const double x : v) {
        sum += x;
    }
    out.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (const double x : v) {
        ss += (x - out.mean) * (x - out.mean);
    }
    out.std = std::sqrt(ss / static_cast<double>(v.size()));
    return out;
}

// Wide pivot: one row per `row_key`, a mean/std column pair per series key.
template <class RowKey, class SeriesKey>
void write_pivot(std::ostream& out, const std::vector<SweepRow>& rows, const std::string& row_header,
                 RowKey row_key, SeriesKey series_key, double SweepRow::*metric,
                 bool with_display) {
    std::map<double, double> display;
    std::map<std::string, std::map<double, std::vector<double>>> cells;
    std::set<double> row_values;
    for (const auto& r : rows) {
        if (r.status == "infeasible") {
            continue;
        }
        const double k = row_key(r);
        row_values.insert(k);
        display[k] = r.p_min_display;
        cells[series_key(r)][k].push_back(r.*metric);
    }
    out << row_header;
    if (with_display) {
        out << ",p_min_display";
    }
    for (const auto& [name, _] : cells) {
        out << ',' << name << ":mean," << name << ":std";
    }
    out << '\n';
    for (const double k : row_values) {
        out << csv::format_double(k);
        if (with_display) {
            out << ',' << csv::format_double(display[k]);
        }
        for (const auto& [name, column] : cells) {
            const auto it = column.find(k);
            if (it == column.end()) {
                out << ",,";
                continue;
            }
            const auto ms = mean_std(it->second);
            out << ',' << csv::format_double(ms.mean) << ',' << csv::format_double(ms.std);
        }
        out << '\n';
    }
}

}  // namespace

void write_welfare_vs_ncoal(std::ostream& out, const std::vector<SweepRow>& rows) {
    write_pivot(
        out, rows, "n_coal", [](const SweepRow& r) { return static_cast<double>(r.n_coal); },
        [](const SweepRow& r) {
            return std::string(to_string(r.algorithm)) + ":phi=" + csv::format_double(r.phi) +
                   ":p_min=" + csv::format_double(r.p_min);
        },
        &SweepRow::welfare, false);
}

void write_acceptance_vs_pmin(std::ostream& out, const std::vector<SweepRow>& rows) {
    write_pivot(
        out, rows, "p_min", [](const SweepRow& r) { return r.p_min; },
        [](const SweepRow& r) {
            return std::string(to_string(r.algorithm)) + ":phi=" + csv::format_double(r.phi) +
                   ":n_coal=" + std::to_string(r.n_coal);
        },
        &SweepRow::acceptance, true);
}

nlohmann::json sweep_manifest(const RunConfig& config, const SweepResult& result) {
    nlohmann::json seeds = nlohmann::json::array();
    for (std::size_t r = 0; r < config.realizations; ++r) {
        seeds.push_back(realization_seed(config.seed, r));
    }
    nlohmann::json violations = nlohmann::json::array();
    for (const auto& v : result.violations) {
        violations.push_back({{"algorithm", to_string(v.algorithm)},
                              {"realization", v.realization},
                              {"repeat", v.repeat},
                              {"phi", v.phi},
                              {"n_coal", v.n_coal},
                              {"p_min_low", v.p_min_low},
                              {"p_min_high", v.p_min_high},
                              {"acceptance_low", v.acceptance_low},
                              {"acceptance_high", v.acceptance_high}});
    }
    std::size_t degraded = 0;
    std::size_t infeasible = 0;
    for (const auto& r : result.rows) {
        degraded += r.status == "degraded" ? 1 : 0;
        infeasible += r.status == "infeasible" ? 1 : 0;
    }
    return {{"config_id", result.config_id},
            {"config", config.canonical()},
            {"realization_seeds", seeds},
            {"rows", result.rows.size()},
            {"coalition_records", result.coalitions.size()},
            {"degraded_rows", degraded},
            {"infeasible_rows", infeasible},
            {"acceptance_monotonicity_violations", violations}};
}

void write_sweep_outputs(const std::filesystem::path& dir, const RunConfig& config,
                         const SweepResult& result) {
    std::filesystem::create_directories(dir);
    {
        auto out = open_output(dir / "sweep.csv");
        write_sweep_csv(out, result.rows);
    }
    {
        auto out = open_output(dir / "coalitions.csv");
        write_coalitions_csv(out, result);
    }
    {
        auto out = open_output(dir / "welfare_vs_ncoal.csv");
        write_welfare_vs_ncoal(out, result.rows);
    }
    {
        auto out = open_output(dir / "acceptance_vs_pmin.csv");
        write_acceptance_vs_pmin(out, result.rows);
    }
    auto out = open_output(dir / "sweep_manifest.json");
    out << sweep_manifest(config, result).dump(2) << '\n';
}

std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path) {
    csv::Reader reader(path);
    const std::vector<std::string> names = {
        "config_id", "phi",     "p_min", "p_min_display", "n_coal",       "algorithm",
        "realization", "repeat", "seed", "welfare",       "acceptance",   "n_coalitions",
        "n_valid",   "epsilon_star", "heldout_reliability", "status"};
    std::vector<std::size_t> col;
    for (const auto& n : names) {
        const auto c = reader.column(n);
        if (!c) {
            throw SchemaError(path.string() + ": missing column " + n);
        }
        col.push_back(*c);
    }
    std::vector<SweepRow> rows;
    std::vector<std::string> f;
    const auto optional_double = [](const std::string& s) -> std::optional<double> {
        if (s.empty()) {
            return std::nullopt;
        }
        return csv::parse_double(s);
    };
    while (reader.next(f)) {
        if (f.size() != reader.header().size()) {
            throw SchemaError(path.string() + ":" + std::to_string(reader.line_number()) +
                              ": wrong number of fields");
        }
        try {
            SweepRow r;
            r.config_id = f[col[0]];
            r.phi = csv::parse_double(f[col[1]]);
            r.p_min = csv::parse_double(f[col[2]]);
            r.p_min_display = csv::parse_double(f[col[3]]);
            r.n_coal = std::stoul(f[col[4]]);
            r.algorithm = parse_algorithm(f[col[5]]);
            r.realization = std::stoul(f[col[6]]);
            r.repeat = std::stoul(f[col[7]]);
            r.seed = std::stoull(f[col[8]]);
            r.welfare = csv::parse_double(f[col[9]]);
            r.acceptance = csv::parse_double(f[col[10]]);
            r.n_coalitions = std::stoul(f[col[11]]);
            r.n_valid = std::stoul(f[col[12]]);
            r.epsilon_star = optional_double(f[col[13]]);
            r.heldout_reliability = optional_double(f[col[14]]);
            r.status = f[col[15]];
            rows.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw SchemaError(path.string() + ":" + std::to_string(reader.line_number()) +
                              ": malformed number");
        } catch (const Error& e) {
            throw SchemaError(path.string() + ":" + std::to_string(reader.line_number()) + ": " +
                              e.what());
        }
    }
    return rows;
}

std::vector<ReportRow> aggregate_report(const std::vector<SweepRow>& rows) {
    std::set<std::string> ids;
    for (const auto& r : rows) {
        ids.insert(r.config_id);
    }
    if (ids.size() > 1) {
        std::string list;
        for (const auto& id : ids) {
            list += (list.empty() ? "" : ", ") + id;
        }
        throw DataQualityError("sweep files come from different configs (" + list +
                               "); aggregate them separately");
    }
    using Key = std::tuple<double, double, std::size_t, int>;
    struct Acc {
        double display = 0.0;
        std::vector<double> welfare;
        std::vector<double> acceptance;
        std::vector<double> reliability;
    };
    std::map<Key, Acc> groups;
    for (const auto& r : rows) {
        auto& g = groups[{r.phi, r.p_min, r.n_coal, static_cast<int>(r.algorithm)}];
        g.display = r.p_min_display;
        if (r.status == "infeasible") {
            continue;
        }
        g.welfare.push_back(r.welfare);
        g.acceptance.push_back(r.acceptance);
        if (r.heldout_reliability) {
            g.reliability.push_back(*r.heldout_reliability);
        }
    }
    std::vector<ReportRow> out;
    for (const auto& [key, g] : groups) {
        ReportRow row;
        std::tie(row.phi, row.p_min, row.n_coal, std::ignore) = key;
        row.algorithm = static_cast<Algorithm>(std::get<3>(key));
        row.p_min_display = g.display;
        const auto w = mean_std(g.welfare);
        const auto a = mean_std(g.acceptance);
        const auto rel = mean_std(g.reliability);
        row.count = w.n;
        row.welfare_mean = w.mean;
        row.welfare_std = w.std;
        row.acceptance_mean = a.mean;
        row.acceptance_std = a.std;
        row.reliability_count = rel.n;
        row.reliability_mean = rel.mean;
        row.reliability_std = rel.std;
        out.push_back(row);
    }
    return out;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
    out << "phi,p_min,p_min_display,n_coal,algorithm,count,welfare_mean,welfare_std,"
           "acceptance_mean,acceptance_std,reliability_count,reliability_mean,reliability_std\n";
    for (const auto& r : rows) {
        out << csv::format_double(r.phi) << ',' << csv::format_double(r.p_min) << ','
            << csv::format_double(r.p_min_display) << ',' << r.n_coal << ','
            << to_string(r.algorithm) << ',' << r.count << ','
            << csv::format_double(r.welfare_mean) << ',' << csv::format_double(r.welfare_std)
            << ',' << csv::format_double(r.acceptance_mean) << ','
            << csv::format_double(r.acceptance_std) << ',' << r.reliability_count << ','
            << csv::format_double(r.reliability_mean) << ','
            << csv::format_double(r.reliability_std) << '\n';
    }
}

}  // namespace vpp
