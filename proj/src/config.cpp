#include "vpp/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "vpp/errors.hpp"

namespace vpp {

namespace {

using nlohmann::json;

// Read-only view of one JSON value that knows its own field path, so every
// validation error can name it.
class Field {
public:
    Field(const json& value, std::string path) : value_(&value), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }
    const json& raw() const noexcept { return *value_; }

    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_, what); }

    std::string child_path(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    void require_object(std::initializer_list<std::string_view> allowed) const {
        if (!value_->is_object()) {
            fail("expected an object");
        }
        for (const auto& [key, _] : value_->items()) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                throw ConfigError(child_path(key), "unknown field");
            }
        }
    }

    bool has(std::string_view key) const { return value_->contains(key); }

    Field at(std::string_view key) const {
        const auto it = value_->find(key);
        if (it == value_->end()) {
            throw ConfigError(child_path(key), "missing required field");
        }
        return {*it, child_path(key)};
    }

    std::optional<Field> find(std::string_view key) const {
        const auto it = value_->find(key);
        if (it == value_->end()) {
            return std::nullopt;
        }
        return Field{*it, child_path(key)};
    }

    Field element(std::size_t i) const {
        return {(*value_)[i], path_ + "[" + std::to_string(i) + "]"};
    }

    double number() const {
        if (!value_->is_number()) {
            fail("expected a number");
        }
        const double v = value_->get<double>();
        if (!std::isfinite(v)) {
            fail("expected a finite number");
        }
        return v;
    }

    /// A number, or the string "inf".
    double number_or_inf() const {
        if (value_->is_string() && value_->get<std::string>() == "inf") {
            return std::numeric_limits<double>::infinity();
        }
        return number();
    }

    std::int64_t integer() const {
        if (!value_->is_number_integer()) {
            fail("expected an integer");
        }
        return value_->get<std::int64_t>();
    }

    std::uint64_t unsigned_integer() const {
        if (!value_->is_number_unsigned() && !(value_->is_number_integer() && integer() >= 0)) {
            fail("expected a non-negative integer");
        }
        return value_->get<std::uint64_t>();
    }

    bool boolean() const {
        if (!value_->is_boolean()) {
            fail("expected true or false");
        }
        return value_->get<bool>();
    }

    std::string string() const {
        if (!value_->is_string()) {
            fail("expected a string");
        }
        return value_->get<std::string>();
    }

    std::size_t array_size() const {
        if (!value_->is_array()) {
            fail("expected an array");
        }
        return value_->size();
    }

private:
    const json* value_;
    std::string path_;
};

template <class T, class F>
std::vector<T> scalar_or_list(const Field& f, F&& read) {
    std::vector<T> out;
    if (f.raw().is_array()) {
        const std::size_t n = f.array_size();
        if (n == 0) {
            f.fail("list must not be empty");
        }
        for (std::size_t i = 0; i < n; ++i) {
            out.push_back(read(f.element(i)));
        }
    } else {
        out.push_back(read(f));
    }
    return out;
}

RealRange read_real_range(const Field& f) {
    if (f.array_size() != 2) {
        f.fail("expected [lo, hi]");
    }
    RealRange r{f.element(0).number(), f.element(1).number()};
    if (r.lo > r.hi) {
        f.fail("lo must not exceed hi");
    }
    return r;
}

IntRange read_int_range(const Field& f) {
    if (f.array_size() != 2) {
        f.fail("expected [lo, hi]");
    }
    IntRange r{static_cast<int>(f.element(0).integer()), static_cast<int>(f.element(1).integer())};
    if (r.lo > r.hi || r.lo < 0) {
        f.fail("expected 0 <= lo <= hi");
    }
    return r;
}

CellCoord read_cell(const Field& f) {
    if (f.array_size() != 2) {
        f.fail("expected [x, y]");
    }
    return {static_cast<int>(f.element(0).integer()), static_cast<int>(f.element(1).integer())};
}

Timestamp read_timestamp(const Field& f) {
    try {
        return parse_timestamp(f.string());
    } catch (const Error& e) {
        f.fail(e.what());
    }
}

void read_template(const Field& f, ClimateTemplate& t) {
    f.require_object({"temperature_mean", "temperature_annual_amplitude",
                      "temperature_daily_amplitude", "temperature_noise",
                      "temperature_memory_hours", "wind_mean", "wind_annual_amplitude",
                      "wind_noise", "wind_memory_hours", "cloud_mean", "cloud_noise_logit",
                      "cloud_memory_hours"});
    const auto set = [&](std::string_view key, double& target) {
        if (auto v = f.find(key)) {
            target = v->number();
        }
    };
    set("temperature_mean", t.temperature_mean);
    set("temperature_annual_amplitude", t.temperature_annual_amplitude);
    set("temperature_daily_amplitude", t.temperature_daily_amplitude);
    set("temperature_noise", t.temperature_noise);
    set("temperature_memory_hours", t.temperature_memory_hours);
    set("wind_mean", t.wind_mean);
    set("wind_annual_amplitude", t.wind_annual_amplitude);
    set("wind_noise", t.wind_noise);
    set("wind_memory_hours", t.wind_memory_hours);
    set("cloud_mean", t.cloud_mean);
    set("cloud_noise_logit", t.cloud_noise_logit);
    set("cloud_memory_hours", t.cloud_memory_hours);
    if (!(t.cloud_mean > 0.0 && t.cloud_mean < 1.0)) {
        throw ConfigError(f.child_path("cloud_mean"), "must lie in (0, 1)");
    }
    for (const auto& [key, v] :
         {std::pair{"temperature_noise", t.temperature_noise}, {"wind_noise", t.wind_noise},
          {"cloud_noise_logit", t.cloud_noise_logit}, {"wind_mean", t.wind_mean}}) {
        if (v < 0.0) {
            throw ConfigError(f.child_path(key), "must be >= 0");
        }
    }
    for (const auto& [key, v] : {std::pair{"temperature_memory_hours", t.temperature_memory_hours},
                                 {"wind_memory_hours", t.wind_memory_hours},
                                 {"cloud_memory_hours", t.cloud_memory_hours}}) {
        if (!(v > 0.0)) {
            throw ConfigError(f.child_path(key), "must be positive");
        }
    }
}

ClimateSection read_climate(const Field& f, const std::filesystem::path& base_dir) {
    f.require_object({"source", "width", "height", "start", "days", "interval_hours",
                      "spatial_corr_length", "latitude", "template", "stations", "columns"});
    ClimateSection c;
    const std::string source = f.has("source") ? f.at("source").string() : "synthetic";
    if (source == "synthetic") {
        c.source = ClimateSection::Source::synthetic;
    } else if (source == "csv") {
        c.source = ClimateSection::Source::csv;
    } else {
        f.at("source").fail("expected \"synthetic\" or \"csv\"");
    }

    auto& p = c.synthetic;
    p.start = parse_timestamp("2006-02-01T00:00");
    p.duration = kDay * 730;
    if (auto v = f.find("width")) {
        p.width = static_cast<int>(v->integer());
        if (p.width < 1) {
            v->fail("must be >= 1");
        }
    }
    if (auto v = f.find("height")) {
        p.height = static_cast<int>(v->integer());
        if (p.height < 1) {
            v->fail("must be >= 1");
        }
    }
    if (auto v = f.find("start")) {
        p.start = read_timestamp(*v);
    }
    if (auto v = f.find("days")) {
        const auto days = v->integer();
        if (days < 1) {
            v->fail("must be >= 1");
        }
        p.duration = kDay * days;
    }
    if (auto v = f.find("interval_hours")) {
        const auto h = v->integer();
        if (h < 1 || 24 % h != 0) {
            v->fail("must be a whole number of hours dividing 24");
        }
        p.interval = kHour * h;
    }
    if (auto v = f.find("spatial_corr_length")) {
        p.spatial_corr_length = v->number_or_inf();
        if (p.spatial_corr_length < 0.0) {
            v->fail("must be >= 0");
        }
    }
    if (auto v = f.find("latitude")) {
        p.latitude_of_origin = v->number();
        if (std::abs(p.latitude_of_origin) > 90.0) {
            v->fail("must lie in [-90, 90]");
        }
    }
    if (auto v = f.find("template")) {
        read_template(*v, p.shape);
    }

    if (c.source == ClimateSection::Source::csv) {
        const Field stations = f.at("stations");
        std::set<std::pair<int, int>> covered;
        for (std::size_t i = 0; i < stations.array_size(); ++i) {
            const Field s = stations.element(i);
            s.require_object({"path", "cell"});
            WeatherStation ws;
            ws.path = s.at("path").string();
            if (ws.path.is_relative()) {
                ws.path = base_dir / ws.path;
            }
            ws.cell = read_cell(s.at("cell"));
            if (ws.cell.x < 0 || ws.cell.y < 0 || ws.cell.x >= p.width || ws.cell.y >= p.height) {
                throw ConfigError(s.child_path("cell"), "outside the climate lattice");
            }
            if (!covered.insert({ws.cell.x, ws.cell.y}).second) {
                throw ConfigError(s.child_path("cell"), "cell already has a station");
            }
            c.stations.push_back(std::move(ws));
        }
        if (covered.size() != static_cast<std::size_t>(p.width) * static_cast<std::size_t>(p.height)) {
            stations.fail("every lattice cell needs a station in csv mode");
        }
        if (auto cols = f.find("columns")) {
            cols->require_object({"timestamp", "wind_speed", "cloud_okta", "cloud_fraction",
                                  "temperature"});
            const auto set = [&](std::string_view key, std::string& target) {
                if (auto v = cols->find(key)) {
                    target = v->string();
                }
            };
            set("timestamp", c.columns.timestamp);
            set("wind_speed", c.columns.wind_speed);
            set("cloud_okta", c.columns.cloud_okta);
            set("cloud_fraction", c.columns.cloud_fraction);
            set("temperature", c.columns.temperature);
        }
    } else if (f.has("stations") || f.has("columns")) {
        f.fail("stations and columns are only valid with source \"csv\"");
    }
    return c;
}

RandomPoolSpec read_random_pool(const Field& f) {
    f.require_object({"count", "n_turbines", "turbine_rated_power", "turbine_cut_in",
                      "turbine_rated_speed", "turbine_cut_out", "n_pv", "pv_area",
                      "pv_efficiency", "base_load", "morning_peak_gain", "evening_peak_gain",
                      "comfort_temperature", "heating_gain", "noise_level"});
    RandomPoolSpec s;
    if (auto v = f.find("count")) {
        s.count = v->unsigned_integer();
        if (s.count < 1) {
            v->fail("must be >= 1");
        }
    }
    const auto real = [&](std::string_view key, RealRange& target) {
        if (auto v = f.find(key)) {
            target = read_real_range(*v);
        }
    };
    const auto integer = [&](std::string_view key, IntRange& target) {
        if (auto v = f.find(key)) {
            target = read_int_range(*v);
        }
    };
    integer("n_turbines", s.n_turbines);
    real("turbine_rated_power", s.turbine_rated_power);
    real("turbine_cut_in", s.turbine_cut_in);
    real("turbine_rated_speed", s.turbine_rated_speed);
    real("turbine_cut_out", s.turbine_cut_out);
    integer("n_pv", s.n_pv);
    real("pv_area", s.pv_area);
    real("pv_efficiency", s.pv_efficiency);
    real("base_load", s.base_load);
    real("morning_peak_gain", s.morning_peak_gain);
    real("evening_peak_gain", s.evening_peak_gain);
    real("comfort_temperature", s.comfort_temperature);
    real("heating_gain", s.heating_gain);
    real("noise_level", s.noise_level);
    if (s.turbine_cut_in.hi >= s.turbine_rated_speed.lo ||
        s.turbine_rated_speed.hi >= s.turbine_cut_out.lo) {
        f.fail("turbine speed ranges must satisfy cut_in < rated_speed < cut_out");
    }
    return s;
}

ProsumerConfig read_agent(const Field& f, bool& has_seed) {
    f.require_object({"id", "cell", "n_turbines", "turbine", "n_pv", "pv", "base_load",
                      "morning_peak_gain", "evening_peak_gain", "comfort_temperature",
                      "heating_gain", "noise_level", "rng_seed"});
    ProsumerConfig a;
    const auto id = f.at("id").unsigned_integer();
    if (id > std::numeric_limits<std::uint32_t>::max()) {
        f.at("id").fail("out of range");
    }
    a.id = AgentId{static_cast<std::uint32_t>(id)};
    a.cell = read_cell(f.at("cell"));
    if (auto v = f.find("n_turbines")) {
        a.n_turbines = static_cast<int>(v->integer());
    }
    if (auto v = f.find("n_pv")) {
        a.n_pv = static_cast<int>(v->integer());
    }
    if (auto t = f.find("turbine")) {
        t->require_object({"cut_in", "rated_speed", "cut_out", "rated_power"});
        if (auto v = t->find("cut_in")) a.turbine.cut_in = v->number();
        if (auto v = t->find("rated_speed")) a.turbine.rated_speed = v->number();
        if (auto v = t->find("cut_out")) a.turbine.cut_out = v->number();
        if (auto v = t->find("rated_power")) a.turbine.rated_power = v->number();
    }
    if (auto pv = f.find("pv")) {
        pv->require_object({"panel_area", "efficiency", "degradation_exponent"});
        if (auto v = pv->find("panel_area")) a.pv.panel_area = v->number();
        if (auto v = pv->find("efficiency")) a.pv.efficiency = v->number();
        if (auto v = pv->find("degradation_exponent")) a.pv.degradation_exponent = v->number();
    }
    const auto set = [&](std::string_view key, double& target) {
        if (auto v = f.find(key)) {
            target = v->number();
        }
    };
    set("base_load", a.base_load);
    set("morning_peak_gain", a.morning_peak_gain);
    set("evening_peak_gain", a.evening_peak_gain);
    set("comfort_temperature", a.comfort_temperature);
    set("heating_gain", a.heating_gain);
    set("noise_level", a.noise_level);
    has_seed = f.has("rng_seed");
    if (has_seed) {
        a.rng_seed = f.at("rng_seed").unsigned_integer();
    }
    try {
        a.validate();
    } catch (const InvalidArgument& e) {
        f.fail(e.what());
    }
    return a;
}

PoolSection read_pool(const Field& f, const SyntheticClimateParams& lattice) {
    f.require_object({"random", "agents"});
    PoolSection p;
    if (f.has("random") == f.has("agents")) {
        f.fail("exactly one of \"random\" or \"agents\" is required");
    }
    if (auto r = f.find("random")) {
        p.random = read_random_pool(*r);
        return p;
    }
    const Field agents = f.at("agents");
    if (agents.array_size() == 0) {
        agents.fail("list must not be empty");
    }
    std::set<AgentId> seen;
    for (std::size_t i = 0; i < agents.array_size(); ++i) {
        bool has_seed = false;
        ProsumerConfig a = read_agent(agents.element(i), has_seed);
        if (!seen.insert(a.id).second) {
            throw ConfigError(agents.element(i).child_path("id"), "duplicate agent id");
        }
        if (a.cell.x < 0 || a.cell.y < 0 || a.cell.x >= lattice.width || a.cell.y >= lattice.height) {
            throw ConfigError(agents.element(i).child_path("cell"), "outside the climate lattice");
        }
        p.agents.push_back(a);
        p.derive_noise_seed.push_back(!has_seed);
    }
    return p;
}

AlgorithmSelection read_algorithms(const Field& f) {
    f.require_object({"percolation", "random", "correlated"});
    AlgorithmSelection a;
    if (auto v = f.find("percolation")) {
        a.percolation = v->boolean();
    }
    if (auto v = f.find("correlated")) {
        a.correlated = v->boolean();
    }
    if (auto r = f.find("random")) {
        if (r->raw().is_boolean()) {
            a.random_repeats = r->boolean() ? 1 : 0;
        } else {
            r->require_object({"repeats"});
            a.random_repeats = r->at("repeats").unsigned_integer();
            if (a.random_repeats < 1) {
                r->at("repeats").fail("must be >= 1");
            }
        }
    }
    if (!a.any()) {
        f.fail("at least one algorithm must be selected");
    }
    return a;
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    const Field root(doc, "");
    root.require_object({"seed", "realizations", "climate", "pool", "requirements", "algorithms",
                         "k_min", "growth", "clique_limits", "split",
                         "deseasonalize_window_days", "mode", "p_min_display_scale",
                         "output_dir"});
    RunConfig c;
    if (auto v = root.find("seed")) {
        c.seed = v->unsigned_integer();
    }
    if (auto v = root.find("realizations")) {
        c.realizations = v->unsigned_integer();
        if (c.realizations < 1) {
            v->fail("must be >= 1");
        }
    }
    c.climate = root.has("climate") ? read_climate(root.at("climate"), base_dir)
                                    : read_climate(Field(json::object(), "climate"), base_dir);
    c.pool = read_pool(root.at("pool"), c.climate.synthetic);

    if (auto req = root.find("requirements")) {
        req->require_object({"phi", "p_min", "n_coal"});
        if (auto v = req->find("phi")) {
            c.phi = scalar_or_list<double>(*v, [](const Field& e) {
                const double phi = e.number();
                if (!(phi >= 0.0 && phi <= 1.0)) {
                    e.fail("must lie in [0, 1]");
                }
                return phi;
            });
        }
        if (auto v = req->find("p_min")) {
            c.p_min = scalar_or_list<double>(*v, [](const Field& e) {
                const double p = e.number();
                if (p < 0.0) {
                    e.fail("must be >= 0");
                }
                return p;
            });
        }
        if (auto v = req->find("n_coal")) {
            c.n_coal = scalar_or_list<std::size_t>(*v, [](const Field& e) {
                const auto n = e.unsigned_integer();
                if (n < 1) {
                    e.fail("must be >= 1");
                }
                return static_cast<std::size_t>(n);
            });
        }
    }

    c.algorithms = read_algorithms(root.at("algorithms"));

    // Experiments seed from 4-cliques: at k_min = 2 the graph at epsilon*
    // holds little more than the seed edges, leaving growth nothing to add.
    c.formation.k_min = 4;
    if (auto v = root.find("k_min")) {
        c.formation.k_min = v->unsigned_integer();
        if (c.formation.k_min < 2) {
            v->fail("must be >= 2");
        }
    }
    if (auto v = root.find("growth")) {
        const auto s = v->string();
        if (s == "sequential") {
            c.formation.schedule = GrowthSchedule::sequential;
        } else if (s == "independent") {
            c.formation.schedule = GrowthSchedule::independent;
        } else {
            v->fail("expected \"sequential\" or \"independent\"");
        }
    }
    if (auto l = root.find("clique_limits")) {
        l->require_object({"max_count", "time_budget_s"});
        if (auto v = l->find("max_count")) {
            c.formation.limits.max_count = v->unsigned_integer();
        }
        if (auto v = l->find("time_budget_s")) {
            const double s = v->number();
            if (!(s > 0.0)) {
                v->fail("must be positive");
            }
            c.formation.limits.time_budget = std::chrono::milliseconds(static_cast<long>(s * 1000.0));
        }
    }
    if (auto v = root.find("split")) {
        c.split = v->number();
        if (!(c.split >= 0.5 && c.split <= 1.0)) {
            v->fail("must lie in [0.5, 1]");
        }
    }
    if (auto v = root.find("deseasonalize_window_days")) {
        c.deseasonalize_window_days = static_cast<int>(v->integer());
        if (c.deseasonalize_window_days < 1) {
            v->fail("must be >= 1");
        }
    }
    if (auto v = root.find("mode")) {
        try {
            c.mode = parse_contract_mode(v->string());
        } catch (const Error& e) {
            v->fail(e.what());
        }
    }
    if (c.mode == ContractMode::analytic) {
        for (std::size_t i = 0; i < c.phi.size(); ++i) {
            if (c.phi[i] <= 0.0 || c.phi[i] >= 1.0) {
                throw ConfigError("requirements.phi",
                                  "analytic mode needs 0 < phi < 1; use empirical mode for the bounds");
            }
        }
    }
    if (auto v = root.find("p_min_display_scale")) {
        c.p_min_display_scale = v->number();
        if (!(c.p_min_display_scale > 0.0)) {
            v->fail("must be positive");
        }
    }
    if (auto v = root.find("output_dir")) {
        c.output_dir = v->string();
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path.string(), "cannot open config file");
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string(), std::string("not valid JSON: ") + e.what());
    }
    return parse_run_config(doc, path.parent_path());
}

nlohmann::json to_json(const ProsumerConfig& a) {
    return {
        {"id", to_index(a.id)},
        {"cell", {a.cell.x, a.cell.y}},
        {"n_turbines", a.n_turbines},
        {"turbine",
         {{"cut_in", a.turbine.cut_in},
          {"rated_speed", a.turbine.rated_speed},
          {"cut_out", a.turbine.cut_out},
          {"rated_power", a.turbine.rated_power}}},
        {"n_pv", a.n_pv},
        {"pv",
         {{"panel_area", a.pv.panel_area},
          {"efficiency", a.pv.efficiency},
          {"degradation_exponent", a.pv.degradation_exponent}}},
        {"base_load", a.base_load},
        {"morning_peak_gain", a.morning_peak_gain},
        {"evening_peak_gain", a.evening_peak_gain},
        {"comfort_temperature", a.comfort_temperature},
        {"heating_gain", a.heating_gain},
        {"noise_level", a.noise_level},
        {"rng_seed", a.rng_seed},
    };
}

namespace {

nlohmann::json range_json(RealRange r) { return {r.lo, r.hi}; }
nlohmann::json range_json(IntRange r) { return {r.lo, r.hi}; }

std::string format_length(double v) {
    return std::isinf(v) ? std::string("inf") : std::to_string(v);
}

}  // namespace

nlohmann::json RunConfig::canonical() const {
    const auto& p = climate.synthetic;
    const auto& t = p.shape;
    nlohmann::json clim = {
        {"source", climate.source == ClimateSection::Source::csv ? "csv" : "synthetic"},
        {"width", p.width},
        {"height", p.height},
        {"start", format_timestamp(p.start)},
        {"duration_s", p.duration.count()},
        {"interval_s", p.interval.count()},
        {"spatial_corr_length", format_length(p.spatial_corr_length)},
        {"latitude", p.latitude_of_origin},
        {"template",
         {{"temperature_mean", t.temperature_mean},
          {"temperature_annual_amplitude", t.temperature_annual_amplitude},
          {"temperature_daily_amplitude", t.temperature_daily_amplitude},
          {"temperature_noise", t.temperature_noise},
          {"temperature_memory_hours", t.temperature_memory_hours},
          {"wind_mean", t.wind_mean},
          {"wind_annual_amplitude", t.wind_annual_amplitude},
          {"wind_noise", t.wind_noise},
          {"wind_memory_hours", t.wind_memory_hours},
          {"cloud_mean", t.cloud_mean},
          {"cloud_noise_logit", t.cloud_noise_logit},
          {"cloud_memory_hours", t.cloud_memory_hours}}},
    };
    if (climate.source == ClimateSection::Source::csv) {
        nlohmann::json st = nlohmann::json::array();
        for (const auto& s : climate.stations) {
            st.push_back({{"path", s.path.generic_string()}, {"cell", {s.cell.x, s.cell.y}}});
        }
        clim["stations"] = st;
        clim["columns"] = {{"timestamp", climate.columns.timestamp},
                           {"wind_speed", climate.columns.wind_speed},
                           {"cloud_okta", climate.columns.cloud_okta},
                           {"cloud_fraction", climate.columns.cloud_fraction},
                           {"temperature", climate.columns.temperature}};
    }
    nlohmann::json pool_json;
    if (pool.random) {
        const auto& r = *pool.random;
        pool_json["random"] = {
            {"count", r.count},
            {"n_turbines", range_json(r.n_turbines)},
            {"turbine_rated_power", range_json(r.turbine_rated_power)},
            {"turbine_cut_in", range_json(r.turbine_cut_in)},
            {"turbine_rated_speed", range_json(r.turbine_rated_speed)},
            {"turbine_cut_out", range_json(r.turbine_cut_out)},
            {"n_pv", range_json(r.n_pv)},
            {"pv_area", range_json(r.pv_area)},
            {"pv_efficiency", range_json(r.pv_efficiency)},
            {"base_load", range_json(r.base_load)},
            {"morning_peak_gain", range_json(r.morning_peak_gain)},
            {"evening_peak_gain", range_json(r.evening_peak_gain)},
            {"comfort_temperature", range_json(r.comfort_temperature)},
            {"heating_gain", range_json(r.heating_gain)},
            {"noise_level", range_json(r.noise_level)},
        };
    } else {
        nlohmann::json agents = nlohmann::json::array();
        for (std::size_t i = 0; i < pool.agents.size(); ++i) {
            auto a = to_json(pool.agents[i]);
            if (pool.derive_noise_seed[i]) {
                a.erase("rng_seed");
            }
            agents.push_back(std::move(a));
        }
        pool_json["agents"] = agents;
    }
    return {
        {"seed", seed},
        {"realizations", realizations},
        {"climate", clim},
        {"pool", pool_json},
        {"requirements", {{"phi", phi}, {"p_min", p_min}, {"n_coal", n_coal}}},
        {"algorithms",
         {{"percolation", algorithms.percolation},
          {"random_repeats", algorithms.random_repeats},
          {"correlated", algorithms.correlated}}},
        {"k_min", formation.k_min},
        {"clique_limits",
         {{"max_count", formation.limits.max_count},
          {"time_budget_ms", formation.limits.time_budget.count()}}},
        {"split", split},
        {"deseasonalize_window_days", deseasonalize_window_days},
        {"mode", std::string(to_string(mode))},
        {"p_min_display_scale", p_min_display_scale},
    };
}

std::string RunConfig::id() const {
    // FNV-1a over the canonical dump: stable across platforms and runs.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : canonical().dump()) {
        h = (h ^ ch) * 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace vpp
