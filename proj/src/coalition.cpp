#include "vpp/coalition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include "vpp/errors.hpp"
#include "vpp/special_functions.hpp"

namespace vpp {

void GridRequirements::validate() const {
    if (!(phi >= 0.0 && phi <= 1.0)) {
        throw InvalidArgument("phi must lie in [0, 1]");
    }
    if (!(p_min >= 0.0) || !std::isfinite(p_min)) {
        throw InvalidArgument("p_min must be a finite value >= 0");
    }
    if (n_coal < 1) {
        throw InvalidArgument("n_coal must be at least 1");
    }
}

std::string_view to_string(ContractMode mode) {
    return mode == ContractMode::analytic ? "analytic" : "empirical";
}

ContractMode parse_contract_mode(std::string_view text) {
    if (text == "analytic") {
        return ContractMode::analytic;
    }
    if (text == "empirical") {
        return ContractMode::empirical;
    }
    throw InvalidArgument("unknown contract mode '" + std::string(text) + "'");
}

double shortfall_probability(double mu, double sigma, double contract) {
    if (!(sigma >= 0.0)) {
        throw InvalidArgument("sigma must be >= 0");
    }
    if (sigma == 0.0) {
        return contract < mu ? 0.0 : (contract > mu ? 1.0 : 0.5);
    }
    // 1/2 [1 + erf(z)] written as 1/2 erfc(-z) to keep the lower tail accurate.
    return 0.5 * math::erfc(-(contract - mu) / (sigma * std::numbers::sqrt2));
}

double max_contract(double mu, double sigma, double phi) {
    if (!(phi > 0.0 && phi < 1.0)) {
        throw BoundaryError("analytic contract needs 0 < phi < 1 (got " + std::to_string(phi) +
                            "); use the empirical mode at the boundary");
    }
    if (!(sigma >= 0.0)) {
        throw InvalidArgument("sigma must be >= 0");
    }
    if (phi == 0.5 || sigma == 0.0) {
        return mu;
    }
    // erfinv(1 - 2 phi) == erfc_inv(2 phi), without the cancellation in 1 - 2 phi.
    return mu - sigma * std::numbers::sqrt2 * math::erfc_inv(2.0 * phi);
}

double empirical_max_contract(std::span<const double> values, double phi) {
    if (!(phi >= 0.0 && phi <= 1.0)) {
        throw InvalidArgument("phi must lie in [0, 1]");
    }
    if (values.empty()) {
        throw LengthError("empirical contract of an empty series");
    }
    if (phi > 0.0 && static_cast<double>(values.size()) * phi < 1.0) {
        throw LengthError("series of " + std::to_string(values.size()) +
                          " samples is too short for phi = " + std::to_string(phi));
    }
    std::vector<double> sorted(values.begin(), values.end());
    const auto k = static_cast<std::size_t>(std::floor(phi * static_cast<double>(sorted.size() - 1)));
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
    return sorted[k];
}

ContractStats contract_stats(std::span<const double> aggregate, double phi, ContractMode mode) {
    const SeriesStats s = stats(aggregate);
    ContractStats out{s.mean, s.std_dev, 0.0};
    out.p_phi = mode == ContractMode::analytic ? max_contract(s.mean, s.std_dev, phi)
                                               : empirical_max_contract(aggregate, phi);
    return out;
}

Coalition make_coalition(std::vector<AgentId> members, const ContractStats& stats, double p_min) {
    Coalition c;
    std::sort(members.begin(), members.end());
    c.members = std::move(members);
    c.mu = stats.mu;
    c.sigma = stats.sigma;
    c.p_phi = stats.p_phi;
    c.valid = stats.p_phi >= p_min;
    if (c.valid) {
        c.contract = stats.p_phi;
        c.utility = stats.p_phi / static_cast<double>(c.members.size());
    }
    return c;
}

Coalition evaluate(std::span<const AgentId> members, const SeriesPanel& series,
                   const GridRequirements& req, ContractMode mode) {
    if (members.empty()) {
        throw InvalidArgument("cannot evaluate an empty coalition");
    }
    const TimeSeries agg = aggregate(members, series);
    return make_coalition(std::vector<AgentId>(members.begin(), members.end()),
                          contract_stats(agg.values, req.phi, mode), req.p_min);
}

std::string_view to_string(Algorithm a) {
    switch (a) {
        case Algorithm::percolation:
            return "percolation";
        case Algorithm::random:
            return "random";
        case Algorithm::correlated:
            return "correlated";
    }
    return "unknown";
}

Algorithm parse_algorithm(std::string_view text) {
    if (text == "percolation") {
        return Algorithm::percolation;
    }
    if (text == "random") {
        return Algorithm::random;
    }
    if (text == "correlated") {
        return Algorithm::correlated;
    }
    throw InvalidArgument("unknown algorithm '" + std::string(text) + "'");
}

void check_partition(const CoalitionStructure& cs, std::span<const AgentId> pool) {
    const std::set<AgentId> allowed(pool.begin(), pool.end());
    std::set<AgentId> seen;
    for (const auto& c : cs.coalitions) {
        if (c.members.empty()) {
            throw std::logic_error("empty coalition in structure");
        }
        for (const auto id : c.members) {
            if (!allowed.contains(id)) {
                throw std::logic_error("agent " + to_string(id) + " is not in the pool");
            }
            if (!seen.insert(id).second) {
                throw std::logic_error("agent " + to_string(id) + " is in two coalitions");
            }
        }
    }
    for (const auto id : cs.unassigned) {
        if (seen.contains(id)) {
            throw std::logic_error("agent " + to_string(id) + " is both assigned and unassigned");
        }
    }
}

double social_welfare(const CoalitionStructure& cs) {
    double total = 0.0;
    for (const auto& c : cs.coalitions) {
        total += c.utility;
    }
    return total;
}

double acceptance_percentage(const CoalitionStructure& cs) {
    if (cs.coalitions.empty()) {
        throw InvalidArgument("acceptance percentage of an empty structure");
    }
    const auto valid = std::count_if(cs.coalitions.begin(), cs.coalitions.end(),
                                     [](const Coalition& c) { return c.valid; });
    return static_cast<double>(valid) / static_cast<double>(cs.coalitions.size());
}

double empirical_reliability(const Coalition& c, const SeriesPanel& held_out) {
    if (!c.contract) {
        throw InvalidArgument("coalition has no contract");
    }
    for (const auto id : c.members) {
        if (!held_out.index_of(id)) {
            throw DataQualityError("held-out data lacks a series for agent " + to_string(id));
        }
    }
    if (held_out.length() == 0) {
        throw LengthError("empty held-out period");
    }
    const TimeSeries agg = aggregate(c.members, held_out);
    const auto below = std::count_if(agg.values.begin(), agg.values.end(),
                                     [&](double v) { return v < *c.contract; });
    return static_cast<double>(below) / static_cast<double>(agg.values.size());
}

namespace {

nlohmann::json ids_json(std::span<const AgentId> ids) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto id : ids) {
        out.push_back(to_index(id));
    }
    return out;
}

}  // namespace

nlohmann::json to_json(const Coalition& c) {
    nlohmann::json j{{"members", ids_json(c.members)},
                     {"mu", c.mu},
                     {"sigma", c.sigma},
                     {"p_phi", c.p_phi},
                     {"valid", c.valid},
                     {"utility", c.utility}};
    j["contract"] = c.contract ? nlohmann::json(*c.contract) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const CoalitionStructure& cs) {
    nlohmann::json coalitions = nlohmann::json::array();
    for (const auto& c : cs.coalitions) {
        coalitions.push_back(to_json(c));
    }
    nlohmann::json meta{{"algorithm", to_string(cs.provenance)},
                        {"mode", to_string(cs.mode)},
                        {"seed", cs.seed},
                        {"phi", cs.requirements.phi},
                        {"p_min", cs.requirements.p_min},
                        {"n_coal", cs.requirements.n_coal},
                        {"degraded", cs.degraded},
                        {"zero_utility_tau_uses", cs.zero_utility_tau_uses}};
    meta["epsilon_star"] =
        cs.epsilon_star ? nlohmann::json(*cs.epsilon_star) : nlohmann::json(nullptr);
    return {{"metadata", meta},
            {"coalitions", coalitions},
            {"unassigned", ids_json(cs.unassigned)},
            {"excluded", ids_json(cs.excluded)},
            {"social_welfare", social_welfare(cs)},
            {"acceptance", cs.coalitions.empty() ? nlohmann::json(nullptr)
                                                 : nlohmann::json(acceptance_percentage(cs))}};
}

}  // namespace vpp
