#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vpp/timeseries.hpp"

namespace vpp {

/// Grid-imposed entry rules: reliability threshold, minimum contract, and
/// the number of coalitions requested.
struct GridRequirements {
    double phi = 0.1;
    double p_min = 0.0;
    std::size_t n_coal = 10;

    void validate() const;
};

/// How P_phi is derived from an aggregate series: Gaussian inversion of the
/// shortfall probability, or the empirical phi-quantile.
enum class ContractMode { analytic, empirical };

std::string_view to_string(ContractMode mode);
ContractMode parse_contract_mode(std::string_view text);

/// Pr[P <= contract] for P ~ N(mu, sigma). A zero sigma gives a step at mu
/// with value 1/2 exactly at mu.
double shortfall_probability(double mu, double sigma, double contract);

/// Largest contract whose shortfall probability is phi:
/// mu - sigma * sqrt(2) * erfinv(1 - 2 phi). Throws BoundaryError unless
/// 0 < phi < 1.
double max_contract(double mu, double sigma, double phi);

/// Empirical phi-quantile (lower interpolation); phi = 0 gives the minimum.
/// Requires at least ceil(1/phi) samples.
double empirical_max_contract(std::span<const double> values, double phi);

/// Requirement-independent summary of an aggregate: (mu, sigma, P_phi).
struct ContractStats {
    double mu = 0.0;
    double sigma = 0.0;
    double p_phi = 0.0;
};

ContractStats contract_stats(std::span<const double> aggregate, double phi, ContractMode mode);

struct Coalition {
    std::vector<AgentId> members;  ///< sorted ascending
    double mu = 0.0;
    double sigma = 0.0;
    double p_phi = 0.0;
    bool valid = false;
    double utility = 0.0;           ///< P_phi / |s| when valid, else 0
    std::optional<double> contract; ///< announced value; set only when valid

    std::size_t size() const noexcept { return members.size(); }
};

/// Applies the minimum-value rule and the per-member utility.
Coalition make_coalition(std::vector<AgentId> members, const ContractStats& stats, double p_min);

/// Aggregates members, derives P_phi and applies the validity rules.
Coalition evaluate(std::span<const AgentId> members, const SeriesPanel& series,
                   const GridRequirements& req, ContractMode mode);

enum class Algorithm { percolation, random, correlated };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view text);

struct CoalitionStructure {
    std::vector<Coalition> coalitions;
    std::vector<AgentId> unassigned;
    GridRequirements requirements{};
    ContractMode mode = ContractMode::analytic;
    Algorithm provenance = Algorithm::percolation;
    std::uint64_t seed = 0;
    std::optional<double> epsilon_star;
    bool degraded = false;                 ///< clique enumeration was truncated
    std::size_t zero_utility_tau_uses = 0; ///< overlap decisions made on P_phi loss
    std::vector<AgentId> excluded;         ///< zero-variance agents, never assignable
};

/// Throws std::logic_error when coalitions overlap, one is empty, or a member
/// is outside `pool`.
void check_partition(const CoalitionStructure& cs, std::span<const AgentId> pool);

double social_welfare(const CoalitionStructure& cs);

/// Fraction of coalitions that are valid.
double acceptance_percentage(const CoalitionStructure& cs);

/// Fraction of held-out hours whose aggregate falls strictly below the
/// coalition's contract.
double empirical_reliability(const Coalition& c, const SeriesPanel& held_out);

nlohmann::json to_json(const Coalition& c);
nlohmann::json to_json(const CoalitionStructure& cs);

}  // namespace vpp
