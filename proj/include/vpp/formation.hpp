#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <vector>

#include "vpp/coalition.hpp"
#include "vpp/graph.hpp"

namespace vpp {

struct GrowthResult {
    Coalition coalition;
    std::vector<double> p_phi_trajectory;    ///< after each accepted step, seed first
    std::vector<double> utility_trajectory;
    std::vector<AgentId> considered;  ///< every candidate ever scored, sorted
};

/// Greedy seed expansion on g. Candidates are unassigned non-members adjacent
/// to at least one member. Each step adds the candidate with the best score
/// (ties: smallest id) if it strictly improves the current one; the score is
/// the utility once the coalition is valid and P_phi before that.
GrowthResult grow_seed(std::span<const AgentId> seed, const CorrelationGraph& g,
                       const SeriesPanel& series, const GridRequirements& req, ContractMode mode,
                       const std::set<AgentId>& assigned);

/// Relative utility loss of `members` when `agent` leaves. When the coalition
/// has zero utility the relative loss of P_phi is used instead and
/// `used_fallback` is set.
double need_score(std::span<const AgentId> members, AgentId agent, const SeriesPanel& series,
                  const GridRequirements& req, ContractMode mode, bool* used_fallback = nullptr);

/// Turns overlapping candidates into disjoint coalitions. Shared agents are
/// visited in ascending id order and kept only where their need score is
/// highest (ties: fewer members, then lexicographically smaller member set).
CoalitionStructure resolve_overlaps(std::vector<std::vector<AgentId>> candidates,
                                    const SeriesPanel& series, const GridRequirements& req,
                                    ContractMode mode);

/// `sequential`: seeds grow one after another, each seeing the members of
/// coalitions grown before it. `independent`: all seeds grow speculatively in
/// parallel against an empty assignment; a seed whose considered candidates
/// meet an earlier coalition is regrown, so both give the same structure.
enum class GrowthSchedule { sequential, independent };

struct FormationOptions {
    std::size_t k_min = kDefaultMinCliqueSize;
    CliqueLimits limits{};
    GrowthSchedule schedule = GrowthSchedule::sequential;
};

/// Percolation pipeline over one set of (already deseasonalized) series.
/// Caches the correlation matrix and the seeds per n_coal so that sweeping
/// phi and p_min reuses them.
class PercolationFormer {
public:
    explicit PercolationFormer(const SeriesPanel& series, FormationOptions options = {});

    const SeriesPanel& series() const noexcept { return *series_; }
    const CorrelationMatrix& correlations() const noexcept { return corr_; }
    const EpsilonStar& seeds(std::size_t n_coal);
    CoalitionStructure form(const GridRequirements& req, ContractMode mode);

private:
    const SeriesPanel* series_;
    FormationOptions options_;
    CorrelationMatrix corr_;
    std::map<std::size_t, std::unique_ptr<EpsilonStar>> seeds_;
};

/// Correlation matrix -> epsilon* seeds -> growth -> overlap resolution.
CoalitionStructure form_coalitions(const SeriesPanel& series, const GridRequirements& req,
                                   ContractMode mode, const FormationOptions& options = {});

/// Uniformly random surjective assignment of the pool onto n_coal blocks,
/// drawn exactly by sequential conditional sampling. Blocks are returned in
/// label order, members sorted.
std::vector<std::vector<AgentId>> random_partition_members(std::span<const AgentId> pool,
                                                           std::size_t n_coal, std::uint64_t seed);

CoalitionStructure random_partition(const SeriesPanel& series, const GridRequirements& req,
                                    ContractMode mode, std::uint64_t seed);

/// Average-linkage agglomeration on rho^2: starting from singletons, merge the
/// two groups with the highest mean pairwise rho^2 until n_coal remain.
/// Agents absent from `corr` count as uncorrelated with everyone.
std::vector<std::vector<AgentId>> correlated_partition_members(std::span<const AgentId> pool,
                                                               const CorrelationMatrix& corr,
                                                               std::size_t n_coal);

CoalitionStructure correlated_partition(const SeriesPanel& series, const GridRequirements& req,
                                        ContractMode mode);

/// Per-block contract statistics, independent of p_min.
std::vector<ContractStats> partition_stats(const std::vector<std::vector<AgentId>>& blocks,
                                           const SeriesPanel& series, double phi,
                                           ContractMode mode);

/// Builds a structure from precomputed block statistics.
CoalitionStructure structure_from_stats(const std::vector<std::vector<AgentId>>& blocks,
                                        const std::vector<ContractStats>& stats,
                                        const SeriesPanel& series, const GridRequirements& req,
                                        ContractMode mode, Algorithm provenance);

}  // namespace vpp
