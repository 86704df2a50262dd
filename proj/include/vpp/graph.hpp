#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "vpp/timeseries.hpp"

namespace vpp {

/// Fixed-capacity bit set over graph node indices.
class NodeSet {
public:
    NodeSet() = default;
    explicit NodeSet(std::size_t capacity) : words_((capacity + 63) / 64, 0) {}

    void insert(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
    void erase(std::size_t i) { words_[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }
    bool contains(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }
    bool empty() const;
    std::size_t count() const;
    std::size_t intersection_count(const NodeSet& other) const;
    NodeSet operator&(const NodeSet& other) const;
    NodeSet minus(const NodeSet& other) const;

    /// Smallest member >= from, or npos.
    std::size_t next(std::size_t from) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    template <class F>
    void for_each(F&& f) const {
        for (std::size_t w = 0; w < words_.size(); ++w) {
            std::uint64_t bits = words_[w];
            while (bits != 0) {
                const int b = __builtin_ctzll(bits);
                f(w * 64 + static_cast<std::size_t>(b));
                bits &= bits - 1;
            }
        }
    }

    bool operator==(const NodeSet&) const = default;

private:
    std::vector<std::uint64_t> words_;
};

/// Decorrelation graph: an edge joins i and j when rho_ij^2 <= epsilon, with
/// weight rho_ij^2. Node indices follow ascending agent id.
class CorrelationGraph {
public:
    struct Edge {
        std::size_t i = 0;
        std::size_t j = 0;
        double weight = 0.0;
    };

    CorrelationGraph() = default;
    CorrelationGraph(std::vector<AgentId> agents, double epsilon);

    std::size_t size() const noexcept { return agents_.size(); }
    double epsilon() const noexcept { return epsilon_; }
    const std::vector<AgentId>& agents() const noexcept { return agents_; }
    AgentId agent(std::size_t i) const { return agents_.at(i); }
    std::optional<std::size_t> index_of(AgentId id) const;

    void add_edge(std::size_t i, std::size_t j, double weight);
    bool adjacent(std::size_t i, std::size_t j) const { return adjacency_[i].contains(j); }
    const NodeSet& neighbors(std::size_t i) const { return adjacency_[i]; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    const std::vector<AgentId>& excluded() const noexcept { return excluded_; }
    void set_excluded(std::vector<AgentId> ids) { excluded_ = std::move(ids); }
    void set_epsilon(double epsilon) { epsilon_ = epsilon; }

private:
    std::vector<AgentId> agents_;
    double epsilon_ = 0.0;
    std::vector<NodeSet> adjacency_;
    std::vector<Edge> edges_;
    std::vector<AgentId> excluded_;
};

/// Edge for every unordered pair with rho^2 <= epsilon. Agents the matrix
/// excluded as degenerate are carried over to `excluded()`.
CorrelationGraph build_epsilon_graph(const CorrelationMatrix& corr, double epsilon);

/// Safety caps on clique enumeration. Hitting either is reported as truncation.
struct CliqueLimits {
    std::size_t max_count = 100000;
    std::chrono::milliseconds time_budget{120000};
};

using Clique = std::vector<AgentId>;

struct CliqueEnumeration {
    std::vector<Clique> cliques;  ///< each sorted; list sorted lexicographically
    bool truncated = false;
};

/// Maximal cliques by Bron-Kerbosch with Tomita pivoting.
CliqueEnumeration maximal_cliques(const CorrelationGraph& g, const CliqueLimits& limits = {});

/// True when every pair of `members` is adjacent in g.
bool is_clique(const CorrelationGraph& g, std::span<const AgentId> members);

struct CliqueSet {
    std::vector<Clique> cliques;
    bool disjoint = true;
    bool truncated = false;  ///< enumeration hit a cap; the selection may be suboptimal
};

inline constexpr std::size_t kDefaultMinCliqueSize = 2;

/// Greedy seed selection: take the largest remaining clique (ties: the
/// lexicographically smallest member list), drop its nodes, repeat until no
/// clique of size >= k_min remains.
CliqueSet disjoint_cliques(const CorrelationGraph& g, std::size_t k_min = kDefaultMinCliqueSize,
                           const CliqueLimits& limits = {});

struct EpsilonStar {
    double epsilon = 0.0;
    CorrelationGraph graph;
    CliqueSet seeds;
    std::size_t thresholds_evaluated = 0;
};

/// Smallest observed rho^2 at which `disjoint_cliques` yields >= n_coal
/// cliques. Throws InfeasibleError carrying the best count seen otherwise.
EpsilonStar epsilon_star(const CorrelationMatrix& corr, std::size_t n_coal,
                         std::size_t k_min = kDefaultMinCliqueSize, const CliqueLimits& limits = {});

/// `i j weight` per line, agent ids.
void write_edge_list(std::ostream& out, const CorrelationGraph& g);

nlohmann::json to_json(const CliqueSet& set);

}  // namespace vpp
