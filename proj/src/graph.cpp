#include "vpp/graph.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <ostream>

#include "vpp/csv.hpp"
#include "vpp/errors.hpp"

namespace vpp {

bool NodeSet::empty() const {
    return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
}

std::size_t NodeSet::count() const {
    std::size_t n = 0;
    for (const auto w : words_) {
        n += static_cast<std::size_t>(__builtin_popcountll(w));
    }
    return n;
}

std::size_t NodeSet::intersection_count(const NodeSet& other) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
        n += static_cast<std::size_t>(__builtin_popcountll(words_[i] & other.words_[i]));
    }
    return n;
}

NodeSet NodeSet::operator&(const NodeSet& other) const {
    NodeSet out = *this;
    for (std::size_t i = 0; i < words_.size(); ++i) {
        out.words_[i] &= other.words_[i];
    }
    return out;
}

NodeSet NodeSet::minus(const NodeSet& other) const {
    NodeSet out = *this;
    for (std::size_t i = 0; i < words_.size(); ++i) {
        out.words_[i] &= ~other.words_[i];
    }
    return out;
}

std::size_t NodeSet::next(std::size_t from) const {
    std::size_t w = from / 64;
    if (w >= words_.size()) {
        return npos;
    }
    std::uint64_t bits = words_[w] & (~std::uint64_t{0} << (from % 64));
    while (true) {
        if (bits != 0) {
            return w * 64 + static_cast<std::size_t>(__builtin_ctzll(bits));
        }
        if (++w >= words_.size()) {
            return npos;
        }
        bits = words_[w];
    }
}

CorrelationGraph::CorrelationGraph(std::vector<AgentId> agents, double epsilon)
    : agents_(std::move(agents)), epsilon_(epsilon) {
    if (!std::is_sorted(agents_.begin(), agents_.end())) {
        throw InvalidArgument("graph agents must be sorted by id");
    }
    adjacency_.assign(agents_.size(), NodeSet(agents_.size()));
}

std::optional<std::size_t> CorrelationGraph::index_of(AgentId id) const {
    const auto it = std::lower_bound(agents_.begin(), agents_.end(), id);
    if (it == agents_.end() || *it != id) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - agents_.begin());
}

void CorrelationGraph::add_edge(std::size_t i, std::size_t j, double weight) {
    if (i == j) {
        throw InvalidArgument("self-loops are not allowed");
    }
    if (adjacent(i, j)) {
        return;
    }
    adjacency_[i].insert(j);
    adjacency_[j].insert(i);
    edges_.push_back({std::min(i, j), std::max(i, j), weight});
}

CorrelationGraph build_epsilon_graph(const CorrelationMatrix& corr, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw InvalidArgument("epsilon must lie in [0, 1]");
    }
    CorrelationGraph g(corr.agents(), epsilon);
    for (std::size_t i = 0; i < corr.size(); ++i) {
        for (std::size_t j = i + 1; j < corr.size(); ++j) {
            const double w = corr(i, j) * corr(i, j);
            if (w <= epsilon) {
                g.add_edge(i, j, w);
            }
        }
    }
    g.set_excluded(corr.excluded());
    return g;
}

namespace {

using IndexClique = std::vector<std::size_t>;

class BronKerbosch {
public:
    // Only maximal cliques with at least min_size members are reported.
    BronKerbosch(const CorrelationGraph& g, const CliqueLimits& limits, std::size_t min_size = 1)
        : g_(g), limits_(limits), min_size_(min_size), started_(std::chrono::steady_clock::now()) {}

    std::vector<IndexClique> run(bool& truncated) {
        NodeSet p(g_.size());
        for (std::size_t i = 0; i < g_.size(); ++i) {
            p.insert(i);
        }
        NodeSet x(g_.size());
        IndexClique r;
        expand(r, p, x);
        truncated = stopped_;
        std::sort(out_.begin(), out_.end());
        return std::move(out_);
    }

private:
    bool should_stop() {
        if (stopped_) {
            return true;
        }
        if (out_.size() >= limits_.max_count) {
            stopped_ = true;
        } else if ((++calls_ & 1023U) == 0 &&
                   std::chrono::steady_clock::now() - started_ > limits_.time_budget) {
            stopped_ = true;
        }
        return stopped_;
    }

    void expand(IndexClique& r, NodeSet p, NodeSet x) {
        if (should_stop() || r.size() + p.count() < min_size_) {
            return;
        }
        if (p.empty()) {
            if (x.empty()) {
                out_.push_back(r);
                std::sort(out_.back().begin(), out_.back().end());
            }
            return;
        }
        // Tomita pivot: the vertex of P u X with most neighbours in P.
        std::size_t pivot = NodeSet::npos;
        std::size_t best = 0;
        const auto consider = [&](std::size_t u) {
            const std::size_t c = p.intersection_count(g_.neighbors(u));
            if (pivot == NodeSet::npos || c > best) {
                pivot = u;
                best = c;
            }
        };
        p.for_each(consider);
        x.for_each(consider);
        const NodeSet candidates = p.minus(g_.neighbors(pivot));
        for (std::size_t v = candidates.next(0); v != NodeSet::npos; v = candidates.next(v + 1)) {
            r.push_back(v);
            expand(r, p & g_.neighbors(v), x & g_.neighbors(v));
            r.pop_back();
            if (stopped_) {
                return;
            }
            p.erase(v);
            x.insert(v);
        }
    }

    const CorrelationGraph& g_;
    CliqueLimits limits_;
    std::size_t min_size_;
    std::chrono::steady_clock::time_point started_;
    std::vector<IndexClique> out_;
    std::size_t calls_ = 0;
    bool stopped_ = false;
};

Clique to_agents(const CorrelationGraph& g, const IndexClique& c) {
    Clique out;
    out.reserve(c.size());
    for (const auto i : c) {
        out.push_back(g.agent(i));
    }
    return out;
}

/// Greedy largest-first selection over a fixed list of maximal cliques.
/// The maximum cliques of G[R] are exactly the largest sets C & R, so one
/// enumeration serves every round.
std::vector<IndexClique> greedy_disjoint(const CorrelationGraph& g,
                                         const std::vector<IndexClique>& maximal,
                                         std::size_t k_min) {
    std::vector<char> remaining(g.size(), 1);
    std::vector<IndexClique> chosen;
    IndexClique best;
    IndexClique current;
    while (true) {
        best.clear();
        for (const auto& c : maximal) {
            if (c.size() < k_min || c.size() < best.size()) {
                continue;
            }
            current.clear();
            for (const auto v : c) {
                if (remaining[v]) {
                    current.push_back(v);
                }
            }
            if (current.size() > best.size() ||
                (current.size() == best.size() && !best.empty() && current < best)) {
                best = current;
            }
        }
        if (best.size() < k_min || best.empty()) {
            break;
        }
        for (const auto v : best) {
            remaining[v] = 0;
        }
        chosen.push_back(best);
    }
    return chosen;
}

}  // namespace

CliqueEnumeration maximal_cliques(const CorrelationGraph& g, const CliqueLimits& limits) {
    CliqueEnumeration result;
    const auto cliques = BronKerbosch(g, limits).run(result.truncated);
    result.cliques.reserve(cliques.size());
    for (const auto& c : cliques) {
        result.cliques.push_back(to_agents(g, c));
    }
    return result;
}

bool is_clique(const CorrelationGraph& g, std::span<const AgentId> members) {
    std::vector<std::size_t> idx;
    idx.reserve(members.size());
    for (const auto id : members) {
        const auto i = g.index_of(id);
        if (!i) {
            return false;
        }
        idx.push_back(*i);
    }
    for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
            if (!g.adjacent(idx[a], idx[b])) {
                return false;
            }
        }
    }
    return true;
}

CliqueSet disjoint_cliques(const CorrelationGraph& g, std::size_t k_min,
                           const CliqueLimits& limits) {
    if (k_min < 2) {
        throw InvalidArgument("k_min must be at least 2");
    }
    CliqueSet set;
    const auto maximal = BronKerbosch(g, limits, k_min).run(set.truncated);
    for (const auto& c : greedy_disjoint(g, maximal, k_min)) {
        set.cliques.push_back(to_agents(g, c));
    }
    return set;
}

namespace {

class ComponentBound {
public:
    ComponentBound(std::size_t n, std::size_t k) : parent_(n), size_(n, 1), k_(k) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    void join(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) {
            return;
        }
        bound_ -= size_[a] / k_ + size_[b] / k_;
        if (size_[a] < size_[b]) {
            std::swap(a, b);
        }
        parent_[b] = a;
        size_[a] += size_[b];
        bound_ += size_[a] / k_;
    }

    /// Upper bound on any family of disjoint cliques of size >= k.
    std::size_t bound() const noexcept { return bound_; }

private:
    std::size_t find(std::size_t a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }

    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
    std::size_t k_;
    std::size_t bound_ = 0;
};

// Every clique of size >= k lies inside one connected component of the
// (k-1)-core, so the core components bound the disjoint-clique count more
// tightly than the plain components once the graph has many sparse parts.
std::size_t core_bound(const CorrelationGraph& g, std::size_t k) {
    const std::size_t n = g.size();
    std::vector<std::size_t> degree(n);
    NodeSet alive(n);
    std::vector<std::size_t> peel;
    for (std::size_t v = 0; v < n; ++v) {
        degree[v] = g.neighbors(v).count();
        alive.insert(v);
        if (degree[v] + 1 < k) {
            peel.push_back(v);
        }
    }
    while (!peel.empty()) {
        const std::size_t v = peel.back();
        peel.pop_back();
        if (!alive.contains(v)) {
            continue;
        }
        alive.erase(v);
        (g.neighbors(v) & alive).for_each([&](std::size_t u) {
            if (degree[u]-- + 1 == k) {
                peel.push_back(u);
            }
        });
    }
    std::size_t bound = 0;
    NodeSet unseen = alive;
    std::vector<std::size_t> stack;
    for (std::size_t start = unseen.next(0); start != NodeSet::npos; start = unseen.next(start)) {
        std::size_t size = 0;
        unseen.erase(start);
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            ++size;
            (g.neighbors(v) & unseen).for_each([&](std::size_t u) {
                unseen.erase(u);
                stack.push_back(u);
            });
        }
        bound += size / k;
    }
    return bound;
}

// Whether `candidates` holds a clique of `need` vertices. A greedy colouring
// bounds the clique number from above and prunes most branches.
bool holds_clique(const CorrelationGraph& g, NodeSet candidates, std::size_t need) {
    if (need == 0) {
        return true;
    }
    while (candidates.count() >= need) {
        std::size_t colours = 0;
        NodeSet uncoloured = candidates;
        while (!uncoloured.empty() && colours < need) {
            NodeSet free = uncoloured;
            for (std::size_t v = free.next(0); v != NodeSet::npos; v = free.next(v + 1)) {
                uncoloured.erase(v);
                free = free.minus(g.neighbors(v));
            }
            ++colours;
        }
        if (colours < need) {
            return false;
        }
        const std::size_t v = candidates.next(0);
        candidates.erase(v);
        if (holds_clique(g, candidates & g.neighbors(v), need - 1)) {
            return true;
        }
    }
    return false;
}

// Replays the greedy selection of the last evaluated threshold. Step t picked
// a clique of size sizes[t] from the vertices in remaining[t]; the final entry
// of `remaining` is what was left over.
class GreedyTrace {
public:
    GreedyTrace(const CorrelationGraph& g, const CliqueSet& seeds, std::size_t k_min) {
        const std::size_t n = g.size();
        removed_at_.assign(n, seeds.cliques.size());
        NodeSet left(n);
        for (std::size_t v = 0; v < n; ++v) {
            left.insert(v);
        }
        for (std::size_t t = 0; t < seeds.cliques.size(); ++t) {
            remaining_.push_back(left);
            sizes_.push_back(seeds.cliques[t].size());
            for (const auto id : seeds.cliques[t]) {
                const std::size_t v = *g.index_of(id);
                removed_at_[v] = t;
                left.erase(v);
            }
        }
        remaining_.push_back(left);
        sizes_.push_back(k_min);
    }

    /// False when the new edge i-j lies in no clique that could displace a
    /// pick (same size or larger) or extend the selection.
    bool disturbed_by(const CorrelationGraph& g, std::size_t i, std::size_t j) const {
        const NodeSet common = g.neighbors(i) & g.neighbors(j);
        const std::size_t last = std::min(removed_at_[i], removed_at_[j]);
        for (std::size_t t = 0; t <= last; ++t) {
            if (holds_clique(g, common & remaining_[t], sizes_[t] - 2)) {
                return true;
            }
        }
        return false;
    }

private:
    std::vector<std::size_t> removed_at_;
    std::vector<NodeSet> remaining_;
    std::vector<std::size_t> sizes_;
};

}  // namespace

EpsilonStar epsilon_star(const CorrelationMatrix& corr, std::size_t n_coal, std::size_t k_min,
                         const CliqueLimits& limits) {
    if (n_coal < 1) {
        throw InvalidArgument("n_coal must be at least 1");
    }
    if (k_min < 2) {
        throw InvalidArgument("k_min must be at least 2");
    }
    const std::size_t n = corr.size();
    if (n_coal > n / k_min) {
        throw InfeasibleError(n / k_min, "cannot seed " + std::to_string(n_coal) +
                                             " disjoint cliques of size >= " +
                                             std::to_string(k_min) + " from " +
                                             std::to_string(n) + " agents (at most " +
                                             std::to_string(n / k_min) + ")");
    }

    struct Pair {
        double weight;
        std::size_t i;
        std::size_t j;
    };
    std::vector<Pair> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            pairs.push_back({corr(i, j) * corr(i, j), i, j});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        return std::tie(a.weight, a.i, a.j) < std::tie(b.weight, b.i, b.j);
    });

    EpsilonStar result;
    result.graph = CorrelationGraph(corr.agents(), 0.0);
    result.graph.set_excluded(corr.excluded());
    ComponentBound components(n, k_min);
    std::size_t best = 0;
    // Until an added edge closes a clique that could displace one of the last
    // greedy picks, the greedy answer stays the same and needs no rerun.
    std::optional<GreedyTrace> trace;
    bool changed = true;

    std::size_t p = 0;
    while (p < pairs.size()) {
        const double threshold = pairs[p].weight;
        for (; p < pairs.size() && pairs[p].weight == threshold; ++p) {
            const std::size_t i = pairs[p].i;
            const std::size_t j = pairs[p].j;
            result.graph.add_edge(i, j, pairs[p].weight);
            components.join(i, j);
            changed = changed || !trace || trace->disturbed_by(result.graph, i, j);
        }
        // The greedy count never exceeds the disjoint-clique capacity of the
        // connected components, so thresholds below it are skipped.
        if (!changed || components.bound() < n_coal || core_bound(result.graph, k_min) < n_coal) {
            continue;
        }
        ++result.thresholds_evaluated;
        auto seeds = disjoint_cliques(result.graph, k_min, limits);
        // A truncated enumeration is not a stable answer to reuse.
        changed = seeds.truncated;
        if (!changed) {
            trace.emplace(result.graph, seeds, k_min);
        }
        best = std::max(best, seeds.cliques.size());
        if (seeds.cliques.size() >= n_coal) {
            result.epsilon = threshold;
            result.graph.set_epsilon(threshold);
            result.seeds = std::move(seeds);
            return result;
        }
        // The greedy takes a maximum clique first and the clique number only
        // grows with epsilon, so once one omega-clique plus the rest split
        // into k_min blocks falls short, no larger threshold can succeed.
        const std::size_t omega = seeds.cliques.empty() ? 0 : seeds.cliques.front().size();
        if (omega > 0 && 1 + (n - omega) / k_min < n_coal) {
            break;
        }
    }
    throw InfeasibleError(best, "no threshold yields " + std::to_string(n_coal) +
                                    " disjoint cliques (best: " + std::to_string(best) + ")");
}

void write_edge_list(std::ostream& out, const CorrelationGraph& g) {
    for (const auto& e : g.edges()) {
        out << to_index(g.agent(e.i)) << ' ' << to_index(g.agent(e.j)) << ' '
            << csv::format_double(e.weight) << '\n';
    }
}

nlohmann::json to_json(const CliqueSet& set) {
    nlohmann::json cliques = nlohmann::json::array();
    for (const auto& c : set.cliques) {
        nlohmann::json members = nlohmann::json::array();
        for (const auto id : c) {
            members.push_back(to_index(id));
        }
        cliques.push_back(std::move(members));
    }
    return {{"disjoint", set.disjoint}, {"truncated", set.truncated}, {"cliques", cliques}};
}

}  // namespace vpp
