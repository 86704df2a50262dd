#include "vpp/formation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "vpp/errors.hpp"

namespace vpp {

namespace {

struct CandidateScore {
    ContractStats stats;
    bool valid = false;
    double utility = 0.0;
};

CandidateScore score_of(const ContractStats& s, std::size_t members, double p_min) {
    CandidateScore out{s, s.p_phi >= p_min, 0.0};
    if (out.valid) {
        out.utility = s.p_phi / static_cast<double>(members);
    }
    return out;
}

}  // namespace

GrowthResult grow_seed(std::span<const AgentId> seed, const CorrelationGraph& g,
                       const SeriesPanel& series, const GridRequirements& req, ContractMode mode,
                       const std::set<AgentId>& assigned) {
    if (seed.empty()) {
        throw InvalidArgument("cannot grow an empty seed");
    }
    if (!is_clique(g, seed)) {
        throw InvalidArgument("seed is not a clique of the graph");
    }
    std::vector<AgentId> members(seed.begin(), seed.end());
    std::sort(members.begin(), members.end());

    const std::size_t length = series.length();
    std::vector<double> agg(length, 0.0);
    for (const auto id : members) {
        const auto r = series.row(id);
        for (std::size_t k = 0; k < length; ++k) {
            agg[k] += r[k];
        }
    }

    NodeSet in_coalition(g.size());
    for (const auto id : members) {
        in_coalition.insert(*g.index_of(id));
    }

    CandidateScore current = score_of(contract_stats(agg, req.phi, mode), members.size(), req.p_min);
    GrowthResult result;
    result.p_phi_trajectory.push_back(current.stats.p_phi);
    result.utility_trajectory.push_back(current.utility);

    std::vector<std::size_t> candidates;
    std::vector<CandidateScore> scores;
    std::set<AgentId> considered;
    while (true) {
        NodeSet frontier(g.size());
        in_coalition.for_each([&](std::size_t m) {
            g.neighbors(m).for_each([&](std::size_t v) { frontier.insert(v); });
        });
        frontier = frontier.minus(in_coalition);
        candidates.clear();
        frontier.for_each([&](std::size_t v) {
            const AgentId id = g.agent(v);
            if (!assigned.contains(id) && series.index_of(id)) {
                candidates.push_back(v);
            }
        });
        if (candidates.empty()) {
            break;
        }
        for (const auto v : candidates) {
            considered.insert(g.agent(v));
        }

        scores.assign(candidates.size(), {});
        const std::size_t next_size = members.size() + 1;
#pragma omp parallel
        {
            std::vector<double> trial(length);
#pragma omp for schedule(dynamic)
            for (std::size_t c = 0; c < candidates.size(); ++c) {
                const auto r = series.row(g.agent(candidates[c]));
                for (std::size_t k = 0; k < length; ++k) {
                    trial[k] = agg[k] + r[k];
                }
                scores[c] = score_of(contract_stats(trial, req.phi, mode), next_size, req.p_min);
            }
        }

        // Candidates are in ascending id order, so a strict comparison keeps
        // the smallest id among equal scores.
        std::optional<std::size_t> best;
        double best_score = current.valid ? current.utility : current.stats.p_phi;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            double s = 0.0;
            if (current.valid) {
                if (!scores[c].valid) {
                    continue;
                }
                s = scores[c].utility;
            } else {
                s = scores[c].stats.p_phi;
            }
            if (s > best_score) {
                best_score = s;
                best = c;
            }
        }
        if (!best) {
            break;
        }
        const std::size_t v = candidates[*best];
        const auto r = series.row(g.agent(v));
        for (std::size_t k = 0; k < length; ++k) {
            agg[k] += r[k];
        }
        in_coalition.insert(v);
        members.insert(std::lower_bound(members.begin(), members.end(), g.agent(v)), g.agent(v));
        current = scores[*best];
        result.p_phi_trajectory.push_back(current.stats.p_phi);
        result.utility_trajectory.push_back(current.utility);
    }

    result.coalition = evaluate(members, series, req, mode);
    result.considered.assign(considered.begin(), considered.end());
    return result;
}

double need_score(std::span<const AgentId> members, AgentId agent, const SeriesPanel& series,
                  const GridRequirements& req, ContractMode mode, bool* used_fallback) {
    if (std::find(members.begin(), members.end(), agent) == members.end()) {
        throw InvalidArgument("agent " + to_string(agent) + " is not a member");
    }
    const Coalition whole = evaluate(members, series, req, mode);
    std::vector<AgentId> rest;
    rest.reserve(members.size());
    std::copy_if(members.begin(), members.end(), std::back_inserter(rest),
                 [agent](AgentId id) { return id != agent; });
    double rest_utility = 0.0;
    double rest_p_phi = 0.0;
    if (!rest.empty()) {
        const Coalition without = evaluate(rest, series, req, mode);
        rest_utility = without.utility;
        rest_p_phi = without.p_phi;
    }
    if (used_fallback) {
        *used_fallback = whole.utility <= 0.0;
    }
    if (whole.utility > 0.0) {
        return (whole.utility - rest_utility) / whole.utility;
    }
    return (whole.p_phi - rest_p_phi) / std::max(std::abs(whole.p_phi), 1.0);
}

namespace {

std::vector<AgentId> complement(std::span<const AgentId> pool,
                                const std::vector<Coalition>& coalitions,
                                std::span<const AgentId> excluded) {
    std::set<AgentId> taken(excluded.begin(), excluded.end());
    for (const auto& c : coalitions) {
        taken.insert(c.members.begin(), c.members.end());
    }
    std::vector<AgentId> out;
    for (const auto id : pool) {
        if (!taken.contains(id)) {
            out.push_back(id);
        }
    }
    return out;
}

}  // namespace

CoalitionStructure resolve_overlaps(std::vector<std::vector<AgentId>> candidates,
                                    const SeriesPanel& series, const GridRequirements& req,
                                    ContractMode mode) {
    for (auto& c : candidates) {
        std::sort(c.begin(), c.end());
        c.erase(std::unique(c.begin(), c.end()), c.end());
    }
    std::map<AgentId, std::size_t> occurrences;
    for (const auto& c : candidates) {
        for (const auto id : c) {
            ++occurrences[id];
        }
    }

    CoalitionStructure cs;
    cs.requirements = req;
    cs.mode = mode;
    for (const auto& [agent, count] : occurrences) {
        if (count < 2) {
            continue;
        }
        std::vector<std::size_t> holders;
        for (std::size_t s = 0; s < candidates.size(); ++s) {
            if (std::binary_search(candidates[s].begin(), candidates[s].end(), agent)) {
                holders.push_back(s);
            }
        }
        if (holders.size() < 2) {
            continue;
        }
        std::size_t keep = holders.front();
        double keep_tau = -std::numeric_limits<double>::infinity();
        for (const auto s : holders) {
            bool fallback = false;
            const double tau = need_score(candidates[s], agent, series, req, mode, &fallback);
            cs.zero_utility_tau_uses += fallback ? 1 : 0;
            const bool better =
                tau > keep_tau ||
                (tau == keep_tau && (candidates[s].size() < candidates[keep].size() ||
                                     (candidates[s].size() == candidates[keep].size() &&
                                      candidates[s] < candidates[keep])));
            if (better) {
                keep = s;
                keep_tau = tau;
            }
        }
        for (const auto s : holders) {
            if (s != keep) {
                auto& c = candidates[s];
                c.erase(std::lower_bound(c.begin(), c.end(), agent));
            }
        }
    }

    for (const auto& c : candidates) {
        if (!c.empty()) {
            cs.coalitions.push_back(evaluate(c, series, req, mode));
        }
    }
    cs.unassigned = complement(series.ids(), cs.coalitions, {});
    return cs;
}

PercolationFormer::PercolationFormer(const SeriesPanel& series, FormationOptions options)
    : series_(&series),
      options_(options),
      corr_(correlation_matrix_excluding_degenerate(series)) {}

const EpsilonStar& PercolationFormer::seeds(std::size_t n_coal) {
    auto& slot = seeds_[n_coal];
    if (!slot) {
        slot = std::make_unique<EpsilonStar>(
            epsilon_star(corr_, n_coal, options_.k_min, options_.limits));
    }
    return *slot;
}

CoalitionStructure PercolationFormer::form(const GridRequirements& req, ContractMode mode) {
    req.validate();
    const EpsilonStar& es = seeds(req.n_coal);
    const SeriesPanel& series = *series_;

    struct Seed {
        Clique members;
        Coalition eval;
    };
    std::vector<Seed> order;
    order.reserve(es.seeds.cliques.size());
    for (const auto& clique : es.seeds.cliques) {
        order.push_back({clique, evaluate(clique, series, req, mode)});
    }
    std::stable_sort(order.begin(), order.end(), [](const Seed& a, const Seed& b) {
        if (a.eval.utility != b.eval.utility) {
            return a.eval.utility > b.eval.utility;
        }
        if (a.eval.p_phi != b.eval.p_phi) {
            return a.eval.p_phi > b.eval.p_phi;
        }
        return a.members < b.members;
    });

    std::vector<GrowthResult> speculative;
    if (options_.schedule == GrowthSchedule::independent) {
        speculative.resize(order.size());
        const std::set<AgentId> none;
#pragma omp parallel for schedule(dynamic)
        for (std::size_t s = 0; s < order.size(); ++s) {
            speculative[s] = grow_seed(order[s].members, es.graph, series, req, mode, none);
        }
    }

    // A speculative growth is exact when it never scored an agent that an
    // earlier coalition took: the assignment only filters candidates.
    std::vector<std::vector<AgentId>> grown(order.size());
    std::set<AgentId> assigned;
    for (std::size_t s = 0; s < order.size(); ++s) {
        const bool reuse = !speculative.empty() &&
                           std::none_of(speculative[s].considered.begin(),
                                        speculative[s].considered.end(),
                                        [&](AgentId id) { return assigned.contains(id); });
        grown[s] = reuse ? speculative[s].coalition.members
                         : grow_seed(order[s].members, es.graph, series, req, mode, assigned)
                               .coalition.members;
        assigned.insert(grown[s].begin(), grown[s].end());
    }

    CoalitionStructure cs = resolve_overlaps(std::move(grown), series, req, mode);
    cs.provenance = Algorithm::percolation;
    cs.epsilon_star = es.epsilon;
    cs.degraded = es.seeds.truncated;
    cs.excluded = corr_.excluded();
    cs.unassigned = complement(series.ids(), cs.coalitions, cs.excluded);
    return cs;
}

CoalitionStructure form_coalitions(const SeriesPanel& series, const GridRequirements& req,
                                   ContractMode mode, const FormationOptions& options) {
    PercolationFormer former(series, options);
    return former.form(req, mode);
}

std::vector<std::vector<AgentId>> random_partition_members(std::span<const AgentId> pool,
                                                           std::size_t n_coal,
                                                           std::uint64_t seed) {
    const std::size_t n = pool.size();
    const std::size_t k = n_coal;
    if (k < 1 || n < k) {
        throw InvalidArgument("random partition needs 1 <= n_coal <= pool size");
    }
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    const auto log_add = [](double a, double b) {
        if (a == neg_inf) {
            return b;
        }
        if (b == neg_inf) {
            return a;
        }
        const double hi = std::max(a, b);
        return hi + std::log1p(std::exp(std::min(a, b) - hi));
    };
    // ways[m][j]: log of the number of assignments of m agents that cover
    // every block, given j blocks already used.
    std::vector<std::vector<double>> ways(n + 1, std::vector<double>(k + 1, neg_inf));
    ways[0][k] = 0.0;
    for (std::size_t m = 1; m <= n; ++m) {
        for (std::size_t j = 0; j <= k; ++j) {
            double v = neg_inf;
            if (j > 0 && ways[m - 1][j] != neg_inf) {
                v = std::log(static_cast<double>(j)) + ways[m - 1][j];
            }
            if (j < k && ways[m - 1][j + 1] != neg_inf) {
                v = log_add(v, std::log(static_cast<double>(k - j)) + ways[m - 1][j + 1]);
            }
            ways[m][j] = v;
        }
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::size_t> used;
    std::vector<std::size_t> unused(k);
    for (std::size_t b = 0; b < k; ++b) {
        unused[b] = b;
    }
    std::vector<std::vector<AgentId>> blocks(k);
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t m = n - t;
        const std::size_t j = used.size();
        double p_new = 0.0;
        if (j < k) {
            p_new = std::exp(std::log(static_cast<double>(k - j)) + ways[m - 1][j + 1] - ways[m][j]);
        }
        std::size_t label = 0;
        if (j == 0 || unit(rng) < p_new) {
            const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, unused.size() - 1)(rng);
            label = unused[pick];
            unused.erase(unused.begin() + static_cast<std::ptrdiff_t>(pick));
            used.push_back(label);
        } else {
            label = used[std::uniform_int_distribution<std::size_t>(0, used.size() - 1)(rng)];
        }
        blocks[label].push_back(pool[t]);
    }
    for (auto& b : blocks) {
        std::sort(b.begin(), b.end());
    }
    return blocks;
}

std::vector<std::vector<AgentId>> correlated_partition_members(std::span<const AgentId> pool,
                                                               const CorrelationMatrix& corr,
                                                               std::size_t n_coal) {
    const std::size_t n = pool.size();
    if (n_coal < 1 || n < n_coal) {
        throw InvalidArgument("correlated partition needs 1 <= n_coal <= pool size");
    }
    std::vector<std::optional<std::size_t>> corr_index(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& agents = corr.agents();
        const auto it = std::lower_bound(agents.begin(), agents.end(), pool[i]);
        if (it != agents.end() && *it == pool[i]) {
            corr_index[i] = static_cast<std::size_t>(it - agents.begin());
        }
    }
    // Pairwise sums of rho^2 between groups; group g is alive while active[g].
    std::vector<double> sum(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double w = 0.0;
            if (corr_index[i] && corr_index[j]) {
                const double r = corr(*corr_index[i], *corr_index[j]);
                w = r * r;
            }
            sum[i * n + j] = w;
            sum[j * n + i] = w;
        }
    }
    std::vector<std::vector<AgentId>> groups(n);
    for (std::size_t i = 0; i < n; ++i) {
        groups[i] = {pool[i]};
    }
    std::vector<char> active(n, 1);
    for (std::size_t remaining = n; remaining > n_coal; --remaining) {
        double best = -1.0;
        std::size_t ba = 0;
        std::size_t bb = 0;
        for (std::size_t a = 0; a < n; ++a) {
            if (!active[a]) {
                continue;
            }
            for (std::size_t b = a + 1; b < n; ++b) {
                if (!active[b]) {
                    continue;
                }
                const double avg = sum[a * n + b] /
                                   static_cast<double>(groups[a].size() * groups[b].size());
                if (avg > best) {
                    best = avg;
                    ba = a;
                    bb = b;
                }
            }
        }
        groups[ba].insert(groups[ba].end(), groups[bb].begin(), groups[bb].end());
        groups[bb].clear();
        active[bb] = 0;
        for (std::size_t c = 0; c < n; ++c) {
            if (active[c] && c != ba) {
                sum[ba * n + c] += sum[bb * n + c];
                sum[c * n + ba] = sum[ba * n + c];
            }
        }
    }
    std::vector<std::vector<AgentId>> out;
    for (std::size_t g = 0; g < n; ++g) {
        if (active[g]) {
            std::sort(groups[g].begin(), groups[g].end());
            out.push_back(std::move(groups[g]));
        }
    }
    return out;
}

std::vector<ContractStats> partition_stats(const std::vector<std::vector<AgentId>>& blocks,
                                           const SeriesPanel& series, double phi,
                                           ContractMode mode) {
    std::vector<ContractStats> out(blocks.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        out[b] = contract_stats(aggregate(blocks[b], series).values, phi, mode);
    }
    return out;
}

CoalitionStructure structure_from_stats(const std::vector<std::vector<AgentId>>& blocks,
                                        const std::vector<ContractStats>& stats,
                                        const SeriesPanel& series, const GridRequirements& req,
                                        ContractMode mode, Algorithm provenance) {
    CoalitionStructure cs;
    cs.requirements = req;
    cs.mode = mode;
    cs.provenance = provenance;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (!blocks[b].empty()) {
            cs.coalitions.push_back(make_coalition(blocks[b], stats[b], req.p_min));
        }
    }
    cs.unassigned = complement(series.ids(), cs.coalitions, {});
    return cs;
}

CoalitionStructure random_partition(const SeriesPanel& series, const GridRequirements& req,
                                    ContractMode mode, std::uint64_t seed) {
    req.validate();
    const auto blocks = random_partition_members(series.ids(), req.n_coal, seed);
    auto cs = structure_from_stats(blocks, partition_stats(blocks, series, req.phi, mode), series,
                                   req, mode, Algorithm::random);
    cs.seed = seed;
    return cs;
}

CoalitionStructure correlated_partition(const SeriesPanel& series, const GridRequirements& req,
                                        ContractMode mode) {
    req.validate();
    const auto corr = correlation_matrix_excluding_degenerate(series);
    const auto blocks = correlated_partition_members(series.ids(), corr, req.n_coal);
    return structure_from_stats(blocks, partition_stats(blocks, series, req.phi, mode), series,
                                req, mode, Algorithm::correlated);
}

}  // namespace vpp
