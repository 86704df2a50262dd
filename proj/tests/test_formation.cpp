#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "support.hpp"
#include "vpp/errors.hpp"
#include "vpp/formation.hpp"

using namespace vpp;
using testing::ids;

namespace {

CorrelationGraph complete_graph(std::size_t n) {
    std::vector<AgentId> agents;
    for (std::uint32_t i = 0; i < n; ++i) {
        agents.push_back(AgentId{i});
    }
    CorrelationGraph g(agents, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            g.add_edge(i, j, 0.0);
        }
    }
    return g;
}

std::vector<double> sine(std::size_t len, double mu, double amp) {
    std::vector<double> v(len);
    for (std::size_t t = 0; t < len; ++t) {
        v[t] = mu + amp * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 24.0);
    }
    return v;
}

/// Heterogeneous agents: each loads (with either sign) on one of two common
/// factors, so there are both correlated and hedging pairs.
SeriesPanel mixed_panel(std::size_t n, std::size_t len, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> factors(2, std::vector<double>(len));
    for (auto& f : factors) {
        for (auto& x : f) {
            x = z(rng);
        }
    }
    std::vector<std::vector<double>> rows(n, std::vector<double>(len));
    for (auto& r : rows) {
        const auto& f = factors[rng() % 2];
        const double w = (u(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + 1.5 * u(rng));
        const double mu = 50.0 + 100.0 * u(rng);
        const double scale = 10.0 + 30.0 * u(rng);
        for (std::size_t t = 0; t < len; ++t) {
            r[t] = mu + scale * (w * f[t] + 0.5 * z(rng));
        }
    }
    return testing::panel_of(rows);
}

double utility_of(const std::vector<AgentId>& members, const SeriesPanel& s,
                  const GridRequirements& req) {
    return evaluate(members, s, req, ContractMode::analytic).utility;
}

double mean_within_rho2(const std::vector<std::vector<AgentId>>& blocks,
                        const CorrelationMatrix& corr) {
    double sum = 0.0;
    std::size_t pairs = 0;
    for (const auto& b : blocks) {
        for (std::size_t i = 0; i < b.size(); ++i) {
            for (std::size_t j = i + 1; j < b.size(); ++j) {
                const double r = corr(to_index(b[i]), to_index(b[j]));
                sum += r * r;
                ++pairs;
            }
        }
    }
    return pairs == 0 ? 0.0 : sum / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("grow_seed stops at a local maximum") {
    // Agent 2 is pure noise around zero: it only dilutes the utility.
    const auto s = testing::panel_of({sine(240, 100.0, 5.0), sine(240, 100.0, -5.0),
                                      testing::normal_samples(240, 0.0, 1.0, 3)});
    const GridRequirements req{0.1, 0.0, 1};
    const auto r = grow_seed(ids({0, 1}), complete_graph(3), s, req, ContractMode::analytic, {});
    CHECK(r.coalition.members == ids({0, 1}));
    CHECK(r.p_phi_trajectory.size() == 1);
    CHECK(r.considered == ids({2}));
}

TEST_CASE("grow_seed adds an anticorrelated partner") {
    const auto s = testing::panel_of({sine(240, 100.0, 10.0), sine(240, 100.0, -10.0)});
    const GridRequirements req{0.1, 0.0, 1};
    const auto r = grow_seed(ids({0}), complete_graph(2), s, req, ContractMode::analytic, {});
    CHECK(r.coalition.members == ids({0, 1}));
    // The pair is a flat 200: the whole mean is contracted.
    CHECK(r.coalition.p_phi == doctest::Approx(200.0).epsilon(1e-9));
    CHECK(r.coalition.utility == doctest::Approx(100.0).epsilon(1e-9));
    REQUIRE(r.utility_trajectory.size() == 2);
    CHECK(r.utility_trajectory[0] < r.utility_trajectory[1]);
}

TEST_CASE("grow_seed respects adjacency and assignments") {
    const auto s = testing::panel_of({sine(240, 100.0, 10.0), sine(240, 100.0, -10.0),
                                      sine(240, 100.0, -10.0)});
    const GridRequirements req{0.1, 0.0, 1};
    CorrelationGraph g(ids({0, 1, 2}), 1.0);
    g.add_edge(1, 2, 0.0);
    // 0 has no neighbour, so nothing is a candidate.
    auto r = grow_seed(ids({0}), g, s, req, ContractMode::analytic, {});
    CHECK(r.coalition.members == ids({0}));
    CHECK(r.considered.empty());

    const auto full = complete_graph(3);
    r = grow_seed(ids({0}), full, s, req, ContractMode::analytic, {AgentId{1}});
    CHECK(r.coalition.members == ids({0, 2}));
    // Equal candidates: the smallest id wins.
    r = grow_seed(ids({0}), full, s, req, ContractMode::analytic, {});
    CHECK(r.coalition.members.front() == AgentId{0});
    CHECK(r.coalition.members[1] == AgentId{1});

    CHECK_THROWS_AS(grow_seed(ids({0, 1}), g, s, req, ContractMode::analytic, {}),
                    InvalidArgument);
    CHECK_THROWS_AS(grow_seed(std::vector<AgentId>{}, g, s, req, ContractMode::analytic, {}),
                    InvalidArgument);
}

TEST_CASE("grow_seed keeps its seed and improves strictly at every step") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto s = mixed_panel(10, 300, seed);
        const auto corr = correlation_matrix(s);
        const auto g = build_epsilon_graph(corr, 0.3);
        const GridRequirements req{0.1, static_cast<double>(seed % 3) * 150.0, 1};
        for (std::size_t i = 0; i < g.size(); ++i) {
            const std::vector<AgentId> start{g.agent(i)};
            const auto r = grow_seed(start, g, s, req, ContractMode::analytic, {});
            CHECK(std::binary_search(r.coalition.members.begin(), r.coalition.members.end(),
                                     start.front()));
            CHECK(r.p_phi_trajectory.size() == r.coalition.size());
            for (std::size_t k = 1; k < r.p_phi_trajectory.size(); ++k) {
                const bool was_valid = r.p_phi_trajectory[k - 1] >= req.p_min;
                if (was_valid) {
                    CHECK(r.utility_trajectory[k] > r.utility_trajectory[k - 1]);
                } else {
                    CHECK(r.p_phi_trajectory[k] > r.p_phi_trajectory[k - 1]);
                }
            }
            CHECK(r.p_phi_trajectory.back() ==
                  doctest::Approx(r.coalition.p_phi).epsilon(1e-12));
        }
    }
}

TEST_CASE("need score range") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = mixed_panel(6, 300, 100 + seed);
        const GridRequirements req{0.1, 100.0, 1};
        const auto members = ids({0, 1, 2, 3, 4, 5});
        const double whole = utility_of(members, s, req);
        if (whole <= 0.0) {
            continue;
        }
        for (const auto agent : members) {
            std::vector<AgentId> rest;
            for (const auto m : members) {
                if (m != agent) {
                    rest.push_back(m);
                }
            }
            bool fallback = true;
            const double tau = need_score(members, agent, s, req, ContractMode::analytic, &fallback);
            CHECK_FALSE(fallback);
            CHECK(tau <= 1.0);
            const double without = utility_of(rest, s, req);
            CHECK(tau == doctest::Approx(1.0 - without / whole).epsilon(1e-12));
            CHECK((tau == 1.0) == (without == 0.0));
        }
    }
}

TEST_CASE("need score is one when removal invalidates the coalition") {
    const auto s = testing::panel_of({sine(240, 100.0, 10.0), sine(240, 100.0, -10.0)});
    const GridRequirements req{0.1, 150.0, 1};
    bool fallback = true;
    CHECK(need_score(ids({0, 1}), AgentId{1}, s, req, ContractMode::analytic, &fallback) == 1.0);
    CHECK_FALSE(fallback);
    CHECK_THROWS_AS(need_score(ids({0}), AgentId{1}, s, req, ContractMode::analytic),
                    InvalidArgument);
}

TEST_CASE("need score falls back to the contract loss for worthless coalitions") {
    const auto s = testing::panel_of({sine(240, 100.0, 10.0), sine(240, 100.0, -10.0)});
    const GridRequirements req{0.1, 1e6, 1};
    bool fallback = false;
    const double tau = need_score(ids({0, 1}), AgentId{1}, s, req, ContractMode::analytic, &fallback);
    CHECK(fallback);
    const double whole = evaluate(ids({0, 1}), s, req, ContractMode::analytic).p_phi;
    const double rest = evaluate(ids({0}), s, req, ContractMode::analytic).p_phi;
    CHECK(tau == doctest::Approx((whole - rest) / whole).epsilon(1e-12));
}

TEST_CASE("resolve_overlaps leaves disjoint candidates alone") {
    const auto s = mixed_panel(8, 200, 4);
    const GridRequirements req{0.1, 0.0, 3};
    const std::vector<std::vector<AgentId>> candidates{ids({2, 0}), ids({1, 5, 6}), ids({3})};
    const auto cs = resolve_overlaps(candidates, s, req, ContractMode::analytic);
    REQUIRE(cs.coalitions.size() == 3);
    CHECK(cs.coalitions[0].members == ids({0, 2}));
    CHECK(cs.coalitions[1].members == ids({1, 5, 6}));
    CHECK(cs.unassigned == ids({4, 7}));
    CHECK(cs.zero_utility_tau_uses == 0);
}

TEST_CASE("a shared agent stays where it is needed most") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto s = mixed_panel(5, 300, 200 + seed);
        const GridRequirements req{0.1, 0.0, 2};
        const auto a = ids({0, 1, 2});
        const auto b = ids({2, 3, 4});
        const auto cs = resolve_overlaps({a, b}, s, req, ContractMode::analytic);
        // Oracle: relative utility loss computed directly from evaluate.
        const auto loss = [&](const std::vector<AgentId>& whole, const std::vector<AgentId>& rest) {
            const double u = utility_of(whole, s, req);
            return u > 0.0 ? (u - utility_of(rest, s, req)) / u : -1.0;
        };
        const double tau_a = loss(a, ids({0, 1}));
        const double tau_b = loss(b, ids({3, 4}));
        if (tau_a < 0.0 || tau_b < 0.0 || tau_a == tau_b) {
            continue;
        }
        REQUIRE(cs.coalitions.size() == 2);
        CAPTURE(seed);
        if (tau_a > tau_b) {
            CHECK(cs.coalitions[0].members == a);
            CHECK(cs.coalitions[1].members == ids({3, 4}));
        } else {
            CHECK(cs.coalitions[0].members == ids({0, 1}));
            CHECK(cs.coalitions[1].members == b);
        }
    }
}

TEST_CASE("resolve_overlaps always returns a partition") {
    std::mt19937_64 rng(77);
    for (int round = 0; round < 50; ++round) {
        const auto s = mixed_panel(12, 200, 300 + round);
        std::vector<std::vector<AgentId>> candidates(4);
        for (auto& c : candidates) {
            for (std::uint32_t a = 0; a < 12; ++a) {
                if (rng() % 3 == 0) {
                    c.push_back(AgentId{a});
                }
            }
            if (c.empty()) {
                c.push_back(AgentId{static_cast<std::uint32_t>(rng() % 12)});
            }
        }
        const GridRequirements req{0.1, static_cast<double>(rng() % 300), 4};
        const auto cs = resolve_overlaps(candidates, s, req, ContractMode::analytic);
        CHECK_NOTHROW(check_partition(cs, s.ids()));
        std::size_t covered = cs.unassigned.size();
        for (const auto& c : cs.coalitions) {
            covered += c.size();
        }
        CHECK(covered == 12);
    }
}

TEST_CASE("form_coalitions pairs an anticorrelated couple") {
    auto rows = std::vector<std::vector<double>>{sine(480, 100.0, 10.0), sine(480, 100.0, -10.0)};
    const auto noise = testing::normal_samples(480, 0.0, 1.0, 1);
    for (std::size_t t = 0; t < 480; ++t) {
        rows[0][t] += noise[t];
    }
    const auto s = testing::panel_of(rows);
    const auto cs = form_coalitions(s, {0.1, 0.0, 1}, ContractMode::analytic);
    REQUIRE(cs.coalitions.size() == 1);
    CHECK(cs.coalitions[0].members == ids({0, 1}));
    CHECK(cs.coalitions[0].valid);
    REQUIRE(cs.epsilon_star);
    CHECK(*cs.epsilon_star > 0.9);
}

TEST_CASE("form_coalitions with an unreachable minimum") {
    const auto s = mixed_panel(10, 300, 5);
    const auto cs = form_coalitions(s, {0.1, 1e9, 3}, ContractMode::analytic);
    CHECK_NOTHROW(check_partition(cs, s.ids()));
    CHECK(cs.coalitions.size() >= 3);
    CHECK(social_welfare(cs) == 0.0);
    CHECK(acceptance_percentage(cs) == 0.0);
}

TEST_CASE("form_coalitions is deterministic and both schedules agree") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = mixed_panel(40, 300, 400 + seed);
        const GridRequirements req{0.1, static_cast<double>(seed) * 60.0, 4};
        FormationOptions seq;
        seq.k_min = 2;
        FormationOptions par = seq;
        par.schedule = GrowthSchedule::independent;
        const auto a = form_coalitions(s, req, ContractMode::analytic, seq);
        const auto b = form_coalitions(s, req, ContractMode::analytic, seq);
        const auto c = form_coalitions(s, req, ContractMode::analytic, par);
        CHECK(to_json(a) == to_json(b));
        CHECK(to_json(a) == to_json(c));
        CHECK_NOTHROW(check_partition(a, s.ids()));
    }
}

TEST_CASE("zero-variance agents are excluded from percolation") {
    auto s = mixed_panel(8, 200, 6);
    s.add(AgentId{20}, std::vector<double>(200, 5.0));
    const auto cs = form_coalitions(s, {0.1, 0.0, 2}, ContractMode::analytic);
    CHECK(cs.excluded == ids({20}));
    for (const auto& c : cs.coalitions) {
        CHECK_FALSE(std::binary_search(c.members.begin(), c.members.end(), AgentId{20}));
    }
    CHECK(std::find(cs.unassigned.begin(), cs.unassigned.end(), AgentId{20}) ==
          cs.unassigned.end());
}

TEST_CASE("random partition extremes") {
    const auto pool = ids({4, 8, 15, 16, 23, 42});
    const auto singles = random_partition_members(pool, 6, 1);
    std::vector<AgentId> flat;
    for (const auto& b : singles) {
        REQUIRE(b.size() == 1);
        flat.push_back(b.front());
    }
    std::sort(flat.begin(), flat.end());
    CHECK(flat == pool);
    const auto grand = random_partition_members(pool, 1, 1);
    REQUIRE(grand.size() == 1);
    CHECK(grand.front() == pool);
    CHECK_THROWS_AS(random_partition_members(pool, 7, 1), InvalidArgument);
    CHECK_THROWS_AS(random_partition_members(pool, 0, 1), InvalidArgument);
}

TEST_CASE("random partition is uniform over surjective labelings") {
    // 4 agents onto 2 labelled blocks: 2^4 - 2 = 14 equally likely outcomes.
    const auto pool = ids({0, 1, 2, 3});
    std::map<std::vector<std::vector<AgentId>>, int> counts;
    const int draws = 140'000;
    for (int d = 0; d < draws; ++d) {
        const auto p = random_partition_members(pool, 2, static_cast<std::uint64_t>(d));
        REQUIRE_FALSE(p[0].empty());
        REQUIRE_FALSE(p[1].empty());
        ++counts[p];
    }
    CHECK(counts.size() == 14);
    for (const auto& [labeling, n] : counts) {
        CHECK(std::abs(static_cast<double>(n) / draws - 1.0 / 14.0) < 0.004);
    }
}

TEST_CASE("random partition block sizes average out (200 agents, 10 blocks)") {
    std::vector<AgentId> pool;
    for (std::uint32_t i = 0; i < 200; ++i) {
        pool.push_back(AgentId{i});
    }
    double first_block = 0.0;
    const int draws = 10'000;
    for (int d = 0; d < draws; ++d) {
        const auto p = random_partition_members(pool, 10, static_cast<std::uint64_t>(d));
        REQUIRE(p.size() == 10);
        first_block += static_cast<double>(p[0].size());
    }
    CHECK(first_block / draws == doctest::Approx(20.0).epsilon(0.025));
}

TEST_CASE("correlated partition merges the most correlated groups first") {
    CorrelationMatrix corr(ids({0, 1, 2, 3}));
    corr.set(0, 1, 0.9);
    corr.set(2, 3, 0.5);
    corr.set(0, 2, 0.1);
    corr.set(0, 3, 0.1);
    corr.set(1, 2, 0.1);
    corr.set(1, 3, 0.1);
    const auto pool = ids({0, 1, 2, 3});
    CHECK(correlated_partition_members(pool, corr, 3) ==
          std::vector<std::vector<AgentId>>{ids({0, 1}), ids({2}), ids({3})});
    CHECK(correlated_partition_members(pool, corr, 2) ==
          std::vector<std::vector<AgentId>>{ids({0, 1}), ids({2, 3})});
    // An agent missing from the matrix is joined last.
    CHECK(correlated_partition_members(ids({0, 1, 2, 3, 9}), corr, 2) ==
          std::vector<std::vector<AgentId>>{ids({0, 1, 2, 3}), ids({9})});
}

TEST_CASE("correlated partition recovers factor groups") {
    const auto a = testing::factor_panel(5, 2000, 2.0, 0.0, 1);
    const auto b = testing::factor_panel(5, 2000, 2.0, 0.0, 2);
    SeriesPanel s(a.start(), a.length());
    for (std::uint32_t i = 0; i < 5; ++i) {
        s.add(AgentId{2 * i}, a.row(i));
        s.add(AgentId{2 * i + 1}, b.row(i));
    }
    const auto blocks = correlated_partition_members(s.ids(), correlation_matrix(s), 2);
    CHECK(blocks == std::vector<std::vector<AgentId>>{ids({0, 2, 4, 6, 8}), ids({1, 3, 5, 7, 9})});
}

TEST_CASE("correlated blocks are more correlated than random ones (20 seeds)") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = mixed_panel(30, 300, 500 + seed);
        const auto corr = correlation_matrix(s);
        const double grouped = mean_within_rho2(correlated_partition_members(s.ids(), corr, 5), corr);
        const double drawn = mean_within_rho2(random_partition_members(s.ids(), 5, seed), corr);
        CAPTURE(seed);
        CHECK(grouped >= drawn);
    }
}

// Known not to hold. With 10 agents in 3 blocks, 1000 draws cover a large
// share of the ~9330 partitions, so the best draw is close to the optimum.
// Utility divides by |s| and percolation never forms singletons or assigns
// everyone, so it typically reaches 60-80% of that optimum (1 win in 30 here,
// 0 of 20 on simulated prosumer pools). Kept as an expected failure so the
// claim stays checked.
TEST_CASE("percolation usually beats the best of 1000 random partitions (n = 10)" *
          doctest::should_fail()) {
    // Statistical: the greedy is a heuristic, so only a majority is required.
    // Draws where no threshold gives 3 disjoint seeds are skipped.
    const int instances = 30;
    int used = 0;
    int wins = 0;
    for (std::uint64_t draw = 900; used < instances; ++draw) {
        const auto s = mixed_panel(10, 400, draw);
        const GridRequirements req{0.1, 0.0, 3};
        CoalitionStructure cs;
        try {
            cs = form_coalitions(s, req, ContractMode::analytic);
        } catch (const InfeasibleError&) {
            continue;
        }
        ++used;
        double best = 0.0;
        for (std::uint64_t d = 0; d < 1000; ++d) {
            const auto blocks = random_partition_members(s.ids(), req.n_coal, d);
            const auto st = partition_stats(blocks, s, req.phi, ContractMode::analytic);
            best = std::max(best, social_welfare(structure_from_stats(
                                      blocks, st, s, req, ContractMode::analytic,
                                      Algorithm::random)));
        }
        wins += social_welfare(cs) >= best ? 1 : 0;
    }
    MESSAGE("percolation won " << wins << " of " << instances);
    CHECK(wins >= (instances * 8 + 9) / 10);
}
