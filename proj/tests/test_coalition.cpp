#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "support.hpp"
#include "vpp/coalition.hpp"
#include "vpp/errors.hpp"

using namespace vpp;
using testing::ids;

namespace {

/// Values with population mean mu and std sigma exactly (up to rounding).
std::vector<double> standardized(std::size_t n, double mu, double sigma, std::uint64_t seed) {
    auto v = testing::normal_samples(n, 0.0, 1.0, seed);
    const auto s = stats(v);
    for (auto& x : v) {
        x = mu + sigma * (x - s.mean) / s.std_dev;
    }
    return v;
}

double fraction_at_or_below(const std::vector<double>& v, double c) {
    return static_cast<double>(std::count_if(v.begin(), v.end(), [c](double x) { return x <= c; })) /
           static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("shortfall probability: two sigma below the mean") {
    CHECK(shortfall_probability(100.0, 10.0, 80.0) ==
          doctest::Approx(0.022750131948179207).epsilon(1e-12));
    CHECK(shortfall_probability(100.0, 10.0, 100.0) == 0.5);
}

TEST_CASE("shortfall probability agrees with sampling (1e6 draws)") {
    const auto v = testing::normal_samples(1'000'000, 100.0, 10.0, 42);
    CHECK(std::abs(fraction_at_or_below(v, 80.0) - shortfall_probability(100.0, 10.0, 80.0)) <
          5e-4);
}

TEST_CASE("zero sigma is a step at the mean") {
    CHECK(shortfall_probability(5.0, 0.0, 4.0) == 0.0);
    CHECK(shortfall_probability(5.0, 0.0, 5.0) == 0.5);
    CHECK(shortfall_probability(5.0, 0.0, 6.0) == 1.0);
    CHECK(max_contract(5.0, 0.0, 0.1) == 5.0);
}

TEST_CASE("max contract examples") {
    CHECK(max_contract(100.0, 10.0, 0.022750131948179207) == doctest::Approx(80.0).epsilon(1e-12));
    CHECK(max_contract(100.0, 10.0, 0.5) == doctest::Approx(100.0).epsilon(1e-15));
    // One-sided 90% quantile of a standard normal.
    CHECK(max_contract(0.0, 1.0, 0.1) == doctest::Approx(-1.2815515655446004).epsilon(1e-13));
    CHECK_THROWS_AS(max_contract(1.0, 1.0, 0.0), BoundaryError);
    CHECK_THROWS_AS(max_contract(1.0, 1.0, 1.0), BoundaryError);
    CHECK_THROWS_AS(max_contract(1.0, 1.0, -0.2), BoundaryError);
}

TEST_CASE("max contract inverts the shortfall probability") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> mu(-1e5, 1e5);
    std::uniform_real_distribution<double> sigma(1.0, 1e4);
    std::uniform_real_distribution<double> phi(1e-6, 1.0 - 1e-6);
    for (int i = 0; i < 2000; ++i) {
        const double m = mu(rng);
        const double s = sigma(rng);
        const double p = phi(rng);
        CAPTURE(p);
        CHECK(shortfall_probability(m, s, max_contract(m, s, p)) == doctest::Approx(p).epsilon(1e-9));
    }
}

TEST_CASE("max contract is monotone in phi and sigma and translates with mu") {
    double prev = -INFINITY;
    for (double phi = 0.01; phi < 1.0; phi += 0.01) {
        const double c = max_contract(50.0, 7.0, phi);
        CHECK(c > prev);
        prev = c;
    }
    for (const double phi : {0.01, 0.1, 0.3}) {
        CHECK(max_contract(50.0, 8.0, phi) < max_contract(50.0, 7.0, phi));
    }
    for (const double phi : {0.6, 0.9}) {
        CHECK(max_contract(50.0, 8.0, phi) > max_contract(50.0, 7.0, phi));
    }
    for (const double shift : {-300.0, 0.5, 1e4}) {
        CHECK(max_contract(50.0 + shift, 7.0, 0.2) ==
              doctest::Approx(max_contract(50.0, 7.0, 0.2) + shift).epsilon(1e-12));
    }
}

TEST_CASE("empirical contract") {
    const std::vector<double> flat(50, 3.5);
    CHECK(empirical_max_contract(flat, 0.1) == 3.5);

    const std::vector<double> odd{5.0, -2.0, 9.0, 0.0, 1.0, 7.0, -4.0};
    CHECK(empirical_max_contract(odd, 0.5) == 1.0);  // median
    CHECK(empirical_max_contract(odd, 0.0) == -4.0);
    CHECK(empirical_max_contract(odd, 1.0) == 9.0);

    CHECK_THROWS_AS(empirical_max_contract(std::vector<double>(9, 1.0), 0.1), LengthError);
    CHECK_NOTHROW(empirical_max_contract(std::vector<double>(10, 1.0), 0.1));
    CHECK_THROWS_AS(empirical_max_contract(std::vector<double>{}, 0.0), LengthError);
    CHECK_THROWS_AS(empirical_max_contract(odd, 1.5), InvalidArgument);
}

TEST_CASE("empirical and analytic contracts agree on Gaussian data") {
    const auto v = testing::normal_samples(1'000'000, 100.0, 10.0, 8);
    for (const double phi : {0.05, 0.1, 0.25}) {
        CAPTURE(phi);
        CHECK(std::abs(empirical_max_contract(v, phi) - max_contract(100.0, 10.0, phi)) < 0.1);
    }
}

TEST_CASE("contract mode names") {
    CHECK(parse_contract_mode("analytic") == ContractMode::analytic);
    CHECK(parse_contract_mode(to_string(ContractMode::empirical)) == ContractMode::empirical);
    CHECK_THROWS(parse_contract_mode("gaussian"));
    CHECK(parse_algorithm(to_string(Algorithm::correlated)) == Algorithm::correlated);
}

TEST_CASE("evaluate: contract and per-member utility") {
    // Aggregate mean 100, std 10; three idle members dilute the utility.
    const auto series = testing::panel_of({standardized(999, 100.0, 10.0, 1),
                                           std::vector<double>(999, 0.0),
                                           std::vector<double>(999, 0.0),
                                           std::vector<double>(999, 0.0)});
    GridRequirements req{0.022750131948179207, 50.0, 1};
    const auto c = evaluate(ids({3, 1, 0, 2}), series, req, ContractMode::analytic);
    CHECK(c.members == ids({0, 1, 2, 3}));
    CHECK(c.mu == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(c.sigma == doctest::Approx(10.0).epsilon(1e-12));
    REQUIRE(c.valid);
    REQUIRE(c.contract);
    CHECK(*c.contract == doctest::Approx(80.0).epsilon(1e-10));
    CHECK(c.utility == doctest::Approx(20.0).epsilon(1e-10));

    req.p_min = 80.5;
    const auto rejected = evaluate(ids({0, 1, 2, 3}), series, req, ContractMode::analytic);
    CHECK_FALSE(rejected.valid);
    CHECK_FALSE(rejected.contract);
    CHECK(rejected.utility == 0.0);
    CHECK(rejected.p_phi == doctest::Approx(80.0).epsilon(1e-10));
}

TEST_CASE("evaluate: a contract exactly at the minimum is accepted") {
    const auto series = testing::panel_of({standardized(500, 40.0, 3.0, 2)});
    GridRequirements req{0.1, 0.0, 1};
    const double p = evaluate(ids({0}), series, req, ContractMode::analytic).p_phi;
    req.p_min = p;
    CHECK(evaluate(ids({0}), series, req, ContractMode::analytic).valid);
    req.p_min = std::nextafter(p, INFINITY);
    CHECK_FALSE(evaluate(ids({0}), series, req, ContractMode::analytic).valid);
}

TEST_CASE("evaluate: validity and utility are tied together") {
    const auto series = testing::factor_panel(8, 400, 0.5, 120.0, 5);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 200; ++i) {
        std::vector<AgentId> members;
        for (std::uint32_t a = 0; a < 8; ++a) {
            if (rng() % 2) {
                members.push_back(AgentId{a});
            }
        }
        if (members.empty()) {
            continue;
        }
        const GridRequirements req{0.05 + 0.4 * static_cast<double>(rng() % 100) / 100.0,
                                   static_cast<double>(rng() % 400), 1};
        for (const auto mode : {ContractMode::analytic, ContractMode::empirical}) {
            const auto c = evaluate(members, series, req, mode);
            CHECK(c.valid == (c.p_phi >= req.p_min));
            CHECK(c.contract.has_value() == c.valid);
            if (c.valid) {
                CHECK(c.utility * static_cast<double>(c.size()) ==
                      doctest::Approx(c.p_phi).epsilon(1e-12));
            } else {
                CHECK(c.utility == 0.0);
            }
        }
    }
    CHECK_THROWS_AS(evaluate(std::vector<AgentId>{}, series, {}, ContractMode::analytic),
                    InvalidArgument);
}

TEST_CASE("welfare and acceptance") {
    CoalitionStructure cs;
    for (int i = 0; i < 10; ++i) {
        const bool ok = i < 7;
        cs.coalitions.push_back(make_coalition(ids({static_cast<std::uint32_t>(i)}),
                                               {10.0, 1.0, ok ? 9.0 : 2.0}, 5.0));
    }
    CHECK(acceptance_percentage(cs) == doctest::Approx(0.7));
    CHECK(social_welfare(cs) == doctest::Approx(63.0));

    CoalitionStructure none;
    none.coalitions.push_back(make_coalition(ids({0, 1}), {1.0, 1.0, -0.3}, 0.0));
    CHECK(acceptance_percentage(none) == 0.0);
    CHECK(social_welfare(none) == 0.0);
    CHECK_THROWS_AS(acceptance_percentage(CoalitionStructure{}), InvalidArgument);
}

TEST_CASE("with no minimum and phi one half, positive means are always accepted") {
    const auto series = testing::factor_panel(12, 300, 0.3, 500.0, 17);
    CoalitionStructure cs;
    const GridRequirements req{0.5, 0.0, 4};
    for (std::uint32_t b = 0; b < 4; ++b) {
        cs.coalitions.push_back(
            evaluate(ids({3 * b, 3 * b + 1, 3 * b + 2}), series, req, ContractMode::analytic));
    }
    CHECK(acceptance_percentage(cs) == 1.0);
}

TEST_CASE("empirical reliability") {
    const auto train = testing::panel_of({testing::normal_samples(100'000, 50.0, 5.0, 1),
                                          testing::normal_samples(100'000, 30.0, 4.0, 2)});
    const GridRequirements req{0.1, 0.0, 1};
    const auto c = evaluate(ids({0, 1}), train, req, ContractMode::analytic);
    CHECK(std::abs(empirical_reliability(c, train) - 0.1) < 0.02);

    const auto held = testing::panel_of({testing::normal_samples(100'000, 50.0, 5.0, 11),
                                         testing::normal_samples(100'000, 30.0, 4.0, 12)});
    CHECK(std::abs(empirical_reliability(c, held) - 0.1) < 0.02);

    auto low = c;
    low.contract = -1e9;
    CHECK(empirical_reliability(low, held) == 0.0);
    auto high = c;
    high.contract = 1e9;
    CHECK(empirical_reliability(high, held) == 1.0);

    const auto partial = testing::panel_of({testing::normal_samples(100, 50.0, 5.0, 1)});
    CHECK_THROWS_AS(empirical_reliability(c, partial), DataQualityError);

    auto rejected = c;
    rejected.contract.reset();
    CHECK_THROWS_AS(empirical_reliability(rejected, held), InvalidArgument);
}

TEST_CASE("partition check") {
    CoalitionStructure cs;
    cs.coalitions.push_back(make_coalition(ids({0, 1}), {}, 0.0));
    cs.coalitions.push_back(make_coalition(ids({2}), {}, 0.0));
    cs.unassigned = ids({3});
    const auto pool = ids({0, 1, 2, 3});
    CHECK_NOTHROW(check_partition(cs, pool));

    auto overlap = cs;
    overlap.coalitions.push_back(make_coalition(ids({1, 3}), {}, 0.0));
    CHECK_THROWS_AS(check_partition(overlap, pool), std::logic_error);

    auto outside = cs;
    outside.coalitions[1].members = ids({9});
    CHECK_THROWS_AS(check_partition(outside, pool), std::logic_error);

    auto empty = cs;
    empty.coalitions[1].members.clear();
    CHECK_THROWS_AS(check_partition(empty, pool), std::logic_error);

    auto both = cs;
    both.unassigned = ids({2});
    CHECK_THROWS_AS(check_partition(both, pool), std::logic_error);
}

TEST_CASE("json export") {
    CoalitionStructure cs;
    cs.coalitions.push_back(make_coalition(ids({4, 2}), {100.0, 10.0, 80.0}, 50.0));
    cs.coalitions.push_back(make_coalition(ids({7}), {10.0, 1.0, 8.0}, 50.0));
    cs.requirements = {0.1, 50.0, 2};
    cs.epsilon_star = 0.25;
    const auto j = to_json(cs);
    REQUIRE(j["coalitions"].size() == 2);
    const auto& first = j["coalitions"][0];
    CHECK(first["members"] == nlohmann::json::array({2, 4}));
    CHECK(first["valid"] == true);
    CHECK(first["contract"].get<double>() == 80.0);
    CHECK(first["utility"].get<double>() == 40.0);
    CHECK(j["coalitions"][1]["contract"].is_null());
    CHECK(j["coalitions"][1]["valid"] == false);
    CHECK(j.dump() == nlohmann::json::parse(j.dump()).dump());
}
