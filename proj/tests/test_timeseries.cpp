#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <omp.h>

#include "support.hpp"
#include "vpp/climate.hpp"
#include "vpp/errors.hpp"
#include "vpp/prosumer.hpp"
#include "vpp/timeseries.hpp"

using namespace vpp;
using testing::panel_of;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

TimeSeries series_of(std::vector<double> v) { return {AgentId{0}, testing::t0(), std::move(v)}; }

// Naive centered running mean per hour of day, written independently of the
// library: days d - w/2 .. d + w/2, clipped at both ends.
std::vector<double> naive_deseasonalize(const std::vector<double>& x, int window_days) {
    const long n = static_cast<long>(x.size());
    const long half = window_days / 2;
    std::vector<double> out(x.size());
    for (long k = 0; k < n; ++k) {
        double sum = 0.0;
        long count = 0;
        for (long off = -half; off <= half; ++off) {
            const long j = k + 24 * off;
            if (j >= 0 && j < n) {
                sum += x[static_cast<std::size_t>(j)];
                ++count;
            }
        }
        out[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(k)] - sum / count;
    }
    return out;
}

double rms(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s / static_cast<double>(v.size()));
}

double autocorrelation(const std::vector<double>& v, std::size_t lag) {
    const std::vector<double> a(v.begin(), v.end() - static_cast<long>(lag));
    const std::vector<double> b(v.begin() + static_cast<long>(lag), v.end());
    return pearson(a, b);
}

SeriesPanel simulated_agents(std::size_t count, int days, std::uint64_t seed) {
    SyntheticClimateParams p;
    p.width = 3;
    p.height = 3;
    p.start = testing::t0();
    p.duration = kDay * days;
    p.rng_seed = seed;
    RandomPoolSpec spec;
    spec.count = count;
    spec.master_seed = seed + 1;
    const auto pool = generate_random_pool(spec, 3, 3);
    return simulate_pool(pool, resample_hourly(generate_synthetic_climate(p)));
}

}  // namespace

TEST_CASE("stats: population mean and standard deviation") {
    const auto c = stats(std::vector<double>(10, 4.5));
    CHECK(c.mean == 4.5);
    CHECK(c.std_dev == 0.0);
    const auto two = stats(std::vector<double>{0.0, 2.0});
    CHECK(two.mean == 1.0);
    CHECK(two.std_dev == 1.0);
    CHECK(two.length == 2);
    const auto mc = stats(testing::normal_samples(100000, 5.0, 2.0, 42));
    CHECK(mc.mean == doctest::Approx(5.0).epsilon(0.03 / 5.0));
    CHECK(std::abs(mc.std_dev - 2.0) < 0.03);
}

TEST_CASE("stats round trip from the stored series") {
    const auto v = testing::normal_samples(1000, -3.0, 7.0, 8);
    const auto s = stats(v);
    CHECK(s.std_dev * s.std_dev == doctest::Approx(testing::variance(v)).epsilon(1e-12));
}

TEST_CASE("pearson examples") {
    const std::vector<double> a{1, 2, 3, 4};
    const std::vector<double> b{1, 2, 3, 5};
    CHECK(pearson(a, a) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pearson(a, std::vector<double>{-1, -2, -3, -4}) == doctest::Approx(-1.0).epsilon(1e-15));
    // By hand: deviations (-1.5,-0.5,0.5,1.5) and (-1.75,-0.75,0.25,2.25);
    // sum of products 6.5, sums of squares 5 and 8.75.
    const double oracle = 6.5 / std::sqrt(5.0 * 8.75);
    CHECK(pearson(a, b) == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(std::abs(pearson(a, b) - 0.9827) < 1e-4);
}

TEST_CASE("pearson symmetry and affine invariance") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto a = testing::normal_samples(200, 0.0, 1.0, seed);
        auto b = testing::normal_samples(200, 0.0, 1.0, seed + 1000);
        for (std::size_t k = 0; k < b.size(); ++k) {
            b[k] += 0.5 * a[k];
        }
        const double r = pearson(a, b);
        CHECK(pearson(b, a) == r);
        std::vector<double> scaled(a.size());
        std::vector<double> flipped(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            scaled[k] = 3.5 * a[k] + 17.0;
            flipped[k] = -0.25 * a[k] + 2.0;
        }
        CHECK(pearson(scaled, b) == doctest::Approx(r).epsilon(1e-12));
        CHECK(pearson(flipped, b) == doctest::Approx(-r).epsilon(1e-12));
    }
}

TEST_CASE("pearson errors") {
    CHECK_THROWS_AS(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
                    DegenerateSeriesError);
    CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), LengthError);
    TimeSeries flat{AgentId{7}, testing::t0(), {2.0, 2.0, 2.0}};
    TimeSeries ok{AgentId{3}, testing::t0(), {1.0, 2.0, 4.0}};
    try {
        pearson(ok, flat);
        FAIL("expected a degenerate-series error");
    } catch (const DegenerateSeriesError& e) {
        CHECK(e.agent() == 7);
    }
    ok.start += kHour;
    flat.values = {1.0, 3.0, 2.0};
    CHECK_THROWS_AS(pearson(ok, flat), DataQualityError);
}

TEST_CASE("correlation matrix structure") {
    const auto one = correlation_matrix(panel_of({{1.0, 2.0, 5.0}}));
    REQUIRE(one.size() == 1);
    CHECK(one(0, 0) == 1.0);

    const auto p = testing::factor_panel(12, 500, 0.7, 0.0, 3);
    const auto m = correlation_matrix(p);
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(m(i, i) == 1.0);
        for (std::size_t j = 0; j < m.size(); ++j) {
            CHECK(m(i, j) == m(j, i));
            CHECK(std::abs(m(i, j)) <= 1.0);
        }
    }
}

TEST_CASE("correlation matrix recovers mixing weights") {
    // a = z1, b = 0.6 z1 + 0.8 z2, c = 0.8 z1 - 0.6 z2 with unit-variance
    // independent z: rho_ab = 0.6, rho_ac = 0.8, rho_bc = 0.48 - 0.48 = 0.
    const std::size_t n = 10000;
    const auto z1 = testing::normal_samples(n, 0.0, 1.0, 1);
    const auto z2 = testing::normal_samples(n, 0.0, 1.0, 2);
    std::vector<double> a(n), b(n), c(n);
    for (std::size_t k = 0; k < n; ++k) {
        a[k] = z1[k];
        b[k] = 0.6 * z1[k] + 0.8 * z2[k];
        c[k] = 0.8 * z1[k] - 0.6 * z2[k];
    }
    const auto m = correlation_matrix(panel_of({a, b, c}));
    CHECK(std::abs(m(0, 1) - 0.6) < 0.02);
    CHECK(std::abs(m(0, 2) - 0.8) < 0.02);
    CHECK(std::abs(m(1, 2) - 0.0) < 0.02);
}

TEST_CASE("parallel correlation matrix matches the serial reference") {
    const auto p = testing::factor_panel(40, 3000, 0.5, 10.0, 11);
    const auto par = correlation_matrix(p);
    const auto ser = correlation_matrix_serial(p);
    REQUIRE(par.size() == ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
        for (std::size_t j = 0; j < par.size(); ++j) {
            REQUIRE(std::abs(par(i, j) - ser(i, j)) < 1e-12);
        }
    }
    // Each pair is reduced by a single thread, so the thread count cannot
    // change a single bit.
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto one = correlation_matrix(p);
    omp_set_num_threads(4);
    const auto four = correlation_matrix(p);
    omp_set_num_threads(saved);
    CHECK(one == four);
    CHECK(one == par);
}

TEST_CASE("degenerate agents") {
    std::vector<double> flat(50, 3.0);
    const auto p = panel_of({testing::normal_samples(50, 0, 1, 1), flat,
                             testing::normal_samples(50, 0, 1, 2)});
    try {
        correlation_matrix(p);
        FAIL("expected a degenerate-series error");
    } catch (const DegenerateSeriesError& e) {
        CHECK(e.agent() == 1);
    }
    CHECK_THROWS_AS(correlation_matrix_serial(p), DegenerateSeriesError);
    const auto m = correlation_matrix_excluding_degenerate(p);
    CHECK(m.size() == 2);
    CHECK(m.agents() == testing::ids({0, 2}));
    CHECK(m.excluded() == testing::ids({1}));
}

TEST_CASE("aggregate") {
    const std::vector<double> a{1.0, -2.0, 3.5};
    std::vector<double> minus_a;
    for (double x : a) {
        minus_a.push_back(-x);
    }
    const auto p = panel_of({a, minus_a, {0.5, 0.5, 0.5}});
    CHECK(aggregate(testing::ids({0}), p).values == a);
    CHECK(aggregate(testing::ids({1, 0}), p).values == std::vector<double>(3, 0.0));
    CHECK(aggregate(testing::ids({2, 0}), p).values == std::vector<double>{1.5, -1.5, 4.0});
    CHECK_THROWS_AS(aggregate(std::vector<AgentId>{}, p), InvalidArgument);
}

TEST_CASE("aggregate moments: means add, variance is the full covariance sum") {
    const auto p = testing::factor_panel(8, 5000, 0.8, 50.0, 21);
    const auto corr = correlation_matrix(p);
    std::vector<SeriesStats> st;
    for (std::size_t i = 0; i < p.size(); ++i) {
        st.push_back(stats(p.row(i)));
    }
    const auto members = p.ids();
    const auto agg = stats(aggregate(members, p));
    double mean_sum = 0.0;
    double var_sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        mean_sum += st[i].mean;
        for (std::size_t j = 0; j < p.size(); ++j) {
            var_sum += corr(i, j) * st[i].std_dev * st[j].std_dev;
        }
    }
    CHECK(agg.mean == doctest::Approx(mean_sum).epsilon(1e-12));
    CHECK(agg.std_dev * agg.std_dev == doctest::Approx(var_sum).epsilon(1e-9));
}

TEST_CASE("pair composition: the exact identity carries a factor 2 on the cross term") {
    // The pairwise composition sqrt(si^2 + sj^2 + rho si sj), read literally,
    // omits the factor 2; only the exact form matches the aggregate.
    const auto p = testing::factor_panel(2, 20000, 1.0, 0.0, 5);
    const double rho = pearson(p.row(0), p.row(1));
    const double si = stats(p.row(0)).std_dev;
    const double sj = stats(p.row(1)).std_dev;
    const double sigma = stats(aggregate(p.ids(), p)).std_dev;
    const double exact = std::sqrt(si * si + sj * sj + 2.0 * rho * si * sj);
    const double literal = std::sqrt(si * si + sj * sj + rho * si * sj);
    CHECK(sigma == doctest::Approx(exact).epsilon(1e-10));
    CHECK(std::abs(sigma - literal) > 0.05 * sigma);
}

TEST_CASE("deseasonalize: a pure daily cycle is removed") {
    std::vector<double> v(24 * 120);
    for (std::size_t k = 0; k < v.size(); ++k) {
        v[k] = 250.0 * std::sin(two_pi * static_cast<double>(k) / 24.0);
    }
    const auto out = deseasonalize(series_of(v), 30);
    for (std::size_t k = 0; k < out.values.size(); ++k) {
        REQUIRE(std::abs(out.values[k]) < 1e-6 * 250.0);
    }
}

TEST_CASE("deseasonalize matches a direct recomputation on white noise") {
    const auto v = testing::normal_samples(24 * 200, 0.0, 1.0, 77);
    const auto out = deseasonalize(series_of(v), 30).values;
    const auto oracle = naive_deseasonalize(v, 30);
    for (std::size_t k = 0; k < v.size(); ++k) {
        REQUIRE(out[k] == doctest::Approx(oracle[k]).epsilon(1e-12).scale(1.0));
    }
    // Subtracting a 31-day mean removes about 1/31 of the variance, never more
    // than the 1/window share (plus sampling slack).
    const double ratio = testing::variance(out) / testing::variance(v);
    CHECK(ratio <= 1.0);
    CHECK(ratio >= 1.0 - 1.0 / 30.0 - 0.01);
}

TEST_CASE("deseasonalize: seasonal signal plus noise leaves no daily autocorrelation") {
    const std::size_t n = 24 * 730;
    const auto noise = testing::normal_samples(n, 0.0, 1.0, 4);
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k);
        v[k] = 10.0 * std::sin(two_pi * t / 8766.0) + 5.0 * std::sin(two_pi * t / 24.0) + noise[k];
    }
    CHECK(std::abs(autocorrelation(v, 24)) > 0.5);
    const auto out = deseasonalize(series_of(v)).values;
    CHECK(std::abs(autocorrelation(out, 24)) < 0.1);
}

TEST_CASE("a second deseasonalize pass finds no hour-of-day structure left") {
    const auto p = simulated_agents(6, 365, 31);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto once = deseasonalize(p.series(i));
        const auto twice = deseasonalize(once);
        CAPTURE(i);
        for (int h = 0; h < 24; ++h) {
            double change = 0.0;
            int count = 0;
            for (std::size_t k = static_cast<std::size_t>(h); k < once.values.size(); k += 24) {
                change += once.values[k] - twice.values[k];
                ++count;
            }
            CHECK(std::abs(change / count) < 0.01 * rms(once.values));
        }
    }
}

// A running-mean filter is not a projection: the second pass subtracts the
// running mean of the residual, about 8% of its RMS on weather-driven series
// (1/sqrt(31) on white noise). The "< 1% RMS change" reading of idempotence
// therefore does not hold for this method; kept so a switch to a projection
// (e.g. harmonic regression) shows up as an unexpected pass.
TEST_CASE("second deseasonalize pass changes values by < 1% RMS" * doctest::should_fail()) {
    const auto p = simulated_agents(6, 365, 31);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto once = deseasonalize(p.series(i));
        const auto twice = deseasonalize(once);
        std::vector<double> diff(once.values.size());
        for (std::size_t k = 0; k < diff.size(); ++k) {
            diff[k] = twice.values[k] - once.values[k];
        }
        CHECK(rms(diff) < 0.01 * rms(once.values));
    }
}

TEST_CASE("deseasonalize rejects short series") {
    CHECK_THROWS_AS(deseasonalize(series_of(std::vector<double>(24 * 59, 1.0)), 30), LengthError);
    CHECK_NOTHROW(deseasonalize(series_of(std::vector<double>(24 * 60, 1.0)), 30));
}

TEST_CASE("series panel bookkeeping") {
    SeriesPanel p(testing::t0(), 3);
    p.add(AgentId{5}, std::vector<double>{1, 2, 3});
    p.add(AgentId{2}, std::vector<double>{4, 5, 6});
    CHECK(p.ids() == testing::ids({2, 5}));
    CHECK_THROWS(p.add(AgentId{5}, std::vector<double>{0, 0, 0}));
    CHECK_THROWS(p.add(AgentId{9}, std::vector<double>{0, 0}));
    const auto s = p.slice(1, 2);
    CHECK(s.start() == testing::t0() + kHour);
    CHECK(s.row(AgentId{5})[0] == 2.0);
    CHECK_FALSE(p.index_of(AgentId{3}).has_value());
}
