#pragma once

// Small builders shared by the unit tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "vpp/calendar.hpp"
#include "vpp/timeseries.hpp"

namespace vpp::testing {

inline Timestamp t0() { return parse_timestamp("2006-02-01T00:00"); }

inline AgentId aid(std::uint32_t i) { return AgentId{i}; }

inline std::vector<AgentId> ids(std::initializer_list<std::uint32_t> raw) {
    std::vector<AgentId> out;
    for (auto i : raw) {
        out.push_back(AgentId{i});
    }
    return out;
}

/// Agents 0..n-1, one row each.
inline SeriesPanel panel_of(const std::vector<std::vector<double>>& rows) {
    SeriesPanel p(t0(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        p.add(AgentId{static_cast<std::uint32_t>(i)}, rows[i]);
    }
    return p;
}

inline std::vector<double> normal_samples(std::size_t n, double mu, double sigma,
                                          std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(mu, sigma);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = d(rng);
    }
    return v;
}

/// n Gaussian series sharing one common factor with loading w (so pairwise
/// rho is about w^2 / (w^2 + 1)), mean mu, length len.
inline SeriesPanel factor_panel(std::size_t n, std::size_t len, double w, double mu,
                                std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> common(len);
    for (auto& c : common) {
        c = z(rng);
    }
    std::vector<std::vector<double>> rows(n, std::vector<double>(len));
    for (auto& r : rows) {
        for (std::size_t t = 0; t < len; ++t) {
            r[t] = mu + 100.0 * (w * common[t] + z(rng));
        }
    }
    return panel_of(rows);
}

inline double variance(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) {
        m += x;
    }
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) {
        s += (x - m) * (x - m);
    }
    return s / static_cast<double>(v.size());
}

}  // namespace vpp::testing
