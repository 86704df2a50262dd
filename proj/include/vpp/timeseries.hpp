#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vpp/calendar.hpp"

namespace vpp {

/// Prosumer identifier. Ordering on ids drives every deterministic tie-break.
enum class AgentId : std::uint32_t {};

constexpr std::uint32_t to_index(AgentId id) noexcept { return static_cast<std::uint32_t>(id); }
std::string to_string(AgentId id);

/// Hourly trace of available power in watts; negative when consumption wins.
struct TimeSeries {
    AgentId id{};
    Timestamp start{};
    std::vector<double> values;

    Timestamp end() const { return start + kHour * static_cast<long>(values.size()); }
};

/// Population mean and standard deviation.
struct SeriesStats {
    double mean = 0.0;
    double std_dev = 0.0;
    std::size_t length = 0;
};

/// Aligned hourly series for a set of agents, stored contiguously by agent.
/// Agents are kept sorted by id.
class SeriesPanel {
public:
    SeriesPanel() = default;
    SeriesPanel(Timestamp start, std::size_t length);

    Timestamp start() const noexcept { return start_; }
    std::size_t length() const noexcept { return length_; }
    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }

    const std::vector<AgentId>& ids() const noexcept { return ids_; }
    AgentId id(std::size_t idx) const { return ids_.at(idx); }
    std::optional<std::size_t> index_of(AgentId id) const;
    std::size_t require_index(AgentId id) const;

    std::span<const double> row(std::size_t idx) const {
        return {values_.data() + idx * length_, length_};
    }
    std::span<double> row(std::size_t idx) { return {values_.data() + idx * length_, length_}; }
    std::span<const double> row(AgentId id) const { return row(require_index(id)); }

    /// Inserts keeping id order. Throws on duplicate id or length mismatch.
    void add(AgentId id, std::span<const double> values);
    void add(const TimeSeries& series);

    TimeSeries series(std::size_t idx) const;

    /// Hours [first, first + count) of every agent.
    SeriesPanel slice(std::size_t first, std::size_t count) const;

    bool operator==(const SeriesPanel&) const = default;

private:
    Timestamp start_{};
    std::size_t length_ = 0;
    std::vector<AgentId> ids_;
    std::vector<double> values_;
};

SeriesStats stats(std::span<const double> values);
inline SeriesStats stats(const TimeSeries& s) { return stats(s.values); }

/// Pearson correlation clamped to [-1, 1]. Throws DegenerateSeriesError for a
/// zero-variance input (the agent id reported is 0 for anonymous spans).
double pearson(std::span<const double> a, std::span<const double> b);
double pearson(const TimeSeries& a, const TimeSeries& b);

/// Symmetric Pearson matrix over an agent ordering; unit diagonal.
class CorrelationMatrix {
public:
    CorrelationMatrix() = default;
    explicit CorrelationMatrix(std::vector<AgentId> agents);

    std::size_t size() const noexcept { return agents_.size(); }
    const std::vector<AgentId>& agents() const noexcept { return agents_; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * size() + j]; }
    void set(std::size_t i, std::size_t j, double rho);

    /// Agents dropped because their series had zero variance.
    const std::vector<AgentId>& excluded() const noexcept { return excluded_; }
    void set_excluded(std::vector<AgentId> ids) { excluded_ = std::move(ids); }

    bool operator==(const CorrelationMatrix&) const = default;

private:
    std::vector<AgentId> agents_;
    std::vector<double> values_;
    std::vector<AgentId> excluded_;
};

/// All pairwise correlations (OpenMP over rows). Throws DegenerateSeriesError
/// naming the first zero-variance agent.
CorrelationMatrix correlation_matrix(const SeriesPanel& panel);

/// Reference implementation: one `pearson` call per pair, single thread.
CorrelationMatrix correlation_matrix_serial(const SeriesPanel& panel);

/// Like `correlation_matrix`, but zero-variance agents are left out and
/// listed in `excluded()` instead of raising.
CorrelationMatrix correlation_matrix_excluding_degenerate(const SeriesPanel& panel);

/// Pointwise sum over members. Summation runs in ascending id order.
TimeSeries aggregate(std::span<const AgentId> members, const SeriesPanel& panel);

inline constexpr int kDefaultDeseasonalizeWindowDays = 30;

/// Removes daily and slow seasonal structure: for every hour of day, the
/// centered moving average over `window_days` days of that hour's values is
/// subtracted. Windows shrink at the edges.
TimeSeries deseasonalize(const TimeSeries& series, int window_days = kDefaultDeseasonalizeWindowDays);

}  // namespace vpp
