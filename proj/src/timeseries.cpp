#include "vpp/timeseries.hpp"

#include <algorithm>
#include <cmath>

#include "vpp/errors.hpp"

namespace vpp {

std::string to_string(AgentId id) { return std::to_string(to_index(id)); }

SeriesPanel::SeriesPanel(Timestamp start, std::size_t length) : start_(start), length_(length) {}

std::optional<std::size_t> SeriesPanel::index_of(AgentId id) const {
    const auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - ids_.begin());
}

std::size_t SeriesPanel::require_index(AgentId id) const {
    const auto idx = index_of(id);
    if (!idx) {
        throw DataQualityError("no series for agent " + to_string(id));
    }
    return *idx;
}

void SeriesPanel::add(AgentId id, std::span<const double> values) {
    if (values.size() != length_) {
        throw DataQualityError("series of agent " + to_string(id) + " has length " +
                               std::to_string(values.size()) + ", expected " +
                               std::to_string(length_));
    }
    const auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it != ids_.end() && *it == id) {
        throw InvalidArgument("duplicate agent id " + to_string(id));
    }
    const auto pos = static_cast<std::size_t>(it - ids_.begin());
    ids_.insert(it, id);
    values_.insert(values_.begin() + static_cast<std::ptrdiff_t>(pos * length_), values.begin(),
                   values.end());
}

void SeriesPanel::add(const TimeSeries& series) {
    if (!ids_.empty() && series.start != start_) {
        throw DataQualityError("series of agent " + to_string(series.id) +
                               " starts at a different time");
    }
    if (ids_.empty()) {
        start_ = series.start;
        if (length_ == 0) {
            length_ = series.values.size();
        }
    }
    add(series.id, series.values);
}

TimeSeries SeriesPanel::series(std::size_t idx) const {
    const auto r = row(idx);
    return TimeSeries{ids_.at(idx), start_, std::vector<double>(r.begin(), r.end())};
}

SeriesPanel SeriesPanel::slice(std::size_t first, std::size_t count) const {
    if (first + count > length_) {
        throw LengthError("slice past the end of the series");
    }
    SeriesPanel out(start_ + kHour * static_cast<long>(first), count);
    out.ids_ = ids_;
    out.values_.reserve(ids_.size() * count);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        const auto r = row(i).subspan(first, count);
        out.values_.insert(out.values_.end(), r.begin(), r.end());
    }
    return out;
}

namespace {

bool is_constant(std::span<const double> v) {
    return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>{}) == v.end();
}

double mean_of(std::span<const double> v) {
    double sum = 0.0;
    for (const double x : v) {
        sum += x;
    }
    const double n = static_cast<double>(v.size());
    double mean = sum / n;
    double correction = 0.0;
    for (const double x : v) {
        correction += x - mean;
    }
    return mean + correction / n;
}

}  // namespace

SeriesStats stats(std::span<const double> values) {
    if (values.size() < 2) {
        throw LengthError("statistics need at least two samples");
    }
    if (is_constant(values)) {
        return {values.front(), 0.0, values.size()};
    }
    const double mean = mean_of(values);
    double ss = 0.0;
    for (const double x : values) {
        const double d = x - mean;
        ss += d * d;
    }
    return {mean, std::sqrt(ss / static_cast<double>(values.size())), values.size()};
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw LengthError("pearson: series lengths differ");
    }
    if (a.size() < 2) {
        throw LengthError("pearson: need at least two samples");
    }
    if (is_constant(a) || is_constant(b)) {
        throw DegenerateSeriesError(0, "pearson: zero-variance series");
    }
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double da = a[k] - ma;
        const double db = b[k] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double pearson(const TimeSeries& a, const TimeSeries& b) {
    if (a.start != b.start) {
        throw DataQualityError("pearson: series clocks are not aligned");
    }
    try {
        return pearson(std::span<const double>(a.values), std::span<const double>(b.values));
    } catch (const DegenerateSeriesError&) {
        const AgentId bad = is_constant(a.values) ? a.id : b.id;
        throw DegenerateSeriesError(to_index(bad),
                                    "pearson: series of agent " + to_string(bad) +
                                        " has zero variance");
    }
}

CorrelationMatrix::CorrelationMatrix(std::vector<AgentId> agents)
    : agents_(std::move(agents)), values_(agents_.size() * agents_.size(), 0.0) {
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        values_[i * agents_.size() + i] = 1.0;
    }
}

void CorrelationMatrix::set(std::size_t i, std::size_t j, double rho) {
    const double r = std::clamp(rho, -1.0, 1.0);
    values_[i * size() + j] = r;
    values_[j * size() + i] = r;
}

namespace {

/// Rows standardized to zero mean and unit Euclidean norm, so a dot product
/// of two rows is their correlation.
std::vector<double> unit_rows(const SeriesPanel& panel, std::span<const std::size_t> rows) {
    const std::size_t n = panel.length();
    std::vector<double> z(rows.size() * n);
#pragma omp parallel for schedule(static)
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = panel.row(rows[r]);
        const double m = mean_of(src);
        double ss = 0.0;
        for (const double x : src) {
            ss += (x - m) * (x - m);
        }
        const double inv = 1.0 / std::sqrt(ss);
        double* dst = z.data() + r * n;
        for (std::size_t k = 0; k < n; ++k) {
            dst[k] = (src[k] - m) * inv;
        }
    }
    return z;
}

CorrelationMatrix correlate_rows(const SeriesPanel& panel, std::vector<std::size_t> rows) {
    std::vector<AgentId> agents;
    agents.reserve(rows.size());
    for (const auto r : rows) {
        agents.push_back(panel.id(r));
    }
    CorrelationMatrix corr(std::move(agents));
    const std::size_t m = rows.size();
    const std::size_t n = panel.length();
    const auto z = unit_rows(panel, rows);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::size_t i = 0; i < m; ++i) {
        const double* zi = z.data() + i * n;
        for (std::size_t j = i + 1; j < m; ++j) {
            const double* zj = z.data() + j * n;
            double dot = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                dot += zi[k] * zj[k];
            }
            corr.set(i, j, dot);
        }
    }
    return corr;
}

void require_min_length(const SeriesPanel& panel) {
    if (panel.size() > 0 && panel.length() < 2) {
        throw LengthError("correlation needs at least two samples per series");
    }
}

}  // namespace

CorrelationMatrix correlation_matrix(const SeriesPanel& panel) {
    require_min_length(panel);
    std::vector<std::size_t> rows(panel.size());
    for (std::size_t i = 0; i < panel.size(); ++i) {
        if (is_constant(panel.row(i))) {
            throw DegenerateSeriesError(to_index(panel.id(i)), "series of agent " +
                                                                   to_string(panel.id(i)) +
                                                                   " has zero variance");
        }
        rows[i] = i;
    }
    return correlate_rows(panel, std::move(rows));
}

CorrelationMatrix correlation_matrix_serial(const SeriesPanel& panel) {
    require_min_length(panel);
    CorrelationMatrix corr(panel.ids());
    for (std::size_t i = 0; i < panel.size(); ++i) {
        if (is_constant(panel.row(i))) {
            throw DegenerateSeriesError(to_index(panel.id(i)), "series of agent " +
                                                                   to_string(panel.id(i)) +
                                                                   " has zero variance");
        }
    }
    for (std::size_t i = 0; i < panel.size(); ++i) {
        for (std::size_t j = i + 1; j < panel.size(); ++j) {
            corr.set(i, j, pearson(panel.row(i), panel.row(j)));
        }
    }
    return corr;
}

CorrelationMatrix correlation_matrix_excluding_degenerate(const SeriesPanel& panel) {
    require_min_length(panel);
    std::vector<std::size_t> rows;
    std::vector<AgentId> excluded;
    for (std::size_t i = 0; i < panel.size(); ++i) {
        if (is_constant(panel.row(i))) {
            excluded.push_back(panel.id(i));
        } else {
            rows.push_back(i);
        }
    }
    auto corr = correlate_rows(panel, std::move(rows));
    corr.set_excluded(std::move(excluded));
    return corr;
}

TimeSeries aggregate(std::span<const AgentId> members, const SeriesPanel& panel) {
    if (members.empty()) {
        throw InvalidArgument("aggregate: empty member set");
    }
    std::vector<AgentId> sorted(members.begin(), members.end());
    std::sort(sorted.begin(), sorted.end());
    TimeSeries out{AgentId{}, panel.start(), std::vector<double>(panel.length(), 0.0)};
    for (const AgentId id : sorted) {
        const auto r = panel.row(id);
        for (std::size_t k = 0; k < r.size(); ++k) {
            out.values[k] += r[k];
        }
    }
    return out;
}

TimeSeries deseasonalize(const TimeSeries& series, int window_days) {
    if (window_days < 1) {
        throw InvalidArgument("deseasonalize: window must be at least one day");
    }
    const std::size_t n = series.values.size();
    if (n < static_cast<std::size_t>(2 * window_days * 24)) {
        throw LengthError("deseasonalize: series of " + std::to_string(n) +
                          " hours is shorter than two " + std::to_string(window_days) +
                          "-day windows");
    }
    const auto half = static_cast<std::size_t>(window_days / 2);
    TimeSeries out{series.id, series.start, std::vector<double>(n)};
    for (std::size_t h = 0; h < 24 && h < n; ++h) {
        const std::size_t days = (n - h + 23) / 24;
        for (std::size_t d = 0; d < days; ++d) {
            const std::size_t lo = d >= half ? d - half : 0;
            const std::size_t hi = std::min(days - 1, d + half);
            double sum = 0.0;
            for (std::size_t e = lo; e <= hi; ++e) {
                sum += series.values[h + 24 * e];
            }
            const double avg = sum / static_cast<double>(hi - lo + 1);
            out.values[h + 24 * d] = series.values[h + 24 * d] - avg;
        }
    }
    return out;
}

}  // namespace vpp
