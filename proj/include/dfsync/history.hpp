#ifndef DFSYNC_HISTORY_HPP
#define DFSYNC_HISTORY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dfsync/error.hpp"
#include "dfsync/flow.hpp"

namespace dfsync {

/// One firing-free stretch of the activator. On [t_start, t_end] the mean
/// repressor concentration is m0 - (t - t_start) and A follows forward_flow.
struct ActivatorSegment {
    double t_start = 0.0;
    double t_end = 0.0;
    double a_start = 0.0;
    double m0 = 0.0;

    double mean(double t) const { return m0 - (t - t_start); }

    double value(double t, double beta) const
    {
        if (t == t_start) return a_start;
        return forward_flow(a_start, m0, beta, t - t_start);
    }

    double rate(double t, double beta) const { return mean(t) - beta * value(t, beta); }

    friend bool operator==(const ActivatorSegment&, const ActivatorSegment&) = default;
};

/// Piecewise closed-form activator record. Segments are contiguous and
/// chronological; at a shared endpoint the later segment is authoritative for
/// values (they agree by construction) and for right-sided derivatives.
class ActivatorHistory {
public:
    ActivatorHistory() = default;
    explicit ActivatorHistory(double beta) : beta_(beta) {}

    double beta() const { return beta_; }
    const std::vector<ActivatorSegment>& segments() const { return segments_; }
    bool empty() const { return segments_.empty(); }
    double t_begin() const { return segments_.front().t_start; }
    double t_end() const { return segments_.back().t_end; }

    bool covers(double t) const
    {
        return !segments_.empty() && t >= t_begin() && t <= t_end();
    }

    /// Appends a segment starting where the record currently ends.
    void append(const ActivatorSegment& seg)
    {
        if (!segments_.empty() && seg.t_start != segments_.back().t_end)
            throw Error("activator segment does not start at the end of the history");
        segments_.push_back(seg);
    }

    /// Removes the most recent segment.
    void drop_last()
    {
        if (!segments_.empty()) segments_.pop_back();
    }

    /// Appends seg, first dropping a zero-length last segment that starts at the same time.
    void append_replacing_empty(const ActivatorSegment& seg)
    {
        if (!segments_.empty() && segments_.back().t_start == seg.t_start &&
            segments_.back().t_end == seg.t_start)
            segments_.pop_back();
        append(seg);
    }

    /// Stretches the last segment up to time t.
    void extend_to(double t)
    {
        if (segments_.empty()) throw Error("cannot extend an empty activator history");
        if (t < segments_.back().t_end) throw Error("activator history cannot be shortened");
        segments_.back().t_end = t;
    }

    const ActivatorSegment& segment_at(double t) const { return segments_[index_at(t, false)]; }

    /// A(t) from the segment containing t.
    double value(double t) const { return segments_[index_at(t, false)].value(t, beta_); }

    /// Right-sided derivative m(t+) - beta*A(t).
    double rate(double t) const { return segments_[index_at(t, false)].rate(t, beta_); }

    /// Left-sided derivative m(t-) - beta*A(t).
    double rate_left(double t) const { return segments_[index_at(t, true)].rate(t, beta_); }

    /// Drops segments that end strictly before t.
    void prune_before(double t)
    {
        auto it = std::find_if(segments_.begin(), segments_.end(),
                               [t](const ActivatorSegment& s) { return s.t_end >= t; });
        if (it == segments_.end() && !segments_.empty()) --it;
        segments_.erase(segments_.begin(), it);
    }

    /// Translates every time stamp by dt.
    void shift(double dt)
    {
        for (auto& s : segments_) {
            s.t_start += dt;
            s.t_end += dt;
        }
    }

    /// Copy restricted to the segments overlapping [t0, t1].
    ActivatorHistory window(double t0, double t1) const
    {
        ActivatorHistory out(beta_);
        for (const auto& s : segments_)
            if (s.t_end >= t0 && s.t_start <= t1) out.segments_.push_back(s);
        return out;
    }

private:
    std::size_t index_at(double t, bool prefer_left) const
    {
        if (!covers(t)) {
            std::string range = segments_.empty()
                ? std::string("empty history")
                : "[" + std::to_string(t_begin()) + ", " + std::to_string(t_end()) + "]";
            throw HistoryUnderflow("activator requested at t=" + std::to_string(t) +
                                   " outside recorded history " + range);
        }
        // first segment whose start is > t, then step back
        auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                                   [](double v, const ActivatorSegment& s) { return v < s.t_start; });
        std::size_t idx = static_cast<std::size_t>(it - segments_.begin()) - 1;
        if (prefer_left && idx > 0 && segments_[idx].t_start == t) --idx;
        return idx;
    }

    double beta_ = 1.0;
    std::vector<ActivatorSegment> segments_;
};

/// A(t) from a recorded history.
inline double evaluate_activator(const ActivatorHistory& history, double t)
{
    return history.value(t);
}

}  // namespace dfsync

#endif  // DFSYNC_HISTORY_HPP
