#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace sncp {

// Upper envelope of lines y = a + b*x with slopes inserted in strictly
// decreasing order; arbitrary query points. Hull lines are kept in
// insertion order, so hull[0] (largest slope) dominates for large x and
// the take-over abscissas xs[] are decreasing. Query is a binary search.
class LineEnvelope {
public:
    void reserve(std::size_t n) {
        as_.reserve(n);
        bs_.reserve(n);
        xs_.reserve(n);
    }

    void clear() {
        as_.clear();
        bs_.clear();
        xs_.clear();
    }

    bool empty() const { return as_.empty(); }

    // Pre: b strictly less than every slope inserted so far.
    void add(double a, double b) {
        while (!as_.empty()) {
            // x where the new line overtakes the current hull back
            // (new line dominates below it).
            double x = intersect(as_.back(), bs_.back(), a, b);
            if (xs_.size() >= 1 && x >= xs_.back()) {
                as_.pop_back();
                bs_.pop_back();
                xs_.pop_back();
            } else {
                xs_.push_back(x);
                break;
            }
        }
        as_.push_back(a);
        bs_.push_back(b);
    }

    double max_at(double x) const {
        if (as_.empty()) return -std::numeric_limits<double>::infinity();
        // hull[j] is optimal for xs[j-1] >= x >= xs[j] (with sentinels);
        // xs_ is aligned so xs_[j-1] is the take-over point of hull[j].
        std::size_t lo = 0, hi = as_.size() - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (x >= xs_[mid])
                hi = mid;
            else
                lo = mid + 1;
        }
        return as_[lo] + bs_[lo] * x;
    }

private:
    static double intersect(double a1, double b1, double a2, double b2) {
        return (a2 - a1) / (b1 - b2);  // b1 > b2
    }

    std::vector<double> as_, bs_;
    std::vector<double> xs_;  // xs_[j] = x below which hull[j+1] beats hull[j]
};

// max over inserted lines of |a_i + b_i * x|, slopes inserted in strictly
// decreasing order. Wraps two upper envelopes, one per sign of the
// residual; the mirrored family -(a + b x) = -a + b(-x) reuses the same
// decreasing-slope hull queried at -x.
class AbsLineEnvelope {
public:
    void reserve(std::size_t n) {
        pos_.reserve(n);
        neg_.reserve(n);
    }

    // Pre: b strictly decreasing across calls.
    void add(double a, double b) {
        pos_.add(a, b);
        neg_.add(-a, b);
    }

    double max_abs_at(double x) const {
        return std::max(pos_.max_at(x), neg_.max_at(-x));
    }

private:
    LineEnvelope pos_;
    LineEnvelope neg_;
};

}  // namespace sncp
