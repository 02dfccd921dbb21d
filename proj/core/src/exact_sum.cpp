#include "mvsde/exact_sum.hpp"

#include <cmath>
#include <limits>

namespace mvsde {

void ExactSum::add(double x) {
    if (!std::isfinite(x)) {
        poisoned_ = true;
        return;
    }
    std::size_t kept = 0;
    for (double y : partials_) {
        if (std::fabs(x) < std::fabs(y)) {
            std::swap(x, y);
        }
        const double hi = x + y;
        const double lo = y - (hi - x);
        if (lo != 0.0) {
            partials_[kept++] = lo;
        }
        x = hi;
    }
    partials_.resize(kept);
    partials_.push_back(x);
}

void ExactSum::merge(const ExactSum& other) {
    poisoned_ = poisoned_ || other.poisoned_;
    for (double p : other.partials_) {
        add(p);
    }
}

double ExactSum::value() const {
    if (poisoned_) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    // Round the nonoverlapping expansion from the top, then fix half-way cases.
    std::size_t n = partials_.size();
    if (n == 0) {
        return 0.0;
    }
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
        const double x = hi;
        const double y = partials_[--n];
        hi = x + y;
        const double yr = hi - x;
        lo = y - yr;
        if (lo != 0.0) {
            break;
        }
    }
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        const double yr = x - hi;
        if (y == yr) {
            hi = x;
        }
    }
    return hi;
}

double exact_sum(std::span<const double> xs) {
    ExactSum acc;
    for (double x : xs) {
        acc.add(x);
    }
    return acc.value();
}

} // namespace mvsde
