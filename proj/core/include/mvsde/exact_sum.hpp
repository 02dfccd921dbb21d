#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mvsde {

/**
 * Error-free accumulation of doubles (Shewchuk expansions, as in Python's
 * math.fsum). The rounded result is the correctly rounded value of the exact
 * sum, so it does not depend on the order in which terms were added or on how
 * partial accumulators were merged.
 *
 * Non-finite terms poison the accumulator: value() returns NaN.
 */
class ExactSum {
public:
    void add(double x);
    void merge(const ExactSum& other);
    [[nodiscard]] double value() const;
    [[nodiscard]] bool finite() const { return !poisoned_; }

private:
    std::vector<double> partials_;
    bool poisoned_ = false;
};

/// Correctly rounded sum of a range.
[[nodiscard]] double exact_sum(std::span<const double> xs);

} // namespace mvsde
