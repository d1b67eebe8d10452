#pragma once

#include <array>
#include <vector>

#include "daestab/types.hpp"

namespace daestab {

/// Halton low-discrepancy sequence with a seeded Cranley-Patterson
/// rotation. Deterministic for a fixed (dim, seed).
class HaltonSampler {
  public:
    HaltonSampler(int dim, unsigned seed);

    /// Next point in [0,1)^dim.
    Vector next();

  private:
    int dim_;
    long index_ = 1;
    std::vector<int> bases_;
    std::vector<double> shift_;
};

/// Axis-aligned box; map unit-cube samples into it.
struct Box {
    std::vector<std::array<double, 2>> bounds;
    Vector map(const Vector& unit) const;
    int dim() const { return static_cast<int>(bounds.size()); }
};

} // namespace daestab
