#pragma once

#include <vector>

#include <Eigen/Core>

namespace selfloop {

/// Storage aligned for Eigen's widest packets. Vectorized kernels pick their
/// code path from pointer alignment, so results are only reproducible bit for
/// bit when every buffer starts on the same boundary.
using AlignedDoubles = std::vector<double, Eigen::aligned_allocator<double>>;

}  // namespace selfloop
