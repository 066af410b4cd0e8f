#pragma once

#include <Eigen/Dense>

#include "specfuse/common.hpp"

namespace specfuse {

/// Dense double matrix, row-major so that serialized layouts match memory.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline bool all_finite(const Mat& m) { return m.allFinite(); }

/// Uniform init in [-1, 1] * scale, filled row-major from `rng`.
inline Mat uniform_matrix(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng) {
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-scale, scale);
    return m;
}

inline Mat normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = stddev * rng.normal();
    return m;
}

}  // namespace specfuse
