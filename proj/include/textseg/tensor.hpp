#pragma once

#include <Eigen/Core>

namespace textseg {

using Index = Eigen::Index;

/// Row-major float64 matrix. Sequences are stored one timestep per row.
using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Throws Error(Numeric, code) if any entry is NaN or infinite.
void require_finite(const Tensor2& m, const char* code, const char* what);
void require_finite(const Vector& v, const char* code, const char* what);

}  // namespace textseg
