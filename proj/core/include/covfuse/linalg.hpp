// Copyright 2026 The covfuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense linear-algebra helpers shared by the fusion, sampling and solver
// code. Everything here works on dynamic-size double matrices; problem sizes
// are small (d <= ~128).

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string_view>

namespace covfuse {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative tolerance on ||M - M^T||_F / ||M||_F accepted as "symmetric".
inline constexpr double kSymmetryTol = 1e-10;
/// SPD floor: min eigenvalue must exceed this fraction of the max eigenvalue.
inline constexpr double kSpdRelFloor = 1e-12;

/// (M + M^T) / 2.
Matrix symmetrize(const Matrix& m);

/// ||M - M^T||_F / max(||M||_F, tiny). Zero for the empty / zero matrix.
double relative_asymmetry(const Matrix& m);

/// Throws DimensionError if `m` is not square, InvalidArgument if it is not
/// symmetric within `tol`. `what` names the operand in the message.
void require_symmetric(const Matrix& m, std::string_view what,
                       double tol = kSymmetryTol);

/// Ascending eigenvalues of the symmetrized matrix.
Vector sym_eigenvalues(const Matrix& m);

double min_eigenvalue(const Matrix& m);

/// True iff `m` is symmetric and min eig > kSpdRelFloor * max eig > 0.
bool is_spd(const Matrix& m);

/// Throws unless is_spd(m).
void require_spd(const Matrix& m, std::string_view what);

/// Inverse of an SPD matrix through a Cholesky factor; the result is
/// symmetrized. Throws NumericError if the factorization fails.
Matrix spd_inverse(const Matrix& m);

/// M(rows, cols) for arbitrary index lists.
Matrix select(const Matrix& m, std::span<const std::size_t> rows,
              std::span<const std::size_t> cols);

Vector select(const Vector& v, std::span<const std::size_t> idx);

/// [[a, ab], [ab^T, b]].
Matrix assemble_joint(const Matrix& a, const Matrix& b, const Matrix& ab);

}  // namespace covfuse
