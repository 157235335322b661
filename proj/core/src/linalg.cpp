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

#include "covfuse/linalg.hpp"

#include "covfuse/errors.hpp"

#include <limits>
#include <string>

namespace covfuse {

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double relative_asymmetry(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const double scale = m.norm();
  if (scale == 0.0) return 0.0;
  return (m - m.transpose()).norm() / scale;
}

void require_symmetric(const Matrix& m, std::string_view what, double tol) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(what) + " is not square (" +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ")");
  }
  if (!m.allFinite()) {
    throw InvalidArgument(std::string(what) + " has non-finite entries");
  }
  if (relative_asymmetry(m) > tol) {
    throw InvalidArgument(std::string(what) + " is not symmetric");
  }
}

Vector sym_eigenvalues(const Matrix& m) {
  if (m.size() == 0) return Vector{};
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  return sym_eigenvalues(m).minCoeff();
}

bool is_spd(const Matrix& m) {
  if (m.rows() != m.cols() || m.size() == 0 || !m.allFinite()) return false;
  if (relative_asymmetry(m) > kSymmetryTol) return false;
  const Vector ev = sym_eigenvalues(m);
  const double hi = ev.maxCoeff();
  return hi > 0.0 && ev.minCoeff() > kSpdRelFloor * hi;
}

void require_spd(const Matrix& m, std::string_view what) {
  require_symmetric(m, what);
  if (!is_spd(m)) {
    throw InvalidArgument(std::string(what) + " is not positive definite");
  }
}

Matrix spd_inverse(const Matrix& m) {
  Eigen::LLT<Matrix> llt(symmetrize(m));
  if (llt.info() != Eigen::Success) {
    throw NumericError("Cholesky factorization failed (matrix not SPD)");
  }
  return symmetrize(llt.solve(Matrix::Identity(m.rows(), m.cols())));
}

Matrix select(const Matrix& m, std::span<const std::size_t> rows,
              std::span<const std::size_t> cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          m(static_cast<Eigen::Index>(rows[i]),
            static_cast<Eigen::Index>(cols[j]));
  return out;
}

Vector select(const Vector& v, std::span<const std::size_t> idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
  return out;
}

Matrix assemble_joint(const Matrix& a, const Matrix& b, const Matrix& ab) {
  if (ab.rows() != a.rows() || ab.cols() != b.rows()) {
    throw DimensionError("cross term shape does not match marginals");
  }
  const Eigen::Index na = a.rows();
  const Eigen::Index nb = b.rows();
  Matrix joint(na + nb, na + nb);
  joint.topLeftCorner(na, na) = a;
  joint.topRightCorner(na, nb) = ab;
  joint.bottomLeftCorner(nb, na) = ab.transpose();
  joint.bottomRightCorner(nb, nb) = b;
  return joint;
}

}  // namespace covfuse
