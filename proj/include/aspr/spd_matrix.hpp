#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace aspr {

// Thrown when a matrix that must be symmetric positive definite is not.
// Carries the offending matrix for diagnostics.
class NotSpdError : public std::runtime_error {
 public:
  NotSpdError(const std::string& what, Eigen::MatrixXd offending);
  const Eigen::MatrixXd& offending() const { return offending_; }

 private:
  Eigen::MatrixXd offending_;
};

// Dense SPD matrix with its lower-triangular Cholesky factor computed once at
// construction. Construction enforces symmetry (1e-12 relative tolerance) and
// strictly positive Cholesky diagonal; every consumer can then rely on both.
class SpdMatrix {
 public:
  // Default-constructed is an empty 0x0 placeholder so containers of SPD
  // matrices can be sized before being filled.
  SpdMatrix() = default;
  explicit SpdMatrix(const Eigen::MatrixXd& m);
  static SpdMatrix identity(int dim);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  const Eigen::MatrixXd& cholesky_lower() const { return chol_; }
  double operator()(int i, int j) const { return m_(i, j); }

  double log_det() const;
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

 private:
  Eigen::MatrixXd m_;
  Eigen::MatrixXd chol_;
};

}  // namespace aspr
