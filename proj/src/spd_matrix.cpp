#include "aspr/spd_matrix.hpp"

#include <cmath>
#include <sstream>

namespace aspr {

namespace {

std::string format_matrix(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  const int cap = 8;  // enough context without dumping huge matrices
  const int r = std::min<int>(cap, static_cast<int>(m.rows()));
  const int c = std::min<int>(cap, static_cast<int>(m.cols()));
  os << "[" << m.rows() << "x" << m.cols() << "]";
  for (int i = 0; i < r; ++i) {
    os << "\n  ";
    for (int j = 0; j < c; ++j) os << m(i, j) << (j + 1 < c ? " " : "");
    if (c < m.cols()) os << " ...";
  }
  if (r < m.rows()) os << "\n  ...";
  return os.str();
}

}  // namespace

NotSpdError::NotSpdError(const std::string& what, Eigen::MatrixXd offending)
    : std::runtime_error(what + "\noffending matrix " + format_matrix(offending)),
      offending_(std::move(offending)) {}

SpdMatrix::SpdMatrix(const Eigen::MatrixXd& m) : m_(m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw NotSpdError("SpdMatrix: matrix must be square and non-empty", m);
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw NotSpdError("SpdMatrix: matrix is not symmetric", m);
  }
  m_ = 0.5 * (m + m.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(m_);
  if (llt.info() != Eigen::Success) {
    throw NotSpdError("SpdMatrix: Cholesky factorization failed (not positive definite)", m_);
  }
  chol_ = llt.matrixL();
  for (int i = 0; i < chol_.rows(); ++i) {
    if (!(chol_(i, i) > 0.0)) {
      throw NotSpdError("SpdMatrix: nonpositive Cholesky diagonal", m_);
    }
  }
}

SpdMatrix SpdMatrix::identity(int dim) {
  return SpdMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

double SpdMatrix::log_det() const {
  double acc = 0.0;
  for (int i = 0; i < chol_.rows(); ++i) acc += std::log(chol_(i, i));
  return 2.0 * acc;
}

Eigen::VectorXd SpdMatrix::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd y = chol_.triangularView<Eigen::Lower>().solve(b);
  return chol_.transpose().triangularView<Eigen::Upper>().solve(y);
}

}  // namespace aspr
