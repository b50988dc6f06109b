#include "ergodic_smpc/linalg.hpp"

#include <cmath>
#include <limits>

#include "ergodic_smpc/random.hpp"

namespace ergodic_smpc {

double operator_norm(const Eigen::MatrixXd& m, const PowerIterationOptions& options) {
  if (m.size() == 0) return 0.0;
  const Eigen::MatrixXd gram = m.transpose() * m;
  // Fixed pseudo-random start; a constant vector can be orthogonal to the
  // leading singular vector of structured matrices.
  RandomSource rng(0x9a11ce5eedULL);
  Eigen::VectorXd v(gram.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 0.5 + rng.uniform();
  v.normalize();

  double sigma2 = (m * v).squaredNorm();
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    Eigen::VectorXd w = gram * v;
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
    const double next = (m * v).squaredNorm();
    const bool converged = std::abs(next - sigma2) <= options.tolerance * next;
    sigma2 = next;
    if (converged) break;
  }
  return std::sqrt(sigma2);
}

double symmetric_condition_number(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace ergodic_smpc
