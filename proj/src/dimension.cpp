#include "zlab/dimension.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "zlab/error.hpp"
#include "zlab/format.hpp"

namespace zlab::dimension {

namespace {

// Chebyshev points of the first kind mapped to [0, 1], with barycentric weights.
struct ChebyshevGrid {
  explicit ChebyshevGrid(int n) : nodes(n), weights(n) {
    for (int k = 0; k < n; ++k) {
      const double t = std::numbers::pi * (2.0 * k + 1.0) / (2.0 * n);
      nodes[k] = 0.5 * (1.0 - std::cos(t));
      weights[k] = (k % 2 == 0 ? 1.0 : -1.0) * std::sin(t);
    }
  }

  // Row of Lagrange basis values l_j(y).
  void basis_row(double y, Eigen::RowVectorXd& row) const {
    const int n = static_cast<int>(nodes.size());
    double denom = 0;
    for (int j = 0; j < n; ++j) {
      const double diff = y - nodes[j];
      if (diff == 0.0) {
        row.setZero();
        row[j] = 1.0;
        return;
      }
      row[j] = weights[j] / diff;
      denom += row[j];
    }
    row /= denom;
  }

  std::vector<double> nodes;
  std::vector<double> weights;
};

// Collocation pieces that do not depend on s: per letter, the interpolation
// matrix at the images 1/(d + x_i) and log(d + x_i).
class TransferOperator {
 public:
  TransferOperator(const Alphabet& alphabet, int n) : n_(n) {
    if (n < 8) throw InputError("mesh_size must be >= 8");
    ChebyshevGrid grid(n);
    for (Letter d : alphabet.letters()) {
      Eigen::MatrixXd b(n, n);
      Eigen::VectorXd lg(n);
      Eigen::RowVectorXd row(n);
      for (int i = 0; i < n; ++i) {
        const double shifted = d + grid.nodes[i];
        grid.basis_row(1.0 / shifted, row);
        b.row(i) = row;
        lg[i] = std::log(shifted);
      }
      interp_.push_back(std::move(b));
      logs_.push_back(std::move(lg));
    }
  }

  Eigen::MatrixXd matrix(double s) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
    for (std::size_t k = 0; k < interp_.size(); ++k) {
      const Eigen::VectorXd w = (-2.0 * s * logs_[k].array()).exp();
      m.noalias() += w.asDiagonal() * interp_[k];
    }
    return m;
  }

  double leading_eigenvalue(double s, int max_iterations) const {
    const Eigen::MatrixXd m = matrix(s);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n_);
    double lambda = 0, last_change = 0;
    for (int it = 0; it < max_iterations; ++it) {
      Eigen::VectorXd w = m * v;
      const double next = w.dot(v) / v.dot(v);
      const double scale = w.lpNorm<Eigen::Infinity>();
      if (!(scale > 0) || !std::isfinite(scale)) break;
      last_change = std::abs(next - lambda);
      lambda = next;
      // Residual of the eigenpair in the sup norm.
      const double resid = (w - lambda * v).lpNorm<Eigen::Infinity>() / scale;
      v = w / scale;
      if (resid < 1e-14 && it > 2) return lambda;
    }
    std::ostringstream msg;
    msg << "power iteration did not converge: s=" << s << " mesh=" << n_
        << " iterations=" << max_iterations << " last_lambda=" << lambda
        << " last_change=" << last_change;
    throw ConvergenceError(msg.str());
  }

 private:
  int n_;
  std::vector<Eigen::MatrixXd> interp_;
  std::vector<Eigen::VectorXd> logs_;
};

struct Root {
  double s;
  double residual;
  int solves;
};

// lambda(0) = |alphabet| exactly (constants are fixed by the weightless operator).
Root solve_unit_eigenvalue(const TransferOperator& op, std::size_t letters, double tol,
                           int max_iterations) {
  int solves = 0;
  auto f = [&](double s) {
    ++solves;
    return op.leading_eigenvalue(s, max_iterations) - 1.0;
  };
  double lo = 0, hi = 1;
  double flo = static_cast<double>(letters) - 1.0;
  double fhi = f(hi);
  if (flo == 0.0) return {0.0, 0.0, solves};
  if (!(flo > 0 && fhi < 0)) {
    throw InputError("degenerate alphabet or mesh too coarse: lambda(s)-1 does not change sign");
  }
  while (hi - lo > 10 * tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm > 0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  // Secant polish, kept inside the bracket.
  double s0 = lo, f0 = flo, s1 = hi, f1 = fhi;
  double best = std::abs(f0) < std::abs(f1) ? s0 : s1;
  double best_f = std::min(std::abs(f0), std::abs(f1));
  for (int it = 0; it < 30 && f1 != f0; ++it) {
    double s2 = s1 - f1 * (s1 - s0) / (f1 - f0);
    if (!(s2 > lo && s2 < hi)) s2 = 0.5 * (lo + hi);
    const double f2 = f(s2);
    if (std::abs(f2) < best_f) {
      best = s2;
      best_f = std::abs(f2);
    }
    if (f2 > 0) lo = s2; else hi = s2;
    if (std::abs(s2 - s1) < 1e-3 * tol || f2 == 0.0) break;
    s0 = s1;
    f0 = f1;
    s1 = s2;
    f1 = f2;
  }
  return {best, best_f, solves};
}

}  // namespace

double transfer_eigenvalue(const Alphabet& alphabet, double s, int mesh_size,
                           int max_iterations) {
  if (!(s > 0 && s <= 1)) throw InputError("s must lie in (0, 1]");
  return TransferOperator(alphabet, mesh_size).leading_eigenvalue(s, max_iterations);
}

DimensionEstimate hausdorff_dimension(const Alphabet& alphabet, double tolerance,
                                      const DimensionOptions& options) {
  if (!(tolerance > 0)) throw InputError("tolerance must be positive");
  if (options.initial_mesh < 8 || options.max_mesh < options.initial_mesh) {
    throw InputError("invalid mesh range");
  }
  DimensionEstimate est;
  est.alphabet = alphabet;
  est.tolerance = tolerance;
  if (alphabet.size() == 1) {
    // A single contraction has a one-point limit set.
    est.mesh_size = options.initial_mesh;
    return est;
  }
  double previous = std::nan("");
  for (int mesh = options.initial_mesh; mesh <= options.max_mesh; mesh *= 2) {
    const TransferOperator op(alphabet, mesh);
    const Root root =
        solve_unit_eigenvalue(op, alphabet.size(), tolerance, options.max_power_iterations);
    est.delta = root.s;
    est.residual = root.residual;
    est.mesh_size = mesh;
    est.eigen_solves += root.solves;
    if (!std::isnan(previous)) {
      est.mesh_drift = std::abs(root.s - previous);
      if (est.mesh_drift < tolerance / 2) break;
    }
    previous = root.s;
  }
  return est;
}

std::string sweep_csv(std::span<const DimensionEstimate> rows) {
  std::ostringstream out;
  out << "alphabet,delta,residual,mesh\n";
  for (const auto& row : rows) {
    out << '"' << row.alphabet.to_string() << "\"," << format_double(row.delta) << ','
        << format_double(row.residual) << ',' << row.mesh_size << '\n';
  }
  return out.str();
}

}  // namespace zlab::dimension
