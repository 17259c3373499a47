#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "zlab/ensemble.hpp"

namespace zlab::arcs {

/// Rational-arc label of a frequency theta = {a/q + K/N}, K = l/2 + lambda.
struct ArcPoint {
  double theta = 0;
  std::int64_t a = 0;
  std::int64_t q = 1;
  double K = 0;
  std::int64_t l = 0;
  double lambda = 0;
  int alpha = -1;  // -1 until classified
  int beta = -1;
  std::int64_t kappa = -1;

  /// a/q + l/(2N) + lambda/N reduced mod 1.
  double reconstruct(double limit) const;
};

/// Largest-denominator convergent a/q of theta with q <= sqrt(N)/Q1, and K.
ArcPoint dirichlet_decompose(double theta, double limit, double q1);

/// K = l/2 + lambda with lambda in (-1/4, 1/4].
std::pair<std::int64_t, double> split_K(double K);

struct ArcClass {
  int alpha = 0;
  int beta = 0;
  std::int64_t kappa = 0;
  friend bool operator==(const ArcClass&, const ArcClass&) = default;
  friend auto operator<=>(const ArcClass&, const ArcClass&) = default;
};

/// T_1 = 7 Q_7 as an integer modulus (requires Q1^7 representable).
std::int64_t kappa_modulus(const ensemble::Ladder& ladder);

/// Index of the lower-closed window [Q_i, Q_{i+1}) holding x.
int window_index(double x, const ensemble::Ladder& ladder);

/// Fills alpha, beta, kappa. Throws InputError when q > sqrt(N)/Q1.
ArcClass classify_arc(ArcPoint& point, const ensemble::Ladder& ladder);

/// Decompose, split and classify in one go (N and Q1 from the ladder).
ArcPoint label(double theta, const ensemble::Ladder& ladder);

/// Q_{alpha+1} Q_{beta+1} <= 3 Q_3 sqrt(N), the non-emptiness condition of a cell.
bool cell_condition(int alpha, int beta, const ensemble::Ladder& ladder);

/// Members of P^{(lambda)}_{alpha,beta}(kappa), enumerated by (q, a, l).
std::vector<ArcPoint> arc_class_members(const ensemble::Ladder& ladder, int alpha, int beta,
                                        std::int64_t kappa, double lambda, std::size_t cap);

/// Size of every non-empty class P_{alpha,beta}(kappa), keyed by kappa.
std::map<std::int64_t, std::size_t> class_populations(const ensemble::Ladder& ladder, int alpha,
                                                      int beta);

class NormHistogram {
 public:
  NormHistogram() = default;
  explicit NormHistogram(std::map<std::uint64_t, std::uint64_t> counts);
  static NormHistogram from_set(const ensemble::MatrixSet& omega);
  static NormHistogram from_norms(std::span<const std::uint64_t> norms);

  const std::vector<std::pair<std::uint64_t, std::uint64_t>>& bins() const noexcept { return bins_; }
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t max_norm() const noexcept { return bins_.empty() ? 0 : bins_.back().first; }
  std::size_t distinct() const noexcept { return bins_.size(); }
  bool empty() const noexcept { return bins_.empty(); }

 private:
  std::vector<std::pair<std::uint64_t, std::uint64_t>> bins_;  // ascending norm, count > 0
  std::uint64_t total_ = 0;
};

/// S(theta) = sum_d r(d) e(theta d).
std::complex<double> trig_sum(const NormHistogram& h, double theta);

/// sum over Z of |S(theta)|; Z must share (alpha, beta, kappa, lambda).
double sigma_NZ(const NormHistogram& h, std::span<const ArcPoint> Z);

struct SigmaReport {
  double value = 0;
  double Q = 0;
  std::size_t triples = 0;
  int quadrature_points = 0;
  std::map<std::pair<int, int>, double> cells;  // (alpha, beta) -> contribution
};

/// Second moment over arcs with max{q, |l|} >= Q, midpoint rule in lambda.
/// `work_cap` bounds triples x points x distinct norms.
SigmaReport sigma_N_of_Q(const NormHistogram& h, const ensemble::Ladder& ladder, double Q,
                         int quadrature_points, std::size_t triple_cap = 2'000'000,
                         double work_cap = 2e10);

struct ParsevalReport {
  double exact = 0;
  double quadrature = 0;
  double relative_error = 0;
  double ratio_to_bound = 0;     // exact * N / |Omega|^2
  double cauchy_schwarz_floor = 0;  // |Omega|^2 / exact, at most the number of distinct norms
  int quadrature_points = 0;
};

/// exact = sum r(d)^2 against the mean of |S(k/M)|^2 over M points (one real FFT).
ParsevalReport parseval_check(const NormHistogram& h, int quadrature_points, double limit);

/// Header `theta,re,im,abs`.
std::string profile_csv(const NormHistogram& h, std::span<const double> thetas);

nlohmann::json to_json(const ParsevalReport& r);
nlohmann::json to_json(const SigmaReport& r);
nlohmann::json to_json(const ArcPoint& p);

}  // namespace zlab::arcs
