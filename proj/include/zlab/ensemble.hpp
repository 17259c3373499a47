#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zlab/cf.hpp"

namespace zlab::ensemble {

/// Fixed-width counterpart of UniMat for desk-scale ensembles.
using Mat64 = Mat2<std::uint64_t>;

/// B(w) in 64-bit entries; throws ResourceError on overflow.
Mat64 word_matrix64(const Word& w);
/// Product with overflow check.
Mat64 multiply_checked(const Mat64& l, const Mat64& r);

/// Rung sequence N_{-J-1} < ... < N_{J+1} = N and the geometric sequence Q_j.
struct Ladder {
  double limit = 0;  // N
  double eps0 = 0;
  int J = 0;
  double log_q1 = 0;    // Q_1 may overflow a double; its log never does
  double q1_value = 0;  // exp(log_q1), or the override verbatim; may be +inf
  bool q1_overridden = false;
  std::vector<double> rungs;  // rungs[j + J + 1] = N_j

  double rung(int j) const;  // j in [-J-1, J+1]
  int lowest_index() const noexcept { return -J - 1; }
  int highest_index() const noexcept { return J + 1; }
  double q1() const;
  /// Q_0 = 0, Q_j = Q_1^j.
  double q(int j) const;

  /// N^{(1 - eps0)^{1 - j} / (2 - eps0)}, the branch used for j <= 1.
  static double lower_branch(double limit, double eps0, int j);
  /// N^{1 - (1 - eps0)^j / (2 - eps0)}, the branch used for 0 <= j <= J.
  static double upper_branch(double limit, double eps0, int j);
};

/// J is the largest integer with N_{-J-1} >= 2 (0 if none). Q_1 defaults to
/// exp(A^4 / eps0^5).
Ladder build_ladder(double limit, double eps0, Letter max_letter,
                    std::optional<double> q1_override = std::nullopt);

struct LadderCheck {
  int pairs_checked = 0;
  int violations = 0;
  double max_branch_mismatch = 0;  // relative, at j = 0 and j = 1
  bool top_exact = false;
  bool increasing = false;
};

/// N_{m} >= N_{m+1}^{1-eps0} and N/N_{m+1} >= (N/N_m)^{1-eps0} for -J-1 <= m <= J-1.
LadderCheck check_ladder(const Ladder& ladder);

/// Slack constants of the norm windows; defaults are the published ones.
struct EnsembleConstants {
  double prefix_lower = 70;     // ||xi_1..xi_j|| >= N_{j-J} / (70 A^2)
  double prefix_upper = 1.01;   // ||xi_1..xi_j|| <= 1.01 N_{j-J}
  double suffix_lower = 150;    // ||xi_{j+1}..|| >= N / (150 A^2 N_{j-J})
  double suffix_upper = 73;     // ||xi_{j+1}..|| <= 73 A^2 N / N_{j-J}
  double spread = 11000;        // max/min over Omega <= 11000 A^4
  double h_factor = 1.01;       // H = 1.01 M1^{1 + 2 eps0}
};

struct SamplingPolicy {
  bool exhaustive = true;
  std::size_t cap = 200;              // per-factor size cap
  std::uint64_t seed = 0;
  double window_divisor = 0;          // lower window edge R / divisor; 0 means 2A
  std::size_t enumeration_cap = 5'000'000;
};

struct Element {
  Word word;
  Mat64 matrix;

  std::uint64_t norm() const noexcept { return matrix.d; }
};

/// Distinct matrices, ordered by (a, b, c, d).
using MatrixSet = std::vector<Element>;

MatrixSet identity_set();
/// {x y : x in lhs, y in rhs}, deduplicated. Throws ResourceError past `cap` pairs.
MatrixSet set_product(const MatrixSet& lhs, const MatrixSet& rhs, std::size_t cap);
void normalize(MatrixSet& set);

struct Ensemble {
  Alphabet alphabet{1};
  Ladder ladder;
  SamplingPolicy policy;
  std::vector<MatrixSet> factors;                     // Xi_1 .. Xi_{2J+1}
  std::vector<std::pair<double, double>> windows;     // norm window per factor
  std::vector<std::size_t> window_population;         // size before sampling

  int factor_count() const noexcept { return static_cast<int>(factors.size()); }
  const MatrixSet& factor(int j) const { return factors.at(j - 1); }  // 1-based
  /// Xi_first .. Xi_{last-1} (1-based, half-open); {E} when empty.
  MatrixSet product(int first, int last, std::size_t cap) const;
};

/// Xi_j: even-length words with norm in [R_j / divisor, R_j], R_j = N_{j-J} / N_{j-J-1}.
/// Throws InputError naming j when a window holds no semigroup element.
Ensemble build_preensembles(const Ladder& ladder, const Alphabet& alphabet,
                            const SamplingPolicy& policy);

/// All even-length words over `alphabet` with norm in [lo, hi], in DFS order.
std::vector<Element> window_elements(const Alphabet& alphabet, double lo, double hi,
                                     std::size_t enumeration_cap);

struct Factorization {
  std::array<int, 5> j{};             // j_0 = 1 <= j_1 <= j_2 <= j_3 <= j_4 = 2J + 2
  std::array<MatrixSet, 4> omega;     // Omega^(1) .. Omega^(4)
  double m1 = 0, m2 = 1, m4 = 1, h = 0;
  std::array<double, 4> thresholds{};  // U^(1) .. U^(4)
  bool clamped = false;                // some U^(k) fell below N_{-J}

  /// Omega = Omega^(2) Omega^(3) Omega^(4).
  MatrixSet tail(std::size_t cap) const;
};

/// Index rule N_{j_k - J - 1} <= U^(k) < N_{j_k - J} with U = (M1, M1 M2, N / M4, N).
Factorization factorize(const Ensemble& ensemble, double m1, double m2, double m4,
                        const EnsembleConstants& constants = {},
                        std::size_t cap = 2'000'000);

enum class StrategyCase { Auto, Major, Minor };  // Major: M1 = 150A^2 Q^2 Q; Minor: 120A^2 (N Q Q)^{1/2}

std::string to_string(StrategyCase c);
StrategyCase parse_strategy(const std::string& text);

struct ParameterChoice {
  int alpha = 0, beta = 0;
  StrategyCase used = StrategyCase::Major;
  double m1 = 0;
  double m2_raw = 0, m4_raw = 0;  // before the fallback to 1
  double m2 = 1, m4 = 1;
  bool product_within_limit = false;   // M1 M2_beta M4_alpha <= N
  bool resolved_within_limit = false;  // M1 M2 M4 <= N
  bool m1_in_range = false;            // M1 in [Q1, N]
  std::string tag;
};

ParameterChoice choose_parameters(int alpha, int beta, const Ladder& ladder, Letter max_letter,
                                  StrategyCase requested = StrategyCase::Auto);

struct WindowReport {
  std::size_t prefix_samples = 0, prefix_inside = 0;
  std::size_t suffix_samples = 0, suffix_inside = 0;
  std::size_t sandwich_checks = 0, sandwich_violations = 0;
  std::size_t tuples = 0;
  bool truncated = false;
};

/// Walks factor tuples (up to `cap`), checking the product sandwich
/// prod ||xi|| <= ||xi_1..xi_k|| <= 2^{k-1} prod ||xi|| and measuring the
/// prefix/suffix norm windows.
WindowReport diagnose(const Ensemble& ensemble, const EnsembleConstants& constants,
                      std::size_t cap);

struct SpreadReport {
  std::uint64_t min_norm = 0, max_norm = 0;
  double ratio = 0, bound = 0;
  bool within = false;
};

SpreadReport spread_report(const MatrixSet& omega, Letter max_letter,
                           const EnsembleConstants& constants);

nlohmann::json to_json(const Ladder& ladder);
nlohmann::json to_json(const Factorization& f);
nlohmann::json to_json(const Ensemble& e);

/// One comma-separated word per line.
void write_word_list(std::ostream& out, const MatrixSet& set);

}  // namespace zlab::ensemble
