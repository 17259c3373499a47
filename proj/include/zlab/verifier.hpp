#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zlab/arcs.hpp"
#include "zlab/ensemble.hpp"

namespace zlab::verifier {

/// Column g2 g3 g4 (0, 1)^t together with the factor pair it came from.
struct Column {
  std::int64_t x1 = 0;
  std::int64_t x2 = 1;
  std::size_t g2 = 0;  // index into Omega^(2)
  std::size_t g4 = 0;  // index into Omega^(4)
};

/// (g~(1), g~(2), theta(1), theta(2)); the first column holds x, the second y.
struct Quadruple {
  Column x;
  Column y;
  arcs::ArcPoint theta1;
  arcs::ArcPoint theta2;
};

/// max{1, |x|}
std::int64_t xbar(std::int64_t x) noexcept;
/// x1 y2 - x2 y1
BigInt script_y(const Quadruple& quad);
/// lcm(q(1), q(2))
std::int64_t lcm_q(const Quadruple& quad);

/// Columns of Omega(g3) = Omega^(2) {g3} Omega^(4), in (g2, g4) order.
std::vector<Column> columns(const ensemble::MatrixSet& omega2, const ensemble::Mat64& g3,
                            const ensemble::MatrixSet& omega4);

struct Clause {
  std::string id;  // "52", "53", "65", "66"
  int i = 1;
  bool holds = false;
  double lhs = 0;
  double rhs = 0;
};

struct Membership {
  bool member = false;
  std::vector<Clause> clauses;

  /// Id of the first failing clause, empty when member.
  std::string failed() const;
};

struct NParams {
  double limit = 0;  // N
  double m1 = 0;
  double h = 0;
  Letter max_letter = 1;
  double q_beta1 = 0;  // Q_{beta+1}
};

/// Both inequalities of the N-set, evaluated exactly. The two arcs must share lambda.
Membership in_N_set(const Quadruple& quad, const NParams& params);

/// Congruence form q(1) = q(2) = lcm, x_i a(1) = y_i a(2) (mod lcm), plus the l bound.
Membership in_M_set(const Quadruple& quad, Letter max_letter);

/// N / (2H) <= 150 A^3 x_i for i = 1, 2.
bool column_lower_bound(const Column& c, const NParams& params);

struct EnumerationOptions {
  std::size_t cap = 1'000'000;
  bool sample_on_overflow = false;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct Counterexample {
  Quadruple quad;
  std::size_t g3 = 0;  // index into Omega^(3)
  std::string reason;
};

struct InclusionReport {
  ensemble::StrategyCase strategy = ensemble::StrategyCase::Major;
  std::size_t g3_count = 0;
  std::size_t total = 0;        // quadruples evaluated
  std::size_t required = 0;     // quadruples in the full family
  bool sampled = false;
  std::size_t n_members = 0;
  std::size_t m_members = 0;
  std::size_t violations = 0;   // in N but not in M
  std::size_t diagonal = 0;
  std::size_t diagonal_failures = 0;  // diagonal quadruple outside N or M
  std::size_t y_zero = 0;
  std::size_t y_zero_mismatch = 0;    // Y = 0 with unequal columns
  std::size_t y_congruence_checked = 0;
  std::size_t y_congruence_failures = 0;  // Y != 0 mod lcm among N members
  std::size_t y_congruence_conditional_failures = 0;  // same, with every minor-case bound met
  std::size_t column_bound_failures = 0;  // N members with x_i or y_i >= Y (minor case)
  std::size_t lower_bound_failures = 0;   // columns failing N/(2H) <= 150A^3 x_i
  bool h54 = false;   // M1 >= 150 A^2 Q_{beta+1}
  bool h73 = false;   // 2 Y^2 Q_{beta+1} / N < 1 / Q_{alpha+1}
  bool h9a = false;   // (9A)^5 < Q1
  double m1 = 0, big_y = 0;
  std::optional<Counterexample> first_violation;
  std::optional<Counterexample> first_y_mismatch;

  /// The hypotheses the inclusion is conditional on.
  bool hypotheses_hold() const noexcept;
};

/// Every quadruple over (Omega^(2) x Omega^(4) x Z)^2 for each g3 in Omega^(3).
/// `enumeration` caps the grand total; past it, either ResourceError or sampling.
InclusionReport inclusion_report(const ensemble::Factorization& f, const ensemble::Ladder& ladder,
                                 Letter max_letter, std::span<const arcs::ArcPoint> Z,
                                 ensemble::StrategyCase strategy,
                                 const EnumerationOptions& enumeration = {});

struct CardinalityReport {
  std::size_t measured = 0;
  std::size_t predicted = 0;
  bool equal = false;
  bool lower_bound_holds = false;  // measured >= predicted
  std::size_t g2_mismatches = 0;   // members with g2(1) != g2(2)
  std::size_t g4_mismatches = 0;   // members with g4(1)(0,1)^t != g4(2)(0,1)^t
  bool omega2_trivial = false;
  bool omega4_trivial = false;
  bool q3_bound = false;           // Q_3 >= (7A)^7
  bool t1_bound = false;           // (9A)^5 < T_1, so one l per class and column
  std::optional<Counterexample> first_mismatch;

  /// Conditions under which measured == predicted is a theorem.
  bool hypotheses_hold() const noexcept;
};

CardinalityReport M_cardinality_check(const ensemble::Factorization& f,
                                      const ensemble::Ladder& ladder, Letter max_letter,
                                      const ensemble::Element& g3,
                                      std::span<const arcs::ArcPoint> Z,
                                      std::size_t cap = 1'000'000);

nlohmann::json to_json(const Membership& m);
nlohmann::json to_json(const InclusionReport& r, const ensemble::Factorization& f);
nlohmann::json to_json(const CardinalityReport& r, const ensemble::Factorization& f);

}  // namespace zlab::verifier
