#include "zlab/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "zlab/error.hpp"

namespace zlab::verifier {

namespace {

using i128 = __int128;

BigInt big(i128 v) {
  const bool neg = v < 0;
  unsigned __int128 u = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1
                            : static_cast<unsigned __int128>(v);
  BigInt hi(static_cast<unsigned long>(static_cast<std::uint64_t>(u >> 64)));
  BigInt lo(static_cast<unsigned long>(static_cast<std::uint64_t>(u)));
  BigInt r = (hi << 64) + lo;
  return neg ? BigInt(-r) : r;
}

Rational exact(double v) { return Rational(v); }

i128 abs128(i128 v) { return v < 0 ? -v : v; }

std::int64_t pow9a5(Letter a) {
  std::int64_t b = 9 * static_cast<std::int64_t>(a), r = 1;
  for (int k = 0; k < 5; ++k) r *= b;
  return r;
}

// || x a1/q1 - y a2/q2 || as a reduced fraction numerator / (q1 q2).
Rational frac_distance(std::int64_t x, std::int64_t a1, std::int64_t q1, std::int64_t y,
                       std::int64_t a2, std::int64_t q2) {
  const i128 den = static_cast<i128>(q1) * q2;
  i128 num = (static_cast<i128>(x) * a1 % den) * q2 % den - (static_cast<i128>(y) * a2 % den) * q1 % den;
  num %= den;
  if (num < 0) num += den;
  const i128 d = std::min(num, den - num);
  Rational r(big(d), big(den));
  r.canonicalize();
  return r;
}

bool frac_zero(std::int64_t x, std::int64_t a1, std::int64_t y, std::int64_t a2, std::int64_t q) {
  const i128 r = (static_cast<i128>(x) * a1 - static_cast<i128>(y) * a2) % q;
  return r == 0;
}

void check_lambda(const Quadruple& quad) {
  if (quad.theta1.lambda != quad.theta2.lambda) {
    throw InputError("the two arcs must share lambda");
  }
}

bool same_class(std::span<const arcs::ArcPoint> Z) {
  for (const auto& p : Z) {
    if (p.alpha < 0 || p.alpha != Z.front().alpha || p.beta != Z.front().beta ||
        p.kappa != Z.front().kappa || p.lambda != Z.front().lambda) {
      return false;
    }
  }
  return true;
}

struct Tally {
  std::size_t total = 0, n = 0, m = 0, violations = 0, diagonal = 0, diagonal_failures = 0;
  std::size_t y_zero = 0, y_zero_mismatch = 0, y_checked = 0, y_failures = 0, y_cond_failures = 0;
  std::size_t column_bound_failures = 0;
  std::optional<Counterexample> first_violation, first_y_mismatch;

  void merge(const Tally& t) {
    total += t.total;
    n += t.n;
    m += t.m;
    violations += t.violations;
    diagonal += t.diagonal;
    diagonal_failures += t.diagonal_failures;
    y_zero += t.y_zero;
    y_zero_mismatch += t.y_zero_mismatch;
    y_checked += t.y_checked;
    y_failures += t.y_failures;
    y_cond_failures += t.y_cond_failures;
    column_bound_failures += t.column_bound_failures;
    if (!first_violation) first_violation = t.first_violation;
    if (!first_y_mismatch) first_y_mismatch = t.first_y_mismatch;
  }
};

struct Context {
  NParams params;
  Letter max_letter = 1;
  bool minor = false;
  bool h73 = false;
  double big_y = 0;
};

void evaluate(const Quadruple& quad, std::size_t g3, bool diagonal, const Context& ctx, Tally& t) {
  ++t.total;
  const Membership n = in_N_set(quad, ctx.params);
  const Membership m = in_M_set(quad, ctx.max_letter);
  t.n += n.member;
  t.m += m.member;
  if (diagonal) {
    ++t.diagonal;
    if (!n.member || !m.member) ++t.diagonal_failures;
  }
  if (n.member && !m.member) {
    ++t.violations;
    if (!t.first_violation) t.first_violation = Counterexample{quad, g3, "in N but not in M: " + m.failed()};
  }
  const BigInt yy = script_y(quad);
  if (yy == 0) {
    ++t.y_zero;
    if (quad.x.x1 != quad.y.x1 || quad.x.x2 != quad.y.x2) {
      ++t.y_zero_mismatch;
      if (!t.first_y_mismatch) t.first_y_mismatch = Counterexample{quad, g3, "Y = 0 with unequal columns"};
    }
  }
  if (n.member) {
    ++t.y_checked;
    const bool divisible = yy % BigInt(static_cast<long>(lcm_q(quad))) == 0;
    const double yb = ctx.big_y;
    const auto inside = [yb](std::int64_t v) { return v > 0 && static_cast<double>(v) < yb; };
    const bool bounded = inside(quad.x.x1) && inside(quad.x.x2) && inside(quad.y.x1) && inside(quad.y.x2);
    if (ctx.minor && !bounded) ++t.column_bound_failures;
    if (!divisible) {
      ++t.y_failures;
      if (ctx.minor && ctx.h73 && bounded) ++t.y_cond_failures;
    }
  }
}

// Runs body(lo, hi, tally) over contiguous chunks of [0, n) and merges in chunk order.
template <class Body>
Tally parallel_chunks(std::size_t n, int threads, Body body) {
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, std::max<std::size_t>(n, 1));
  std::vector<Tally> parts(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] { body(n * w / workers, n * (w + 1) / workers, parts[w]); });
    }
  }
  Tally out;
  for (const auto& p : parts) out.merge(p);
  return out;
}

nlohmann::json column_json(const Column& c, const ensemble::Factorization& f) {
  return {{"x", {c.x1, c.x2}},
          {"g2", f.omega[1].at(c.g2).word.to_string()},
          {"g4", f.omega[3].at(c.g4).word.to_string()}};
}

nlohmann::json counterexample_json(const std::optional<Counterexample>& c,
                                   const ensemble::Factorization& f) {
  if (!c) return nullptr;
  return {{"reason", c->reason},
          {"g3", f.omega[2].at(c->g3).word.to_string()},
          {"column1", column_json(c->quad.x, f)},
          {"column2", column_json(c->quad.y, f)},
          {"theta1", arcs::to_json(c->quad.theta1)},
          {"theta2", arcs::to_json(c->quad.theta2)}};
}

}  // namespace

std::int64_t xbar(std::int64_t x) noexcept { return std::max<std::int64_t>(1, x < 0 ? -x : x); }

BigInt script_y(const Quadruple& quad) {
  return big(static_cast<i128>(quad.x.x1) * quad.y.x2 - static_cast<i128>(quad.x.x2) * quad.y.x1);
}

std::int64_t lcm_q(const Quadruple& quad) { return std::lcm(quad.theta1.q, quad.theta2.q); }

std::vector<Column> columns(const ensemble::MatrixSet& omega2, const ensemble::Mat64& g3,
                            const ensemble::MatrixSet& omega4) {
  std::vector<Column> out;
  out.reserve(omega2.size() * omega4.size());
  for (std::size_t i = 0; i < omega2.size(); ++i) {
    const ensemble::Mat64 left = ensemble::multiply_checked(omega2[i].matrix, g3);
    for (std::size_t k = 0; k < omega4.size(); ++k) {
      const ensemble::Mat64 g = ensemble::multiply_checked(left, omega4[k].matrix);
      if (g.b > static_cast<std::uint64_t>(INT64_MAX) || g.d > static_cast<std::uint64_t>(INT64_MAX)) {
        throw ResourceError("column entries exceed 63 bits");
      }
      out.push_back({static_cast<std::int64_t>(g.b), static_cast<std::int64_t>(g.d), i, k});
    }
  }
  return out;
}

std::string Membership::failed() const {
  for (const auto& c : clauses) {
    if (!c.holds) return "(" + c.id + ") i=" + std::to_string(c.i);
  }
  return {};
}

Membership in_N_set(const Quadruple& quad, const NParams& params) {
  check_lambda(quad);
  const auto& t1 = quad.theta1;
  const auto& t2 = quad.theta2;
  const Rational n = exact(params.limit);
  const Rational a(static_cast<long>(params.max_letter));
  const Rational qb = exact(params.q_beta1);
  const Rational lambda = exact(t1.lambda);
  const std::int64_t c95 = pow9a5(params.max_letter);
  const Rational third = Rational(74) * a * a * qb / exact(params.m1);

  Membership out;
  out.member = true;
  const std::int64_t xs[2] = {quad.x.x1, quad.x.x2};
  const std::int64_t ys[2] = {quad.y.x1, quad.y.x2};
  for (int i = 0; i < 2; ++i) {
    const std::int64_t x = xs[i], y = ys[i];
    const Rational dist = frac_distance(x, t1.a, t1.q, y, t2.a, t2.q);
    const i128 ldiff = static_cast<i128>(x) * t1.l - static_cast<i128>(y) * t2.l;
    const Rational rx(static_cast<long>(x));

    Rational first = Rational(150) * a * a * a * rx / n +
                     dist_to_integer(Rational(big(ldiff)) / (2 * n)) +
                     dist_to_integer(lambda * Rational(static_cast<long>(x - y)) / n);
    first.canonicalize();
    Rational second = Rational(static_cast<long>(c95)) * rx * qb / n;
    second.canonicalize();
    const Rational bound = std::min({first, second, third});
    Clause c52{"52", i + 1, dist <= bound, dist.get_d(), bound.get_d()};

    const Rational lhs53(big(abs128(ldiff)));
    Rational rhs53 = Rational(static_cast<long>(c95)) * rx + 2 * n * dist;
    rhs53.canonicalize();
    Clause c53{"53", i + 1, lhs53 <= rhs53, lhs53.get_d(), rhs53.get_d()};

    out.member = out.member && c52.holds && c53.holds;
    out.clauses.push_back(c52);
    out.clauses.push_back(c53);
  }
  return out;
}

Membership in_M_set(const Quadruple& quad, Letter max_letter) {
  const auto& t1 = quad.theta1;
  const auto& t2 = quad.theta2;
  const i128 c95 = pow9a5(max_letter);
  Membership out;
  out.member = true;
  const std::int64_t xs[2] = {quad.x.x1, quad.x.x2};
  const std::int64_t ys[2] = {quad.y.x1, quad.y.x2};
  for (int i = 0; i < 2; ++i) {
    const std::int64_t x = xs[i], y = ys[i];
    const bool c65 = t1.q == t2.q && frac_zero(x, t1.a, y, t2.a, t1.q);
    const double dist = frac_distance(x, t1.a, t1.q, y, t2.a, t2.q).get_d();
    const i128 ldiff = abs128(static_cast<i128>(x) * t1.l - static_cast<i128>(y) * t2.l);
    const i128 rhs = c95 * x;
    out.clauses.push_back({"65", i + 1, c65, dist, 0});
    out.clauses.push_back({"66", i + 1, ldiff <= rhs, static_cast<double>(ldiff), static_cast<double>(rhs)});
    out.member = out.member && c65 && ldiff <= rhs;
  }
  return out;
}

bool column_lower_bound(const Column& c, const NParams& params) {
  const Rational a(static_cast<long>(params.max_letter));
  const Rational lhs = exact(params.limit) / (2 * exact(params.h));
  const Rational k = Rational(150) * a * a * a;
  return lhs <= k * Rational(static_cast<long>(c.x1)) && lhs <= k * Rational(static_cast<long>(c.x2));
}

bool InclusionReport::hypotheses_hold() const noexcept { return h54; }

InclusionReport inclusion_report(const ensemble::Factorization& f, const ensemble::Ladder& ladder,
                                 Letter max_letter, std::span<const arcs::ArcPoint> Z,
                                 ensemble::StrategyCase strategy,
                                 const EnumerationOptions& enumeration) {
  if (Z.empty()) throw InputError("Z must be non-empty");
  if (!same_class(Z)) throw InputError("Z must lie in one arc class");
  if (strategy == ensemble::StrategyCase::Auto) throw InputError("strategy must be major or minor");
  const auto& omega2 = f.omega[1];
  const auto& omega3 = f.omega[2];
  const auto& omega4 = f.omega[3];
  const int alpha = Z.front().alpha, beta = Z.front().beta;
  const double a = max_letter;

  Context ctx;
  ctx.max_letter = max_letter;
  ctx.params = {ladder.limit, f.m1, f.h, max_letter, ladder.q(beta + 1)};
  ctx.minor = strategy == ensemble::StrategyCase::Minor;
  ctx.big_y = 75 * a * a * ladder.limit / f.m1;
  ctx.h73 = 2 * ctx.big_y * ctx.big_y * ladder.q(beta + 1) / ladder.limit < 1 / ladder.q(alpha + 1);

  InclusionReport rep;
  rep.strategy = strategy;
  rep.g3_count = omega3.size();
  rep.m1 = f.m1;
  rep.big_y = ctx.big_y;
  rep.h54 = f.m1 >= 150 * a * a * ladder.q(beta + 1);
  rep.h73 = ctx.h73;
  rep.h9a = static_cast<double>(pow9a5(max_letter)) < ladder.q1();

  const std::size_t c = omega2.size() * omega4.size();
  const std::size_t z = Z.size();
  const long double required = static_cast<long double>(omega3.size()) * c * c * z * z;
  rep.required = required > static_cast<long double>(SIZE_MAX) ? SIZE_MAX : static_cast<std::size_t>(required);
  const bool over = required > static_cast<long double>(enumeration.cap);
  if (over && !enumeration.sample_on_overflow) {
    throw ResourceError("inclusion enumeration needs " + std::to_string(rep.required) +
                        " quadruples; cap is " + std::to_string(enumeration.cap));
  }

  Tally total;
  std::vector<std::vector<Column>> cols;
  cols.reserve(omega3.size());
  for (const auto& g3 : omega3) cols.push_back(columns(omega2, g3.matrix, omega4));
  for (std::size_t g = 0; g < omega3.size(); ++g) {
    for (const auto& col : cols[g]) {
      if (!column_lower_bound(col, ctx.params)) ++rep.lower_bound_failures;
    }
  }

  if (over) {
    rep.sampled = true;
    std::mt19937_64 rng(enumeration.seed);
    const auto pick = [&rng](std::size_t n) {
      return static_cast<std::size_t>(std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng));
    };
    for (std::size_t s = 0; s < enumeration.cap; ++s) {
      const std::size_t g = pick(omega3.size());
      const std::size_t i = pick(c), k = pick(c), u = pick(z), v = pick(z);
      const Quadruple quad{cols[g][i], cols[g][k], Z[u], Z[v]};
      evaluate(quad, g, i == k && u == v, ctx, total);
    }
  } else {
    for (std::size_t g = 0; g < omega3.size(); ++g) {
      const auto& cg = cols[g];
      total.merge(parallel_chunks(c, enumeration.threads, [&](std::size_t lo, std::size_t hi, Tally& t) {
        for (std::size_t i = lo; i < hi; ++i) {
          for (std::size_t k = 0; k < c; ++k) {
            for (std::size_t u = 0; u < z; ++u) {
              for (std::size_t v = 0; v < z; ++v) {
                evaluate({cg[i], cg[k], Z[u], Z[v]}, g, i == k && u == v, ctx, t);
              }
            }
          }
        }
      }));
    }
  }

  rep.total = total.total;
  rep.n_members = total.n;
  rep.m_members = total.m;
  rep.violations = total.violations;
  rep.diagonal = total.diagonal;
  rep.diagonal_failures = total.diagonal_failures;
  rep.y_zero = total.y_zero;
  rep.y_zero_mismatch = total.y_zero_mismatch;
  rep.y_congruence_checked = total.y_checked;
  rep.y_congruence_failures = total.y_failures;
  rep.y_congruence_conditional_failures = total.y_cond_failures;
  rep.column_bound_failures = total.column_bound_failures;
  rep.first_violation = total.first_violation;
  rep.first_y_mismatch = total.first_y_mismatch;
  return rep;
}

CardinalityReport M_cardinality_check(const ensemble::Factorization& f,
                                      const ensemble::Ladder& ladder, Letter max_letter,
                                      const ensemble::Element& g3,
                                      std::span<const arcs::ArcPoint> Z, std::size_t cap) {
  if (Z.empty()) throw InputError("Z must be non-empty");
  if (!same_class(Z)) throw InputError("Z must lie in one arc class");
  const auto& omega2 = f.omega[1];
  const auto& omega4 = f.omega[3];
  const std::vector<Column> cols = columns(omega2, g3.matrix, omega4);
  const long double required = static_cast<long double>(cols.size()) * cols.size() * Z.size() * Z.size();
  if (required > static_cast<long double>(cap)) {
    throw ResourceError("cardinality check needs " + std::to_string(static_cast<double>(required)) +
                        " quadruples; cap is " + std::to_string(cap));
  }
  const auto g3_index = static_cast<std::size_t>(
      std::find_if(f.omega[2].begin(), f.omega[2].end(),
                   [&](const ensemble::Element& e) { return e.matrix == g3.matrix; }) -
      f.omega[2].begin());

  CardinalityReport rep;
  rep.predicted = omega2.size() * omega4.size() * Z.size();
  rep.omega2_trivial = omega2.size() == 1 && omega2.front().matrix == ensemble::Mat64::identity();
  rep.omega4_trivial = omega4.size() == 1 && omega4.front().matrix == ensemble::Mat64::identity();
  const double a7 = std::pow(7.0 * max_letter, 7);
  rep.q3_bound = ladder.q(3) >= a7;
  rep.t1_bound = static_cast<double>(pow9a5(max_letter)) < 7 * ladder.q(7);

  for (const auto& x : cols) {
    for (const auto& y : cols) {
      for (std::size_t u = 0; u < Z.size(); ++u) {
        for (std::size_t v = 0; v < Z.size(); ++v) {
          const Quadruple quad{x, y, Z[u], Z[v]};
          if (!in_M_set(quad, max_letter).member) continue;
          ++rep.measured;
          const auto& m4x = omega4[x.g4].matrix;
          const auto& m4y = omega4[y.g4].matrix;
          const bool g2_differs = x.g2 != y.g2;
          const bool g4_differs = m4x.b != m4y.b || m4x.d != m4y.d;
          rep.g2_mismatches += g2_differs;
          rep.g4_mismatches += g4_differs;
          const bool off_diagonal = g2_differs || x.g4 != y.g4 || u != v;
          if (off_diagonal && !rep.first_mismatch) {
            rep.first_mismatch = Counterexample{quad, g3_index, "off-diagonal member of M"};
          }
        }
      }
    }
  }
  rep.equal = rep.measured == rep.predicted;
  rep.lower_bound_holds = rep.measured >= rep.predicted;
  return rep;
}

bool CardinalityReport::hypotheses_hold() const noexcept {
  return (omega2_trivial || q3_bound) && (omega4_trivial || q3_bound) && t1_bound;
}

nlohmann::json to_json(const Membership& m) {
  nlohmann::json clauses = nlohmann::json::array();
  for (const auto& c : m.clauses) {
    clauses.push_back({{"id", c.id}, {"i", c.i}, {"holds", c.holds}, {"lhs", c.lhs}, {"rhs", c.rhs}});
  }
  return {{"member", m.member}, {"clauses", clauses}};
}

nlohmann::json to_json(const InclusionReport& r, const ensemble::Factorization& f) {
  return {{"strategy", ensemble::to_string(r.strategy)},
          {"g3_count", r.g3_count},
          {"total", r.total},
          {"required", r.required},
          {"sampled", r.sampled},
          {"n_members", r.n_members},
          {"m_members", r.m_members},
          {"violations", r.violations},
          {"diagonal", r.diagonal},
          {"diagonal_failures", r.diagonal_failures},
          {"y_zero", r.y_zero},
          {"y_zero_mismatch", r.y_zero_mismatch},
          {"y_congruence_checked", r.y_congruence_checked},
          {"y_congruence_failures", r.y_congruence_failures},
          {"y_congruence_conditional_failures", r.y_congruence_conditional_failures},
          {"column_bound_failures", r.column_bound_failures},
          {"lower_bound_failures", r.lower_bound_failures},
          {"hypotheses", {{"h54", r.h54}, {"h73", r.h73}, {"h9a", r.h9a}}},
          {"m1", r.m1},
          {"Y", r.big_y},
          {"first_violation", counterexample_json(r.first_violation, f)},
          {"first_y_mismatch", counterexample_json(r.first_y_mismatch, f)}};
}

nlohmann::json to_json(const CardinalityReport& r, const ensemble::Factorization& f) {
  return {{"measured", r.measured},
          {"predicted", r.predicted},
          {"equal", r.equal},
          {"lower_bound_holds", r.lower_bound_holds},
          {"g2_mismatches", r.g2_mismatches},
          {"g4_mismatches", r.g4_mismatches},
          {"hypotheses",
           {{"omega2_trivial", r.omega2_trivial},
            {"omega4_trivial", r.omega4_trivial},
            {"q3_bound", r.q3_bound},
            {"t1_bound", r.t1_bound}}},
          {"first_mismatch", counterexample_json(r.first_mismatch, f)}};
}

}  // namespace zlab::verifier
