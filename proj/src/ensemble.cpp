#include "zlab/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include "zlab/error.hpp"

namespace zlab::ensemble {

namespace {

std::uint64_t mul_add(std::uint64_t x, std::uint64_t y, std::uint64_t z) {
  std::uint64_t p = 0, s = 0;
  if (__builtin_mul_overflow(x, y, &p) || __builtin_add_overflow(p, z, &s)) {
    throw ResourceError("matrix entry exceeds 64 bits");
  }
  return s;
}

// Right-multiply by the generator (0 1; 1 x).
Mat64 append_letter(const Mat64& g, Letter x) {
  return {g.b, mul_add(g.b, x, g.a), g.d, mul_add(g.d, x, g.c)};
}

auto key(const Mat64& m) { return std::tie(m.a, m.b, m.c, m.d); }

bool nearly_leq(double x, double y) { return x <= y * (1 + 1e-12); }

// Uniform integer in [0, bound) from raw engine output, without modulo bias.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

// Floyd's sampling of k distinct indices from [0, n), returned sorted.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::unordered_set<std::size_t> chosen;
  for (std::size_t j = n - k; j < n; ++j) {
    const std::size_t t = uniform_below(rng, j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::size_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t factor_seed(std::uint64_t seed, int j) {
  return seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(j + 1);
}

}  // namespace

Mat64 word_matrix64(const Word& w) {
  Mat64 g = Mat64::identity();
  for (Letter x : w.quotients()) g = append_letter(g, x);
  return g;
}

Mat64 multiply_checked(const Mat64& l, const Mat64& r) {
  auto dot = [](std::uint64_t x1, std::uint64_t y1, std::uint64_t x2, std::uint64_t y2) {
    return mul_add(x1, y1, mul_add(x2, y2, 0));
  };
  return {dot(l.a, r.a, l.b, r.c), dot(l.a, r.b, l.b, r.d), dot(l.c, r.a, l.d, r.c),
          dot(l.c, r.b, l.d, r.d)};
}

// ---------------------------------------------------------------- ladder

double Ladder::lower_branch(double limit, double eps0, int j) {
  return std::exp(std::log(limit) * std::pow(1 - eps0, 1 - j) / (2 - eps0));
}

double Ladder::upper_branch(double limit, double eps0, int j) {
  return std::exp(std::log(limit) * (1 - std::pow(1 - eps0, j) / (2 - eps0)));
}

double Ladder::rung(int j) const {
  if (j < lowest_index() || j > highest_index()) {
    throw InputError("ladder index " + std::to_string(j) + " out of range");
  }
  return rungs[static_cast<std::size_t>(j + J + 1)];
}

double Ladder::q1() const { return q1_value; }

double Ladder::q(int j) const {
  if (j < 0) throw InputError("Q_j needs j >= 0");
  return j == 0 ? 0.0 : std::pow(q1_value, j);
}

Ladder build_ladder(double limit, double eps0, Letter max_letter,
                    std::optional<double> q1_override) {
  if (!(limit >= 16)) throw InputError("ladder needs N >= 16");
  if (!(eps0 > 0 && eps0 < 1)) throw InputError("eps0 must lie in (0, 1)");
  if (q1_override && !(*q1_override > 1)) throw InputError("Q1 must exceed 1");

  Ladder lad;
  lad.limit = limit;
  lad.eps0 = eps0;
  while (lad.J < 100000 && Ladder::lower_branch(limit, eps0, -(lad.J + 1) - 1) >= 2) ++lad.J;
  if (Ladder::lower_branch(limit, eps0, -1) < 2) lad.J = 0;

  for (int j = -lad.J - 1; j <= lad.J + 1; ++j) {
    double v;
    if (j == lad.J + 1) {
      v = limit;
    } else if (j <= 1) {
      v = Ladder::lower_branch(limit, eps0, j);
    } else {
      v = Ladder::upper_branch(limit, eps0, j);
    }
    lad.rungs.push_back(v);
  }

  if (q1_override) {
    lad.log_q1 = std::log(*q1_override);
    lad.q1_value = *q1_override;
    lad.q1_overridden = true;
  } else {
    const double a = max_letter;
    lad.log_q1 = a * a * a * a / std::pow(eps0, 5);
    lad.q1_value = std::exp(lad.log_q1);
  }
  return lad;
}

LadderCheck check_ladder(const Ladder& lad) {
  LadderCheck out;
  const double log_n = std::log(lad.limit);
  const double slack = 1e-12 * log_n;
  const double keep = 1 - lad.eps0;
  for (int m = -lad.J - 1; m <= lad.J - 1; ++m) {
    const double lo = std::log(lad.rung(m)), hi = std::log(lad.rung(m + 1));
    ++out.pairs_checked;
    const bool first = lo >= keep * hi - slack;
    const bool second = log_n - hi >= keep * (log_n - lo) - slack;
    if (!first || !second) ++out.violations;
  }
  for (int j : {0, 1}) {
    const double l = Ladder::lower_branch(lad.limit, lad.eps0, j);
    const double u = Ladder::upper_branch(lad.limit, lad.eps0, j);
    out.max_branch_mismatch = std::max(out.max_branch_mismatch, std::abs(l - u) / u);
  }
  out.top_exact = lad.rung(lad.J + 1) == lad.limit;
  out.increasing = std::adjacent_find(lad.rungs.begin(), lad.rungs.end(),
                                      std::greater_equal<>()) == lad.rungs.end();
  return out;
}

// ---------------------------------------------------------------- matrix sets

MatrixSet identity_set() { return {Element{Word{}, Mat64::identity()}}; }

void normalize(MatrixSet& set) {
  std::sort(set.begin(), set.end(),
            [](const Element& x, const Element& y) { return key(x.matrix) < key(y.matrix); });
  set.erase(std::unique(set.begin(), set.end(),
                        [](const Element& x, const Element& y) { return x.matrix == y.matrix; }),
            set.end());
}

MatrixSet set_product(const MatrixSet& lhs, const MatrixSet& rhs, std::size_t cap) {
  if (!lhs.empty() && rhs.size() > cap / lhs.size()) {
    throw ResourceError("set product of " + std::to_string(lhs.size()) + " x " +
                        std::to_string(rhs.size()) + " exceeds cap " + std::to_string(cap));
  }
  MatrixSet out;
  out.reserve(lhs.size() * rhs.size());
  for (const Element& x : lhs) {
    for (const Element& y : rhs) {
      out.push_back(Element{x.word.concat(y.word), multiply_checked(x.matrix, y.matrix)});
    }
  }
  normalize(out);
  return out;
}

MatrixSet Ensemble::product(int first, int last, std::size_t cap) const {
  if (first < 1 || last > factor_count() + 1 || first > last) {
    throw InputError("factor range out of bounds");
  }
  MatrixSet acc = identity_set();
  for (int j = first; j < last; ++j) acc = set_product(acc, factor(j), cap);
  return acc;
}

std::vector<Element> window_elements(const Alphabet& alphabet, double lo, double hi,
                                     std::size_t enumeration_cap) {
  std::vector<Element> out;
  struct Frame {
    Mat64 m;
    std::size_t depth;
  };
  std::vector<Letter> path;
  std::vector<Frame> stack;
  // Recursive DFS written iteratively: each frame remembers which letter to try next.
  std::vector<std::size_t> next_letter;
  stack.push_back({Mat64::identity(), 0});
  next_letter.push_back(0);
  const auto letters = alphabet.letters();
  while (!stack.empty()) {
    std::size_t& idx = next_letter.back();
    if (idx == letters.size()) {
      stack.pop_back();
      next_letter.pop_back();
      if (!path.empty()) path.pop_back();
      continue;
    }
    const Letter x = letters[idx++];
    const Mat64& g = stack.back().m;
    const double norm_bound = static_cast<double>(g.d) * x + static_cast<double>(g.c);
    if (norm_bound > hi) {
      idx = letters.size();  // letters are sorted, so the rest exceed hi too
      continue;
    }
    Mat64 child = append_letter(g, x);
    path.push_back(x);
    const std::size_t depth = stack.back().depth + 1;
    if (depth % 2 == 0 && static_cast<double>(child.d) >= lo) {
      if (out.size() >= enumeration_cap) {
        throw ResourceError("window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                            "] holds more than " + std::to_string(enumeration_cap) + " words");
      }
      out.push_back(Element{Word(path), child});
    }
    stack.push_back({child, depth});
    next_letter.push_back(0);
  }
  return out;
}

Ensemble build_preensembles(const Ladder& ladder, const Alphabet& alphabet,
                            const SamplingPolicy& policy) {
  if (policy.cap == 0) throw InputError("per-factor cap must be positive");
  Ensemble e;
  e.alphabet = alphabet;
  e.ladder = ladder;
  e.policy = policy;
  const double divisor =
      policy.window_divisor > 0 ? policy.window_divisor : 2.0 * alphabet.max_letter();
  const int count = 2 * ladder.J + 1;
  for (int j = 1; j <= count; ++j) {
    const double ratio = ladder.rung(j - ladder.J) / ladder.rung(j - ladder.J - 1);
    const double lo = ratio / divisor, hi = ratio;
    std::vector<Element> all = window_elements(alphabet, lo, hi, policy.enumeration_cap);
    if (all.empty()) {
      std::ostringstream msg;
      msg << "empty pre-ensemble window for j=" << j << ": norms in [" << lo << ", " << hi
          << "]";
      throw InputError(msg.str());
    }
    e.window_population.push_back(all.size());
    MatrixSet factor;
    if (all.size() <= policy.cap) {
      factor = std::move(all);
    } else if (policy.exhaustive) {
      throw ResourceError("factor j=" + std::to_string(j) + " has " + std::to_string(all.size()) +
                          " elements, above cap " + std::to_string(policy.cap));
    } else {
      for (std::size_t i : sample_indices(all.size(), policy.cap, factor_seed(policy.seed, j))) {
        factor.push_back(std::move(all[i]));
      }
    }
    normalize(factor);
    e.factors.push_back(std::move(factor));
    e.windows.emplace_back(lo, hi);
  }
  return e;
}

// ---------------------------------------------------------------- factorization

MatrixSet Factorization::tail(std::size_t cap) const {
  return set_product(set_product(omega[1], omega[2], cap), omega[3], cap);
}

Factorization factorize(const Ensemble& ensemble, double m1, double m2, double m4,
                        const EnsembleConstants& constants, std::size_t cap) {
  const Ladder& lad = ensemble.ladder;
  const double n = lad.limit, q1 = lad.q1();
  auto admissible = [&](double m) { return m >= q1 && nearly_leq(m, n); };
  if (!admissible(m1)) throw InputError("M1 must lie in [Q1, N]");
  if (m2 != 1 && !admissible(m2)) throw InputError("M2 must be 1 or lie in [Q1, N]");
  if (m4 != 1 && !admissible(m4)) throw InputError("M4 must be 1 or lie in [Q1, N]");
  if (!nearly_leq(m1 * m2 * m4, n)) throw InputError("M-product exceeds N");

  Factorization f;
  f.m1 = m1;
  f.m2 = m2;
  f.m4 = m4;
  f.h = constants.h_factor * std::pow(m1, 1 + 2 * lad.eps0);
  f.thresholds = {m1, m1 * m2, n / m4, n};

  const int top = 2 * lad.J + 2;
  auto index_for = [&](double u) {
    if (u >= n * (1 - 1e-12)) return top;
    for (int j = 1; j <= top - 1; ++j) {
      if (lad.rung(j - lad.J - 1) <= u && u < lad.rung(j - lad.J)) return j;
    }
    f.clamped = true;  // u < N_{-J}
    return 1;
  };
  f.j[0] = 1;
  for (int k = 1; k <= 3; ++k) f.j[k] = index_for(f.thresholds[k - 1]);
  f.j[4] = top;
  for (int k = 0; k < 4; ++k) f.omega[k] = ensemble.product(f.j[k], f.j[k + 1], cap);
  return f;
}

std::string to_string(StrategyCase c) {
  switch (c) {
    case StrategyCase::Auto: return "auto";
    case StrategyCase::Major: return "major";
    case StrategyCase::Minor: return "minor";
  }
  return "auto";
}

StrategyCase parse_strategy(const std::string& text) {
  if (text == "auto") return StrategyCase::Auto;
  if (text == "major" || text == "68") return StrategyCase::Major;
  if (text == "minor" || text == "71") return StrategyCase::Minor;
  throw InputError("unknown strategy case '" + text + "' (auto|major|minor)");
}

ParameterChoice choose_parameters(int alpha, int beta, const Ladder& lad, Letter max_letter,
                                  StrategyCase requested) {
  if (alpha < 0 || beta < 0) throw InputError("alpha and beta must be >= 0");
  ParameterChoice p;
  p.alpha = alpha;
  p.beta = beta;
  const double a2 = static_cast<double>(max_letter) * max_letter;
  const double n = lad.limit, eps = lad.eps0;
  const double log_qa1 = (alpha + 1) * lad.log_q1, log_qb1 = (beta + 1) * lad.log_q1;

  p.used = requested;
  if (requested == StrategyCase::Auto) {
    p.used = std::log(n) < 2.5 * log_qa1 + 1.5 * log_qb1 ? StrategyCase::Minor
                                                         : StrategyCase::Major;
  }
  if (p.used == StrategyCase::Major) {
    p.m1 = 150 * a2 * lad.q(alpha + 1) * lad.q(alpha + 1) * lad.q(beta + 1);
  } else {
    p.m1 = 120 * a2 * std::sqrt(n * lad.q(alpha + 1) * lad.q(beta + 1));
  }

  const double q1 = lad.q1(), q3 = lad.q(3);
  p.m2_raw = beta == 0 ? 0.0 : std::pow(p.m1, -2 * eps) * std::pow(lad.q(beta), 0.5 - 2 * eps) / q3;
  p.m4_raw = alpha == 0 ? 0.0 : std::sqrt(lad.q(alpha)) / q3;
  p.m2 = p.m2_raw >= q1 ? p.m2_raw : 1.0;
  p.m4 = p.m4_raw >= q1 ? p.m4_raw : 1.0;

  p.product_within_limit = p.m1 * p.m2_raw * p.m4_raw <= n;
  p.resolved_within_limit = nearly_leq(p.m1 * p.m2 * p.m4, n);
  p.m1_in_range = p.m1 >= q1 && nearly_leq(p.m1, n);
  const bool feasible = p.resolved_within_limit && p.m1_in_range;
  p.tag = to_string(p.used) + (feasible ? ":feasible" : ":infeasible");
  if (!p.m1_in_range) p.tag += ";M1-outside-[Q1,N]";
  if (!p.resolved_within_limit) p.tag += ";M-product-exceeds-N";
  return p;
}

// ---------------------------------------------------------------- diagnostics

WindowReport diagnose(const Ensemble& e, const EnsembleConstants& c, std::size_t cap) {
  WindowReport rep;
  const int k = e.factor_count();
  const int J = e.ladder.J;
  const double a2 = static_cast<double>(e.alphabet.max_letter()) * e.alphabet.max_letter();
  const double n = e.ladder.limit;

  double total = 1;
  for (const auto& f : e.factors) total *= static_cast<double>(f.size());
  const bool exhaustive = total <= static_cast<double>(cap);
  rep.truncated = !exhaustive;
  const std::size_t tuples = exhaustive ? static_cast<std::size_t>(total) : cap;

  std::mt19937_64 rng(factor_seed(e.policy.seed, -2));
  std::vector<std::size_t> pick(static_cast<std::size_t>(k), 0);
  std::vector<Mat64> prefix(static_cast<std::size_t>(k)), suffix(static_cast<std::size_t>(k) + 1);
  for (std::size_t t = 0; t < tuples; ++t) {
    if (exhaustive) {
      std::size_t rest = t;
      for (int i = k - 1; i >= 0; --i) {
        pick[i] = rest % e.factors[i].size();
        rest /= e.factors[i].size();
      }
    } else {
      for (int i = 0; i < k; ++i) pick[i] = uniform_below(rng, e.factors[i].size());
    }
    Mat64 acc = Mat64::identity();
    long double norm_product = 1;
    for (int i = 0; i < k; ++i) {
      const Element& xi = e.factors[i][pick[i]];
      acc = multiply_checked(acc, xi.matrix);
      prefix[i] = acc;
      norm_product *= static_cast<long double>(xi.norm());
      const long double got = static_cast<long double>(acc.d);
      ++rep.sandwich_checks;
      if (got < norm_product || got > std::ldexp(norm_product, i)) ++rep.sandwich_violations;
      // prefix window for j = i + 1
      const double nj = e.ladder.rung(i + 1 - J);
      ++rep.prefix_samples;
      if (static_cast<double>(acc.d) >= nj / (c.prefix_lower * a2) &&
          static_cast<double>(acc.d) <= c.prefix_upper * nj) {
        ++rep.prefix_inside;
      }
    }
    suffix[k] = Mat64::identity();
    for (int i = k - 1; i >= 0; --i) {
      suffix[i] = multiply_checked(e.factors[i][pick[i]].matrix, suffix[i + 1]);
      // suffix xi_{j+1}..xi_{2J+1} with j = i
      const double nj = e.ladder.rung(i - J);
      const double v = static_cast<double>(suffix[i].d);
      ++rep.suffix_samples;
      if (v >= n / (c.suffix_lower * a2 * nj) && v <= c.suffix_upper * a2 * n / nj) {
        ++rep.suffix_inside;
      }
    }
    ++rep.tuples;
  }
  return rep;
}

SpreadReport spread_report(const MatrixSet& omega, Letter max_letter,
                           const EnsembleConstants& c) {
  SpreadReport rep;
  if (omega.empty()) return rep;
  auto [lo, hi] = std::minmax_element(omega.begin(), omega.end(), [](const auto& x, const auto& y) {
    return x.norm() < y.norm();
  });
  rep.min_norm = lo->norm();
  rep.max_norm = hi->norm();
  rep.ratio = static_cast<double>(rep.max_norm) / static_cast<double>(rep.min_norm);
  const double a = max_letter;
  rep.bound = c.spread * a * a * a * a;
  rep.within = rep.ratio <= rep.bound;
  return rep;
}

// ---------------------------------------------------------------- output

nlohmann::json to_json(const Ladder& lad) {
  nlohmann::json rungs = nlohmann::json::array();
  for (int j = lad.lowest_index(); j <= lad.highest_index(); ++j) {
    rungs.push_back({{"j", j}, {"value", lad.rung(j)}});
  }
  nlohmann::json out = {{"N", lad.limit},    {"eps0", lad.eps0}, {"J", lad.J},
                        {"log_Q1", lad.log_q1}, {"Q1_overridden", lad.q1_overridden},
                        {"rungs", rungs}};
  const double q1 = lad.q1();
  if (std::isfinite(q1)) out["Q1"] = q1; else out["Q1"] = nullptr;
  return out;
}

nlohmann::json to_json(const Factorization& f) {
  nlohmann::json omegas = nlohmann::json::array();
  for (int k = 0; k < 4; ++k) {
    std::uint64_t lo = 0, hi = 0;
    if (!f.omega[k].empty()) {
      lo = hi = f.omega[k].front().norm();
      for (const auto& el : f.omega[k]) {
        lo = std::min(lo, el.norm());
        hi = std::max(hi, el.norm());
      }
    }
    omegas.push_back({{"k", k + 1},
                      {"first_factor", f.j[k]},
                      {"last_factor", f.j[k + 1] - 1},
                      {"cardinality", f.omega[k].size()},
                      {"min_norm", lo},
                      {"max_norm", hi}});
  }
  return {{"indices", f.j}, {"M1", f.m1},   {"M2", f.m2},
          {"M4", f.m4},     {"H", f.h},     {"thresholds", f.thresholds},
          {"clamped", f.clamped}, {"omega", omegas}};
}

nlohmann::json to_json(const Ensemble& e) {
  nlohmann::json factors = nlohmann::json::array();
  for (int j = 1; j <= e.factor_count(); ++j) {
    factors.push_back({{"j", j},
                       {"window", {e.windows[j - 1].first, e.windows[j - 1].second}},
                       {"population", e.window_population[j - 1]},
                       {"cardinality", e.factor(j).size()}});
  }
  return {{"alphabet", e.alphabet.to_string()},
          {"ladder", to_json(e.ladder)},
          {"policy",
           {{"exhaustive", e.policy.exhaustive},
            {"cap", e.policy.cap},
            {"seed", e.policy.seed},
            {"window_divisor", e.policy.window_divisor}}},
          {"factors", factors}};
}

void write_word_list(std::ostream& out, const MatrixSet& set) {
  for (const Element& el : set) out << el.word.to_string() << '\n';
}

}  // namespace zlab::ensemble
