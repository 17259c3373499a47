#pragma once

// Independent oracles and generators shared by the unit and acceptance suites.
// Nothing here calls into the library routine it is meant to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "zlab/arcs.hpp"
#include "zlab/cf.hpp"
#include "zlab/ensemble.hpp"

namespace testing_support {

using zlab::Letter;

// [d1,...,dk] evaluated from the innermost quotient outwards.
inline mpq_class backward_value(const std::vector<Letter>& w) {
  mpq_class x = 0;
  for (auto it = w.rbegin(); it != w.rend(); ++it) {
    x = 1 / (mpq_class(*it) + x);
    x.canonicalize();
  }
  return x;
}

// Numerator and denominator of [w] in lowest terms, in 64 bits.
inline std::pair<std::uint64_t, std::uint64_t> backward_fraction(const std::vector<Letter>& w) {
  std::uint64_t num = 0, den = 1;
  for (auto it = w.rbegin(); it != w.rend(); ++it) {
    const std::uint64_t next = *it * den + num;
    num = den;
    den = next;
  }
  const std::uint64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

// Smallest length whose all-minimal-letter word has denominator above n.
inline std::size_t length_bound(const std::vector<Letter>& letters, std::uint64_t n) {
  const Letter m = *std::min_element(letters.begin(), letters.end());
  std::size_t len = 0;
  while (true) {
    ++len;
    if (backward_fraction(std::vector<Letter>(len, m)).second > n) return len;
  }
}

struct NaiveCensus {
  std::vector<bool> present;         // index d
  std::vector<std::uint32_t> r;      // distinct numerators per d
};

// Visits every word of length <= L(n) with an odometer, no pruning.
inline NaiveCensus naive_census(const std::vector<Letter>& letters, std::uint64_t n) {
  const std::size_t L = length_bound(letters, n);
  std::vector<std::set<std::uint64_t>> nums(n + 1);
  for (std::size_t len = 1; len < L; ++len) {
    std::vector<std::size_t> idx(len, 0);
    std::vector<Letter> w(len);
    while (true) {
      for (std::size_t i = 0; i < len; ++i) w[i] = letters[idx[i]];
      const auto [b, d] = backward_fraction(w);
      if (d <= n) nums[d].insert(b);
      std::size_t pos = 0;
      while (pos < len && ++idx[pos] == letters.size()) idx[pos++] = 0;
      if (pos == len) break;
    }
  }
  NaiveCensus out;
  out.present.assign(n + 1, false);
  out.r.assign(n + 1, 0);
  for (std::uint64_t d = 1; d <= n; ++d) {
    out.present[d] = !nums[d].empty();
    out.r[d] = static_cast<std::uint32_t>(nums[d].size());
  }
  return out;
}

inline std::uint64_t totient(std::uint64_t n) {
  std::uint64_t out = 0;
  for (std::uint64_t k = 1; k <= n; ++k) out += std::gcd(k, n) == 1;
  return out;
}

// Cylinder-covering estimate: root in s of sum_{|w|=n+1} |I_w|^s = sum_{|w|=n} |I_w|^s,
// where I_w is the interval of [w, x], x in [0, 1], of length 1/(q (q + q')).
inline double cylinder_dimension(const std::vector<Letter>& letters, int depth) {
  std::vector<double> a, b;
  struct Node {
    double qp, q;
    int depth;
  };
  std::vector<Node> stack{{0, 1, 0}};
  while (!stack.empty()) {
    const Node s = stack.back();
    stack.pop_back();
    const double len = 1 / (s.q * (s.q + s.qp));
    if (s.depth == depth) a.push_back(len);
    if (s.depth == depth + 1) {
      b.push_back(len);
      continue;
    }
    for (Letter d : letters) stack.push_back({s.q, d * s.q + s.qp, s.depth + 1});
  }
  auto sum = [](const std::vector<double>& v, double s) {
    double t = 0;
    for (double x : v) t += std::pow(x, s);
    return t;
  };
  double lo = 0, hi = 1;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (sum(b, mid) > sum(a, mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline std::vector<Letter> random_word(std::mt19937_64& rng, const std::vector<Letter>& letters,
                                       std::size_t min_len, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, letters.size() - 1);
  std::vector<Letter> w(len(rng));
  for (auto& x : w) x = letters[pick(rng)];
  return w;
}

// Random alphabet: `size` distinct letters from [1, max].
inline std::vector<Letter> random_alphabet(std::mt19937_64& rng, std::size_t size, Letter max) {
  std::vector<Letter> pool(max);
  std::iota(pool.begin(), pool.end(), 1U);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(size);
  std::sort(pool.begin(), pool.end());
  return pool;
}

// Desk-scale verifier instance: ensemble, parameters, overrides, arc class.
struct DeskInstance {
  std::string name;
  double limit = 1e6;
  double eps0 = 0.4;
  double q1 = 2;
  std::string alphabet = "1,2";
  int alpha = 1;
  int beta = 0;
  zlab::ensemble::StrategyCase strategy = zlab::ensemble::StrategyCase::Major;
  double m2 = 0;  // 0: formula value
  double m4 = 0;
  std::size_t z_size = 0;  // 0: the whole class
};

struct BuiltInstance {
  zlab::ensemble::Ensemble ensemble;
  zlab::ensemble::ParameterChoice choice;
  zlab::ensemble::Factorization factorization;
  std::vector<zlab::arcs::ArcPoint> z;
};

inline BuiltInstance build_instance(const DeskInstance& d) {
  using namespace zlab;
  const Alphabet alphabet = Alphabet::parse(d.alphabet);
  const auto ladder = ensemble::build_ladder(d.limit, d.eps0, alphabet.max_letter(), d.q1);
  BuiltInstance out;
  out.ensemble = ensemble::build_preensembles(ladder, alphabet, {});
  out.choice = ensemble::choose_parameters(d.alpha, d.beta, ladder, alphabet.max_letter(), d.strategy);
  out.factorization = ensemble::factorize(out.ensemble, out.choice.m1,
                                          d.m2 > 0 ? d.m2 : out.choice.m2,
                                          d.m4 > 0 ? d.m4 : out.choice.m4);
  const auto pops = arcs::class_populations(ladder, d.alpha, d.beta);
  std::int64_t kappa = 0;
  std::size_t best = 0;
  for (const auto& [k, n] : pops) {
    if (n > best) {
      best = n;
      kappa = k;
    }
  }
  out.z = arcs::arc_class_members(ladder, d.alpha, d.beta, kappa, 0.0, 100'000);
  if (d.z_size > 0 && out.z.size() > d.z_size) out.z.resize(d.z_size);
  return out;
}

}  // namespace testing_support
