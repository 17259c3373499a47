#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"
#include "zlab/arcs.hpp"
#include "zlab/error.hpp"

using namespace zlab;
using namespace zlab::arcs;
using zlab::ensemble::build_ladder;
using zlab::ensemble::Ladder;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

double circle_distance(double x, double y) {
  const double d = std::abs(x - y);
  return std::min(d, 1 - d);
}

// Largest convergent denominator <= qmax of the exact binary value of theta.
std::pair<std::int64_t, std::int64_t> convergent_oracle(double theta, double qmax) {
  mpq_class x(theta);
  std::int64_t p0 = 1, q0 = 0, p1 = 0, q1 = 1;  // convergents -1 and 0 of a number in [0, 1)
  mpq_class rest = x;
  if (rest == 0) return {0, 1};
  rest = 1 / rest;
  while (true) {
    mpz_class a = rest.get_num() / rest.get_den();
    if (a > mpz_class(static_cast<long>(qmax) + 1)) break;
    const std::int64_t ai = a.get_si();
    const std::int64_t p2 = ai * p1 + p0, q2 = ai * q1 + q0;
    if (static_cast<double>(q2) > qmax) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    mpq_class f = rest - mpq_class(a);
    if (f == 0) break;
    rest = 1 / f;
  }
  return {p1, q1};
}

std::complex<double> direct_sum(const std::vector<std::uint64_t>& norms, double theta) {
  std::complex<double> s = 0;
  for (std::uint64_t d : norms) {
    const double t = theta * static_cast<double>(d);
    s += std::polar(1.0, kTwoPi * (t - std::floor(t)));
  }
  return s;
}

std::vector<std::uint64_t> norms_of(const ensemble::MatrixSet& s) {
  std::vector<std::uint64_t> out;
  for (const auto& e : s) out.push_back(e.norm());
  return out;
}

}  // namespace

TEST(Dirichlet, Examples) {
  const ArcPoint zero = dirichlet_decompose(0, 1e4, 2);
  EXPECT_EQ(zero.a, 0);
  EXPECT_EQ(zero.q, 1);
  EXPECT_EQ(zero.K, 0);

  const ArcPoint third = dirichlet_decompose(1.0 / 3, 1e4, 2);
  EXPECT_EQ(third.a, 1);
  EXPECT_EQ(third.q, 3);
  EXPECT_NEAR(third.K, 0, 1e-10);

  const ArcPoint root2 = dirichlet_decompose(std::sqrt(2.0) - 1, 1e4, 2);
  EXPECT_EQ(root2.q, 29);
  EXPECT_EQ(root2.a, 12);
  EXPECT_NEAR(root2.K, 1e4 * (std::sqrt(2.0) - 1 - 12.0 / 29), 1e-9);
  EXPECT_NEAR(root2.K, 4.20, 0.01);
}

TEST(Dirichlet, RejectsBadInput) {
  EXPECT_THROW(dirichlet_decompose(1.0, 1e4, 2), InputError);
  EXPECT_THROW(dirichlet_decompose(-0.1, 1e4, 2), InputError);
  EXPECT_THROW(dirichlet_decompose(0.2, 3, 2), InputError);
}

TEST(SplitK, Examples) {
  EXPECT_EQ(split_K(0), (std::pair<std::int64_t, double>{0, 0.0}));
  const auto [l1, lam1] = split_K(4.20);
  EXPECT_EQ(l1, 8);
  EXPECT_NEAR(lam1, 0.20, 1e-12);
  const auto [l2, lam2] = split_K(0.3);
  EXPECT_EQ(l2, 1);
  EXPECT_NEAR(lam2, -0.2, 1e-12);
  const auto [l3, lam3] = split_K(0.25);
  EXPECT_EQ(l3, 0);
  EXPECT_EQ(lam3, 0.25);
  const auto [l4, lam4] = split_K(-0.25);
  EXPECT_EQ(l4, -1);
  EXPECT_EQ(lam4, 0.25);
  EXPECT_THROW(split_K(INFINITY), InputError);
}

TEST(SplitK, RandomInvariants) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> k(-1e4, 1e4);
  for (int i = 0; i < 100000; ++i) {
    const double K = k(rng);
    const auto [l, lambda] = split_K(K);
    ASSERT_GT(lambda, -0.25);
    ASSERT_LE(lambda, 0.25);
    ASSERT_NEAR(0.5 * static_cast<double>(l) + lambda, K, 1e-12 * std::max(1.0, std::abs(K)));
    ASSERT_LE(std::abs(static_cast<double>(l)), 2 * std::abs(K) + 1);
  }
}

TEST(Classify, Examples) {
  const Ladder lad = build_ladder(1e6, 0.1, 2, 10.0);
  ArcPoint p;
  p.q = 1;
  p.l = 0;
  EXPECT_EQ(classify_arc(p, lad), (ArcClass{0, 0, 0}));
  p.q = 10;
  p.l = -23;
  const ArcClass c = classify_arc(p, lad);
  EXPECT_EQ(c.alpha, 1);
  EXPECT_EQ(c.beta, 1);
  EXPECT_EQ(c.kappa, kappa_modulus(lad) - 23);
  EXPECT_EQ(kappa_modulus(lad), 70'000'000);
  p.q = 101;
  try {
    classify_arc(p, lad);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("not a valid Dirichlet denominator"), std::string::npos);
  }
}

TEST(Classify, WindowsAreLowerClosed) {
  const Ladder lad = build_ladder(1e6, 0.1, 2, 4.0);
  EXPECT_EQ(window_index(0, lad), 0);
  EXPECT_EQ(window_index(3, lad), 0);
  EXPECT_EQ(window_index(4, lad), 1);
  EXPECT_EQ(window_index(15, lad), 1);
  EXPECT_EQ(window_index(16, lad), 2);
  EXPECT_EQ(window_index(-16, lad), 2);
  EXPECT_EQ(window_index(4095, lad), 5);
  EXPECT_EQ(window_index(4096, lad), 6);
}

TEST(Classify, CellCondition) {
  const Ladder lad = build_ladder(1e6, 0.1, 2, 4.0);
  // Q_{a+1} Q_{b+1} <= 3 Q_3 sqrt(N) = 192000
  EXPECT_TRUE(cell_condition(0, 0, lad));
  EXPECT_TRUE(cell_condition(3, 3, lad));   // 4^8 = 65536
  EXPECT_FALSE(cell_condition(4, 4, lad));  // 4^10
}

TEST(ArcRoundTrip, RandomThetas) {
  const double n = 1e6, q1 = 4;
  const Ladder lad = build_ladder(n, 0.1, 2, q1);
  const double root = std::sqrt(n);
  const std::int64_t t1 = kappa_modulus(lad);
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 10000; ++i) {
    const double theta = u(rng);
    ArcPoint p = label(theta, lad);
    ASSERT_EQ(std::gcd(p.a, p.q), 1);
    ASSERT_TRUE(p.a != 0 || p.q == 1);
    ASSERT_GE(p.a, 0);
    ASSERT_LT(p.a, std::max<std::int64_t>(p.q, 1));
    ASSERT_LE(static_cast<double>(p.q), root / q1);
    ASSERT_LE(std::abs(p.K), q1 * root / static_cast<double>(p.q));
    ASSERT_GT(p.lambda, -0.25);
    ASSERT_LE(p.lambda, 0.25);
    ASSERT_NEAR(0.5 * static_cast<double>(p.l) + p.lambda, p.K, 1e-9);
    ASSERT_LE(std::abs(static_cast<double>(p.l)), 3 * q1 * root / static_cast<double>(p.q));
    ASSERT_EQ(((p.l - p.kappa) % t1 + t1) % t1, 0);
    const long double back = static_cast<long double>(p.a) / p.q +
                             static_cast<long double>(p.l) / (2 * n) + p.lambda / n;
    ASSERT_LT(circle_distance(static_cast<double>(back - std::floor(back)), theta), 1e-12);
    ASSERT_LT(circle_distance(p.reconstruct(n), theta), 1e-12);
    const auto [a, q] = convergent_oracle(theta, root / q1);
    ASSERT_EQ(q, p.q) << theta;
    ASSERT_EQ(a % q, p.a) << theta;
    ASSERT_LE(p.alpha == 0 ? 0.0 : lad.q(p.alpha), static_cast<double>(p.q));
    ASSERT_LT(static_cast<double>(p.q), lad.q(p.alpha + 1));
  }
}

// Every admissible (q, l) lands in exactly one (alpha, beta, kappa) class.
TEST(ArcPartition, ClassPopulationsCoverAllTriples) {
  const Ladder lad = build_ladder(1e6, 0.1, 2, 4.0);
  const double root = 1000;
  std::size_t total = 0;
  for (std::int64_t q = 1; q <= 250; ++q) {
    const auto lmax = static_cast<std::int64_t>(std::floor(12 * root / static_cast<double>(q)));
    std::size_t phi = 0;
    for (std::int64_t a = 0; a < q; ++a) phi += std::gcd(a, q) == 1;
    total += phi * static_cast<std::size_t>(2 * lmax + 1);
  }
  std::size_t covered = 0;
  for (int alpha = 0; alpha <= 4; ++alpha) {
    for (int beta = 0; beta <= 7; ++beta) {
      for (const auto& [kappa, count] : class_populations(lad, alpha, beta)) {
        (void)kappa;
        covered += count;
      }
    }
  }
  EXPECT_EQ(covered, total);
}

TEST(ArcPartition, MembersMatchPopulation) {
  const Ladder lad = build_ladder(1e4, 0.1, 2, 2.0);
  for (const auto& [kappa, count] : class_populations(lad, 1, 2)) {
    const auto members = arc_class_members(lad, 1, 2, kappa, 0.1, 100000);
    ASSERT_EQ(members.size(), count);
    for (ArcPoint p : members) {
      const ArcPoint copy = p;
      classify_arc(p, lad);
      ASSERT_EQ(p.alpha, 1);
      ASSERT_EQ(p.beta, 2);
      ASSERT_EQ(p.kappa, kappa);
      ASSERT_EQ(copy.kappa, kappa);
      ArcPoint relabel = label(copy.theta, lad);
      ASSERT_NEAR(relabel.lambda, 0.1, 1e-6);
      ASSERT_EQ(relabel.q, copy.q);
      ASSERT_EQ(relabel.l, copy.l);
    }
  }
  EXPECT_THROW(arc_class_members(lad, 1, 2, 0, 0.3, 10), InputError);
  EXPECT_THROW(arc_class_members(lad, 1, 2, 4, 0.0, 2), ResourceError);
}

TEST(TrigSum, Examples) {
  const NormHistogram h({{3, 1}, {5, 1}});
  EXPECT_NEAR(std::abs(trig_sum(h, 0.5) - std::complex<double>(-2, 0)), 0, 1e-12);
  EXPECT_NEAR(std::abs(trig_sum(h, 0) - std::complex<double>(2, 0)), 0, 1e-15);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  const NormHistogram g({{1, 4}, {7, 2}, {190, 5}, {1021, 1}});
  for (int i = 0; i < 100; ++i) {
    const double t = u(rng);
    EXPECT_NEAR(std::abs(trig_sum(g, 1 - t) - std::conj(trig_sum(g, t))), 0, 1e-9);
  }
  EXPECT_EQ(g.total(), 12U);
  EXPECT_EQ(g.distinct(), 4U);
  EXPECT_EQ(g.max_norm(), 1021U);
}

TEST(SigmaNZ, Examples) {
  const Ladder lad = build_ladder(1e4, 0.1, 2, 2.0);
  const NormHistogram h({{3, 2}, {5, 1}, {8, 4}});
  ArcPoint zero = label(0, lad);
  const std::vector<ArcPoint> z0{zero};
  EXPECT_DOUBLE_EQ(sigma_NZ(h, z0), 7.0);

  const auto members = arc_class_members(lad, 1, 1, 3, 0.0, 1000);
  ASSERT_GE(members.size(), 2U);
  const std::vector<ArcPoint> one{members[0]};
  const std::vector<ArcPoint> two{members[0], members[1]};
  const std::vector<std::uint64_t> norms{3, 3, 5, 8, 8, 8, 8};
  EXPECT_NEAR(sigma_NZ(h, one), std::abs(direct_sum(norms, members[0].theta)), 1e-9);
  EXPECT_NEAR(sigma_NZ(h, two),
              std::abs(direct_sum(norms, members[0].theta)) + std::abs(direct_sum(norms, members[1].theta)),
              1e-9);
  EXPECT_LE(sigma_NZ(h, two), 2.0 * 7.0);

  std::vector<ArcPoint> mixed{members[0], zero};
  try {
    sigma_NZ(h, mixed);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_EQ(std::string(e.what()), "Z must lie in one arc class");
  }
}

TEST(Parseval, Examples) {
  const ParsevalReport r = parseval_check(NormHistogram({{3, 1}, {5, 1}}), 11, 100);
  EXPECT_DOUBLE_EQ(r.exact, 2);
  EXPECT_NEAR(r.quadrature, 2, 1e-12);
  EXPECT_DOUBLE_EQ(parseval_check(NormHistogram(std::map<std::uint64_t, std::uint64_t>{{7, 3}}), 15, 100).exact, 9);
  EXPECT_THROW(parseval_check(NormHistogram({{3, 1}, {5, 1}}), 10, 100), InputError);
}

TEST(Parseval, MatchesDirectQuadratureOnRandomHistograms) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    std::map<std::uint64_t, std::uint64_t> counts;
    std::vector<std::uint64_t> norms;
    std::uniform_int_distribution<std::uint64_t> d(1, 300), r(1, 9);
    for (int i = 0; i < 40; ++i) {
      const std::uint64_t x = d(rng), c = r(rng);
      counts[x] += c;
      for (std::uint64_t k = 0; k < c; ++k) norms.push_back(x);
    }
    const NormHistogram h(counts);
    const int m = static_cast<int>(2 * h.max_norm() + 1 + trial);
    const ParsevalReport rep = parseval_check(h, m, 1000);
    double direct = 0;
    for (int k = 0; k < m; ++k) direct += std::norm(direct_sum(norms, static_cast<double>(k) / m));
    direct /= m;
    EXPECT_NEAR(rep.quadrature, direct, 1e-9 * direct);
    EXPECT_LT(rep.relative_error, 1e-9);
    EXPECT_LE(rep.cauchy_schwarz_floor, static_cast<double>(h.distinct()) * (1 + 1e-12));
    EXPECT_GE(rep.exact, static_cast<double>(h.total()) * h.total() / h.distinct() * (1 - 1e-12));
  }
}

TEST(SigmaNQ, EmptyIndicatorAndMonotone) {
  const Ladder lad = build_ladder(1e3, 0.5, 2, 2.0);
  const NormHistogram h({{3, 1}, {5, 2}, {12, 1}, {29, 3}});
  const int m = 60;
  EXPECT_EQ(sigma_N_of_Q(h, lad, 3 * 2 * std::sqrt(1e3) + 1, m).value, 0.0);
  double previous = INFINITY;
  for (double Q : {0.0, 2.0, 5.0, 17.0, 60.0, 150.0, 190.0}) {
    const SigmaReport r = sigma_N_of_Q(h, lad, Q, m);
    EXPECT_LE(r.value, previous * (1 + 1e-12)) << Q;
    double cells = 0;
    for (const auto& [ab, v] : r.cells) cells += v;
    EXPECT_NEAR(cells, r.value, 1e-9 * std::max(1.0, r.value));
    previous = r.value;
  }
  EXPECT_THROW(sigma_N_of_Q(h, lad, 0, 58), InputError);
  EXPECT_THROW(sigma_N_of_Q(h, lad, 0, m, 10), ResourceError);
}

// Direct double loop over (a, q, l) and over the ensemble members, half resolution.
TEST(SigmaNQ, MatchesDirectOracle) {
  const double n = 1e3, q1 = 2;
  const Ladder lad = build_ladder(n, 0.4, 2, q1);
  const auto e = ensemble::build_preensembles(lad, {1, 2}, {});
  const auto omega = e.product(1, e.factor_count() + 1, 1'000'000);
  const auto norms = norms_of(omega);
  const NormHistogram h = NormHistogram::from_set(omega);
  const int m = static_cast<int>(2 * h.max_norm() + 2);
  const double Q = 40;
  const SigmaReport rep = sigma_N_of_Q(h, lad, Q, m);

  const int half = m / 2;
  const double width = 0.5 / half;
  const double root = std::sqrt(n);
  double oracle = 0;
  for (std::int64_t q = 1; static_cast<double>(q) <= root / q1; ++q) {
    const double lmax = 3 * q1 * root / static_cast<double>(q);
    for (std::int64_t l = -static_cast<std::int64_t>(lmax); l <= static_cast<std::int64_t>(lmax); ++l) {
      if (static_cast<double>(std::max<std::int64_t>(q, std::llabs(l))) < Q) continue;
      for (std::int64_t a = 0; a < q; ++a) {
        if (std::gcd(a, q) != 1) continue;
        for (int k = 0; k < half; ++k) {
          const double lambda = -0.25 + (k + 0.5) * width;
          const double theta = static_cast<double>(a) / static_cast<double>(q) +
                               static_cast<double>(l) / (2 * n) + lambda / n;
          oracle += std::norm(direct_sum(norms, theta)) * width;
        }
      }
    }
  }
  EXPECT_GT(rep.value, 0);
  EXPECT_LT(std::abs(rep.value - oracle) / oracle, 1e-3) << rep.value << " vs " << oracle;
}

TEST(Arcs, ProfileCsvAndJson) {
  const NormHistogram h({{3, 1}, {5, 1}});
  const std::vector<double> thetas{0.0, 0.5};
  const std::string csv = profile_csv(h, thetas);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "theta,re,im,abs");
  EXPECT_NE(csv.find("\n0,2,0,2\n"), std::string::npos) << csv;
  const auto j = to_json(parseval_check(h, 11, 100));
  for (const char* key : {"exact", "quadrature", "ratio_to_bound"}) EXPECT_TRUE(j.contains(key));
}
