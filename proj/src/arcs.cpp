#include "zlab/arcs.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>

#include <fftw3.h>
#include <gmpxx.h>

#include "zlab/error.hpp"
#include "zlab/format.hpp"

namespace zlab::arcs {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

// FFTW planning is not thread-safe.
std::mutex fftw_planner_mutex;

double frac(double x) { return x - std::floor(x); }

std::complex<double> unit(double turns) {
  const double t = kTwoPi * frac(turns);
  return {std::cos(t), std::sin(t)};
}

double denominator_bound(const ensemble::Ladder& lad) {
  return std::sqrt(lad.limit) / lad.q1();
}

}  // namespace

double ArcPoint::reconstruct(double limit) const {
  const double v = static_cast<double>(a) / static_cast<double>(q) +
                   static_cast<double>(l) / (2 * limit) + lambda / limit;
  return frac(v);
}

ArcPoint dirichlet_decompose(double theta, double limit, double q1) {
  if (!(theta >= 0 && theta < 1)) throw InputError("theta must lie in [0, 1)");
  if (!(q1 > 0) || !(limit >= q1 * q1)) throw InputError("need N >= Q1^2");
  const double qmax = std::sqrt(limit) / q1;

  ArcPoint p;
  p.theta = theta;
  if (theta == 0) return p;

  // theta is a dyadic rational; expand it exactly.
  int exp2 = 0;
  const double mant = std::frexp(theta, &exp2);
  mpz_class num, den;
  mpz_set_d(num.get_mpz_t(), std::ldexp(mant, 53));
  den = 1;
  mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), static_cast<unsigned long>(53 - exp2));

  // Convergents h/k; theta < 1 so the first is 0/1.
  std::int64_t h_prev = 1, k_prev = 0, h = 0, k = 1;
  mpz_class x = den, y = num;  // continue with 1/theta
  std::int64_t best_h = 0, best_k = 1;
  while (y != 0) {
    mpz_class quot = x / y, rem = x % y;
    if (quot > mpz_class(static_cast<unsigned long>(qmax) + 1)) break;
    const std::int64_t qi = quot.get_si();
    const std::int64_t h_next = qi * h + h_prev, k_next = qi * k + k_prev;
    if (static_cast<double>(k_next) > qmax) break;
    h_prev = h;
    k_prev = k;
    h = h_next;
    k = k_next;
    best_h = h;
    best_k = k;
    x = y;
    y = rem;
  }
  p.q = best_k;
  p.a = best_h % best_k;
  p.K = limit * (theta - static_cast<double>(best_h) / static_cast<double>(best_k));
  return p;
}

std::pair<std::int64_t, double> split_K(double K) {
  if (!std::isfinite(K)) throw InputError("K must be finite");
  auto l = static_cast<std::int64_t>(std::ceil(2 * K - 0.5));
  double lambda = K - 0.5 * static_cast<double>(l);
  if (lambda > 0.25) {
    ++l;
    lambda -= 0.5;
  } else if (lambda <= -0.25) {
    --l;
    lambda += 0.5;
  }
  return {l, lambda};
}

std::int64_t kappa_modulus(const ensemble::Ladder& lad) {
  const double t1 = 7 * lad.q(7);
  if (!std::isfinite(t1) || t1 > 4e18) throw InputError("T1 = 7 Q_7 does not fit in 64 bits");
  const double r = std::round(t1);
  return static_cast<std::int64_t>(std::abs(t1 - r) <= 1e-9 * t1 ? r : std::floor(t1));
}

int window_index(double x, const ensemble::Ladder& lad) {
  x = std::abs(x);
  const double q1 = lad.q1();
  if (x < q1) return 0;
  int i = static_cast<int>(std::floor(std::log(x) / lad.log_q1));
  i = std::max(i, 1);
  while (lad.q(i + 1) <= x) ++i;
  while (i > 1 && lad.q(i) > x) --i;
  return i;
}

ArcClass classify_arc(ArcPoint& p, const ensemble::Ladder& lad) {
  if (static_cast<double>(p.q) > denominator_bound(lad) * (1 + 1e-12) || p.q < 1) {
    throw InputError("not a valid Dirichlet denominator: q=" + std::to_string(p.q));
  }
  const std::int64_t t1 = kappa_modulus(lad);
  ArcClass c;
  c.alpha = window_index(static_cast<double>(p.q), lad);
  c.beta = window_index(static_cast<double>(p.l), lad);
  c.kappa = ((p.l % t1) + t1) % t1;
  p.alpha = c.alpha;
  p.beta = c.beta;
  p.kappa = c.kappa;
  return c;
}

ArcPoint label(double theta, const ensemble::Ladder& lad) {
  ArcPoint p = dirichlet_decompose(theta, lad.limit, lad.q1());
  std::tie(p.l, p.lambda) = split_K(p.K);
  classify_arc(p, lad);
  return p;
}

bool cell_condition(int alpha, int beta, const ensemble::Ladder& lad) {
  return lad.q(alpha + 1) * lad.q(beta + 1) <= 3 * lad.q(3) * std::sqrt(lad.limit);
}

std::vector<ArcPoint> arc_class_members(const ensemble::Ladder& lad, int alpha, int beta,
                                        std::int64_t kappa, double lambda, std::size_t cap) {
  if (!(lambda > -0.25 && lambda <= 0.25)) throw InputError("lambda must lie in (-1/4, 1/4]");
  const std::int64_t t1 = kappa_modulus(lad);
  if (kappa < 0 || kappa >= t1) throw InputError("kappa must lie in [0, T1)");
  const double n = lad.limit, root = std::sqrt(n), q1 = lad.q1();
  const auto qmax = static_cast<std::int64_t>(std::floor(root / q1 * (1 + 1e-12)));
  std::vector<ArcPoint> out;
  for (std::int64_t q = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(lad.q(alpha))));
       q <= qmax && static_cast<double>(q) < lad.q(alpha + 1); ++q) {
    const auto lmax = static_cast<std::int64_t>(std::floor(3 * q1 * root / static_cast<double>(q)));
    // l = kappa (mod T1) inside [-lmax, lmax]
    std::int64_t l = kappa - t1 * ((kappa + lmax) / t1);
    for (; l <= lmax; l += t1) {
      const double al = static_cast<double>(std::llabs(l));
      if (al < lad.q(beta) || al >= lad.q(beta + 1)) continue;
      for (std::int64_t a = 0; a < q; ++a) {
        if (std::gcd(a, q) != 1) continue;
        if (out.size() >= cap) {
          throw ResourceError("arc class holds more than " + std::to_string(cap) + " points");
        }
        ArcPoint p;
        p.a = a;
        p.q = q;
        p.l = l;
        p.lambda = lambda;
        p.K = 0.5 * static_cast<double>(l) + lambda;
        p.theta = p.reconstruct(n);
        p.alpha = alpha;
        p.beta = beta;
        p.kappa = kappa;
        out.push_back(p);
      }
    }
  }
  return out;
}

std::map<std::int64_t, std::size_t> class_populations(const ensemble::Ladder& lad, int alpha,
                                                      int beta) {
  const std::int64_t t1 = kappa_modulus(lad);
  const double root = std::sqrt(lad.limit), q1 = lad.q1();
  const auto qmax = static_cast<std::int64_t>(std::floor(root / q1 * (1 + 1e-12)));
  std::map<std::int64_t, std::size_t> out;
  for (std::int64_t q = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(lad.q(alpha))));
       q <= qmax && static_cast<double>(q) < lad.q(alpha + 1); ++q) {
    std::size_t phi = 0;
    for (std::int64_t a = 0; a < q; ++a) phi += std::gcd(a, q) == 1;
    const auto lmax = static_cast<std::int64_t>(std::floor(3 * q1 * root / static_cast<double>(q)));
    for (std::int64_t l = -lmax; l <= lmax; ++l) {
      const double al = static_cast<double>(std::llabs(l));
      if (al < lad.q(beta) || al >= lad.q(beta + 1)) continue;
      out[((l % t1) + t1) % t1] += phi;
    }
  }
  return out;
}

NormHistogram::NormHistogram(std::map<std::uint64_t, std::uint64_t> counts) {
  for (const auto& [d, r] : counts) {
    if (r == 0) continue;
    bins_.emplace_back(d, r);
    total_ += r;
  }
}

NormHistogram NormHistogram::from_set(const ensemble::MatrixSet& omega) {
  std::map<std::uint64_t, std::uint64_t> counts;
  for (const auto& el : omega) ++counts[el.norm()];
  return NormHistogram(std::move(counts));
}

NormHistogram NormHistogram::from_norms(std::span<const std::uint64_t> norms) {
  std::map<std::uint64_t, std::uint64_t> counts;
  for (std::uint64_t d : norms) ++counts[d];
  return NormHistogram(std::move(counts));
}

std::complex<double> trig_sum(const NormHistogram& h, double theta) {
  std::complex<double> s = 0;
  for (const auto& [d, r] : h.bins()) s += static_cast<double>(r) * unit(theta * static_cast<double>(d));
  return s;
}

double sigma_NZ(const NormHistogram& h, std::span<const ArcPoint> Z) {
  if (Z.empty()) throw InputError("Z must be non-empty");
  const ArcPoint& ref = Z.front();
  double total = 0;
  for (const ArcPoint& p : Z) {
    if (p.alpha < 0 || p.alpha != ref.alpha || p.beta != ref.beta || p.kappa != ref.kappa ||
        p.lambda != ref.lambda) {
      throw InputError("Z must lie in one arc class");
    }
    total += std::abs(trig_sum(h, p.theta));
  }
  return total;
}

SigmaReport sigma_N_of_Q(const NormHistogram& h, const ensemble::Ladder& lad, double Q,
                         int quadrature_points, std::size_t triple_cap, double work_cap) {
  if (h.empty()) throw InputError("histogram must be non-empty");
  if (!(Q >= 0)) throw InputError("Q must be >= 0");
  if (quadrature_points < static_cast<double>(2 * h.max_norm() + 1)) {
    throw InputError("quadrature_points must be >= 2 * max norm + 1");
  }
  const double n = lad.limit, root = std::sqrt(n), q1 = lad.q1();
  const auto qmax = static_cast<std::int64_t>(std::floor(root / q1 * (1 + 1e-12)));

  std::size_t triples = 0;
  for (std::int64_t q = 1; q <= qmax; ++q) {
    const auto lmax = static_cast<std::int64_t>(std::floor(3 * q1 * root / static_cast<double>(q)));
    std::int64_t phi = 0;
    for (std::int64_t a = 0; a < q; ++a) phi += std::gcd(a, q) == 1;
    for (std::int64_t l = -lmax; l <= lmax; ++l) {
      if (static_cast<double>(std::max<std::int64_t>(q, std::llabs(l))) >= Q) {
        triples += static_cast<std::size_t>(phi);
      }
    }
  }
  if (triples > triple_cap) {
    throw ResourceError("sigma_N_of_Q needs " + std::to_string(triples) +
                        " (a, q, l) triples; cap is " + std::to_string(triple_cap));
  }

  const double work = static_cast<double>(triples) * quadrature_points * static_cast<double>(h.distinct());
  if (work > work_cap) {
    throw ResourceError("sigma_N_of_Q needs " + format_double(work) + " term evaluations; cap is " +
                        format_double(work_cap));
  }

  SigmaReport rep;
  rep.Q = Q;
  rep.triples = triples;
  rep.quadrature_points = quadrature_points;
  const double width = 0.5 / quadrature_points;
  const std::size_t nb = h.bins().size();
  std::vector<std::complex<double>> z(nb), step(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    step[i] = unit(static_cast<double>(h.bins()[i].first) * width / n);
  }
  for (std::int64_t q = 1; q <= qmax; ++q) {
    const auto lmax = static_cast<std::int64_t>(std::floor(3 * q1 * root / static_cast<double>(q)));
    const int alpha = window_index(static_cast<double>(q), lad);
    for (std::int64_t l = -lmax; l <= lmax; ++l) {
      if (static_cast<double>(std::max<std::int64_t>(q, std::llabs(l))) < Q) continue;
      const int beta = window_index(static_cast<double>(l), lad);
      double cell = 0;
      for (std::int64_t a = 0; a < q; ++a) {
        if (std::gcd(a, q) != 1) continue;
        const double base = static_cast<double>(a) / static_cast<double>(q) +
                            static_cast<double>(l) / (2 * n) + (-0.25 + 0.5 * width) / n;
        for (std::size_t i = 0; i < nb; ++i) {
          const auto& [d, r] = h.bins()[i];
          z[i] = static_cast<double>(r) * unit(base * static_cast<double>(d));
        }
        double acc = 0;
        for (int k = 0; k < quadrature_points; ++k) {
          std::complex<double> s = 0;
          for (std::size_t i = 0; i < nb; ++i) {
            s += z[i];
            z[i] *= step[i];
          }
          acc += std::norm(s);
        }
        cell += acc * width;
      }
      rep.cells[{alpha, beta}] += cell;
      rep.value += cell;
    }
  }
  return rep;
}

ParsevalReport parseval_check(const NormHistogram& h, int quadrature_points, double limit) {
  if (h.empty()) throw InputError("histogram must be non-empty");
  if (quadrature_points <= 0 ||
      static_cast<std::uint64_t>(quadrature_points) <= 2 * h.max_norm()) {
    throw InputError("quadrature_points must exceed 2 * max norm");
  }
  const int m = quadrature_points;
  ParsevalReport rep;
  rep.quadrature_points = m;
  for (const auto& [d, r] : h.bins()) rep.exact += static_cast<double>(r) * static_cast<double>(r);

  // |S(k/M)|^2 for all k at once: S(k/M) is the length-M DFT of r.
  std::vector<double> in(static_cast<std::size_t>(m), 0.0);
  for (const auto& [d, r] : h.bins()) in[d] = static_cast<double>(r);
  const int half = m / 2 + 1;
  auto* spectrum = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * half));
  {
    std::lock_guard lock(fftw_planner_mutex);
    fftw_plan plan = fftw_plan_dft_r2c_1d(m, in.data(), spectrum, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  double acc = 0;
  for (int k = 0; k < half; ++k) {
    const double p = spectrum[k][0] * spectrum[k][0] + spectrum[k][1] * spectrum[k][1];
    const bool self_conjugate = k == 0 || (m % 2 == 0 && k == m / 2);
    acc += self_conjugate ? p : 2 * p;
  }
  fftw_free(spectrum);

  rep.quadrature = acc / static_cast<double>(m);
  rep.relative_error = std::abs(rep.quadrature - rep.exact) / rep.exact;
  const double total = static_cast<double>(h.total());
  rep.ratio_to_bound = rep.exact * limit / (total * total);
  rep.cauchy_schwarz_floor = total * total / rep.exact;
  return rep;
}

std::string profile_csv(const NormHistogram& h, std::span<const double> thetas) {
  std::ostringstream out;
  out << "theta,re,im,abs\n";
  for (double t : thetas) {
    const auto s = trig_sum(h, t);
    out << format_double(t) << ',' << format_double(s.real()) << ',' << format_double(s.imag())
        << ',' << format_double(std::abs(s)) << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const ParsevalReport& r) {
  return {{"exact", r.exact},
          {"quadrature", r.quadrature},
          {"relative_error", r.relative_error},
          {"ratio_to_bound", r.ratio_to_bound},
          {"cauchy_schwarz_floor", r.cauchy_schwarz_floor},
          {"quadrature_points", r.quadrature_points}};
}

nlohmann::json to_json(const SigmaReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [ab, v] : r.cells) {
    cells.push_back({{"alpha", ab.first}, {"beta", ab.second}, {"value", v}});
  }
  return {{"value", r.value},
          {"Q", r.Q},
          {"triples", r.triples},
          {"quadrature_points", r.quadrature_points},
          {"cells", cells}};
}

nlohmann::json to_json(const ArcPoint& p) {
  return {{"theta", p.theta}, {"a", p.a}, {"q", p.q},         {"K", p.K},         {"l", p.l},
          {"lambda", p.lambda}, {"alpha", p.alpha}, {"beta", p.beta}, {"kappa", p.kappa}};
}

}  // namespace zlab::arcs
