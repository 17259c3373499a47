#include "zlab/cf.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "zlab/error.hpp"

namespace zlab {

namespace {

std::vector<Letter> parse_letters(std::string_view text) {
  std::vector<Letter> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view token = text.substr(pos, comma - pos);
    while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
    while (!token.empty() && (token.back() == ' ' || token.back() == '\t')) token.remove_suffix(1);
    if (token.empty()) {
      if (comma == text.size() && out.empty() && pos == 0) break;
      throw InputError("empty entry in letter list '" + std::string(text) + "'");
    }
    Letter value = 0;
    auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || end != token.data() + token.size()) {
      throw InputError("bad letter '" + std::string(token) + "'");
    }
    out.push_back(value);
    pos = comma + 1;
  }
  return out;
}

std::string join(std::span<const Letter> xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(xs[i]);
  }
  return s;
}

}  // namespace

Alphabet::Alphabet(std::vector<Letter> letters) : letters_(std::move(letters)) {
  if (letters_.empty()) throw InputError("alphabet must be non-empty");
  std::sort(letters_.begin(), letters_.end());
  if (letters_.front() == 0) throw InputError("alphabet letters must be >= 1");
  if (std::adjacent_find(letters_.begin(), letters_.end()) != letters_.end()) {
    throw InputError("alphabet letters must be distinct");
  }
}

Alphabet Alphabet::parse(std::string_view text) { return Alphabet(parse_letters(text)); }

bool Alphabet::contains(Letter x) const noexcept {
  return std::binary_search(letters_.begin(), letters_.end(), x);
}

bool Alphabet::is_initial_segment() const noexcept {
  return letters_.front() == 1 && letters_.back() == letters_.size();
}

bool Alphabet::is_subset_of(const Alphabet& other) const noexcept {
  return std::includes(other.letters_.begin(), other.letters_.end(), letters_.begin(),
                       letters_.end());
}

std::string Alphabet::to_string() const { return join(letters_); }

Word::Word(std::vector<Letter> quotients) : q_(std::move(quotients)) {
  if (std::find(q_.begin(), q_.end(), Letter{0}) != q_.end()) {
    throw InputError("partial quotients must be positive");
  }
}

Word Word::reversed() const {
  Word w = *this;
  std::reverse(w.q_.begin(), w.q_.end());
  return w;
}

Word Word::without_last() const {
  Word w = *this;
  if (!w.q_.empty()) w.q_.pop_back();
  return w;
}

Word Word::without_first() const {
  Word w;
  if (!q_.empty()) w.q_.assign(q_.begin() + 1, q_.end());
  return w;
}

Word Word::concat(const Word& tail) const {
  Word w = *this;
  w.q_.insert(w.q_.end(), tail.q_.begin(), tail.q_.end());
  return w;
}

bool Word::over(const Alphabet& alphabet) const noexcept {
  return std::all_of(q_.begin(), q_.end(), [&](Letter x) { return alphabet.contains(x); });
}

std::string Word::to_string() const { return join(q_); }

Word Word::parse(std::string_view text) { return Word(parse_letters(text)); }

BigInt continuant(std::span<const Letter> quotients) {
  BigInt prev = 0, cur = 1;
  for (Letter x : quotients) {
    BigInt next = cur * x + prev;
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

BigInt continuant(const Word& w) { return continuant(w.quotients()); }

Rational cf_value(const Word& w) {
  if (w.empty()) throw InputError("undefined value: continued fraction of the empty word");
  // numerator <D_->, denominator <D>; these are coprime, but canonicalize anyway
  Rational r(continuant(w.quotients().subspan(1)), continuant(w));
  r.canonicalize();
  return r;
}

UniMat word_matrix(const Word& w) {
  // Right-multiplying by (0 1; 1 x) maps columns (p, q) -> (q, p + x q).
  UniMat g = UniMat::identity();
  for (Letter x : w.quotients()) {
    BigInt na = g.b, nb = g.a + g.b * x;
    BigInt nc = g.d, nd = g.c + g.d * x;
    g = {std::move(na), std::move(nb), std::move(nc), std::move(nd)};
  }
  return g;
}

BigInt matrix_norm(const UniMat& g) {
  BigInt m = abs(g.a);
  for (const BigInt* x : {&g.b, &g.c, &g.d}) {
    if (abs(*x) > m) m = abs(*x);
  }
  return m;
}

BigInt determinant(const UniMat& g) { return g.a * g.d - g.b * g.c; }

bool in_semigroup(const Word& w, const Alphabet& alphabet) noexcept {
  return w.size() % 2 == 0 && w.over(alphabet);
}

Rational dist_to_integer(const Rational& x) {
  BigInt fl;
  mpz_fdiv_q(fl.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
  Rational frac = x - Rational(fl);
  Rational other = Rational(1) - frac;
  return frac < other ? frac : other;
}

SeparationWitness separation_check(const Alphabet& alphabet, const Word& D, const Word& T,
                                   const Word& W) {
  if (T.empty() || W.empty() || T.size() != W.size() || T.front() == W.front() ||
      !D.over(alphabet) || !T.over(alphabet) || !W.over(alphabet)) {
    throw InputError("lemma preconditions unmet");
  }
  const BigInt a2 = BigInt(2 * alphabet.max_letter());
  const BigInt k = continuant(D);
  SeparationWitness out;
  out.lower_bound = Rational(BigInt(1), a2 * a2 * a2 * a2 * k * k);
  out.lower_bound.canonicalize();
  out.actual_gap = abs(cf_value(D.concat(T)) - cf_value(D.concat(W)));
  out.holds = out.actual_gap >= out.lower_bound;
  return out;
}

std::vector<Word> all_words(const Alphabet& alphabet, std::size_t min_len, std::size_t max_len) {
  std::vector<Word> out;
  std::vector<std::vector<Letter>> level{{}};
  for (std::size_t len = 0; len <= max_len; ++len) {
    if (len >= min_len) {
      for (const auto& q : level) out.emplace_back(q);
    }
    if (len == max_len) break;
    std::vector<std::vector<Letter>> next;
    next.reserve(level.size() * alphabet.size());
    for (const auto& q : level) {
      for (Letter x : alphabet.letters()) {
        next.push_back(q);
        next.back().push_back(x);
      }
    }
    level = std::move(next);
  }
  return out;
}

ContinuantSweep continuant_sweep(const Alphabet& alphabet, std::size_t max_len) {
  const std::vector<Word> words = all_words(alphabet, 1, max_len);
  std::vector<BigInt> k(words.size());
  std::vector<Rational> value(words.size()), mirror(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    k[i] = continuant(words[i]);
    value[i] = cf_value(words[i]);
    mirror[i] = cf_value(words[i].reversed());
  }
  ContinuantSweep out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (std::size_t j = 0; j < words.size(); ++j) {
      ++out.pairs;
      const BigInt joint = continuant(words[i].concat(words[j]));
      const BigInt base = k[i] * k[j];
      const Rational fused = (1 + mirror[i] * value[j]) * Rational(base);
      const bool eq = Rational(joint) == fused;
      const bool ineq = base <= joint && joint <= 2 * base;
      out.equality_violations += !eq;
      out.inequality_violations += !ineq;
      if ((!eq || !ineq) && !out.first_violation) out.first_violation = {words[i], words[j]};
    }
  }
  return out;
}

SeparationSweep separation_sweep(const Alphabet& alphabet, std::size_t max_d, std::size_t max_tw) {
  const std::vector<Word> prefixes = all_words(alphabet, 0, max_d);
  const std::vector<Word> tails = all_words(alphabet, 1, max_tw);
  SeparationSweep out;
  bool first = true;
  for (const Word& d : prefixes) {
    for (const Word& t : tails) {
      for (const Word& w : tails) {
        if (t.size() != w.size() || t.front() == w.front()) continue;
        const SeparationWitness s = separation_check(alphabet, d, t, w);
        ++out.triples;
        Rational ratio = s.actual_gap / s.lower_bound;
        if (first || ratio < out.min_ratio) out.min_ratio = ratio;
        first = false;
        if (!s.holds) {
          ++out.violations;
          if (!out.first_violation) out.first_violation = std::array<Word, 3>{d, t, w};
        }
      }
    }
  }
  return out;
}

}  // namespace zlab
