#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

namespace zlab {

using BigInt = mpz_class;
using Rational = mpq_class;
using Letter = std::uint32_t;

/// Finite set of admissible partial quotients, stored sorted and distinct.
class Alphabet {
 public:
  explicit Alphabet(std::vector<Letter> letters);
  Alphabet(std::initializer_list<Letter> letters)
      : Alphabet(std::vector<Letter>(letters)) {}

  /// Parses "1,2,3,4,10". Whitespace around entries is ignored.
  static Alphabet parse(std::string_view text);

  std::span<const Letter> letters() const noexcept { return letters_; }
  std::size_t size() const noexcept { return letters_.size(); }
  Letter min_letter() const noexcept { return letters_.front(); }
  /// The largest letter, called A in every constant that depends on the alphabet.
  Letter max_letter() const noexcept { return letters_.back(); }
  bool contains(Letter x) const noexcept;
  bool is_initial_segment() const noexcept;  // {1,...,A}
  bool is_subset_of(const Alphabet& other) const noexcept;

  std::string to_string() const;

  friend bool operator==(const Alphabet&, const Alphabet&) = default;

 private:
  std::vector<Letter> letters_;
};

/// Finite sequence of partial quotients d_1,...,d_k (possibly empty).
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<Letter> quotients);
  Word(std::initializer_list<Letter> quotients)
      : Word(std::vector<Letter>(quotients)) {}

  std::span<const Letter> quotients() const noexcept { return q_; }
  std::size_t size() const noexcept { return q_.size(); }
  bool empty() const noexcept { return q_.empty(); }
  Letter operator[](std::size_t i) const { return q_[i]; }
  Letter front() const { return q_.front(); }
  Letter back() const { return q_.back(); }

  Word reversed() const;
  Word without_last() const;   // D^-
  Word without_first() const;  // D_-
  Word concat(const Word& tail) const;
  bool over(const Alphabet& alphabet) const noexcept;

  std::string to_string() const;  // "1,2,1"; empty word is ""
  static Word parse(std::string_view text);

  friend bool operator==(const Word&, const Word&) = default;
  friend auto operator<=>(const Word&, const Word&) = default;

 private:
  std::vector<Letter> q_;
};

/// Row-major 2x2 matrix (a b; c d).
template <class Int>
struct Mat2 {
  Int a{1}, b{0}, c{0}, d{1};

  static Mat2 identity() { return {Int(1), Int(0), Int(0), Int(1)}; }
  static Mat2 generator(Letter x) { return {Int(0), Int(1), Int(1), Int(x)}; }

  friend bool operator==(const Mat2&, const Mat2&) = default;
};

template <class Int>
Mat2<Int> operator*(const Mat2<Int>& l, const Mat2<Int>& r) {
  return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d,
          l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
}

/// Exact matrix of non-negative integers with |det| = 1; image of a word under B.
using UniMat = Mat2<BigInt>;

/// <d_1,...,d_k> via K_j = d_j K_{j-1} + K_{j-2}, K_{-1} = 0, K_0 = 1.
BigInt continuant(const Word& w);
BigInt continuant(std::span<const Letter> quotients);

/// [d_1,...,d_k] in lowest terms. Throws InputError for the empty word.
Rational cf_value(const Word& w);

/// Product of generators (0 1; 1 d_j) over the word; identity for the empty word.
UniMat word_matrix(const Word& w);

/// max|entry|, which for semigroup elements is the bottom-right entry.
BigInt matrix_norm(const UniMat& g);

BigInt determinant(const UniMat& g);

/// Membership of B(w) in the even-length semigroup Gamma_A.
bool in_semigroup(const Word& w, const Alphabet& alphabet) noexcept;

/// Witness for the separation bound |[D,T] - [D,W]| >= 1/((2A)^4 <D>^2).
struct SeparationWitness {
  Rational lower_bound;
  Rational actual_gap;
  bool holds = false;
};

/// Throws InputError("lemma preconditions unmet") unless T, W are non-empty
/// words of equal length with different first letters, all over `alphabet`.
SeparationWitness separation_check(const Alphabet& alphabet, const Word& D,
                                   const Word& T, const Word& W);

/// Distance from x to the nearest integer, exactly.
Rational dist_to_integer(const Rational& x);

/// All words over `alphabet` with min_len <= length <= max_len, shortest first.
std::vector<Word> all_words(const Alphabet& alphabet, std::size_t min_len, std::size_t max_len);

struct ContinuantSweep {
  std::size_t pairs = 0;
  std::size_t equality_violations = 0;    // <D,X> != (1 + [<-D][X]) <D><X>
  std::size_t inequality_violations = 0;  // outside [<D><X>, 2<D><X>]
  std::optional<std::pair<Word, Word>> first_violation;
};

/// Every pair of non-empty words D, X with |D|, |X| <= max_len.
ContinuantSweep continuant_sweep(const Alphabet& alphabet, std::size_t max_len);

struct SeparationSweep {
  std::size_t triples = 0;
  std::size_t violations = 0;
  Rational min_ratio;  // min over triples of gap / bound
  std::optional<std::array<Word, 3>> first_violation;
};

/// Every admissible (D, T, W) with |D| <= max_d and |T| = |W| <= max_tw.
SeparationSweep separation_sweep(const Alphabet& alphabet, std::size_t max_d, std::size_t max_tw);

}  // namespace zlab
