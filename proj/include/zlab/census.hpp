#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zlab/cf.hpp"

namespace zlab::census {

/// One bit per integer in [1, N]; bit d-1 set when d is present.
class DenominatorBitmap {
 public:
  DenominatorBitmap() = default;
  explicit DenominatorBitmap(std::uint64_t limit);

  std::uint64_t limit() const noexcept { return limit_; }
  bool test(std::uint64_t d) const noexcept {
    return d >= 1 && d <= limit_ && ((words_[(d - 1) >> 6] >> ((d - 1) & 63)) & 1U);
  }
  void set(std::uint64_t d) noexcept { words_[(d - 1) >> 6] |= std::uint64_t{1} << ((d - 1) & 63); }
  void merge(const DenominatorBitmap& other);
  std::uint64_t count() const noexcept;
  std::uint64_t count_upto(std::uint64_t n) const noexcept;  // |present ∩ [1, n]|

  /// "ZDCB", version byte, N as u64 LE, then ceil(N/8) bytes LSB-first.
  void write(std::ostream& out) const;
  static DenominatorBitmap read(std::istream& in);

  static std::uint64_t storage_bytes(std::uint64_t limit) noexcept;

  friend bool operator==(const DenominatorBitmap&, const DenominatorBitmap&) = default;

 private:
  std::uint64_t limit_ = 0;
  std::vector<std::uint64_t> words_;
};

inline constexpr std::uint8_t kBitmapVersion = 1;

struct CensusOptions {
  bool collect_multiplicity = false;
  unsigned threads = 0;  // 0: hardware concurrency
  std::uint64_t memory_budget_bytes = std::uint64_t{1} << 30;
};

struct CensusResult {
  std::uint64_t limit = 0;
  Alphabet alphabet{1};
  DenominatorBitmap present;
  std::uint64_t count = 0;
  /// r(d) at index d (index 0 unused); only when multiplicities were requested.
  std::optional<std::vector<std::uint32_t>> multiplicity;
  std::uint64_t words_visited = 0;
  double elapsed_seconds = 0;

  std::uint32_t r(std::uint64_t d) const;
};

/// D_A(N) by pruned depth-first traversal of the word tree. Throws
/// ResourceError when the bitmaps do not fit in the memory budget.
CensusResult enumerate_denominators(const Alphabet& alphabet, std::uint64_t limit,
                                    const CensusOptions& options = {});

struct ProportionRow {
  std::uint64_t limit;
  std::uint64_t count;
  double ratio;
};

/// One traversal to max(limits); prefix counts give every row.
std::vector<ProportionRow> proportion_table(const Alphabet& alphabet,
                                            std::span<const std::uint64_t> limits,
                                            const CensusOptions& options = {});

std::vector<std::uint64_t> missing_denominators(const Alphabet& alphabet, std::uint64_t limit,
                                                const CensusOptions& options = {});
std::vector<std::uint64_t> missing_denominators(const CensusResult& result);

/// Header `N,count,ratio`.
std::string proportion_csv(std::span<const ProportionRow> rows);

/// Bytes needed for a census with the given options, including per-worker copies.
std::uint64_t required_memory(std::uint64_t limit, const CensusOptions& options);

unsigned resolve_threads(unsigned requested) noexcept;

}  // namespace zlab::census
