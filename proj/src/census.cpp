#include "zlab/census.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "zlab/error.hpp"
#include "zlab/format.hpp"

namespace zlab::census {

namespace {

constexpr std::uint64_t kMaxLimit = 0xFFFFFFFFULL;  // keeps a*d + p inside 64 bits
constexpr char kMagic[4] = {'Z', 'D', 'C', 'B'};

struct Node {
  std::uint64_t prev;
  std::uint64_t cur;
  Letter last;  // 0 at the root
};

struct Sink {
  DenominatorBitmap* bitmap;
  std::uint32_t* mult;  // null unless multiplicities requested
  std::uint64_t visited = 0;
};

// Counting rule for distinct fractions: a word ending in 1 (length >= 2) is
// skipped when its twin expansion (..., d_{k-1}+1) is also over the alphabet.
class Walker {
 public:
  Walker(const Alphabet& alphabet, std::uint64_t limit) : limit_(limit) {
    for (Letter x : alphabet.letters()) {
      if (x <= limit) letters_.push_back(x);
    }
    twin_.assign(alphabet.max_letter() + 2, 0);
    for (Letter x : alphabet.letters()) {
      if (alphabet.contains(x + 1)) twin_[x] = 1;
    }
  }

  bool empty() const noexcept { return letters_.empty(); }

  // Marks every child of `n` and hands it to `push` when it may have children.
  template <class Push>
  void expand(const Node& n, Sink& sink, Push&& push) const {
    const std::uint64_t amin = letters_.front();
    for (Letter a : letters_) {
      const std::uint64_t c = a * n.cur + n.prev;
      if (c > limit_) break;
      ++sink.visited;
      sink.bitmap->set(c);
      if (sink.mult && (n.last == 0 || a >= 2 || !twin_[n.last])) ++sink.mult[c];
      if (amin * c + n.cur <= limit_) push(Node{n.cur, c, a});
    }
  }

  void subtree(const Node& start, Sink& sink, std::vector<Node>& stack) const {
    stack.clear();
    stack.push_back(start);
    while (!stack.empty()) {
      Node n = stack.back();
      stack.pop_back();
      expand(n, sink, [&](const Node& child) { stack.push_back(child); });
    }
  }

 private:
  std::uint64_t limit_;
  std::vector<Letter> letters_;
  std::vector<std::uint8_t> twin_;
};

}  // namespace

DenominatorBitmap::DenominatorBitmap(std::uint64_t limit)
    : limit_(limit), words_((limit + 63) / 64, 0) {}

void DenominatorBitmap::merge(const DenominatorBitmap& other) {
  if (other.limit_ != limit_) throw InputError("bitmap limits differ");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
}

std::uint64_t DenominatorBitmap::count() const noexcept { return count_upto(limit_); }

std::uint64_t DenominatorBitmap::count_upto(std::uint64_t n) const noexcept {
  n = std::min(n, limit_);
  const std::uint64_t full = n / 64;
  std::uint64_t total = 0;
  for (std::uint64_t i = 0; i < full; ++i) total += std::popcount(words_[i]);
  if (const unsigned rem = n % 64; rem != 0) {
    total += std::popcount(words_[full] & ((std::uint64_t{1} << rem) - 1));
  }
  return total;
}

std::uint64_t DenominatorBitmap::storage_bytes(std::uint64_t limit) noexcept {
  return (limit + 63) / 64 * 8;
}

void DenominatorBitmap::write(std::ostream& out) const {
  out.write(kMagic, 4);
  out.put(static_cast<char>(kBitmapVersion));
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((limit_ >> (8 * i)) & 0xFF));
  const std::uint64_t nbytes = (limit_ + 7) / 8;
  for (std::uint64_t j = 0; j < nbytes; ++j) {
    out.put(static_cast<char>((words_[j / 8] >> (8 * (j % 8))) & 0xFF));
  }
}

DenominatorBitmap DenominatorBitmap::read(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
    throw InputError("not a ZDCB bitmap");
  }
  const int version = in.get();
  if (version != kBitmapVersion) throw InputError("unsupported ZDCB version");
  std::uint64_t limit = 0;
  for (int i = 0; i < 8; ++i) {
    const int byte = in.get();
    if (byte == std::char_traits<char>::eof()) throw InputError("truncated ZDCB header");
    limit |= static_cast<std::uint64_t>(byte & 0xFF) << (8 * i);
  }
  if (limit > kMaxLimit) throw InputError("ZDCB limit out of range");
  DenominatorBitmap bm(limit);
  const std::uint64_t nbytes = (limit + 7) / 8;
  for (std::uint64_t j = 0; j < nbytes; ++j) {
    const int byte = in.get();
    if (byte == std::char_traits<char>::eof()) throw InputError("truncated ZDCB payload");
    bm.words_[j / 8] |= static_cast<std::uint64_t>(byte & 0xFF) << (8 * (j % 8));
  }
  if (const unsigned rem = limit % 64; rem != 0 && !bm.words_.empty()) {
    bm.words_.back() &= (std::uint64_t{1} << rem) - 1;
  }
  return bm;
}

std::uint32_t CensusResult::r(std::uint64_t d) const {
  if (!multiplicity) throw InputError("census was run without multiplicities");
  return d < multiplicity->size() ? (*multiplicity)[d] : 0;
}

unsigned resolve_threads(unsigned requested) noexcept {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::uint64_t required_memory(std::uint64_t limit, const CensusOptions& options) {
  const unsigned workers = resolve_threads(options.threads);
  std::uint64_t per_copy = DenominatorBitmap::storage_bytes(limit);
  if (options.collect_multiplicity) per_copy += 4 * (limit + 1);
  const std::uint64_t copies = workers > 1 ? workers + 1 : 1;
  return copies * per_copy;
}

CensusResult enumerate_denominators(const Alphabet& alphabet, std::uint64_t limit,
                                    const CensusOptions& options) {
  if (limit < 1) throw InputError("census limit must be >= 1");
  if (limit > kMaxLimit) throw InputError("census limit must be < 2^32");
  const std::uint64_t need = required_memory(limit, options);
  if (need > options.memory_budget_bytes) {
    std::ostringstream msg;
    msg << "census for N=" << limit << " needs " << need << " bytes; memory budget is "
        << options.memory_budget_bytes;
    throw ResourceError(msg.str());
  }

  const auto t0 = std::chrono::steady_clock::now();
  const unsigned workers = resolve_threads(options.threads);

  CensusResult result;
  result.limit = limit;
  result.alphabet = alphabet;
  result.present = DenominatorBitmap(limit);
  if (options.collect_multiplicity) result.multiplicity.emplace(limit + 1, 0);

  Walker walker(alphabet, limit);
  if (!walker.empty()) {
    Sink main{&result.present,
              options.collect_multiplicity ? result.multiplicity->data() : nullptr};

    // Serial breadth-first expansion until there are enough disjoint subtrees.
    const std::size_t target = 8 * static_cast<std::size_t>(workers);
    std::vector<Node> frontier{Node{0, 1, 0}}, next;
    while (!frontier.empty() && frontier.size() < target) {
      next.clear();
      for (const Node& n : frontier) {
        walker.expand(n, main, [&](const Node& child) { next.push_back(child); });
      }
      frontier.swap(next);
    }

    if (workers == 1) {
      std::vector<Node> stack;
      for (const Node& n : frontier) walker.subtree(n, main, stack);
      result.words_visited = main.visited;
    } else {
      std::vector<DenominatorBitmap> bitmaps(workers, DenominatorBitmap(limit));
      std::vector<std::vector<std::uint32_t>> mults(workers);
      std::vector<Sink> sinks(workers);
      for (unsigned w = 0; w < workers; ++w) {
        if (options.collect_multiplicity) mults[w].assign(limit + 1, 0);
        sinks[w] = Sink{&bitmaps[w], options.collect_multiplicity ? mults[w].data() : nullptr};
      }
      std::atomic<std::size_t> cursor{0};
      {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
          pool.emplace_back([&, w] {
            std::vector<Node> stack;
            for (std::size_t i = cursor++; i < frontier.size(); i = cursor++) {
              walker.subtree(frontier[i], sinks[w], stack);
            }
          });
        }
      }
      result.words_visited = main.visited;
      for (unsigned w = 0; w < workers; ++w) {
        result.present.merge(bitmaps[w]);
        result.words_visited += sinks[w].visited;
        if (options.collect_multiplicity) {
          auto& dst = *result.multiplicity;
          for (std::size_t d = 0; d < dst.size(); ++d) dst[d] += mults[w][d];
        }
      }
    }
  }

  result.count = result.present.count();
  result.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

std::vector<ProportionRow> proportion_table(const Alphabet& alphabet,
                                            std::span<const std::uint64_t> limits,
                                            const CensusOptions& options) {
  if (limits.empty()) throw InputError("limits must be non-empty");
  if (!std::is_sorted(limits.begin(), limits.end())) {
    throw InputError("limits must be ascending");
  }
  CensusOptions opts = options;
  opts.collect_multiplicity = false;
  const CensusResult full = enumerate_denominators(alphabet, limits.back(), opts);
  std::vector<ProportionRow> rows;
  rows.reserve(limits.size());
  for (std::uint64_t n : limits) {
    if (n < 1) throw InputError("census limit must be >= 1");
    const std::uint64_t c = full.present.count_upto(n);
    rows.push_back({n, c, static_cast<double>(c) / static_cast<double>(n)});
  }
  return rows;
}

std::vector<std::uint64_t> missing_denominators(const CensusResult& result) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t d = 1; d <= result.limit; ++d) {
    if (!result.present.test(d)) out.push_back(d);
  }
  return out;
}

std::vector<std::uint64_t> missing_denominators(const Alphabet& alphabet, std::uint64_t limit,
                                                const CensusOptions& options) {
  CensusOptions opts = options;
  opts.collect_multiplicity = false;
  return missing_denominators(enumerate_denominators(alphabet, limit, opts));
}

std::string proportion_csv(std::span<const ProportionRow> rows) {
  std::ostringstream out;
  out << "N,count,ratio\n";
  for (const auto& row : rows) out << row.limit << ',' << row.count << ',' << format_double(row.ratio) << '\n';
  return out.str();
}

}  // namespace zlab::census
