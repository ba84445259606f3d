#ifndef FTS_COMMON_HPP
#define FTS_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace fts {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Caller supplied something outside an operation's domain (wrong dimension,
/// time outside J, non-positive scale, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A domain matrix failed its definiteness check, or a sampler could not
/// accept points at a usable rate.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file or config text. `what()` names the offending field.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least-squares design matrix without full column rank.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training hit a non-finite loss.
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Splits a 64-bit seed into independent streams (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Runs body(begin, end) over [0, count) split into contiguous chunks, one per
/// worker. With threads <= 1 everything runs on the calling thread.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

/// Writes `text` to a sibling temp file and renames it over `path`.
void write_text_atomic(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// 17 significant digits; parses back to the identical double.
std::string format_double(double v);

/// Keeps large training temporaries on the heap instead of fresh mmaps.
/// No-op outside glibc. Safe to call repeatedly.
void tune_allocator();

}  // namespace fts

#endif  // FTS_COMMON_HPP
