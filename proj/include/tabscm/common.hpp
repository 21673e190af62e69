#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tabscm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text: CSV, JSON sidecars, rule expressions, configs.
class ParseError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class GraphError : public Error {
 public:
  using Error::Error;
};

/// A mechanism or optimizer failed to produce a usable fit.
class FitError : public Error {
 public:
  using Error::Error;
};

/// Model file problems: version mismatch, checksum failure, unknown tags.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Random streams
//
// A master seed is split into independent streams keyed by (a, b), e.g.
// (row, node) during ancestral sampling. The key derivation is a splitmix64
// chain, so stream contents never depend on the order in which streams are
// created or on which thread consumes them.

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}
  Stream(std::uint64_t master, std::uint64_t a, std::uint64_t b)
      : engine_(derive_seed(master, a, b)) {}

  double normal() { return normal_(engine_); }
  /// Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }
  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Deterministic Fisher-Yates permutation of [0, n).
std::vector<std::size_t> shuffled_indices(std::size_t n, Stream& stream);

// ---------------------------------------------------------------------------
// Threading

void set_thread_count(unsigned n);
unsigned thread_count();

/// Splits [begin, end) into contiguous chunks and runs fn(lo, hi) on each.
/// Chunks are disjoint, so fn must only write to per-index state.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t, std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Hashing and encoding

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Little-endian IEEE-754 binary64 packing.
std::string encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(std::string_view text);

// ---------------------------------------------------------------------------
// Small statistics helpers shared by several modules.

double mean(std::span<const double> x);
/// Population standard deviation (divides by n).
double population_sd(std::span<const double> x);
/// Linear-interpolation quantile of already sorted data, q in [0, 1].
double sorted_quantile(std::span<const double> sorted, double q);
/// Median of unsorted data.
double median(std::vector<double> x);

}  // namespace tabscm
