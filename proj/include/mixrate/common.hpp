#pragma once

// Shared plumbing: error categories, seed derivation, deterministic summation,
// and a slot-based parallel loop whose results do not depend on thread count.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mixrate {

// ---------------------------------------------------------------------------
// Error categories. Every throwing precondition in the library uses one of
// these so callers (and the CLI) can map failures to stable exit codes.
// ---------------------------------------------------------------------------

class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedKernel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedTarget : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Seed derivation. Each (stream, index) pair gets an independent seed from the
// master seed, so trial results do not depend on scheduling or thread count.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index) {
  return splitmix64(splitmix64(master ^ (stream * 0x9e3779b97f4a7c15ULL)) + index);
}

// FNV-1a, used for config provenance hashes.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Deterministic pairwise summation. Fixed recursion over index ranges: the
// result is independent of chunking and threads, and more accurate than a
// running sum.
// ---------------------------------------------------------------------------

double pairwise_sum(std::span<const double> v);

// Sums f(i) for i in [0, n) with the same pairwise tree as pairwise_sum.
double pairwise_sum_fn(std::size_t n, const std::function<double(std::size_t)>& f);

// ---------------------------------------------------------------------------
// Slot-based parallel loop: body(i) must write only to slot i of caller-owned
// storage. Results are identical for any thread count.
// ---------------------------------------------------------------------------

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

inline int clamp_threads(int requested) {
  if (requested <= 0) {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
  }
  return requested;
}

}  // namespace mixrate
