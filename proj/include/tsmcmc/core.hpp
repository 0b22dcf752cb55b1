#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsmcmc/error.hpp"

namespace tsmcmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Per-step change x_t - x_{t-1} of a d-dimensional series.
using DiffVector = Eigen::VectorXd;

/// T x d matrix of finite observations. Validated on construction and
/// immutable afterwards.
class TimeSeries {
 public:
  explicit TimeSeries(Matrix values, std::vector<std::string> dim_names = {},
                      std::optional<std::vector<double>> timestamps = std::nullopt);

  const Matrix& values() const noexcept { return values_; }
  std::size_t length() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t dims() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  const std::vector<std::string>& dim_names() const noexcept { return dim_names_; }
  const std::optional<std::vector<double>>& timestamps() const noexcept { return timestamps_; }

  Vector row(std::size_t t) const { return values_.row(static_cast<Eigen::Index>(t)).transpose(); }
  Vector column(std::size_t j) const { return values_.col(static_cast<Eigen::Index>(j)); }

  /// Contiguous rows [begin, begin + count); names carried over, timestamps sliced.
  TimeSeries slice(std::size_t begin, std::size_t count) const;

 private:
  Matrix values_;
  std::vector<std::string> dim_names_;
  std::optional<std::vector<double>> timestamps_;
};

/// Element k is s[k+1] - s[k]; T-1 vectors.
std::vector<DiffVector> first_differences(const TimeSeries& s);

/// Inverse of first_differences: x0, x0 + d0, x0 + d0 + d1, ...
Matrix cumulative_sum(const std::vector<DiffVector>& diffs, const Vector& x0);

/// Stacks difference vectors into an n x d matrix.
Matrix stack_rows(const std::vector<DiffVector>& rows);

/// Per-dimension z-scoring with population moments.
class Normalizer {
 public:
  Normalizer(Vector mean, Vector std);

  static Normalizer fit(const TimeSeries& s);

  const Vector& mean() const noexcept { return mean_; }
  const Vector& std() const noexcept { return std_; }

  TimeSeries apply(const TimeSeries& s) const;
  TimeSeries invert(const TimeSeries& s) const;
  Matrix apply(const Matrix& values) const;
  Matrix invert(const Matrix& values) const;

 private:
  Vector mean_;
  Vector std_;
};

/// Seeded stream over std::mt19937_64. Variates are derived from the raw
/// 64-bit words by hand so the sequence does not depend on the standard
/// library's distribution implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer on [0, n); n > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal (Marsaglia polar method).
  double normal();
  Vector normal_vector(std::size_t n);

  /// Independent child stream; advances this stream by one word.
  RandomStream fork();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

/// SplitMix64 finalizer; used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

/// Deterministic child seed for a named purpose.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id) noexcept;

}  // namespace tsmcmc
