#include "tsmcmc/core.hpp"

#include <cmath>

namespace tsmcmc {

TimeSeries::TimeSeries(Matrix values, std::vector<std::string> dim_names,
                       std::optional<std::vector<double>> timestamps)
    : values_(std::move(values)), dim_names_(std::move(dim_names)), timestamps_(std::move(timestamps)) {
  if (values_.rows() < 2) {
    throw Error(ErrorCode::SeriesTooShort,
                "time series needs at least 2 rows, got " + std::to_string(values_.rows()));
  }
  if (values_.cols() < 1) throw Error(ErrorCode::InvalidArgument, "time series needs at least 1 dimension");
  for (Eigen::Index t = 0; t < values_.rows(); ++t) {
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
      if (!std::isfinite(values_(t, j))) {
        throw Error(ErrorCode::NonFiniteValue,
                    "non-finite value at row " + std::to_string(t) + ", column " + std::to_string(j));
      }
    }
  }
  if (dim_names_.empty()) {
    for (Eigen::Index j = 0; j < values_.cols(); ++j) dim_names_.push_back("x" + std::to_string(j));
  } else if (dim_names_.size() != dims()) {
    throw Error(ErrorCode::DimensionMismatch, "dim_names has " + std::to_string(dim_names_.size()) +
                                                  " labels for " + std::to_string(dims()) + " columns");
  }
  if (timestamps_) {
    if (timestamps_->size() != length()) {
      throw Error(ErrorCode::DimensionMismatch, "timestamps length differs from series length");
    }
    for (std::size_t t = 1; t < timestamps_->size(); ++t) {
      if (!((*timestamps_)[t] > (*timestamps_)[t - 1])) {
        throw Error(ErrorCode::InvalidArgument,
                    "timestamps not strictly increasing at row " + std::to_string(t));
      }
    }
  }
}

TimeSeries TimeSeries::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > length()) throw Error(ErrorCode::InvalidArgument, "slice out of range");
  std::optional<std::vector<double>> ts;
  if (timestamps_) {
    ts.emplace(timestamps_->begin() + static_cast<std::ptrdiff_t>(begin),
               timestamps_->begin() + static_cast<std::ptrdiff_t>(begin + count));
  }
  return TimeSeries(values_.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)),
                    dim_names_, std::move(ts));
}

std::vector<DiffVector> first_differences(const TimeSeries& s) {
  const Matrix& x = s.values();
  std::vector<DiffVector> out;
  out.reserve(s.length() - 1);
  for (Eigen::Index t = 1; t < x.rows(); ++t) out.emplace_back((x.row(t) - x.row(t - 1)).transpose());
  return out;
}

Matrix cumulative_sum(const std::vector<DiffVector>& diffs, const Vector& x0) {
  Matrix out(static_cast<Eigen::Index>(diffs.size() + 1), x0.size());
  out.row(0) = x0.transpose();
  for (std::size_t k = 0; k < diffs.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    out.row(i + 1) = out.row(i) + diffs[k].transpose();
  }
  return out;
}

Matrix stack_rows(const std::vector<DiffVector>& rows) {
  if (rows.empty()) return Matrix(0, 0);
  Matrix out(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = rows[k].transpose();
  return out;
}

Normalizer::Normalizer(Vector mean, Vector std) : mean_(std::move(mean)), std_(std::move(std)) {
  if (mean_.size() != std_.size()) throw Error(ErrorCode::DimensionMismatch, "mean/std length differ");
  for (Eigen::Index j = 0; j < std_.size(); ++j) {
    if (!(std_(j) > 0.0) || !std::isfinite(std_(j))) {
      throw Error(ErrorCode::DegenerateDimension, "dimension " + std::to_string(j) + " has zero spread");
    }
  }
}

Normalizer Normalizer::fit(const TimeSeries& s) {
  const Matrix& x = s.values();
  const Vector mean = x.colwise().mean().transpose();
  Vector std(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - mean(j)).square().mean();
    std(j) = std::sqrt(var);
    // Constant columns can leave rounding residue in the centered values.
    if (!(std(j) > 1e-14 * std::max(1.0, std::abs(mean(j))))) {
      throw Error(ErrorCode::DegenerateDimension, "column " + std::to_string(j) + " is constant");
    }
  }
  return Normalizer(mean, std);
}

Matrix Normalizer::apply(const Matrix& values) const {
  if (values.cols() != mean_.size()) throw Error(ErrorCode::DimensionMismatch, "normalizer width mismatch");
  return (values.rowwise() - mean_.transpose()).array().rowwise() / std_.transpose().array();
}

Matrix Normalizer::invert(const Matrix& values) const {
  if (values.cols() != mean_.size()) throw Error(ErrorCode::DimensionMismatch, "normalizer width mismatch");
  Matrix out = values.array().rowwise() * std_.transpose().array();
  return out.rowwise() + mean_.transpose();
}

TimeSeries Normalizer::apply(const TimeSeries& s) const {
  return TimeSeries(apply(s.values()), s.dim_names(), s.timestamps());
}

TimeSeries Normalizer::invert(const TimeSeries& s) const {
  return TimeSeries(invert(s.values()), s.dim_names(), s.timestamps());
}

std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id) noexcept {
  return mix_seed(mix_seed(seed) ^ mix_seed(stream_id + 0x5851F42D4C957F2DULL));
}

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t RandomStream::next_u64() { return engine_(); }

double RandomStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t RandomStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "uniform_index over empty range");
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

double RandomStream::normal() {
  if (spare_normal_) {
    const double z = *spare_normal_;
    spare_normal_.reset();
    return z;
  }
  double u = 0.0, v = 0.0, s = 0.0;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * f;
  return u * f;
}

Vector RandomStream::normal_vector(std::size_t n) {
  Vector z(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal();
  return z;
}

RandomStream RandomStream::fork() { return RandomStream(mix_seed(next_u64())); }

}  // namespace tsmcmc
