#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsmcmc/core.hpp"

namespace tsmcmc {

/// Anything the corrector can evaluate as pi(theta).
class TargetDensity {
 public:
  virtual ~TargetDensity() = default;
  virtual std::size_t dims() const = 0;
  virtual double operator()(const DiffVector& theta) const = 0;
};

enum class DensityKind { HistogramProduct, GaussianKde };

std::string to_string(DensityKind kind);
DensityKind density_kind_from_string(const std::string& name);

struct DensityConfig {
  DensityKind kind = DensityKind::GaussianKde;
  std::size_t bins_per_dim = 16;
  double epsilon_floor = 1e-12;
};

/// Estimated density of first-order differences, modelled as a product of
/// per-dimension marginals. Immutable after fit; evaluation is reentrant.
///
/// Every evaluation is floored at epsilon_floor, and a query outside the
/// histogram support (in any dimension) returns exactly epsilon_floor. A
/// dimension whose differences are all equal is kept as a point mass: its
/// factor is 1 at that value and the whole density drops to the floor
/// elsewhere.
class DiffDensity : public TargetDensity {
 public:
  struct Marginal {
    // Histogram: edges (bins + 1) and counts. KDE: samples and bandwidth.
    std::vector<double> edges;
    std::vector<double> counts;
    std::vector<double> samples;
    double bandwidth = 0.0;
    bool point_mass = false;
    double point = 0.0;
  };

  DiffDensity(DensityKind kind, std::vector<Marginal> marginals, std::size_t total_count, double epsilon_floor);

  std::size_t dims() const override { return marginals_.size(); }
  double operator()(const DiffVector& theta) const override;

  DensityKind kind() const noexcept { return kind_; }
  std::size_t total_count() const noexcept { return total_count_; }
  double epsilon_floor() const noexcept { return epsilon_floor_; }
  const std::vector<Marginal>& marginals() const noexcept { return marginals_; }

  /// Dimensions fitted as point masses (all differences equal).
  std::vector<std::size_t> zero_range_dims() const;

  /// Density of one marginal at x, before flooring.
  double marginal_density(std::size_t dim, double x) const;

  nlohmann::json to_json() const;
  static DiffDensity from_json(const nlohmann::json& doc);

 private:
  DensityKind kind_;
  std::vector<Marginal> marginals_;
  std::size_t total_count_;
  double epsilon_floor_;
};

/// Fits on the first-order differences of s. Throws SeriesTooShort when s
/// has fewer than 3 rows and ZeroRange when every dimension is degenerate.
DiffDensity fit_diff_density(const TimeSeries& s, const DensityConfig& cfg = {});

/// Same estimator on an explicit n x d matrix of difference vectors.
DiffDensity fit_diff_density(const Matrix& diffs, const DensityConfig& cfg);

/// Convenience wrapper for DiffDensity::operator() with a width check.
double density(const TargetDensity& d, const DiffVector& theta);

}  // namespace tsmcmc
