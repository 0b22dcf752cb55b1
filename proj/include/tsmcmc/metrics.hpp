#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsmcmc/core.hpp"

namespace tsmcmc {

/// Autocorrelation at lags 1..K: sum_t (x_t - m)(x_{t+k} - m) / sum_t (x_t - m)^2.
/// Throws TooFewPoints when T <= K and ZeroVariance for a constant series.
Vector acf(const Vector& x, std::size_t max_lag);

/// min(K, floor(T / 4)), at least 1.
std::size_t effective_lags(std::size_t length, std::size_t requested);

/// Per-dimension mean |ACF_real(k) - ACF_gen(k)| over k = 1..K.
Vector acf_error_per_dim(const TimeSeries& real, const TimeSeries& gen, std::size_t max_lag);
double acf_error(const TimeSeries& real, const TimeSeries& gen, std::size_t max_lag);

/// E[(x - mu)^order] / sigma^order with population moments.
double standardized_moment(const Vector& x, int order);
double skewness(const Vector& x);
/// Raw (non-excess) kurtosis; 3 for a Gaussian.
double kurtosis(const Vector& x);

Vector skewness_error_per_dim(const TimeSeries& real, const TimeSeries& gen);
Vector kurtosis_error_per_dim(const TimeSeries& real, const TimeSeries& gen);
double skewness_error(const TimeSeries& real, const TimeSeries& gen);
double kurtosis_error(const TimeSeries& real, const TimeSeries& gen);

/// 1 - SS_res / SS_tot per dimension with y = real, yhat = gen, index-aligned.
Vector r2_per_dim(const TimeSeries& real, const TimeSeries& gen);
double r2_score(const TimeSeries& real, const TimeSeries& gen);

/// Plain full-batch gradient descent. `objective` writes the gradient into
/// its second argument and returns the objective value.
struct DescentResult {
  Vector x;
  double value = 0.0;
  std::size_t iterations = 0;
};
DescentResult gradient_descent(const std::function<double(const Vector&, Vector&)>& objective, Vector x0,
                               double learning_rate, std::size_t iterations, double tolerance = 0.0);

/// Minimizes ||Z b - Y||^2 + lambda ||b||^2 column-wise, leaving the first
/// coefficient unpenalized when `free_intercept`.
Matrix ridge_solve(const Matrix& Z, const Matrix& Y, double lambda, bool free_intercept = true);

struct DiscriminativeConfig {
  std::uint64_t seed = 0;
  std::size_t epochs = 300;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  double train_fraction = 0.8;
};

/// Flattened window values followed by per-dimension (mean, std, lag-1 autocorrelation).
Vector window_features(const Matrix& window);

/// |held-out accuracy - 0.5| of a logistic classifier separating the two
/// window sets. Needs >= 20 windows per side (TooFewWindows).
double discriminative_score(const std::vector<Matrix>& real_windows, const std::vector<Matrix>& gen_windows,
                            const DiscriminativeConfig& cfg);

struct PredictiveConfig {
  std::size_t lag = 16;
  double ridge = 1e-3;
};

/// Train-on-gen, test-on-real mean squared one-step error of a ridge AR
/// predictor on the last `lag` rows.
double predictive_score(const TimeSeries& real, const TimeSeries& gen, const PredictiveConfig& cfg);

struct PcaResult {
  Matrix real_coords;  // windows x 2
  Matrix gen_coords;
  Matrix components;   // features x 2
  Vector mean;
  std::array<double, 2> explained{0.0, 0.0};
};

/// Components fitted on the flattened real windows only; the largest
/// magnitude loading of each component is made positive.
PcaResult pca_projection(const std::vector<Matrix>& real_windows, const std::vector<Matrix>& gen_windows);

struct MetricsConfig {
  std::size_t max_lag = 32;
  std::size_t p = 16;
  std::size_t q = 32;
  std::size_t window_stride = 4;
  DiscriminativeConfig discriminative;
  PredictiveConfig predictive;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

struct MetricsReport {
  double acf_error = 0.0;
  double skew_error = 0.0;
  double kurt_error = 0.0;
  double r2 = 0.0;
  double discriminative = 0.0;
  double predictive = 0.0;
  double predictive_baseline = 0.0;  // real-on-real
  Vector acf_per_dim, skew_per_dim, kurt_per_dim, r2_per_dim;
  std::size_t lags = 0;
  Matrix acf_real;  // lags x d
  Matrix acf_gen;
  PcaResult pca;
  nlohmann::json config;

  nlohmann::json to_json() const;
};

/// All six scores plus ACF curves and PCA coordinates; one shared seed
/// drives the discriminative split.
MetricsReport evaluate(const TimeSeries& real, const TimeSeries& gen, const MetricsConfig& cfg = {});

}  // namespace tsmcmc
