#include "tsmcmc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsmcmc/datasets.hpp"

namespace tsmcmc {

namespace {

void require_same_shape(const TimeSeries& a, const TimeSeries& b, bool same_length) {
  if (a.dims() != b.dims()) throw Error(ErrorCode::DimensionMismatch, "real and generated series differ in dims");
  if (same_length && a.length() != b.length()) {
    throw Error(ErrorCode::DimensionMismatch, "real and generated series differ in length");
  }
}

nlohmann::json to_json_vector(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

Vector acf(const Vector& x, std::size_t max_lag) {
  if (max_lag < 1) throw Error(ErrorCode::InvalidArgument, "ACF needs at least one lag");
  const auto T = static_cast<std::size_t>(x.size());
  if (T <= max_lag) {
    throw Error(ErrorCode::TooFewPoints, "ACF with " + std::to_string(max_lag) + " lags needs more than " +
                                             std::to_string(max_lag) + " points, got " + std::to_string(T));
  }
  const Vector c = x.array() - x.mean();
  const double denom = c.squaredNorm();
  if (!(denom > 0.0)) throw Error(ErrorCode::ZeroVariance, "ACF of a constant series");
  Vector out(static_cast<Eigen::Index>(max_lag));
  const auto n = static_cast<Eigen::Index>(T);
  for (Eigen::Index k = 1; k <= out.size(); ++k) {
    out(k - 1) = c.head(n - k).dot(c.tail(n - k)) / denom;
  }
  return out;
}

std::size_t effective_lags(std::size_t length, std::size_t requested) {
  return std::max<std::size_t>(1, std::min(requested, length / 4));
}

Vector acf_error_per_dim(const TimeSeries& real, const TimeSeries& gen, std::size_t max_lag) {
  require_same_shape(real, gen, false);
  Vector out(static_cast<Eigen::Index>(real.dims()));
  for (std::size_t j = 0; j < real.dims(); ++j) {
    const Vector a = acf(real.column(j), max_lag);
    const Vector b = acf(gen.column(j), max_lag);
    out(static_cast<Eigen::Index>(j)) = (a - b).cwiseAbs().mean();
  }
  return out;
}

double acf_error(const TimeSeries& real, const TimeSeries& gen, std::size_t max_lag) {
  return acf_error_per_dim(real, gen, max_lag).mean();
}

double standardized_moment(const Vector& x, int order) {
  const Vector c = x.array() - x.mean();
  const double var = c.squaredNorm() / static_cast<double>(x.size());
  if (!(var > 0.0)) throw Error(ErrorCode::ZeroVariance, "standardized moment of a constant series");
  return c.array().pow(order).mean() / std::pow(var, 0.5 * order);
}

double skewness(const Vector& x) { return standardized_moment(x, 3); }
double kurtosis(const Vector& x) { return standardized_moment(x, 4); }

namespace {

Vector moment_error_per_dim(const TimeSeries& real, const TimeSeries& gen, int order) {
  require_same_shape(real, gen, false);
  Vector out(static_cast<Eigen::Index>(real.dims()));
  for (std::size_t j = 0; j < real.dims(); ++j) {
    out(static_cast<Eigen::Index>(j)) =
        std::abs(standardized_moment(real.column(j), order) - standardized_moment(gen.column(j), order));
  }
  return out;
}

}  // namespace

Vector skewness_error_per_dim(const TimeSeries& real, const TimeSeries& gen) {
  return moment_error_per_dim(real, gen, 3);
}
Vector kurtosis_error_per_dim(const TimeSeries& real, const TimeSeries& gen) {
  return moment_error_per_dim(real, gen, 4);
}
double skewness_error(const TimeSeries& real, const TimeSeries& gen) { return skewness_error_per_dim(real, gen).mean(); }
double kurtosis_error(const TimeSeries& real, const TimeSeries& gen) { return kurtosis_error_per_dim(real, gen).mean(); }

Vector r2_per_dim(const TimeSeries& real, const TimeSeries& gen) {
  require_same_shape(real, gen, true);
  Vector out(static_cast<Eigen::Index>(real.dims()));
  for (std::size_t j = 0; j < real.dims(); ++j) {
    const Vector y = real.column(j);
    const Vector yhat = gen.column(j);
    const double ss_tot = (y.array() - y.mean()).square().sum();
    if (!(ss_tot > 0.0)) throw Error(ErrorCode::ZeroVariance, "R^2 undefined for a constant real dimension");
    out(static_cast<Eigen::Index>(j)) = 1.0 - (y - yhat).squaredNorm() / ss_tot;
  }
  return out;
}

double r2_score(const TimeSeries& real, const TimeSeries& gen) { return r2_per_dim(real, gen).mean(); }

DescentResult gradient_descent(const std::function<double(const Vector&, Vector&)>& objective, Vector x0,
                               double learning_rate, std::size_t iterations, double tolerance) {
  DescentResult r{std::move(x0), 0.0, 0};
  Vector grad(r.x.size());
  for (; r.iterations < iterations; ++r.iterations) {
    r.value = objective(r.x, grad);
    if (tolerance > 0.0 && grad.norm() <= tolerance) break;
    r.x -= learning_rate * grad;
  }
  if (r.iterations == iterations) r.value = objective(r.x, grad);
  return r;
}

Matrix ridge_solve(const Matrix& Z, const Matrix& Y, double lambda, bool free_intercept) {
  Matrix gram = Z.transpose() * Z;
  gram.diagonal().array() += lambda;
  if (free_intercept && gram.rows() > 0) gram(0, 0) -= lambda;
  return gram.ldlt().solve(Z.transpose() * Y);
}

Vector window_features(const Matrix& window) {
  const Eigen::Index rows = window.rows();
  const Eigen::Index d = window.cols();
  Vector f(rows * d + 3 * d);
  Eigen::Index k = 0;
  for (Eigen::Index t = 0; t < rows; ++t) {
    for (Eigen::Index j = 0; j < d; ++j) f(k++) = window(t, j);
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    const Vector col = window.col(j);
    const double mean = col.mean();
    const Vector c = col.array() - mean;
    const double ss = c.squaredNorm();
    f(k++) = mean;
    f(k++) = std::sqrt(ss / static_cast<double>(rows));
    f(k++) = (ss > 0.0 && rows > 1) ? c.head(rows - 1).dot(c.tail(rows - 1)) / ss : 0.0;
  }
  return f;
}

double discriminative_score(const std::vector<Matrix>& real_windows, const std::vector<Matrix>& gen_windows,
                            const DiscriminativeConfig& cfg) {
  if (real_windows.size() < 20 || gen_windows.size() < 20) {
    throw Error(ErrorCode::TooFewWindows, "discriminative score needs >= 20 windows per side, got " +
                                              std::to_string(real_windows.size()) + " real and " +
                                              std::to_string(gen_windows.size()) + " generated");
  }
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train_fraction must lie in (0, 1)");
  }

  // One permutation shared by both classes: equal-size sets get a paired split.
  RandomStream rng(cfg.seed);
  const std::size_t n_max = std::max(real_windows.size(), gen_windows.size());
  std::vector<std::size_t> perm(n_max);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n_max - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_index(i + 1)]);

  std::vector<Vector> train_x, test_x;
  std::vector<double> train_y, test_y;
  auto split = [&](const std::vector<Matrix>& windows, double label) {
    const std::size_t n_train = static_cast<std::size_t>(std::floor(cfg.train_fraction * windows.size()));
    std::size_t taken = 0;
    for (std::size_t idx : perm) {
      if (idx >= windows.size()) continue;
      Vector f = window_features(windows[idx]);
      if (taken++ < n_train) {
        train_x.push_back(std::move(f));
        train_y.push_back(label);
      } else {
        test_x.push_back(std::move(f));
        test_y.push_back(label);
      }
    }
  };
  split(real_windows, 1.0);
  split(gen_windows, 0.0);

  const auto n = static_cast<Eigen::Index>(train_x.size());
  const auto m = train_x.front().size();
  Matrix X(n, m);
  for (Eigen::Index i = 0; i < n; ++i) X.row(i) = train_x[static_cast<std::size_t>(i)].transpose();
  const Vector mu = X.colwise().mean().transpose();
  Vector sd = ((X.rowwise() - mu.transpose()).array().square().colwise().mean()).sqrt().transpose();
  for (Eigen::Index j = 0; j < sd.size(); ++j) {
    if (!(sd(j) > 1e-12)) sd(j) = 1.0;
  }
  auto standardize = [&](const Vector& f) -> Vector { return (f - mu).cwiseQuotient(sd); };
  Matrix A(n, m + 1);
  A.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) A.row(i).tail(m) = standardize(train_x[static_cast<std::size_t>(i)]).transpose();
  const Eigen::Map<const Vector> y(train_y.data(), n);

  auto sigmoid = [](double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); };
  auto objective = [&](const Vector& w, Vector& grad) {
    const Vector z = A * w;
    Vector p(n);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = sigmoid(z(i));
      // log(1 + exp(z)) - y z, computed stably
      loss += std::max(z(i), 0.0) + std::log1p(std::exp(-std::abs(z(i)))) - y(i) * z(i);
    }
    grad = A.transpose() * (p - y) / static_cast<double>(n);
    grad.tail(m) += cfg.l2 * w.tail(m);
    return loss / static_cast<double>(n) + 0.5 * cfg.l2 * w.tail(m).squaredNorm();
  };
  const DescentResult fit = gradient_descent(objective, Vector::Zero(m + 1), cfg.learning_rate, cfg.epochs);

  std::size_t correct = 0;
  for (std::size_t i = 0; i < test_x.size(); ++i) {
    const double z = fit.x(0) + fit.x.tail(m).dot(standardize(test_x[i]));
    const double pred = z > 0.0 ? 1.0 : 0.0;
    if (pred == test_y[i]) ++correct;
  }
  const double accuracy = static_cast<double>(correct) / static_cast<double>(test_x.size());
  return std::abs(accuracy - 0.5);
}

namespace {

struct LagDesign {
  Matrix Z;  // [1, x_{t-1}, ..., x_{t-lag}]
  Matrix Y;  // x_t
};

LagDesign lag_design(const TimeSeries& s, std::size_t lag) {
  if (s.length() <= lag + 1) {
    throw Error(ErrorCode::SeriesTooShort, "predictive score with lag " + std::to_string(lag) +
                                               " needs more than " + std::to_string(lag + 1) + " rows");
  }
  const Matrix& x = s.values();
  const auto L = static_cast<Eigen::Index>(lag);
  const Eigen::Index d = x.cols();
  const Eigen::Index n = x.rows() - L;
  LagDesign out{Matrix(n, 1 + L * d), x.bottomRows(n)};
  out.Z.col(0).setOnes();
  for (Eigen::Index l = 0; l < L; ++l) out.Z.middleCols(1 + l * d, d) = x.middleRows(L - l - 1, n);
  return out;
}

}  // namespace

double predictive_score(const TimeSeries& real, const TimeSeries& gen, const PredictiveConfig& cfg) {
  require_same_shape(real, gen, false);
  if (cfg.lag < 1) throw Error(ErrorCode::InvalidArgument, "predictive lag must be >= 1");
  if (!(cfg.ridge >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ridge must be >= 0");
  const LagDesign train = lag_design(gen, cfg.lag);
  const LagDesign test = lag_design(real, cfg.lag);
  const Matrix B = ridge_solve(train.Z, train.Y, cfg.ridge);
  const Matrix err = test.Y - test.Z * B;
  return err.rowwise().squaredNorm().mean();
}

PcaResult pca_projection(const std::vector<Matrix>& real_windows, const std::vector<Matrix>& gen_windows) {
  if (real_windows.size() < 2) throw Error(ErrorCode::TooFewWindows, "PCA needs at least 2 real windows");
  auto flatten = [](const std::vector<Matrix>& ws, Eigen::Index width) {
    Matrix out(static_cast<Eigen::Index>(ws.size()), width);
    for (std::size_t i = 0; i < ws.size(); ++i) {
      const Matrix& w = ws[i];
      if (w.size() != width) throw Error(ErrorCode::DimensionMismatch, "PCA windows differ in shape");
      Eigen::Index k = 0;
      for (Eigen::Index t = 0; t < w.rows(); ++t) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) out(static_cast<Eigen::Index>(i), k++) = w(t, j);
      }
    }
    return out;
  };
  const Eigen::Index width = real_windows.front().size();
  const Matrix R = flatten(real_windows, width);
  const Matrix G = flatten(gen_windows, width);

  PcaResult out;
  out.mean = R.colwise().mean().transpose();
  const Matrix centered = R.rowwise() - out.mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(R.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const Vector values = eig.eigenvalues().cwiseMax(0.0);
  const double total = values.sum();

  out.components = Matrix::Zero(width, 2);
  for (Eigen::Index c = 0; c < 2 && c < width; ++c) {
    const Eigen::Index idx = width - 1 - c;  // eigenvalues ascending
    Vector comp = eig.eigenvectors().col(idx);
    Eigen::Index arg = 0;
    comp.cwiseAbs().maxCoeff(&arg);
    if (comp(arg) < 0.0) comp = -comp;
    out.components.col(c) = comp;
    out.explained[static_cast<std::size_t>(c)] = total > 0.0 ? values(idx) / total : 0.0;
  }
  out.real_coords = centered * out.components;
  out.gen_coords = (G.rowwise() - out.mean.transpose()) * out.components;
  return out;
}

nlohmann::json MetricsConfig::to_json() const {
  return {{"max_lag", max_lag},
          {"p", p},
          {"q", q},
          {"window_stride", window_stride},
          {"seed", seed},
          {"discriminative",
           {{"epochs", discriminative.epochs},
            {"learning_rate", discriminative.learning_rate},
            {"l2", discriminative.l2},
            {"train_fraction", discriminative.train_fraction}}},
          {"predictive", {{"lag", predictive.lag}, {"ridge", predictive.ridge}}}};
}

nlohmann::json MetricsReport::to_json() const {
  return {{"acf_error", acf_error},
          {"skew_error", skew_error},
          {"kurt_error", kurt_error},
          {"r2", r2},
          {"discriminative", discriminative},
          {"predictive", predictive},
          {"predictive_baseline", predictive_baseline},
          {"lags", lags},
          {"pca_explained", {pca.explained[0], pca.explained[1]}},
          {"per_dim",
           {{"acf_error", to_json_vector(acf_per_dim)},
            {"skew_error", to_json_vector(skew_per_dim)},
            {"kurt_error", to_json_vector(kurt_per_dim)},
            {"r2", to_json_vector(r2_per_dim)}}},
          {"config", config}};
}

MetricsReport evaluate(const TimeSeries& real, const TimeSeries& gen, const MetricsConfig& cfg) {
  require_same_shape(real, gen, true);
  MetricsReport rep;
  rep.config = cfg.to_json();
  rep.lags = effective_lags(real.length(), cfg.max_lag);
  rep.config["effective_lags"] = rep.lags;

  const auto d = static_cast<Eigen::Index>(real.dims());
  rep.acf_real = Matrix(static_cast<Eigen::Index>(rep.lags), d);
  rep.acf_gen = Matrix(static_cast<Eigen::Index>(rep.lags), d);
  rep.acf_per_dim = Vector(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    rep.acf_real.col(j) = acf(real.column(static_cast<std::size_t>(j)), rep.lags);
    rep.acf_gen.col(j) = acf(gen.column(static_cast<std::size_t>(j)), rep.lags);
    rep.acf_per_dim(j) = (rep.acf_real.col(j) - rep.acf_gen.col(j)).cwiseAbs().mean();
  }
  rep.acf_error = rep.acf_per_dim.mean();
  rep.skew_per_dim = skewness_error_per_dim(real, gen);
  rep.kurt_per_dim = kurtosis_error_per_dim(real, gen);
  rep.r2_per_dim = r2_per_dim(real, gen);
  rep.skew_error = rep.skew_per_dim.mean();
  rep.kurt_error = rep.kurt_per_dim.mean();
  rep.r2 = rep.r2_per_dim.mean();

  std::vector<Matrix> real_windows, gen_windows;
  for (const auto& w : make_windows(real, cfg.p, cfg.q, cfg.window_stride)) real_windows.push_back(w.joined());
  for (const auto& w : make_windows(gen, cfg.p, cfg.q, cfg.window_stride)) gen_windows.push_back(w.joined());

  DiscriminativeConfig dcfg = cfg.discriminative;
  dcfg.seed = cfg.seed;
  rep.discriminative = discriminative_score(real_windows, gen_windows, dcfg);
  rep.predictive = predictive_score(real, gen, cfg.predictive);
  rep.predictive_baseline = predictive_score(real, real, cfg.predictive);
  rep.pca = pca_projection(real_windows, gen_windows);
  return rep;
}

}  // namespace tsmcmc
