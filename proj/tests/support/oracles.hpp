#pragma once

// Reference implementations used only by tests. They share no code with the
// library so a bug in one does not hide a bug in the other.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "tsmcmc/core.hpp"
#include "tsmcmc/density.hpp"
#include "tsmcmc/generators.hpp"

namespace oracle {

using LState = std::array<long double, 3>;

inline LState lorenz_rhs(const LState& s, long double sigma, long double rho, long double beta) {
  return {sigma * (s[1] - s[0]), s[0] * (rho - s[2]) - s[1], s[0] * s[1] - beta * s[2]};
}

/// Adaptive Dormand-Prince 5(4) in long double with a tight tolerance.
inline LState lorenz_flow(LState y, long double t_end, long double sigma = 10.0L, long double rho = 28.0L,
                          long double beta = 8.0L / 3.0L, long double tol = 1e-17L) {
  static const long double c[7] = {0, 1.0L / 5, 3.0L / 10, 4.0L / 5, 8.0L / 9, 1, 1};
  static const long double a[7][6] = {
      {},
      {1.0L / 5},
      {3.0L / 40, 9.0L / 40},
      {44.0L / 45, -56.0L / 15, 32.0L / 9},
      {19372.0L / 6561, -25360.0L / 2187, 64448.0L / 6561, -212.0L / 729},
      {9017.0L / 3168, -355.0L / 33, 46732.0L / 5247, 49.0L / 176, -5103.0L / 18656},
      {35.0L / 384, 0, 500.0L / 1113, 125.0L / 192, -2187.0L / 6784, 11.0L / 84}};
  static const long double b5[7] = {35.0L / 384, 0, 500.0L / 1113, 125.0L / 192, -2187.0L / 6784, 11.0L / 84, 0};
  static const long double b4[7] = {5179.0L / 57600,    0, 7571.0L / 16695, 393.0L / 640,
                                    -92097.0L / 339200, 187.0L / 2100, 1.0L / 40};
  (void)c;
  long double t = 0, h = t_end / 64;
  while (t < t_end) {
    if (t + h > t_end) h = t_end - t;
    LState k[7];
    for (int i = 0; i < 7; ++i) {
      LState yi = y;
      for (int j = 0; j < i; ++j)
        for (int d = 0; d < 3; ++d) yi[d] += h * a[i][j] * k[j][d];
      k[i] = lorenz_rhs(yi, sigma, rho, beta);
    }
    LState y5 = y, y4 = y;
    for (int i = 0; i < 7; ++i)
      for (int d = 0; d < 3; ++d) {
        y5[d] += h * b5[i] * k[i][d];
        y4[d] += h * b4[i] * k[i][d];
      }
    long double err = 0;
    for (int d = 0; d < 3; ++d) err = std::max(err, std::fabs(y5[d] - y4[d]) / (1 + std::fabs(y[d])));
    if (err <= tol) {
      t += h;
      y = y5;
    }
    const long double f = err == 0 ? 2.0L : 0.9L * std::pow(tol / err, 0.2L);
    h *= std::clamp(f, 0.2L, 2.0L);
  }
  return y;
}

/// Textbook sample autocorrelation with the 1/T normalization.
inline std::vector<double> acf(const std::vector<double>& x, std::size_t lags) {
  long double mean = 0;
  for (double v : x) mean += v;
  mean /= x.size();
  long double c0 = 0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  std::vector<double> out;
  for (std::size_t k = 1; k <= lags; ++k) {
    long double ck = 0;
    for (std::size_t t = 0; t + k < x.size(); ++t) ck += (x[t] - mean) * (x[t + k] - mean);
    out.push_back(static_cast<double>(ck / c0));
  }
  return out;
}

inline double moment(const std::vector<double>& x, int order) {
  long double mean = 0;
  for (double v : x) mean += v;
  mean /= x.size();
  long double m2 = 0, mk = 0;
  for (double v : x) {
    m2 += (v - mean) * (v - mean);
    mk += std::pow(static_cast<long double>(v) - mean, order);
  }
  m2 /= x.size();
  mk /= x.size();
  return static_cast<double>(mk / std::pow(m2, order / 2.0L));
}

/// x_t = phi x_{t-1} + e_t with e ~ N(0, 1) from the standard library.
inline std::vector<double> ar1(std::size_t n, double phi, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::vector<double> x(n);
  double v = nd(gen) / std::sqrt(1 - phi * phi);
  for (std::size_t t = 0; t < n; ++t) {
    v = phi * v + nd(gen);
    x[t] = v;
  }
  return x;
}

inline tsmcmc::TimeSeries column_series(const std::vector<std::vector<double>>& cols) {
  tsmcmc::Matrix m(static_cast<Eigen::Index>(cols.front().size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t t = 0; t < cols[j].size(); ++t) m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = cols[j][t];
  return tsmcmc::TimeSeries(m);
}

/// Proposes the true next real value by locating the context's last row in S.
class PerfectSource final : public tsmcmc::ProposalSource {
 public:
  PerfectSource(const tsmcmc::TimeSeries& s, std::size_t context_len) : s_(s), w_(context_len) {
    for (std::size_t t = 0; t < s.length(); ++t) index_.emplace(key(s.row(t)), t);
  }
  std::size_t dims() const override { return s_.dims(); }
  std::size_t context_len() const override { return w_; }
  tsmcmc::Vector propose(const tsmcmc::Matrix& context, tsmcmc::RandomStream&) override {
    const auto it = index_.find(key(context.row(context.rows() - 1).transpose()));
    if (it == index_.end() || it->second + 1 >= s_.length()) throw std::runtime_error("context not found in S");
    ++calls;
    return s_.row(it->second + 1);
  }
  nlohmann::json describe() const override { return {{"kind", "perfect"}}; }
  std::size_t calls = 0;

 private:
  static std::vector<double> key(const tsmcmc::Vector& v) { return {v.data(), v.data() + v.size()}; }
  tsmcmc::TimeSeries s_;
  std::size_t w_;
  std::map<std::vector<double>, std::size_t> index_;
};

/// Replays a fixed list of proposals in order, ignoring the context.
class ScriptedSource final : public tsmcmc::ProposalSource {
 public:
  ScriptedSource(std::vector<tsmcmc::Vector> script, std::size_t context_len)
      : script_(std::move(script)), w_(context_len) {}
  std::size_t dims() const override { return static_cast<std::size_t>(script_.front().size()); }
  std::size_t context_len() const override { return w_; }
  tsmcmc::Vector propose(const tsmcmc::Matrix& context, tsmcmc::RandomStream&) override {
    contexts.push_back(context);
    return script_.at(next_++);
  }
  nlohmann::json describe() const override { return {{"kind", "scripted"}}; }
  std::vector<tsmcmc::Matrix> contexts;

 private:
  std::vector<tsmcmc::Vector> script_;
  std::size_t next_ = 0;
  std::size_t w_;
};

/// Constant positive density.
class FlatDensity final : public tsmcmc::TargetDensity {
 public:
  explicit FlatDensity(std::size_t d, double level = 1.0) : d_(d), level_(level) {}
  std::size_t dims() const override { return d_; }
  double operator()(const tsmcmc::DiffVector&) const override { return level_; }

 private:
  std::size_t d_;
  double level_;
};

/// Density given by a user function of the first coordinate.
template <typename F>
class FunctionDensity final : public tsmcmc::TargetDensity {
 public:
  FunctionDensity(std::size_t d, F f) : d_(d), f_(std::move(f)) {}
  std::size_t dims() const override { return d_; }
  double operator()(const tsmcmc::DiffVector& th) const override { return f_(th); }

 private:
  std::size_t d_;
  F f_;
};

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("tsmcmc_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace oracle
