#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsmcmc/core.hpp"

namespace tsmcmc {

struct LorenzConfig {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
  double dt = 0.01;
  std::size_t steps = 2000;
  std::size_t transient = 1000;
  std::array<double, 3> x0{1.0, 1.0, 1.0};

  void validate() const;
};

using LorenzState = std::array<double, 3>;

LorenzState lorenz_derivative(const LorenzConfig& cfg, const LorenzState& s) noexcept;

/// One classical fourth-order Runge-Kutta step of size cfg.dt.
LorenzState lorenz_rk4_step(const LorenzConfig& cfg, const LorenzState& s) noexcept;

/// Fixed-step RK4 trajectory; the first `transient` states after x0 are
/// dropped and the next `steps` states are returned (x0 itself is never
/// emitted). Throws NonFiniteState with the step index on divergence.
TimeSeries simulate_lorenz(const LorenzConfig& cfg);

struct CsvSchema {
  std::optional<std::string> timestamp_column;
  std::vector<std::string> value_columns;
};

/// Comma-delimited, header row required, '.' decimal point, RFC-4180 quoting.
/// Timestamps may be numeric or ISO-8601 dates ("YYYY-MM-DD[ HH:MM[:SS]]"),
/// the latter converted to seconds since the Unix epoch.
TimeSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Writes a header (optional timestamp column, then dim names) and one row per
/// observation, doubles in shortest round-trip form.
void write_csv(const std::filesystem::path& path, const TimeSeries& s);

/// Shortest decimal string that parses back to exactly `x`.
std::string format_double(double x);

struct WindowPair {
  Matrix past;    // p x d
  Matrix future;  // q x d
  std::size_t origin_index = 0;  // source row of past's first row

  /// past stacked over future, (p + q) x d.
  Matrix joined() const;
};

std::size_t window_count(std::size_t length, std::size_t p, std::size_t q, std::size_t stride);

std::vector<WindowPair> make_windows(const TimeSeries& s, std::size_t p, std::size_t q,
                                     std::size_t stride = 1);

}  // namespace tsmcmc
