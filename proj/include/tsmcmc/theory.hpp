#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsmcmc/core.hpp"

namespace tsmcmc::theory {

/// Finite-state Markov chain with a reference distribution.
struct DiscreteChain {
  Vector pi;  // length n, sums to 1
  Matrix P;   // n x n, row-stochastic

  std::size_t size() const noexcept { return static_cast<std::size_t>(pi.size()); }
  /// Throws InvalidDistribution unless pi and every row of P sum to 1 within tol.
  void validate(double tol = 1e-12) const;
};

/// p_cond(x, y) = p(y | x); p_x and q_x are the data and generated
/// conditioning marginals.
struct ConditionalModel {
  Matrix p_cond;  // nx x ny
  Vector p_x;
  Vector q_x;

  void validate(double tol = 1e-12) const;
};

/// Metropolis-Hastings kernel: P_ij = Q_ij min(1, pi_j Q_ji / (pi_i Q_ij)) off
/// the diagonal, rejected mass kept on the diagonal.
DiscreteChain build_mh_kernel(const Vector& pi, const Matrix& Q);

/// Kernel of the modified rule gamma = min(pi_j / (pi_i + epsilon), 1) with
/// no proposal-ratio term.
DiscreteChain build_modified_kernel(const Vector& pi, const Matrix& Q, double epsilon);

/// max_ij |pi_i P_ij - pi_j P_ji|.
double check_detailed_balance(const DiscreteChain& c);

/// ||pi P - pi||_1.
double check_stationarity(const DiscreteChain& c);

/// F_ij = pi_i P_ij, the joint law of consecutive states under pi.
Matrix flow_matrix(const DiscreteChain& c);

/// max_ij |F_ij - F_ji|; zero exactly when the chain is reversible.
double flow_asymmetry(const DiscreteChain& c);

struct StationaryResult {
  Vector pi;
  std::size_t iterations = 0;
  double last_change = 0.0;
};

/// Power iteration on the lazy kernel (I + P) / 2, which has the same
/// stationary vectors and is aperiodic. Stops when the L1 change drops below
/// `tolerance` or after `max_iterations`.
StationaryResult stationary_distribution(const Matrix& P, double tolerance = 1e-14,
                                         std::size_t max_iterations = 1'000'000);

struct ShiftBound {
  double tv = 0.0;
  double bound = 0.0;
  Vector q_theta;  // generated output marginal
  Vector p_data;   // data output marginal
};

/// tv = d_TV(q_theta, p_data) and bound = |sum_x g_B(x) (q_x - p_x)| with
/// g_B(x) = p(B | x). Throws EmptySubset for an empty B and InvalidDistribution
/// on malformed inputs.
ShiftBound cgan_shift_bound(const ConditionalModel& m, const std::vector<std::size_t>& subset);

/// L1 distance between the stationary law of the modified-acceptance chain
/// and pi_target.
double measure_modified_mh_bias(const Vector& pi_target, const Matrix& proposal, double epsilon);

/// Random probability vector with entries bounded away from zero.
Vector random_distribution(std::size_t n, RandomStream& rng, double floor = 1e-3);
/// Random row-stochastic matrix.
Matrix random_stochastic(std::size_t rows, std::size_t cols, RandomStream& rng);
/// Random symmetric row-stochastic matrix (symmetric weights normalised by
/// the largest row sum, remainder on the diagonal).
Matrix random_symmetric_stochastic(std::size_t n, RandomStream& rng);

/// Deterministic rotation i -> i+1 mod n.
Matrix cycle_matrix(std::size_t n);

/// Runs every check over randomized instances; "passed" is false if any
/// assertion fails. The JSON lists each check with its measured value.
nlohmann::json run_verification(std::uint64_t seed);

}  // namespace tsmcmc::theory
