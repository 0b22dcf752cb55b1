#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsmcmc/core.hpp"
#include "tsmcmc/density.hpp"
#include "tsmcmc/generators.hpp"

namespace tsmcmc {

/// Which history the source is conditioned on while generating index k:
/// the last accepted synthetic rows, the real rows preceding k, or the two
/// alternating (even generated steps synthetic, odd steps real).
enum class ConditioningMode { Synthetic, Real, Mixed };

std::string to_string(ConditioningMode mode);
ConditioningMode conditioning_mode_from_string(const std::string& name);

struct CorrectionConfig {
  double beta = 0.5;
  double epsilon = 1e-8;
  std::size_t max_retries = 64;
  ConditioningMode conditioning_mode = ConditioningMode::Synthetic;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CorrectionRun {
  TimeSeries corrected;
  std::size_t warm_start = 0;         // leading rows copied from the real series
  std::size_t proposed = 0;           // candidates drawn
  std::size_t accepted = 0;           // candidates that passed u <= gamma
  std::size_t forced_accepts = 0;     // steps that exhausted max_retries
  std::vector<std::size_t> retries_per_step;  // rejections before the appended value, per generated step
  std::vector<DiffVector> theta_trace;        // chain state after each generated step
  std::vector<double> gamma_trace;            // gamma of the appended candidate

  /// accepted / proposed. Forced fallbacks are not counted as accepted, so
  /// a run where every step is forced reports 0.
  double acceptance_rate() const noexcept;

  nlohmann::json diagnostics() const;
};

/// theta' = (1 - beta)(q_next - v) + beta(q_next - s_t); on the first
/// generated step theta' = q_next - s_0.
DiffVector candidate_discrepancy(const Vector& q_next, const Vector& v, const Vector& s_t, double beta,
                                 bool first_step, const Vector& s_0);

/// gamma = min(pi_new / (pi_cur + epsilon), 1).
double mh_acceptance(double pi_new, double pi_cur, double epsilon);

/// Stream ids used to derive the proposal and acceptance streams from a run
/// seed. generate_raw draws proposals from the same stream as the corrector.
inline constexpr std::uint64_t kProposalStream = 1;
inline constexpr std::uint64_t kAcceptStream = 2;

/// Sequential MH-filtered generation aligned index-by-index with S.
///
/// Rows [0, w) with w = source.context_len() are the teacher-forced warm
/// start and are copied from S. Each later index k draws candidates q from
/// the source, forms theta' against v (last appended synthetic value) and
/// S[k-1], and accepts with probability gamma using a uniform from the
/// acceptance stream. The chain starts at theta = S[1] - S[0]. After
/// max_retries rejections at one index the candidate with the highest gamma
/// is appended and counted as a forced accept.
CorrectionRun correct_series(const TimeSeries& S, ProposalSource& source, const TargetDensity& density,
                             const CorrectionConfig& cfg);

/// Uncorrected rollout with the same warm start and proposal stream as
/// correct_series: every first candidate is appended.
TimeSeries generate_raw(const TimeSeries& S, ProposalSource& source, std::uint64_t seed,
                        ConditioningMode mode = ConditioningMode::Synthetic);

}  // namespace tsmcmc
