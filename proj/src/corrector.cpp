#include "tsmcmc/corrector.hpp"

#include <algorithm>
#include <cmath>

namespace tsmcmc {

std::string to_string(ConditioningMode mode) {
  switch (mode) {
    case ConditioningMode::Synthetic: return "synthetic";
    case ConditioningMode::Real: return "real";
    case ConditioningMode::Mixed: return "mixed";
  }
  return "synthetic";
}

ConditioningMode conditioning_mode_from_string(const std::string& name) {
  if (name == "synthetic") return ConditioningMode::Synthetic;
  if (name == "real") return ConditioningMode::Real;
  if (name == "mixed") return ConditioningMode::Mixed;
  throw Error(ErrorCode::InvalidArgument, "unknown conditioning mode '" + name + "'");
}

void CorrectionConfig::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "beta must lie in [0, 1]");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw Error(ErrorCode::InvalidArgument, "epsilon must be > 0");
  if (max_retries < 1) throw Error(ErrorCode::InvalidArgument, "max_retries must be >= 1");
}

double CorrectionRun::acceptance_rate() const noexcept {
  return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
}

nlohmann::json CorrectionRun::diagnostics() const {
  nlohmann::json thetas = nlohmann::json::array();
  for (const auto& th : theta_trace) thetas.push_back(std::vector<double>(th.data(), th.data() + th.size()));
  return {{"length", corrected.length()},
          {"warm_start", warm_start},
          {"proposed", proposed},
          {"accepted", accepted},
          {"acceptance_rate", acceptance_rate()},
          {"forced_accepts", forced_accepts},
          {"retries_per_step", retries_per_step},
          {"gamma_trace", gamma_trace},
          {"theta_trace", std::move(thetas)}};
}

DiffVector candidate_discrepancy(const Vector& q_next, const Vector& v, const Vector& s_t, double beta,
                                 bool first_step, const Vector& s_0) {
  if (first_step) {
    if (q_next.size() != s_0.size()) throw Error(ErrorCode::DimensionMismatch, "candidate and s_0 differ in length");
    return q_next - s_0;
  }
  if (q_next.size() != v.size() || q_next.size() != s_t.size()) {
    throw Error(ErrorCode::DimensionMismatch, "candidate, v and s_t must share one length");
  }
  return (1.0 - beta) * (q_next - v) + beta * (q_next - s_t);
}

double mh_acceptance(double pi_new, double pi_cur, double epsilon) {
  return std::min(pi_new / (pi_cur + epsilon), 1.0);
}

namespace {

// Context rows for generating index k.
Matrix context_for(const Matrix& real, const Matrix& synthetic, std::size_t k, std::size_t w, bool use_real) {
  const auto start = static_cast<Eigen::Index>(k - w);
  const auto rows = static_cast<Eigen::Index>(w);
  return use_real ? Matrix(real.middleRows(start, rows)) : Matrix(synthetic.middleRows(start, rows));
}

bool real_context_at(ConditioningMode mode, std::size_t generated_index) {
  switch (mode) {
    case ConditioningMode::Synthetic: return false;
    case ConditioningMode::Real: return true;
    case ConditioningMode::Mixed: return generated_index % 2 == 1;
  }
  return false;
}

std::size_t warm_start_rows(const TimeSeries& S, const ProposalSource& source) {
  if (source.dims() != S.dims()) {
    throw Error(ErrorCode::DimensionMismatch, "source dims " + std::to_string(source.dims()) +
                                                  " differ from series dims " + std::to_string(S.dims()));
  }
  const std::size_t w = source.context_len();
  if (w < 1) throw Error(ErrorCode::InvalidArgument, "source context_len must be >= 1");
  if (w >= S.length()) {
    throw Error(ErrorCode::SeriesTooShort, "series of length " + std::to_string(S.length()) +
                                               " leaves nothing to generate after a warm start of " +
                                               std::to_string(w));
  }
  return w;
}

Vector checked_proposal(ProposalSource& source, const Matrix& context, RandomStream& rng, std::size_t k) {
  try {
    Vector q = source.propose(context, rng);
    if (static_cast<std::size_t>(q.size()) != source.dims() || !q.allFinite()) {
      throw Error(ErrorCode::NonFiniteValue, "source returned a malformed or non-finite proposal");
    }
    return q;
  } catch (const Error& e) {
    throw e.at_step(k);
  }
}

}  // namespace

CorrectionRun correct_series(const TimeSeries& S, ProposalSource& source, const TargetDensity& density,
                             const CorrectionConfig& cfg) {
  cfg.validate();
  if (density.dims() != S.dims()) {
    throw Error(ErrorCode::DimensionMismatch, "density dims " + std::to_string(density.dims()) +
                                                  " differ from series dims " + std::to_string(S.dims()));
  }
  const std::size_t w = warm_start_rows(S, source);
  const std::size_t T = S.length();
  const Matrix& real = S.values();

  RandomStream proposal_rng(derive_seed(cfg.seed, kProposalStream));
  RandomStream accept_rng(derive_seed(cfg.seed, kAcceptStream));

  Matrix out(real.rows(), real.cols());
  out.topRows(static_cast<Eigen::Index>(w)) = real.topRows(static_cast<Eigen::Index>(w));

  CorrectionRun run{TimeSeries(real, S.dim_names(), S.timestamps()), 0, 0, 0, 0, {}, {}, {}};
  run.warm_start = w;
  run.retries_per_step.reserve(T - w);
  run.theta_trace.reserve(T - w);
  run.gamma_trace.reserve(T - w);

  auto eval = [&](const DiffVector& theta, std::size_t k) {
    try {
      return density(theta);
    } catch (const Error& e) {
      throw e.at_step(k);
    }
  };

  DiffVector theta = S.row(1) - S.row(0);
  double pi_theta = eval(theta, w);
  Vector v;  // last appended synthetic value

  for (std::size_t k = w; k < T; ++k) {
    const bool first = (k == w);
    const Matrix context = context_for(real, out, k, w, real_context_at(cfg.conditioning_mode, k - w));
    const Vector s_prev = S.row(k - 1);
    const Vector s_here = S.row(k);

    Vector best_q;
    DiffVector best_theta;
    double best_gamma = -1.0;
    double best_pi = 0.0;
    bool accepted = false;
    std::size_t rejections = 0;

    while (rejections < cfg.max_retries) {
      Vector q = checked_proposal(source, context, proposal_rng, k);
      ++run.proposed;
      DiffVector cand = candidate_discrepancy(q, first ? q : v, s_prev, cfg.beta, first, s_here);
      const double pi_cand = eval(cand, k);
      const double gamma = mh_acceptance(pi_cand, pi_theta, cfg.epsilon);
      if (gamma > best_gamma) {
        best_gamma = gamma;
        best_q = q;
        best_theta = cand;
        best_pi = pi_cand;
      }
      const double u = accept_rng.uniform();
      if (u <= gamma) {
        accepted = true;
        best_gamma = gamma;
        best_q = std::move(q);
        best_theta = std::move(cand);
        best_pi = pi_cand;
        break;
      }
      ++rejections;
    }
    if (accepted) {
      ++run.accepted;
    } else {
      ++run.forced_accepts;
    }
    theta = best_theta;
    pi_theta = best_pi;
    v = best_q;
    out.row(static_cast<Eigen::Index>(k)) = best_q.transpose();
    run.retries_per_step.push_back(rejections);
    run.theta_trace.push_back(theta);
    run.gamma_trace.push_back(best_gamma);
  }
  run.corrected = TimeSeries(std::move(out), S.dim_names(), S.timestamps());
  return run;
}

TimeSeries generate_raw(const TimeSeries& S, ProposalSource& source, std::uint64_t seed, ConditioningMode mode) {
  const std::size_t w = warm_start_rows(S, source);
  const Matrix& real = S.values();
  RandomStream proposal_rng(derive_seed(seed, kProposalStream));
  Matrix out(real.rows(), real.cols());
  out.topRows(static_cast<Eigen::Index>(w)) = real.topRows(static_cast<Eigen::Index>(w));
  for (std::size_t k = w; k < S.length(); ++k) {
    const Matrix context = context_for(real, out, k, w, real_context_at(mode, k - w));
    out.row(static_cast<Eigen::Index>(k)) = checked_proposal(source, context, proposal_rng, k).transpose();
  }
  try {
    return TimeSeries(std::move(out), S.dim_names(), S.timestamps());
  } catch (const Error& e) {
    throw Error(ErrorCode::NonFiniteState, "raw rollout produced non-finite values: " + e.message());
  }
}

}  // namespace tsmcmc
