#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsmcmc/core.hpp"

namespace tsmcmc {

/// Conditional one-step sampler: given the last context_len() rows, draw the
/// next d-dimensional value. Implementations never modify the context and
/// must return the same value for the same (context, rng state).
class ProposalSource {
 public:
  virtual ~ProposalSource() = default;

  virtual std::size_t dims() const = 0;
  virtual std::size_t context_len() const = 0;
  virtual Vector propose(const Matrix& context, RandomStream& rng) = 0;

  /// Run metadata (kind, parameters).
  virtual nlohmann::json describe() const = 0;
};

/// Sources of the form mean(context) + diag(innovation_std) * z, z ~ N(0, I).
/// Exposing the split lets wrappers rescale the innovation.
class GaussianProposal : public ProposalSource {
 public:
  virtual Vector conditional_mean(const Matrix& context) const = 0;
  virtual const Vector& innovation_std() const = 0;

  Vector propose(const Matrix& context, RandomStream& rng) override;
};

/// Throws DimensionMismatch / ContextTooShort.
void check_context(const Matrix& context, std::size_t dims, std::size_t min_rows);

struct VarModel {
  std::size_t order = 0;
  std::vector<Matrix> coefficients;  // A_1..A_L, d x d; A_l multiplies x_{t-l}
  Vector intercept;
  Vector residual_variance;
  Vector residual_mean;  // on the training data
  std::vector<std::string> warnings;

  std::size_t dims() const noexcept { return static_cast<std::size_t>(intercept.size()); }

  /// Deterministic part: c + sum_l A_l x_{t-l} from the last `order` rows.
  Vector mean(const Matrix& context) const;

  nlohmann::json to_json() const;
};

/// Least-squares VAR(order) with intercept. Requires T >= 10 * order * d
/// (InsufficientData). Zero-variance columns raise SingularDesign; a
/// rank-deficient design otherwise falls back to ridge 1e-8 and records a
/// warning on the model.
VarModel fit_var(const TimeSeries& s, std::size_t order);

/// Draws mean(context) + sqrt(residual_variance) * z.
Vector propose_var(const VarModel& m, const Matrix& context, RandomStream& rng);

class VarSource final : public GaussianProposal {
 public:
  /// context_len >= model order; 0 means "use the order".
  explicit VarSource(VarModel model, std::size_t context_len = 0);

  std::size_t dims() const override { return model_.dims(); }
  std::size_t context_len() const override { return context_len_; }
  Vector conditional_mean(const Matrix& context) const override;
  const Vector& innovation_std() const override { return std_; }
  nlohmann::json describe() const override;

  const VarModel& model() const noexcept { return model_; }

 private:
  VarModel model_;
  Vector std_;
  std::size_t context_len_;
};

/// Last context row plus a uniformly resampled real difference vector.
class BootstrapSource final : public ProposalSource {
 public:
  BootstrapSource(std::vector<DiffVector> diffs, std::size_t context_len = 1);

  std::size_t dims() const override { return dims_; }
  std::size_t context_len() const override { return context_len_; }
  Vector propose(const Matrix& context, RandomStream& rng) override;
  nlohmann::json describe() const override;

  const std::vector<DiffVector>& diffs() const noexcept { return diffs_; }

 private:
  std::vector<DiffVector> diffs_;
  std::size_t dims_;
  std::size_t context_len_;
};

std::unique_ptr<ProposalSource> make_bootstrap_source(const TimeSeries& s, std::size_t context_len = 1);

/// inner + drift, with the innovation multiplied by noise_scale when the inner
/// source is a GaussianProposal (otherwise only the drift is applied).
class BiasedSource final : public ProposalSource {
 public:
  BiasedSource(std::unique_ptr<ProposalSource> inner, Vector drift, double noise_scale);

  std::size_t dims() const override { return inner_->dims(); }
  std::size_t context_len() const override { return inner_->context_len(); }
  Vector propose(const Matrix& context, RandomStream& rng) override;
  nlohmann::json describe() const override;

  const Vector& drift() const noexcept { return drift_; }
  double noise_scale() const noexcept { return noise_scale_; }
  bool scales_innovation() const noexcept { return gaussian_ != nullptr; }

 private:
  std::unique_ptr<ProposalSource> inner_;
  GaussianProposal* gaussian_ = nullptr;
  Vector drift_;
  double noise_scale_;
};

std::unique_ptr<ProposalSource> make_biased_source(std::unique_ptr<ProposalSource> inner, Vector drift,
                                                   double noise_scale);

}  // namespace tsmcmc
