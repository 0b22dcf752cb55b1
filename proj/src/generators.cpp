#include "tsmcmc/generators.hpp"

#include <cmath>

namespace tsmcmc {

void check_context(const Matrix& context, std::size_t dims, std::size_t min_rows) {
  if (static_cast<std::size_t>(context.cols()) != dims) {
    throw Error(ErrorCode::DimensionMismatch, "context has " + std::to_string(context.cols()) +
                                                  " columns, source expects " + std::to_string(dims));
  }
  if (static_cast<std::size_t>(context.rows()) < min_rows) {
    throw Error(ErrorCode::ContextTooShort, "context has " + std::to_string(context.rows()) +
                                                " rows, source needs " + std::to_string(min_rows));
  }
}

Vector GaussianProposal::propose(const Matrix& context, RandomStream& rng) {
  Vector mean = conditional_mean(context);
  return mean + innovation_std().cwiseProduct(rng.normal_vector(dims()));
}

Vector VarModel::mean(const Matrix& context) const {
  check_context(context, dims(), order);
  Vector out = intercept;
  const Eigen::Index last = context.rows() - 1;
  for (std::size_t l = 0; l < order; ++l) {
    out.noalias() += coefficients[l] * context.row(last - static_cast<Eigen::Index>(l)).transpose();
  }
  return out;
}

nlohmann::json VarModel::to_json() const {
  nlohmann::json coef = nlohmann::json::array();
  for (const auto& a : coefficients) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      nlohmann::json r = nlohmann::json::array();
      for (Eigen::Index j = 0; j < a.cols(); ++j) r.push_back(a(i, j));
      rows.push_back(std::move(r));
    }
    coef.push_back(std::move(rows));
  }
  return {{"order", order},
          {"intercept", std::vector<double>(intercept.data(), intercept.data() + intercept.size())},
          {"residual_variance",
           std::vector<double>(residual_variance.data(), residual_variance.data() + residual_variance.size())},
          {"coefficients", std::move(coef)},
          {"warnings", warnings}};
}

VarModel fit_var(const TimeSeries& s, std::size_t order) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "VAR order must be >= 1");
  const std::size_t d = s.dims();
  const std::size_t T = s.length();
  if (T < 10 * order * d || T <= order + 1) {
    throw Error(ErrorCode::InsufficientData, "VAR(" + std::to_string(order) + ") on " + std::to_string(d) +
                                                 " dims needs T >= " + std::to_string(10 * order * d) +
                                                 ", got " + std::to_string(T));
  }
  const Matrix& x = s.values();
  const auto n = static_cast<Eigen::Index>(T - order);
  const auto k = static_cast<Eigen::Index>(1 + order * d);
  const auto di = static_cast<Eigen::Index>(d);
  const auto L = static_cast<Eigen::Index>(order);

  Matrix Z(n, k);
  Matrix Y = x.bottomRows(n);
  Z.col(0).setOnes();
  for (Eigen::Index l = 0; l < L; ++l) Z.middleCols(1 + l * di, di) = x.middleRows(L - l - 1, n);

  VarModel m;
  m.order = order;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    const double var = (x.col(j).array() - mean).square().mean();
    if (!(var > 1e-28 * std::max(1.0, mean * mean))) {
      m.warnings.push_back("column " + std::to_string(j) + " has zero variance; ridge fallback cannot identify it");
      throw Error(ErrorCode::SingularDesign, "column " + std::to_string(j) + " of the training series is constant");
    }
  }

  Matrix B;
  Eigen::ColPivHouseholderQR<Matrix> qr(Z);
  if (qr.rank() < k) {
    m.warnings.push_back("rank-deficient design (rank " + std::to_string(qr.rank()) + " of " + std::to_string(k) +
                         "); solved with ridge 1e-8");
    Matrix gram = Z.transpose() * Z;
    gram.diagonal().array() += 1e-8;
    B = gram.ldlt().solve(Z.transpose() * Y);
  } else {
    B = qr.solve(Y);
  }
  if (!B.allFinite()) throw Error(ErrorCode::SingularDesign, "VAR least-squares solution is not finite");

  m.intercept = B.row(0).transpose();
  for (Eigen::Index l = 0; l < L; ++l) m.coefficients.push_back(B.middleRows(1 + l * di, di).transpose());
  const Matrix R = Y - Z * B;
  m.residual_mean = R.colwise().mean().transpose();
  m.residual_variance = (R.rowwise() - m.residual_mean.transpose()).array().square().colwise().mean().transpose();
  return m;
}

Vector propose_var(const VarModel& m, const Matrix& context, RandomStream& rng) {
  Vector mean = m.mean(context);
  return mean + m.residual_variance.cwiseSqrt().cwiseProduct(rng.normal_vector(m.dims()));
}

VarSource::VarSource(VarModel model, std::size_t context_len)
    : model_(std::move(model)),
      std_(model_.residual_variance.cwiseSqrt()),
      context_len_(context_len == 0 ? model_.order : context_len) {
  if (context_len_ < model_.order) {
    throw Error(ErrorCode::InvalidArgument, "VAR source context_len is shorter than its order");
  }
}

Vector VarSource::conditional_mean(const Matrix& context) const {
  check_context(context, dims(), model_.order);
  return model_.mean(context);
}

nlohmann::json VarSource::describe() const {
  return {{"kind", "var"}, {"order", model_.order}, {"context_len", context_len_}, {"model", model_.to_json()}};
}

BootstrapSource::BootstrapSource(std::vector<DiffVector> diffs, std::size_t context_len)
    : diffs_(std::move(diffs)), dims_(0), context_len_(context_len) {
  if (diffs_.empty()) throw Error(ErrorCode::SeriesTooShort, "bootstrap source needs at least one difference");
  if (context_len_ < 1) throw Error(ErrorCode::InvalidArgument, "bootstrap context_len must be >= 1");
  dims_ = static_cast<std::size_t>(diffs_.front().size());
}

Vector BootstrapSource::propose(const Matrix& context, RandomStream& rng) {
  check_context(context, dims_, 1);
  const auto idx = static_cast<std::size_t>(rng.uniform_index(diffs_.size()));
  return context.row(context.rows() - 1).transpose() + diffs_[idx];
}

nlohmann::json BootstrapSource::describe() const {
  return {{"kind", "bootstrap"}, {"pool_size", diffs_.size()}, {"context_len", context_len_}};
}

std::unique_ptr<ProposalSource> make_bootstrap_source(const TimeSeries& s, std::size_t context_len) {
  return std::make_unique<BootstrapSource>(first_differences(s), context_len);
}

BiasedSource::BiasedSource(std::unique_ptr<ProposalSource> inner, Vector drift, double noise_scale)
    : inner_(std::move(inner)), drift_(std::move(drift)), noise_scale_(noise_scale) {
  if (!inner_) throw Error(ErrorCode::InvalidArgument, "biased source needs an inner source");
  if (static_cast<std::size_t>(drift_.size()) != inner_->dims()) {
    throw Error(ErrorCode::DimensionMismatch, "drift length differs from source dims");
  }
  if (!drift_.allFinite()) throw Error(ErrorCode::InvalidArgument, "drift must be finite");
  if (!(noise_scale_ >= 1.0) || !std::isfinite(noise_scale_)) {
    throw Error(ErrorCode::InvalidArgument, "noise_scale must be a finite real >= 1");
  }
  gaussian_ = dynamic_cast<GaussianProposal*>(inner_.get());
}

Vector BiasedSource::propose(const Matrix& context, RandomStream& rng) {
  if (gaussian_) {
    Vector mean = gaussian_->conditional_mean(context);
    Vector z = rng.normal_vector(dims());
    return mean + drift_ + noise_scale_ * gaussian_->innovation_std().cwiseProduct(z);
  }
  return inner_->propose(context, rng) + drift_;
}

nlohmann::json BiasedSource::describe() const {
  return {{"kind", "biased"},
          {"drift", std::vector<double>(drift_.data(), drift_.data() + drift_.size())},
          {"noise_scale", noise_scale_},
          {"innovation_scaled", scales_innovation()},
          {"inner", inner_->describe()}};
}

std::unique_ptr<ProposalSource> make_biased_source(std::unique_ptr<ProposalSource> inner, Vector drift,
                                                   double noise_scale) {
  return std::make_unique<BiasedSource>(std::move(inner), std::move(drift), noise_scale);
}

}  // namespace tsmcmc
