#include "tsmcmc/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tsmcmc {

std::string to_string(DensityKind kind) {
  return kind == DensityKind::HistogramProduct ? "histogram_product" : "gaussian_kde";
}

DensityKind density_kind_from_string(const std::string& name) {
  if (name == "histogram_product" || name == "histogram") return DensityKind::HistogramProduct;
  if (name == "gaussian_kde" || name == "kde") return DensityKind::GaussianKde;
  throw Error(ErrorCode::InvalidArgument, "unknown density kind '" + name + "'");
}

namespace {

bool same_point(double x, double c) { return std::abs(x - c) <= 1e-12 * std::max(1.0, std::abs(c)); }

}  // namespace

DiffDensity::DiffDensity(DensityKind kind, std::vector<Marginal> marginals, std::size_t total_count,
                         double epsilon_floor)
    : kind_(kind), marginals_(std::move(marginals)), total_count_(total_count), epsilon_floor_(epsilon_floor) {
  if (marginals_.empty()) throw Error(ErrorCode::InvalidArgument, "density needs at least one dimension");
  if (!(epsilon_floor_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon_floor must be positive");
  for (const auto& m : marginals_) {
    if (m.point_mass) continue;
    if (kind_ == DensityKind::HistogramProduct) {
      if (m.edges.size() < 2 || m.counts.size() + 1 != m.edges.size()) {
        throw Error(ErrorCode::InvalidArgument, "histogram edges/counts are inconsistent");
      }
    } else if (m.samples.empty() || !(m.bandwidth > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "kde marginal needs samples and a positive bandwidth");
    }
  }
}

double DiffDensity::marginal_density(std::size_t dim, double x) const {
  const Marginal& m = marginals_.at(dim);
  if (m.point_mass) return same_point(x, m.point) ? 1.0 : 0.0;
  if (kind_ == DensityKind::HistogramProduct) {
    const double lo = m.edges.front();
    const double hi = m.edges.back();
    if (!(x >= lo && x <= hi)) return 0.0;
    const std::size_t bins = m.counts.size();
    const double width = (hi - lo) / static_cast<double>(bins);
    auto bin = static_cast<std::size_t>((x - lo) / width);
    if (bin >= bins) bin = bins - 1;
    return m.counts[bin] / (static_cast<double>(total_count_) * width);
  }
  const double h = m.bandwidth;
  double acc = 0.0;
  for (double s : m.samples) {
    const double z = (x - s) / h;
    acc += std::exp(-0.5 * z * z);
  }
  return acc / (static_cast<double>(m.samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
}

double DiffDensity::operator()(const DiffVector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dims()) {
    throw Error(ErrorCode::DimensionMismatch, "theta has " + std::to_string(theta.size()) +
                                                  " entries, density has " + std::to_string(dims()));
  }
  double value = 1.0;
  for (std::size_t j = 0; j < dims(); ++j) {
    const double x = theta(static_cast<Eigen::Index>(j));
    if (!std::isfinite(x)) return epsilon_floor_;
    const Marginal& m = marginals_[j];
    if (kind_ == DensityKind::HistogramProduct && !m.point_mass && !(x >= m.edges.front() && x <= m.edges.back())) {
      return epsilon_floor_;
    }
    value *= marginal_density(j, x);
    if (value == 0.0) return epsilon_floor_;
  }
  return std::max(value, epsilon_floor_);
}

std::vector<std::size_t> DiffDensity::zero_range_dims() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < marginals_.size(); ++j) {
    if (marginals_[j].point_mass) out.push_back(j);
  }
  return out;
}

nlohmann::json DiffDensity::to_json() const {
  nlohmann::json dims_json = nlohmann::json::array();
  for (const auto& m : marginals_) {
    nlohmann::json j;
    if (m.point_mass) {
      j["point_mass"] = m.point;
    } else if (kind_ == DensityKind::HistogramProduct) {
      j["edges"] = m.edges;
      j["counts"] = m.counts;
    } else {
      j["bandwidth"] = m.bandwidth;
      j["samples"] = m.samples;
    }
    dims_json.push_back(std::move(j));
  }
  return {{"format", "tsmcmc.diff_density"},
          {"version", 1},
          {"kind", to_string(kind_)},
          {"joint_model", "product_of_marginals"},
          {"total_count", total_count_},
          {"epsilon_floor", epsilon_floor_},
          {"dims", std::move(dims_json)}};
}

DiffDensity DiffDensity::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "tsmcmc.diff_density") {
      throw Error(ErrorCode::ParseError, "not a diff density document");
    }
    if (doc.at("version").get<int>() != 1) throw Error(ErrorCode::ParseError, "unsupported density version");
    const DensityKind kind = density_kind_from_string(doc.at("kind").get<std::string>());
    std::vector<Marginal> marginals;
    for (const auto& j : doc.at("dims")) {
      Marginal m;
      if (j.contains("point_mass")) {
        m.point_mass = true;
        m.point = j.at("point_mass").get<double>();
      } else if (kind == DensityKind::HistogramProduct) {
        m.edges = j.at("edges").get<std::vector<double>>();
        m.counts = j.at("counts").get<std::vector<double>>();
      } else {
        m.bandwidth = j.at("bandwidth").get<double>();
        m.samples = j.at("samples").get<std::vector<double>>();
      }
      marginals.push_back(std::move(m));
    }
    return DiffDensity(kind, std::move(marginals), doc.at("total_count").get<std::size_t>(),
                       doc.at("epsilon_floor").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed density document: ") + e.what());
  }
}

DiffDensity fit_diff_density(const Matrix& diffs, const DensityConfig& cfg) {
  const auto n = static_cast<std::size_t>(diffs.rows());
  if (n < 2) throw Error(ErrorCode::SeriesTooShort, "need at least 2 difference vectors");
  if (cfg.kind == DensityKind::HistogramProduct && cfg.bins_per_dim < 1) {
    throw Error(ErrorCode::InvalidArgument, "bins_per_dim must be >= 1");
  }
  std::vector<DiffDensity::Marginal> marginals;
  std::size_t degenerate = 0;
  for (Eigen::Index j = 0; j < diffs.cols(); ++j) {
    const auto col = diffs.col(j);
    DiffDensity::Marginal m;
    const double lo = col.minCoeff();
    const double hi = col.maxCoeff();
    if (!(hi > lo)) {
      m.point_mass = true;
      m.point = lo;
      ++degenerate;
      marginals.push_back(std::move(m));
      continue;
    }
    if (cfg.kind == DensityKind::HistogramProduct) {
      const std::size_t bins = cfg.bins_per_dim;
      const double width = (hi - lo) / static_cast<double>(bins);
      m.edges.resize(bins + 1);
      for (std::size_t b = 0; b <= bins; ++b) m.edges[b] = lo + width * static_cast<double>(b);
      m.edges.back() = hi;
      m.counts.assign(bins, 0.0);
      for (Eigen::Index i = 0; i < col.size(); ++i) {
        auto bin = static_cast<std::size_t>((col(i) - lo) / width);
        if (bin >= bins) bin = bins - 1;
        m.counts[bin] += 1.0;
      }
    } else {
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().mean());
      m.bandwidth = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
      m.samples.assign(col.data(), col.data() + col.size());
    }
    marginals.push_back(std::move(m));
  }
  if (degenerate == marginals.size()) {
    throw Error(ErrorCode::ZeroRange, "every dimension has constant differences");
  }
  return DiffDensity(cfg.kind, std::move(marginals), n, cfg.epsilon_floor);
}

DiffDensity fit_diff_density(const TimeSeries& s, const DensityConfig& cfg) {
  if (s.length() < 3) throw Error(ErrorCode::SeriesTooShort, "density fit needs T >= 3");
  return fit_diff_density(stack_rows(first_differences(s)), cfg);
}

double density(const TargetDensity& d, const DiffVector& theta) {
  if (static_cast<std::size_t>(theta.size()) != d.dims()) {
    throw Error(ErrorCode::DimensionMismatch, "theta width does not match density");
  }
  return d(theta);
}

}  // namespace tsmcmc
