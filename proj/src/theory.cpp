#include "tsmcmc/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tsmcmc/corrector.hpp"

namespace tsmcmc::theory {

namespace {

void require_distribution(const Vector& p, double tol, const char* what) {
  if (p.size() == 0) throw Error(ErrorCode::InvalidDistribution, std::string(what) + " is empty");
  if ((p.array() < 0.0).any() || !p.allFinite()) {
    throw Error(ErrorCode::InvalidDistribution, std::string(what) + " has negative or non-finite entries");
  }
  if (std::abs(p.sum() - 1.0) > tol) {
    throw Error(ErrorCode::InvalidDistribution, std::string(what) + " sums to " + std::to_string(p.sum()));
  }
}

void require_stochastic(const Matrix& M, double tol, const char* what) {
  if ((M.array() < 0.0).any() || !M.allFinite()) {
    throw Error(ErrorCode::InvalidDistribution, std::string(what) + " has negative or non-finite entries");
  }
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    if (std::abs(M.row(i).sum() - 1.0) > tol) {
      throw Error(ErrorCode::InvalidDistribution,
                  std::string(what) + " row " + std::to_string(i) + " sums to " + std::to_string(M.row(i).sum()));
    }
  }
}

void require_kernel_inputs(const Vector& pi, const Matrix& Q) {
  if (Q.rows() != pi.size() || Q.cols() != pi.size()) {
    throw Error(ErrorCode::InvalidDistribution, "proposal must be n x n for a length-n target");
  }
  require_distribution(pi, 1e-12, "pi");
  if (!(pi.array() > 0.0).all()) throw Error(ErrorCode::InvalidDistribution, "pi must be strictly positive");
  require_stochastic(Q, 1e-12, "proposal");
}

void fill_diagonal(Matrix& P) {
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      if (j != i) off += P(i, j);
    }
    P(i, i) = std::max(0.0, 1.0 - off);
  }
}

}  // namespace

void DiscreteChain::validate(double tol) const {
  if (P.rows() != pi.size() || P.cols() != pi.size()) throw Error(ErrorCode::InvalidDistribution, "chain shape");
  require_distribution(pi, tol, "pi");
  require_stochastic(P, tol, "P");
}

void ConditionalModel::validate(double tol) const {
  if (p_x.size() != p_cond.rows() || q_x.size() != p_cond.rows() || p_cond.cols() == 0) {
    throw Error(ErrorCode::InvalidDistribution, "conditional model shapes disagree");
  }
  require_distribution(p_x, tol, "p_x");
  require_distribution(q_x, tol, "q_x");
  require_stochastic(p_cond, tol, "p_cond");
}

DiscreteChain build_mh_kernel(const Vector& pi, const Matrix& Q) {
  require_kernel_inputs(pi, Q);
  const Eigen::Index n = pi.size();
  Matrix P = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      // pi_i Q_ij alpha_ij = min(pi_i Q_ij, pi_j Q_ji); the flow is symmetric by construction.
      P(i, j) = std::min(pi(i) * Q(i, j), pi(j) * Q(j, i)) / pi(i);
    }
  }
  fill_diagonal(P);
  return {pi, std::move(P)};
}

DiscreteChain build_modified_kernel(const Vector& pi, const Matrix& Q, double epsilon) {
  require_kernel_inputs(pi, Q);
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be >= 0");
  const Eigen::Index n = pi.size();
  Matrix P = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) P(i, j) = Q(i, j) * std::min(pi(j) / (pi(i) + epsilon), 1.0);
    }
  }
  fill_diagonal(P);
  return {pi, std::move(P)};
}

double check_detailed_balance(const DiscreteChain& c) {
  return (flow_matrix(c) - flow_matrix(c).transpose()).cwiseAbs().maxCoeff();
}

double check_stationarity(const DiscreteChain& c) {
  const Vector moved = c.P.transpose() * c.pi;
  return (moved - c.pi).cwiseAbs().sum();
}

Matrix flow_matrix(const DiscreteChain& c) { return c.pi.asDiagonal() * c.P; }

double flow_asymmetry(const DiscreteChain& c) { return check_detailed_balance(c); }

StationaryResult stationary_distribution(const Matrix& P, double tolerance, std::size_t max_iterations) {
  if (P.rows() != P.cols() || P.rows() == 0) throw Error(ErrorCode::InvalidDistribution, "P must be square");
  require_stochastic(P, 1e-10, "P");
  const Eigen::Index n = P.rows();
  const Matrix lazy_t = 0.5 * (Matrix::Identity(n, n) + P).transpose();
  StationaryResult r;
  r.pi = Vector::Constant(n, 1.0 / static_cast<double>(n));
  r.last_change = 1.0;
  while (r.iterations < max_iterations && r.last_change >= tolerance) {
    Vector next = lazy_t * r.pi;
    next /= next.sum();
    r.last_change = (next - r.pi).cwiseAbs().sum();
    r.pi = std::move(next);
    ++r.iterations;
  }
  return r;
}

ShiftBound cgan_shift_bound(const ConditionalModel& m, const std::vector<std::size_t>& subset) {
  m.validate();
  if (subset.empty()) throw Error(ErrorCode::EmptySubset, "subset B is empty");
  for (std::size_t y : subset) {
    if (y >= static_cast<std::size_t>(m.p_cond.cols())) {
      throw Error(ErrorCode::InvalidDistribution, "subset index " + std::to_string(y) + " out of range");
    }
  }
  ShiftBound out;
  out.q_theta = m.p_cond.transpose() * m.q_x;
  out.p_data = m.p_cond.transpose() * m.p_x;
  out.tv = 0.5 * (out.q_theta - out.p_data).cwiseAbs().sum();

  Vector g = Vector::Zero(m.p_cond.rows());
  std::vector<std::size_t> unique(subset);
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  for (std::size_t y : unique) g += m.p_cond.col(static_cast<Eigen::Index>(y));
  out.bound = std::abs(g.dot(m.q_x) - g.dot(m.p_x));
  if (out.tv < out.bound - 1e-12) {
    throw Error(ErrorCode::InvalidDistribution, "total variation fell below the functional bound");
  }
  return out;
}

double measure_modified_mh_bias(const Vector& pi_target, const Matrix& proposal, double epsilon) {
  const DiscreteChain chain = build_modified_kernel(pi_target, proposal, epsilon);
  const StationaryResult st = stationary_distribution(chain.P);
  return (st.pi - pi_target).cwiseAbs().sum();
}

Vector random_distribution(std::size_t n, RandomStream& rng, double floor) {
  Vector p(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = floor + rng.uniform();
  return p / p.sum();
}

Matrix random_stochastic(std::size_t rows, std::size_t cols, RandomStream& rng) {
  Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = rng.uniform();
    M.row(i) /= M.row(i).sum();
  }
  return M;
}

Matrix random_symmetric_stochastic(std::size_t n, RandomStream& rng) {
  const auto m = static_cast<Eigen::Index>(n);
  Matrix W = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) W(i, j) = W(j, i) = rng.uniform();
  }
  const double scale = std::max(W.rowwise().sum().maxCoeff(), 1e-300);
  W /= scale;
  fill_diagonal(W);
  return W;
}

Matrix cycle_matrix(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  Matrix P = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) P(i, (i + 1) % m) = 1.0;
  return P;
}

namespace {

struct CheckLog {
  nlohmann::json checks = nlohmann::json::array();
  bool passed = true;

  void add(const std::string& name, bool ok, nlohmann::json detail) {
    detail["name"] = name;
    detail["passed"] = ok;
    checks.push_back(std::move(detail));
    passed = passed && ok;
  }
};

}  // namespace

nlohmann::json run_verification(std::uint64_t seed) {
  RandomStream rng(seed);
  CheckLog log;

  {
    double worst_db = 0.0, worst_stat = 0.0, worst_flow = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + rng.uniform_index(19);
      const DiscreteChain c = build_mh_kernel(random_distribution(n, rng), random_symmetric_stochastic(n, rng));
      c.validate();
      worst_db = std::max(worst_db, check_detailed_balance(c));
      worst_stat = std::max(worst_stat, check_stationarity(c));
      const Matrix F = flow_matrix(c);
      worst_flow = std::max(worst_flow, (F - F.transpose()).cwiseAbs().maxCoeff());
    }
    log.add("detailed_balance_random_mh", worst_db <= 1e-12, {{"max_violation", worst_db}, {"threshold", 1e-12}});
    log.add("stationarity_from_detailed_balance", worst_stat <= 1e-10,
            {{"max_residual", worst_stat}, {"threshold", 1e-10}});
    log.add("reversible_flow_symmetric", worst_flow <= 1e-12, {{"max_asymmetry", worst_flow}, {"threshold", 1e-12}});
  }
  {
    const DiscreteChain cyc{Vector::Constant(3, 1.0 / 3.0), cycle_matrix(3)};
    const double db = check_detailed_balance(cyc);
    const double st = check_stationarity(cyc);
    log.add("cycle_stationary_without_detailed_balance", st <= 1e-12 && std::abs(db - 1.0 / 3.0) <= 1e-15,
            {{"stationarity_residual", st}, {"detailed_balance_violation", db}});
  }
  {
    Vector pi(2);
    pi << 0.25, 0.75;
    const DiscreteChain c = build_mh_kernel(pi, Matrix::Constant(2, 2, 0.5));
    const bool ok = std::abs(c.P(0, 1) - 0.5) <= 1e-15 && std::abs(c.P(1, 0) - 1.0 / 6.0) <= 1e-15 &&
                    std::abs(pi(0) * c.P(0, 1) - 0.125) <= 1e-15 && std::abs(pi(1) * c.P(1, 0) - 0.125) <= 1e-15;
    log.add("two_state_hand_kernel", ok, {{"P01", c.P(0, 1)}, {"P10", c.P(1, 0)}});
  }
  {
    double min_gap = 1e300;
    std::size_t trials = 0;
    for (; trials < 1000; ++trials) {
      ConditionalModel m;
      const std::size_t nx = 1 + rng.uniform_index(6);
      const std::size_t ny = 1 + rng.uniform_index(6);
      m.p_cond = random_stochastic(nx, ny, rng);
      m.p_x = random_distribution(nx, rng, 0.0);
      m.q_x = random_distribution(nx, rng, 0.0);
      std::vector<std::size_t> B;
      for (std::size_t y = 0; y < ny; ++y) {
        if (rng.uniform() < 0.5) B.push_back(y);
      }
      if (B.empty()) B.push_back(rng.uniform_index(ny));
      const ShiftBound sb = cgan_shift_bound(m, B);
      min_gap = std::min(min_gap, sb.tv - sb.bound);
    }
    log.add("tv_bound_random_models", min_gap >= -1e-12, {{"trials", trials}, {"min_tv_minus_bound", min_gap}});

    ConditionalModel m;
    m.p_cond = Matrix(2, 2);
    m.p_cond << 0.8, 0.2, 0.2, 0.8;
    m.p_x = Vector::Constant(2, 0.5);
    m.q_x = Vector(2);
    m.q_x << 0.9, 0.1;
    const ShiftBound sb = cgan_shift_bound(m, {1});
    log.add("tv_bound_worked_case", std::abs(sb.tv - 0.24) <= 1e-12 && std::abs(sb.bound - 0.24) <= 1e-12,
            {{"tv", sb.tv}, {"bound", sb.bound}});
  }
  {
    const std::size_t draws = 100000;
    const double triples[][3] = {{0.1, 0.2, 1e-8}, {0.3, 0.4, 0.05}, {0.02, 0.5, 1e-3}};
    bool ok = true;
    nlohmann::json detail = nlohmann::json::array();
    for (const auto& t : triples) {
      const double gamma = mh_acceptance(t[0], t[1], t[2]);
      std::size_t hits = 0;
      for (std::size_t i = 0; i < draws; ++i) hits += rng.uniform() <= gamma ? 1 : 0;
      const double freq = static_cast<double>(hits) / static_cast<double>(draws);
      const double sigma = std::sqrt(gamma * (1.0 - gamma) / static_cast<double>(draws));
      const bool within = std::abs(freq - gamma) <= 3.0 * sigma;
      ok = ok && within;
      detail.push_back({{"gamma", gamma}, {"frequency", freq}, {"three_sigma", 3.0 * sigma}});
    }
    log.add("acceptance_rule_calibration", ok, {{"cases", detail}});
  }
  {
    double worst_sym = 0.0;
    nlohmann::json asym = nlohmann::json::array();
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 2 + rng.uniform_index(9);
      const Vector pi = random_distribution(n, rng);
      worst_sym = std::max(worst_sym, measure_modified_mh_bias(pi, random_symmetric_stochastic(n, rng), 0.0));
      if (trial < 5) asym.push_back(measure_modified_mh_bias(pi, random_stochastic(n, n, rng), 1e-8));
    }
    log.add("modified_mh_symmetric_matches_standard", worst_sym <= 1e-9,
            {{"max_l1_distance", worst_sym}, {"threshold", 1e-9}, {"asymmetric_l1_distances_reported", asym}});
  }
  return {{"passed", log.passed}, {"seed", seed}, {"checks", log.checks}};
}

}  // namespace tsmcmc::theory
