#include "tsmcmc/app.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "tsmcmc/theory.hpp"

namespace tsmcmc::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorCode::ConfigInvalid, message); }

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    invalid(std::string("bad value for '") + key + "': " + e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

SourceSpec parse_source(const json& j, const fs::path& base) {
  SourceSpec s;
  const std::string kind = get_or<std::string>(j, "kind", "var");
  s.context_len = get_or<std::size_t>(j, "context_len", 0);
  if (kind == "var") {
    s.kind = SourceSpec::Kind::Var;
    s.var_order = get_or<std::size_t>(j, "order", 1);
  } else if (kind == "bootstrap") {
    s.kind = SourceSpec::Kind::Bootstrap;
  } else if (kind == "biased") {
    s.kind = SourceSpec::Kind::Biased;
    if (!j.contains("inner")) invalid("biased source needs an 'inner' source");
    s.inner = std::make_shared<SourceSpec>(parse_source(j.at("inner"), base));
    if (j.contains("drift")) s.drift = get_or<std::vector<double>>(j, "drift", {});
    s.drift_diff_std = get_or<double>(j, "drift_diff_std", 0.0);
    s.drift_series_std = get_or<double>(j, "drift_series_std", 0.0);
    s.noise_scale = get_or<double>(j, "noise_scale", 1.0);
  } else if (kind == "external") {
    s.kind = SourceSpec::Kind::External;
    s.external.command = get_or<std::vector<std::string>>(j, "command", {});
    s.external.handshake_timeout_ms = get_or<int>(j, "handshake_timeout_ms", 5000);
    s.external.proposal_timeout_ms = get_or<int>(j, "proposal_timeout_ms", 5000);
    if (!s.external.command.empty() && s.external.command.front().find('/') != std::string::npos) {
      s.external.command.front() = resolve(base, s.external.command.front()).string();
    }
  } else {
    invalid("unknown source kind '" + kind + "'");
  }
  return s;
}

json source_to_json(const SourceSpec& s) {
  switch (s.kind) {
    case SourceSpec::Kind::Var: return {{"kind", "var"}, {"order", s.var_order}, {"context_len", s.context_len}};
    case SourceSpec::Kind::Bootstrap: return {{"kind", "bootstrap"}, {"context_len", s.context_len}};
    case SourceSpec::Kind::Biased: {
      json j = {{"kind", "biased"},
                {"inner", source_to_json(*s.inner)},
                {"drift_diff_std", s.drift_diff_std},
                {"drift_series_std", s.drift_series_std},
                {"noise_scale", s.noise_scale}};
      if (s.drift) j["drift"] = *s.drift;
      return j;
    }
    case SourceSpec::Kind::External:
      return {{"kind", "external"},
              {"command", s.external.command},
              {"context_len", s.context_len},
              {"handshake_timeout_ms", s.external.handshake_timeout_ms},
              {"proposal_timeout_ms", s.external.proposal_timeout_ms}};
  }
  return {};
}

void validate_source(const SourceSpec& s) {
  switch (s.kind) {
    case SourceSpec::Kind::Var:
      if (s.var_order < 1) invalid("VAR order must be >= 1");
      if (s.context_len != 0 && s.context_len < s.var_order) invalid("source context_len is shorter than VAR order");
      break;
    case SourceSpec::Kind::Bootstrap: break;
    case SourceSpec::Kind::Biased:
      if (!s.inner) invalid("biased source needs an inner source");
      if (!(s.noise_scale >= 1.0)) invalid("noise_scale must be >= 1");
      validate_source(*s.inner);
      break;
    case SourceSpec::Kind::External:
      try {
        s.external.validate();
      } catch (const Error& e) {
        invalid(e.message());
      }
      break;
  }
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void ensure_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

std::size_t worker_count(const RunConfig& cfg, std::size_t jobs) {
  std::size_t w = cfg.workers != 0 ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(w, jobs));
}

/// Runs job(i) for i in [0, n) on a small pool; the first exception is rethrown.
template <typename Job>
void parallel_for(std::size_t n, std::size_t workers, Job job) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

MetricsConfig metrics_for(const RunConfig& cfg, std::uint64_t seed) {
  MetricsConfig m = cfg.metrics;
  m.p = cfg.p;
  m.q = cfg.q;
  m.seed = seed;
  return m;
}

TimeSeries to_native(const PreparedData& data, const TimeSeries& s) {
  return data.normalizer ? data.normalizer->invert(s) : s;
}

void write_series(const fs::path& path, const PreparedData& data, const TimeSeries& s) {
  write_csv(path, to_native(data, s));
}

json run_metadata(const RunConfig& cfg, const PreparedData& data) {
  json meta = {{"density_joint_model", "product_of_marginals"},
               {"index_convention",
                "output row k is the synthetic counterpart of real row k; the first context_len rows are "
                "copied from the real series as the warm start"},
               {"series_length", data.series.length()},
               {"dims", data.series.dims()},
               {"dim_names", data.series.dim_names()}};
  if (data.normalizer) {
    const Vector& m = data.normalizer->mean();
    const Vector& s = data.normalizer->std();
    meta["normalization"] = {{"applied", true},
                             {"mean", std::vector<double>(m.data(), m.data() + m.size())},
                             {"std", std::vector<double>(s.data(), s.data() + s.size())}};
  } else {
    meta["normalization"] = {{"applied", false}};
  }
  (void)cfg;
  return meta;
}

void write_echo(const RunConfig& cfg, const PreparedData* data) {
  ensure_output_dir(cfg.output_dir);
  json echo = {{"config", cfg.to_json()}};
  if (data) echo["metadata"] = run_metadata(cfg, *data);
  write_json(cfg.output_dir / "config.echo.json", echo);
}

std::string seed_file(const std::string& stem, std::uint64_t seed, const char* ext) {
  return stem + "_" + std::to_string(seed) + ext;
}

void write_acf_csv(const fs::path& path, const std::vector<std::string>& names,
                   const std::vector<std::pair<std::string, const Matrix*>>& columns, const Matrix& real) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "dim,lag,real";
  for (const auto& c : columns) out << ',' << c.first;
  out << '\n';
  for (Eigen::Index j = 0; j < real.cols(); ++j) {
    for (Eigen::Index k = 0; k < real.rows(); ++k) {
      out << names[static_cast<std::size_t>(j)] << ',' << (k + 1) << ',' << format_double(real(k, j));
      for (const auto& c : columns) out << ',' << format_double((*c.second)(k, j));
      out << '\n';
    }
  }
}

void write_pca_csv(const fs::path& path, const PcaResult& base,
                   const std::vector<std::pair<std::string, const Matrix*>>& generated) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "set,window,pc1,pc2\n";
  auto emit = [&](const std::string& set, const Matrix& coords) {
    for (Eigen::Index i = 0; i < coords.rows(); ++i) {
      out << set << ',' << i << ',' << format_double(coords(i, 0)) << ',' << format_double(coords(i, 1)) << '\n';
    }
  };
  emit("real", base.real_coords);
  for (const auto& g : generated) emit(g.first, *g.second);
}

json correction_summary(const CorrectionRun& run) {
  return {{"acceptance_rate", run.acceptance_rate()},
          {"proposed", run.proposed},
          {"accepted", run.accepted},
          {"forced_accepts", run.forced_accepts},
          {"warm_start", run.warm_start}};
}

TimeSeries read_generated(const fs::path& path, const PreparedData& data) {
  CsvSchema schema;
  schema.value_columns = data.series.dim_names();
  TimeSeries native = load_csv(path, schema);
  return data.normalizer ? data.normalizer->apply(native) : native;
}

}  // namespace

json RunConfig::to_json() const {
  json ds;
  if (dataset.kind == DatasetSpec::Kind::Lorenz) {
    const auto& l = dataset.lorenz;
    ds = {{"kind", "lorenz"},     {"sigma", l.sigma}, {"rho", l.rho},           {"beta", l.beta},
          {"dt", l.dt},           {"steps", l.steps}, {"transient", l.transient}, {"x0", l.x0},
          {"normalize", dataset.normalize}};
  } else {
    ds = {{"kind", "csv"},
          {"path", dataset.csv_path.string()},
          {"value_columns", dataset.schema.value_columns},
          {"normalize", dataset.normalize}};
    if (dataset.schema.timestamp_column) ds["timestamp_column"] = *dataset.schema.timestamp_column;
  }
  json density_json = {{"kind", to_string(density.kind)},
                       {"bins_per_dim", density.bins_per_dim},
                       {"epsilon_floor", density.epsilon_floor}};
  if (density_path) density_json["path"] = density_path->string();
  json out = {{"dataset", ds},
              {"windowing", {{"p", p}, {"q", q}, {"stride", stride}}},
              {"density", density_json},
              {"source", source_to_json(source)},
              {"correction",
               {{"beta", correction.beta},
                {"epsilon", correction.epsilon},
                {"max_retries", correction.max_retries},
                {"conditioning_mode", to_string(correction.conditioning_mode)}}},
              {"metrics", metrics.to_json()},
              {"seeds", seeds},
              {"output_dir", output_dir.string()},
              {"workers", workers}};
  out["metrics"].erase("seed");
  out["metrics"].erase("p");
  out["metrics"].erase("q");
  if (gen_path) out["gen_path"] = gen_path->string();
  return out;
}

RunConfig parse_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) invalid("config must be a JSON object");
  RunConfig cfg;
  if (doc.contains("dataset")) {
    const json& d = doc.at("dataset");
    const std::string kind = get_or<std::string>(d, "kind", "lorenz");
    cfg.dataset.normalize = get_or<bool>(d, "normalize", true);
    if (kind == "lorenz") {
      auto& l = cfg.dataset.lorenz;
      l.sigma = get_or(d, "sigma", l.sigma);
      l.rho = get_or(d, "rho", l.rho);
      l.beta = get_or(d, "beta", l.beta);
      l.dt = get_or(d, "dt", l.dt);
      l.steps = get_or(d, "steps", l.steps);
      l.transient = get_or(d, "transient", l.transient);
      l.x0 = get_or(d, "x0", l.x0);
    } else if (kind == "csv") {
      cfg.dataset.kind = DatasetSpec::Kind::Csv;
      if (!d.contains("path")) invalid("csv dataset needs 'path'");
      cfg.dataset.csv_path = resolve(base_dir, get_or<std::string>(d, "path", ""));
      cfg.dataset.schema.value_columns = get_or<std::vector<std::string>>(d, "value_columns", {});
      if (d.contains("timestamp_column")) {
        cfg.dataset.schema.timestamp_column = get_or<std::string>(d, "timestamp_column", "");
      }
    } else {
      invalid("unknown dataset kind '" + kind + "'");
    }
  }
  if (doc.contains("windowing")) {
    const json& w = doc.at("windowing");
    cfg.p = get_or(w, "p", cfg.p);
    cfg.q = get_or(w, "q", cfg.q);
    cfg.stride = get_or(w, "stride", cfg.stride);
  }
  cfg.metrics.predictive.lag = cfg.p;
  if (doc.contains("density")) {
    const json& d = doc.at("density");
    try {
      cfg.density.kind = density_kind_from_string(get_or<std::string>(d, "kind", "gaussian_kde"));
    } catch (const Error& e) {
      invalid(e.message());
    }
    cfg.density.bins_per_dim = get_or(d, "bins_per_dim", cfg.density.bins_per_dim);
    cfg.density.epsilon_floor = get_or(d, "epsilon_floor", cfg.density.epsilon_floor);
    if (d.contains("path")) cfg.density_path = resolve(base_dir, get_or<std::string>(d, "path", ""));
  }
  if (doc.contains("source")) cfg.source = parse_source(doc.at("source"), base_dir);
  if (doc.contains("correction")) {
    const json& c = doc.at("correction");
    cfg.correction.beta = get_or(c, "beta", cfg.correction.beta);
    cfg.correction.epsilon = get_or(c, "epsilon", cfg.correction.epsilon);
    cfg.correction.max_retries = get_or(c, "max_retries", cfg.correction.max_retries);
    try {
      cfg.correction.conditioning_mode =
          conditioning_mode_from_string(get_or<std::string>(c, "conditioning_mode", "synthetic"));
    } catch (const Error& e) {
      invalid(e.message());
    }
  }
  if (doc.contains("metrics")) {
    const json& m = doc.at("metrics");
    cfg.metrics.max_lag = get_or(m, "max_lag", cfg.metrics.max_lag);
    cfg.metrics.window_stride = get_or(m, "window_stride", cfg.metrics.window_stride);
    if (m.contains("discriminative")) {
      const json& d = m.at("discriminative");
      auto& dc = cfg.metrics.discriminative;
      dc.epochs = get_or(d, "epochs", dc.epochs);
      dc.learning_rate = get_or(d, "learning_rate", dc.learning_rate);
      dc.l2 = get_or(d, "l2", dc.l2);
      dc.train_fraction = get_or(d, "train_fraction", dc.train_fraction);
    }
    if (m.contains("predictive")) {
      const json& pr = m.at("predictive");
      cfg.metrics.predictive.lag = get_or(pr, "lag", cfg.metrics.predictive.lag);
      cfg.metrics.predictive.ridge = get_or(pr, "ridge", cfg.metrics.predictive.ridge);
    }
  }
  cfg.seeds = get_or(doc, "seeds", cfg.seeds);
  if (doc.contains("output_dir")) cfg.output_dir = resolve(base_dir, get_or<std::string>(doc, "output_dir", "out"));
  if (doc.contains("gen_path")) cfg.gen_path = resolve(base_dir, get_or<std::string>(doc, "gen_path", ""));
  cfg.workers = get_or(doc, "workers", cfg.workers);
  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    invalid(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

void validate_config(const RunConfig& cfg) {
  if (cfg.seeds.empty()) invalid("seeds must be nonempty");
  if (cfg.p < 1 || cfg.q < 1 || cfg.stride < 1) invalid("windowing p, q and stride must be >= 1");
  if (cfg.dataset.kind == DatasetSpec::Kind::Lorenz) {
    try {
      cfg.dataset.lorenz.validate();
    } catch (const Error& e) {
      invalid(e.message());
    }
  } else {
    if (!fs::exists(cfg.dataset.csv_path)) invalid("dataset file not found: " + cfg.dataset.csv_path.string());
    if (cfg.dataset.schema.value_columns.empty()) invalid("csv dataset needs 'value_columns'");
  }
  if (cfg.density_path && !fs::exists(*cfg.density_path)) {
    invalid("density file not found: " + cfg.density_path->string());
  }
  if (cfg.gen_path && !fs::exists(*cfg.gen_path)) invalid("generated series file not found: " + cfg.gen_path->string());
  if (cfg.density.bins_per_dim < 1) invalid("bins_per_dim must be >= 1");
  if (!(cfg.density.epsilon_floor > 0.0)) invalid("epsilon_floor must be > 0");
  try {
    cfg.correction.validate();
  } catch (const Error& e) {
    invalid(e.message());
  }
  if (cfg.metrics.max_lag < 1) invalid("metrics max_lag must be >= 1");
  if (cfg.metrics.window_stride < 1) invalid("metrics window_stride must be >= 1");
  if (cfg.metrics.predictive.lag < 1) invalid("predictive lag must be >= 1");
  validate_source(cfg.source);
}

PreparedData prepare_data(const RunConfig& cfg) {
  TimeSeries native = cfg.dataset.kind == DatasetSpec::Kind::Lorenz ? simulate_lorenz(cfg.dataset.lorenz)
                                                                     : load_csv(cfg.dataset.csv_path, cfg.dataset.schema);
  if (!cfg.dataset.normalize) return {native, native, std::nullopt};
  Normalizer norm = Normalizer::fit(native);
  TimeSeries series = norm.apply(native);
  return {std::move(native), std::move(series), std::move(norm)};
}

std::unique_ptr<ProposalSource> build_source(const SourceSpec& spec, const TimeSeries& series, std::size_t p) {
  const std::size_t ctx = spec.context_len != 0 ? spec.context_len : p;
  switch (spec.kind) {
    case SourceSpec::Kind::Var:
      return std::make_unique<VarSource>(fit_var(series, spec.var_order), std::max(ctx, spec.var_order));
    case SourceSpec::Kind::Bootstrap: return make_bootstrap_source(series, ctx);
    case SourceSpec::Kind::Biased: {
      SourceSpec inner = *spec.inner;
      if (inner.context_len == 0) inner.context_len = spec.context_len;
      auto source = build_source(inner, series, p);
      Vector drift = Vector::Zero(static_cast<Eigen::Index>(series.dims()));
      if (spec.drift) {
        if (spec.drift->size() != series.dims()) {
          throw Error(ErrorCode::ConfigInvalid, "drift has " + std::to_string(spec.drift->size()) +
                                                    " entries for a " + std::to_string(series.dims()) + "-d series");
        }
        drift += Eigen::Map<const Vector>(spec.drift->data(), static_cast<Eigen::Index>(spec.drift->size()));
      }
      if (spec.drift_diff_std != 0.0) {
        const Matrix diffs = stack_rows(first_differences(series));
        const Vector sd = ((diffs.rowwise() - diffs.colwise().mean()).array().square().colwise().mean())
                              .sqrt()
                              .transpose();
        drift += spec.drift_diff_std * sd;
      }
      if (spec.drift_series_std != 0.0) {
        const Matrix& x = series.values();
        const Vector sd =
            ((x.rowwise() - x.colwise().mean()).array().square().colwise().mean()).sqrt().transpose();
        drift += spec.drift_series_std * sd;
      }
      return make_biased_source(std::move(source), std::move(drift), spec.noise_scale);
    }
    case SourceSpec::Kind::External: return spawn_external(spec.external, series.dims(), ctx);
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown source kind");
}

DiffDensity obtain_density(const RunConfig& cfg, const TimeSeries& series) {
  if (cfg.density_path) {
    DiffDensity d = DiffDensity::from_json(read_json(*cfg.density_path));
    if (d.dims() != series.dims()) {
      throw Error(ErrorCode::ConfigInvalid, "density file " + cfg.density_path->string() + " has " +
                                                std::to_string(d.dims()) + " dims, series has " +
                                                std::to_string(series.dims()));
    }
    return d;
  }
  return fit_diff_density(series, cfg.density);
}

SeedOutcome run_seed(const RunConfig& cfg, const PreparedData& data, const TargetDensity& density,
                     std::uint64_t seed) {
  auto source = build_source(cfg.source, data.series, cfg.p);
  TimeSeries raw = generate_raw(data.series, *source, seed, cfg.correction.conditioning_mode);
  CorrectionConfig cc = cfg.correction;
  cc.seed = seed;
  CorrectionRun run = correct_series(data.series, *source, density, cc);
  const MetricsConfig mc = metrics_for(cfg, seed);
  MetricsReport raw_report = evaluate(data.series, raw, mc);
  MetricsReport corrected_report = evaluate(data.series, run.corrected, mc);
  return {seed, std::move(raw), std::move(run), std::move(raw_report), std::move(corrected_report)};
}

json summarize(const std::vector<json>& seed_reports) {
  static const char* kMetrics[] = {"acf_error", "skew_error", "kurt_error", "r2", "discriminative", "predictive"};
  auto stats = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    return json{{"mean", mean}, {"std", std::sqrt(var)}};
  };
  json metrics = json::object();
  for (const char* name : kMetrics) {
    std::vector<double> raw, corrected;
    for (const auto& r : seed_reports) {
      raw.push_back(r.at("raw").at(name).get<double>());
      corrected.push_back(r.at("corrected").at(name).get<double>());
    }
    metrics[name] = {{"raw", stats(raw)}, {"corrected", stats(corrected)}};
  }
  std::vector<double> rate, forced, baseline;
  std::vector<std::uint64_t> seeds;
  for (const auto& r : seed_reports) {
    rate.push_back(r.at("correction").at("acceptance_rate").get<double>());
    forced.push_back(r.at("correction").at("forced_accepts").get<double>());
    baseline.push_back(r.at("corrected").at("predictive_baseline").get<double>());
    seeds.push_back(r.at("seed").get<std::uint64_t>());
  }
  return {{"seeds", seeds},
          {"metrics", metrics},
          {"predictive_baseline", stats(baseline)},
          {"acceptance_rate", stats(rate)},
          {"forced_accepts", stats(forced)}};
}

int cmd_simulate(const RunConfig& cfg) {
  if (cfg.dataset.kind != DatasetSpec::Kind::Lorenz) invalid("simulate needs a lorenz dataset");
  write_echo(cfg, nullptr);
  write_csv(cfg.output_dir / "lorenz.csv", simulate_lorenz(cfg.dataset.lorenz));
  return kExitOk;
}

int cmd_fit_density(const RunConfig& cfg) {
  const PreparedData data = prepare_data(cfg);
  write_echo(cfg, &data);
  const DiffDensity d = fit_diff_density(data.series, cfg.density);
  if (!d.zero_range_dims().empty()) {
    std::cerr << "warning: " << d.zero_range_dims().size() << " dimension(s) have constant differences\n";
  }
  write_json(cfg.output_dir / "density.json", d.to_json());
  return kExitOk;
}

int cmd_generate(const RunConfig& cfg) {
  const PreparedData data = prepare_data(cfg);
  write_echo(cfg, &data);
  parallel_for(cfg.seeds.size(), worker_count(cfg, cfg.seeds.size()), [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    auto source = build_source(cfg.source, data.series, cfg.p);
    write_series(cfg.output_dir / seed_file("raw", seed, ".csv"), data, generate_raw(data.series, *source, seed, cfg.correction.conditioning_mode));
  });
  return kExitOk;
}

int cmd_correct(const RunConfig& cfg) {
  const PreparedData data = prepare_data(cfg);
  write_echo(cfg, &data);
  const DiffDensity density = obtain_density(cfg, data.series);
  parallel_for(cfg.seeds.size(), worker_count(cfg, cfg.seeds.size()), [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    auto source = build_source(cfg.source, data.series, cfg.p);
    CorrectionConfig cc = cfg.correction;
    cc.seed = seed;
    const CorrectionRun run = correct_series(data.series, *source, density, cc);
    write_series(cfg.output_dir / seed_file("corrected", seed, ".csv"), data, run.corrected);
    json diag = run.diagnostics();
    diag["seed"] = seed;
    diag["source"] = source->describe();
    write_json(cfg.output_dir / seed_file("diagnostics", seed, ".json"), diag);
  });
  return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg) {
  const PreparedData data = prepare_data(cfg);
  write_echo(cfg, &data);
  const auto& names = data.series.dim_names();
  if (cfg.gen_path) {
    const TimeSeries gen = read_generated(*cfg.gen_path, data);
    const MetricsReport rep = evaluate(data.series, gen, metrics_for(cfg, cfg.seeds.front()));
    write_json(cfg.output_dir / "report.json", {{"gen_path", cfg.gen_path->string()}, {"metrics", rep.to_json()}});
    write_acf_csv(cfg.output_dir / "acf.csv", names, {{"gen", &rep.acf_gen}}, rep.acf_real);
    write_pca_csv(cfg.output_dir / "pca.csv", rep.pca, {{"gen", &rep.pca.gen_coords}});
    return kExitOk;
  }
  parallel_for(cfg.seeds.size(), worker_count(cfg, cfg.seeds.size()), [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    const fs::path raw_path = cfg.output_dir / seed_file("raw", seed, ".csv");
    const fs::path cor_path = cfg.output_dir / seed_file("corrected", seed, ".csv");
    for (const auto& p : {raw_path, cor_path}) {
      if (!fs::exists(p)) throw Error(ErrorCode::ConfigInvalid, "missing " + p.string() + " (run generate/correct first)");
    }
    const MetricsConfig mc = metrics_for(cfg, seed);
    const MetricsReport raw = evaluate(data.series, read_generated(raw_path, data), mc);
    const MetricsReport cor = evaluate(data.series, read_generated(cor_path, data), mc);
    json report = {{"seed", seed}, {"raw", raw.to_json()}, {"corrected", cor.to_json()}};
    const fs::path diag_path = cfg.output_dir / seed_file("diagnostics", seed, ".json");
    if (fs::exists(diag_path)) {
      const json diag = read_json(diag_path);
      report["correction"] = {{"acceptance_rate", diag.at("acceptance_rate")},
                              {"proposed", diag.at("proposed")},
                              {"accepted", diag.at("accepted")},
                              {"forced_accepts", diag.at("forced_accepts")},
                              {"warm_start", diag.at("warm_start")}};
    }
    write_json(cfg.output_dir / seed_file("report", seed, ".json"), report);
    write_acf_csv(cfg.output_dir / seed_file("acf", seed, ".csv"), names,
                  {{"raw", &raw.acf_gen}, {"corrected", &cor.acf_gen}}, raw.acf_real);
    write_pca_csv(cfg.output_dir / seed_file("pca", seed, ".csv"), raw.pca,
                  {{"raw", &raw.pca.gen_coords}, {"corrected", &cor.pca.gen_coords}});
  });
  return kExitOk;
}

int cmd_compare(const RunConfig& cfg) {
  const PreparedData data = prepare_data(cfg);
  write_echo(cfg, &data);
  const DiffDensity density = obtain_density(cfg, data.series);
  const auto& names = data.series.dim_names();
  std::vector<json> reports(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), worker_count(cfg, cfg.seeds.size()), [&](std::size_t i) {
    const SeedOutcome o = run_seed(cfg, data, density, cfg.seeds[i]);
    write_series(cfg.output_dir / seed_file("raw", o.seed, ".csv"), data, o.raw);
    write_series(cfg.output_dir / seed_file("corrected", o.seed, ".csv"), data, o.run.corrected);
    json diag = o.run.diagnostics();
    diag["seed"] = o.seed;
    write_json(cfg.output_dir / seed_file("diagnostics", o.seed, ".json"), diag);
    json report = {{"seed", o.seed},
                   {"raw", o.raw_report.to_json()},
                   {"corrected", o.corrected_report.to_json()},
                   {"correction", correction_summary(o.run)}};
    write_json(cfg.output_dir / seed_file("report", o.seed, ".json"), report);
    write_acf_csv(cfg.output_dir / seed_file("acf", o.seed, ".csv"), names,
                  {{"raw", &o.raw_report.acf_gen}, {"corrected", &o.corrected_report.acf_gen}},
                  o.raw_report.acf_real);
    write_pca_csv(cfg.output_dir / seed_file("pca", o.seed, ".csv"), o.raw_report.pca,
                  {{"raw", &o.raw_report.pca.gen_coords}, {"corrected", &o.corrected_report.pca.gen_coords}});
    reports[i] = std::move(report);
  });
  // Summaries are computed from the same JSON values that went to disk.
  for (auto& r : reports) r = json::parse(r.dump());
  const json summary = summarize(reports);
  write_json(cfg.output_dir / "summary.json", summary);

  std::printf("%-16s %-26s %-26s\n", "metric", "raw (mean ± std)", "corrected (mean ± std)");
  for (const auto& [name, v] : summary.at("metrics").items()) {
    std::printf("%-16s %11.5g ± %-11.5g %11.5g ± %-11.5g\n", name.c_str(), v["raw"]["mean"].get<double>(),
                v["raw"]["std"].get<double>(), v["corrected"]["mean"].get<double>(),
                v["corrected"]["std"].get<double>());
  }
  std::printf("acceptance rate %.4f, forced accepts %.1f per run (%zu seeds)\n",
              summary["acceptance_rate"]["mean"].get<double>(), summary["forced_accepts"]["mean"].get<double>(),
              cfg.seeds.size());
  return kExitOk;
}

int cmd_verify_theory(std::uint64_t seed, const std::optional<fs::path>& out) {
  const json report = theory::run_verification(seed);
  std::cout << report.dump(2) << '\n';
  if (out) {
    ensure_output_dir(*out);
    write_json(*out / "theory.json", report);
  }
  return report.at("passed").get<bool>() ? kExitOk : kExitTheory;
}

}  // namespace tsmcmc::app
