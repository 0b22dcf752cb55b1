#include "tsmcmc/datasets.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tsmcmc {

void LorenzConfig::validate() const {
  if (!(dt > 0.0 && dt <= 0.05)) throw Error(ErrorCode::InvalidArgument, "lorenz dt must lie in (0, 0.05]");
  if (steps < 2) throw Error(ErrorCode::InvalidArgument, "lorenz steps must be >= 2");
  for (double v : {sigma, rho, beta, x0[0], x0[1], x0[2]}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "lorenz parameters must be finite");
  }
}

LorenzState lorenz_derivative(const LorenzConfig& cfg, const LorenzState& s) noexcept {
  return {cfg.sigma * (s[1] - s[0]), s[0] * (cfg.rho - s[2]) - s[1], s[0] * s[1] - cfg.beta * s[2]};
}

LorenzState lorenz_rk4_step(const LorenzConfig& cfg, const LorenzState& s) noexcept {
  const double h = cfg.dt;
  auto axpy = [](const LorenzState& x, double a, const LorenzState& k) {
    return LorenzState{x[0] + a * k[0], x[1] + a * k[1], x[2] + a * k[2]};
  };
  const LorenzState k1 = lorenz_derivative(cfg, s);
  const LorenzState k2 = lorenz_derivative(cfg, axpy(s, 0.5 * h, k1));
  const LorenzState k3 = lorenz_derivative(cfg, axpy(s, 0.5 * h, k2));
  const LorenzState k4 = lorenz_derivative(cfg, axpy(s, h, k3));
  LorenzState out{};
  for (int i = 0; i < 3; ++i) out[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

TimeSeries simulate_lorenz(const LorenzConfig& cfg) {
  cfg.validate();
  Matrix out(static_cast<Eigen::Index>(cfg.steps), 3);
  LorenzState s = cfg.x0;
  const std::size_t total = cfg.transient + cfg.steps;
  for (std::size_t i = 0; i < total; ++i) {
    s = lorenz_rk4_step(cfg, s);
    if (!std::isfinite(s[0]) || !std::isfinite(s[1]) || !std::isfinite(s[2])) {
      throw Error(ErrorCode::NonFiniteState, "lorenz integration diverged at step " + std::to_string(i + 1));
    }
    if (i >= cfg.transient) {
      const auto row = static_cast<Eigen::Index>(i - cfg.transient);
      out(row, 0) = s[0];
      out(row, 1) = s[1];
      out(row, 2) = s[2];
    }
  }
  return TimeSeries(std::move(out), {"x", "y", "z"});
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw Error(ErrorCode::ParseError, "unterminated quote on line " + std::to_string(line_no));
  fields.push_back(std::move(cur));
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_real(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) {
    // from_chars rejects "nan"/"inf" spellings with a leading sign in some forms;
    // treat any remaining textual non-finite as a value the caller rejects.
    std::string lower;
    for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "nan" || lower == "-nan" || lower == "inf" || lower == "-inf" || lower == "infinity" ||
        lower == "-infinity") {
      return std::numeric_limits<double>::quiet_NaN();
    }
    return std::nullopt;
  }
  return v;
}

// Days since 1970-01-01 for a proleptic Gregorian date.
long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

std::optional<double> parse_iso_datetime(const std::string& text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  double sec = 0.0;
  char sep = 0;
  const int n = std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%lf", &y, &mo, &d, &sep, &h, &mi, &sec);
  if (n < 3 || mo < 1 || mo > 12 || d < 1 || d > 31) return std::nullopt;
  if (n > 3 && sep != ' ' && sep != 'T') return std::nullopt;
  if (n > 3 && n < 6) return std::nullopt;
  const long long days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  return static_cast<double>(days) * 86400.0 + h * 3600.0 + mi * 60.0 + sec;
}

}  // namespace

TimeSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  if (schema.value_columns.empty()) throw Error(ErrorCode::InvalidArgument, "schema names no value columns");

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "missing header row in " + path.string());
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  std::vector<std::string> header = split_csv_line(line, 1);
  for (auto& h : header) h = trim(h);

  auto find_column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw Error(ErrorCode::MissingColumn, "column '" + name + "' not found in " + path.string());
  };
  std::vector<std::size_t> value_idx;
  for (const auto& name : schema.value_columns) value_idx.push_back(find_column(name));
  std::optional<std::size_t> ts_idx;
  if (schema.timestamp_column) ts_idx = find_column(*schema.timestamp_column);

  std::vector<std::vector<double>> rows;
  std::vector<double> stamps;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line, line_no);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::ParseError, "row " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                                             " fields, header has " + std::to_string(header.size()));
    }
    std::vector<double> row;
    row.reserve(value_idx.size());
    for (std::size_t k = 0; k < value_idx.size(); ++k) {
      const std::string cell = trim(fields[value_idx[k]]);
      const auto v = parse_real(cell);
      const std::string where =
          "row " + std::to_string(line_no) + ", column '" + schema.value_columns[k] + "'";
      if (!v) throw Error(ErrorCode::ParseError, "cannot parse '" + cell + "' at " + where);
      if (!std::isfinite(*v)) throw Error(ErrorCode::NonFiniteValue, "non-finite value at " + where);
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
    if (ts_idx) {
      const std::string cell = trim(fields[*ts_idx]);
      auto v = parse_real(cell);
      if (!v || !std::isfinite(*v)) v = parse_iso_datetime(cell);
      if (!v) {
        throw Error(ErrorCode::ParseError, "cannot parse timestamp '" + cell + "' at row " + std::to_string(line_no));
      }
      stamps.push_back(*v);
    }
  }
  Matrix values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(value_idx.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t j = 0; j < value_idx.size(); ++j) {
      values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
    }
  }
  std::optional<std::vector<double>> ts;
  if (ts_idx) ts = std::move(stamps);
  return TimeSeries(std::move(values), schema.value_columns, std::move(ts));
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

void write_csv(const std::filesystem::path& path, const TimeSeries& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  const auto& ts = s.timestamps();
  if (ts) out << "timestamp,";
  for (std::size_t j = 0; j < s.dims(); ++j) out << (j ? "," : "") << s.dim_names()[j];
  out << '\n';
  const Matrix& x = s.values();
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    if (ts) out << format_double((*ts)[static_cast<std::size_t>(t)]) << ',';
    for (Eigen::Index j = 0; j < x.cols(); ++j) out << (j ? "," : "") << format_double(x(t, j));
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

Matrix WindowPair::joined() const {
  Matrix out(past.rows() + future.rows(), past.cols());
  out << past, future;
  return out;
}

std::size_t window_count(std::size_t length, std::size_t p, std::size_t q, std::size_t stride) {
  if (p == 0 || q == 0 || stride == 0) throw Error(ErrorCode::InvalidArgument, "p, q and stride must be >= 1");
  if (length < p + q) {
    throw Error(ErrorCode::SeriesTooShort, "series of length " + std::to_string(length) +
                                               " is shorter than p + q = " + std::to_string(p + q));
  }
  return (length - p - q) / stride + 1;
}

std::vector<WindowPair> make_windows(const TimeSeries& s, std::size_t p, std::size_t q, std::size_t stride) {
  const std::size_t n = window_count(s.length(), p, q, stride);
  std::vector<WindowPair> out;
  out.reserve(n);
  const Matrix& x = s.values();
  for (std::size_t w = 0; w < n; ++w) {
    const auto start = static_cast<Eigen::Index>(w * stride);
    out.push_back({x.middleRows(start, static_cast<Eigen::Index>(p)),
                   x.middleRows(start + static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)),
                   w * stride});
  }
  return out;
}

}  // namespace tsmcmc
