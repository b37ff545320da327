#include "svar/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace svar::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno != ERANGE;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InvalidInput("cannot write '" + path + "'");
  }
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InvalidInput("cannot read '" + path + "'");
  }
  return in;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, int rows, int cols, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    throw InvalidInput(what + " must have " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols) {
      throw InvalidInput(what + " row " + std::to_string(r + 1) + " must have " + std::to_string(cols) + " entries");
    }
    for (int c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) {
        throw InvalidInput(what + " entry (" + std::to_string(r + 1) + "," + std::to_string(c + 1) +
                           ") is not a number");
      }
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

Json pattern_to_json(const SparsityPattern& p) {
  Json out = Json::array();
  for (const auto& c : p.entries()) out.push_back({c.lag, c.row + 1, c.col + 1});
  return out;
}

}  // namespace

Table parse_csv(std::istream& in, const std::string& source) {
  Table table;
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  bool first = true;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split(t);
    std::vector<double> values(fields.size());
    bool numeric = true;
    std::size_t bad = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!parse_number(fields[c], values[c])) {
        numeric = false;
        bad = c;
        break;
      }
    }
    if (first) {
      first = false;
      width = fields.size();
      if (!numeric) {
        table.header = fields;
        continue;
      }
    }
    if (fields.size() != width) {
      throw InvalidInput(source + ": line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                         " fields, expected " + std::to_string(width));
    }
    if (!numeric) {
      throw InvalidInput(source + ": line " + std::to_string(line_no) + ", column " + std::to_string(bad + 1) +
                         ": '" + fields[bad] + "' is not a number");
    }
    for (std::size_t c = 0; c < values.size(); ++c) {
      if (!std::isfinite(values[c])) {
        throw InvalidInput(source + ": line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                           ": value is not finite");
      }
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) {
    throw InvalidInput(source + ": no data rows");
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) m(r, c) = rows[r][c];
  }
  table.data = MultiSeries(std::move(m));
  return table;
}

Table read_csv(const std::string& path) {
  auto in = open_in(path);
  return parse_csv(in, path);
}

void write_csv(const std::string& path, const MultiSeries& data, const std::vector<std::string>& header) {
  auto out = open_out(path);
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
  }
  for (int r = 0; r < data.length(); ++r) {
    for (int c = 0; c < data.dim(); ++c) out << (c ? "," : "") << format_double(data.values(r, c));
    out << '\n';
  }
}

Json model_to_json(const VarModel& model) {
  Json j;
  j["p"] = model.order();
  j["K"] = model.dim();
  Json a = Json::array();
  for (const auto& m : model.coeffs) a.push_back(matrix_to_json(m));
  j["A"] = std::move(a);
  j["sigma_z"] = matrix_to_json(model.noise_cov);
  Json mu = Json::array();
  for (Eigen::Index i = 0; i < model.mean.size(); ++i) mu.push_back(model.mean(i));
  j["mu"] = std::move(mu);
  return j;
}

VarModel model_from_json(const Json& j) {
  if (!j.is_object()) {
    throw InvalidInput("model must be a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "p" && key != "K" && key != "A" && key != "sigma_z" && key != "mu") {
      throw InvalidInput("unknown model key '" + key + "'");
    }
  }
  if (!j.contains("K") || !j["K"].is_number_integer() || j["K"].get<int>() < 1) {
    throw InvalidInput("model needs a positive integer K");
  }
  const int k = j["K"].get<int>();
  const Json a = j.value("A", Json::array());
  if (!a.is_array()) {
    throw InvalidInput("model A must be an array of matrices");
  }
  const int p = static_cast<int>(a.size());
  if (j.contains("p") && (!j["p"].is_number_integer() || j["p"].get<int>() != p)) {
    throw InvalidInput("model p does not match the number of coefficient matrices");
  }
  std::vector<Matrix> coeffs;
  for (int lag = 0; lag < p; ++lag) coeffs.push_back(matrix_from_json(a[lag], k, k, "A[" + std::to_string(lag + 1) + "]"));
  if (!j.contains("sigma_z")) {
    throw InvalidInput("model needs sigma_z");
  }
  Matrix sigma = matrix_from_json(j["sigma_z"], k, k, "sigma_z");
  Vector mu = Vector::Zero(k);
  if (j.contains("mu")) {
    const auto& m = j["mu"];
    if (!m.is_array() || static_cast<int>(m.size()) != k) {
      throw InvalidInput("model mu must have K entries");
    }
    for (int i = 0; i < k; ++i) {
      if (!m[i].is_number()) throw InvalidInput("model mu entries must be numbers");
      mu(i) = m[i].get<double>();
    }
  }
  VarModel model(std::move(coeffs), std::move(sigma), std::move(mu));
  model.validate();
  return model;
}

void write_json(const std::string& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

Json read_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

VarModel read_model(const std::string& path) { return model_from_json(read_json(path)); }

void write_coefficients(const std::string& path, const VarModel& model) {
  auto out = open_out(path);
  out << "lag,row,col,value\n";
  for (int lag = 0; lag < model.order(); ++lag) {
    for (int r = 0; r < model.dim(); ++r) {
      for (int c = 0; c < model.dim(); ++c) {
        out << lag + 1 << ',' << r + 1 << ',' << c + 1 << ',' << format_double(model.coeffs[lag](r, c)) << '\n';
      }
    }
  }
}

std::vector<Matrix> read_coefficients(const std::string& path) {
  auto in = open_in(path);
  const auto table = parse_csv(in, path);
  const auto& m = table.data.values;
  if (m.cols() != 4) {
    throw InvalidInput(path + ": expected columns lag,row,col,value");
  }
  int p = 0;
  int k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < 3; ++c) {
      if (m(r, c) < 1 || m(r, c) != std::floor(m(r, c))) {
        throw InvalidInput(path + ": data row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1) +
                           ": index must be a positive integer");
      }
    }
    p = std::max(p, static_cast<int>(m(r, 0)));
    k = std::max({k, static_cast<int>(m(r, 1)), static_cast<int>(m(r, 2))});
  }
  std::vector<Matrix> coeffs(p, Matrix::Zero(k, k));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    coeffs[static_cast<int>(m(r, 0)) - 1](static_cast<int>(m(r, 1)) - 1, static_cast<int>(m(r, 2)) - 1) = m(r, 3);
  }
  return coeffs;
}

Json config_to_json(const TwoStageConfig& config) {
  Json j;
  j["p_range"] = config.p_range;
  j["m_range"] = config.m_range ? Json(*config.m_range) : Json(nullptr);
  j["spans"] = config.spectral.spans;
  j["mle_tol"] = config.mle.tol;
  j["mle_max_iter"] = config.mle.max_iter;
  j["demean"] = config.mle.demean;
  return j;
}

Json report_to_json(const FitReport& report) {
  Json j;
  j["method"] = "two_stage";
  j["T"] = report.length;
  j["K"] = report.dim;
  j["likelihood"] = report.likelihood;
  j["config"] = config_to_json(report.config);
  if (report.rank) {
    Json pairs = Json::array();
    for (const auto& e : report.rank->ranking.pairs) pairs.push_back({{"i", e.i + 1}, {"j", e.j + 1}, {"sup_psc_sq", e.stat}});
    j["pair_ranking"] = std::move(pairs);
    j["ordinary_coherence"] = report.rank->psc.ordinary_coherence;
  }
  Json s1;
  s1["p"] = report.stage1.p;
  s1["M"] = report.stage1.m_pairs;
  s1["pattern"] = pattern_to_json(report.stage1.fit.pattern);
  s1["loglik"] = report.stage1.fit.loglik;
  s1["presample"] = report.stage1.fit.presample;
  Json surface = Json::array();
  for (const auto& pt : report.stage1.surface) {
    surface.push_back({{"p", pt.p}, {"M", pt.m_pairs}, {"bic", number_or_null(pt.bic)},
                       {"loglik", number_or_null(pt.loglik)}, {"feasible", pt.feasible}});
  }
  s1["bic_surface"] = std::move(surface);
  j["stage1"] = std::move(s1);

  Json s2;
  s2["m_star"] = report.stage2.m_star;
  s2["p_star"] = report.stage2.p_star;
  Json ranking = Json::array();
  for (const auto& t : report.stage2.ranking.entries) {
    ranking.push_back({{"lag", t.index.lag}, {"row", t.index.row + 1}, {"col", t.index.col + 1},
                       {"estimate", t.estimate}, {"std_error", t.std_error}, {"t", t.t}});
  }
  s2["t_ranking"] = std::move(ranking);
  Json curve = Json::array();
  for (const auto& pt : report.stage2.curve) {
    curve.push_back({{"m", pt.m}, {"bic", number_or_null(pt.bic)}, {"loglik", number_or_null(pt.loglik)}});
  }
  s2["bic_curve"] = std::move(curve);
  s2["pattern"] = pattern_to_json(report.stage2.fit.pattern);
  s2["loglik"] = report.stage2.fit.loglik;
  s2["converged"] = report.stage2.fit.converged;
  j["stage2"] = std::move(s2);

  j["final_bic"] = report.final_bic;
  j["model"] = model_to_json(report.final_model);
  j["timings"] = {{"stage1_seconds", report.seconds_stage1}, {"stage2_seconds", report.seconds_stage2}};
  j["warnings"] = report.warnings;
  return j;
}

Json lasso_fit_to_json(const LassoFit& fit) {
  Json j;
  j["method"] = fit.loss == LossKind::SS ? "lasso_ss" : "lasso_ll";
  j["loss_kind"] = to_string(fit.loss);
  j["lambda"] = fit.lambda;
  j["objective"] = fit.objective;
  j["cv_error"] = fit.cv_error ? Json(*fit.cv_error) : Json(nullptr);
  j["converged"] = fit.converged;
  j["outer_iterations"] = fit.outer_iterations;
  j["nonzero"] = fit.nonzero_count();
  j["model"] = model_to_json(fit.model);
  j["warnings"] = fit.warnings;
  return j;
}

void write_stage1_bic(const std::string& path, const Stage1Result& stage1) {
  auto out = open_out(path);
  out << "p,M,bic,loglik,feasible\n";
  for (const auto& pt : stage1.surface) {
    out << pt.p << ',' << pt.m_pairs << ',' << format_double(pt.bic) << ',' << format_double(pt.loglik) << ','
        << (pt.feasible ? 1 : 0) << '\n';
  }
}

void write_stage2_bic(const std::string& path, const Stage2Result& stage2) {
  auto out = open_out(path);
  out << "m,bic,loglik\n";
  for (const auto& pt : stage2.curve) {
    out << pt.m << ',' << format_double(pt.bic) << ',' << format_double(pt.loglik) << '\n';
  }
}

void write_psc_summary(const std::string& path, const PairRanking& ranking) {
  auto out = open_out(path);
  out << "i,j,sup_psc_sq,rank\n";
  int rank = 1;
  for (const auto& e : ranking.pairs) {
    out << e.i + 1 << ',' << e.j + 1 << ',' << format_double(e.stat) << ',' << rank++ << '\n';
  }
}

void write_cv_table(const std::string& path, const std::vector<CvRow>& table) {
  auto out = open_out(path);
  out << "p,lambda,fold,error\n";
  for (const auto& r : table) {
    out << r.p << ',' << format_double(r.lambda) << ',' << r.fold + 1 << ',' << format_double(r.error) << '\n';
  }
}

void write_metrics(const std::string& path, const std::vector<MetricsRow>& rows) {
  auto out = open_out(path);
  out << "method,delta2,p_hat,m_hat,bias2,variance,mse,n_ok,n_failed,flagged\n";
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << format_double(r.delta2) << ',' << format_double(r.p_hat) << ','
        << format_double(r.m_hat) << ',' << format_double(r.bias2) << ',' << format_double(r.variance) << ','
        << format_double(r.mse) << ',' << r.n_ok << ',' << r.n_failed << ',' << (r.flagged ? 1 : 0) << '\n';
  }
}

Json record_to_json(const RepRecord& record) {
  Json j;
  j["replication"] = record.replication;
  j["seed"] = record.seed;
  j["method"] = to_string(record.method);
  j["ok"] = record.ok;
  if (!record.ok) {
    j["error"] = record.error;
    return j;
  }
  j["p_hat"] = record.p_hat;
  j["m_hat"] = record.m_hat;
  if (record.bic) j["bic"] = *record.bic;
  if (record.lambda) j["lambda"] = *record.lambda;
  Json a = Json::array();
  for (const auto& m : record.coeffs) a.push_back(matrix_to_json(m));
  j["A"] = std::move(a);
  return j;
}

void write_records(const std::string& path, const std::vector<RepRecord>& records) {
  auto out = open_out(path);
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

}  // namespace svar::io
