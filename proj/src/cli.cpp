#include "svar/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <ostream>
#include <set>
#include <thread>

#include "CLI11.hpp"

namespace svar::cli {

using io::Json;

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& context) {
  if (!j.is_object()) {
    throw InvalidInput(context + " must be a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw InvalidInput("unknown key '" + key + "' in " + context);
    }
  }
}

template <class T>
T get(const Json& j, const std::string& key, const std::string& context) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw InvalidInput("key '" + key + "' in " + context + " has the wrong type");
  }
}

template <class T>
void read_if(const Json& j, const std::string& key, const std::string& context, T& target) {
  if (j.contains(key)) target = get<T>(j, key, context);
}

std::string path_in(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw InvalidInput("cannot create output directory '" + dir + "': " + ec.message());
  }
}

Json pattern_json(const SparsityPattern& p) {
  Json out = Json::array();
  for (const auto& c : p.entries()) out.push_back({c.lag, c.row + 1, c.col + 1});
  return out;
}

}  // namespace

TwoStageConfig two_stage_config_from_json(const Json& j) {
  const std::string ctx = "two_stage config";
  check_keys(j, {"p_range", "m_range", "spans", "mle_tol", "mle_max_iter", "demean"}, ctx);
  TwoStageConfig c;
  read_if(j, "p_range", ctx, c.p_range);
  if (j.contains("m_range") && !j["m_range"].is_null()) c.m_range = get<std::vector<int>>(j, "m_range", ctx);
  read_if(j, "spans", ctx, c.spectral.spans);
  read_if(j, "mle_tol", ctx, c.mle.tol);
  read_if(j, "mle_max_iter", ctx, c.mle.max_iter);
  read_if(j, "demean", ctx, c.mle.demean);
  if (c.p_range.empty()) throw InvalidInput("p_range must not be empty");
  for (int p : c.p_range) {
    if (p < 0) throw InvalidInput("p_range entries must be non-negative");
  }
  for (int s : c.spectral.spans) {
    if (s < 1 || s % 2 == 0) throw InvalidInput("spans must be odd positive integers");
  }
  if (!(c.mle.tol > 0.0) || c.mle.max_iter < 1) throw InvalidInput("MLE tolerances must be positive");
  return c;
}

CvPlan cv_plan_from_json(const Json& j) {
  const std::string ctx = "cv config";
  check_keys(j, {"folds", "n_lambda", "lambda_min_ratio", "p_range", "lambda_grid"}, ctx);
  CvPlan c;
  read_if(j, "folds", ctx, c.folds);
  read_if(j, "n_lambda", ctx, c.n_lambda);
  read_if(j, "lambda_min_ratio", ctx, c.lambda_min_ratio);
  read_if(j, "p_range", ctx, c.p_range);
  if (j.contains("lambda_grid") && !j["lambda_grid"].is_null()) {
    c.lambda_grid = get<std::vector<double>>(j, "lambda_grid", ctx);
  }
  if (c.p_range.empty()) throw InvalidInput("cv p_range must not be empty");
  return c;
}

Json cv_plan_to_json(const CvPlan& plan) {
  Json j;
  j["folds"] = plan.folds;
  j["n_lambda"] = plan.n_lambda;
  j["lambda_min_ratio"] = plan.lambda_min_ratio;
  j["p_range"] = plan.p_range;
  j["lambda_grid"] = plan.lambda_grid ? Json(*plan.lambda_grid) : Json(nullptr);
  return j;
}

LassoOptions lasso_options_from_json(const Json& j) {
  const std::string ctx = "lasso config";
  check_keys(j, {"coef_tol", "kkt_tol", "max_sweeps", "outer_tol", "outer_kkt_tol", "max_outer", "demean", "standardize"},
             ctx);
  LassoOptions o;
  read_if(j, "coef_tol", ctx, o.cd.coef_tol);
  read_if(j, "kkt_tol", ctx, o.cd.kkt_tol);
  read_if(j, "max_sweeps", ctx, o.cd.max_sweeps);
  read_if(j, "outer_tol", ctx, o.outer_tol);
  read_if(j, "outer_kkt_tol", ctx, o.outer_kkt_tol);
  read_if(j, "max_outer", ctx, o.max_outer);
  read_if(j, "demean", ctx, o.demean);
  read_if(j, "standardize", ctx, o.standardize);
  return o;
}

namespace {

Json lasso_options_to_json(const LassoOptions& o) {
  Json j;
  j["coef_tol"] = o.cd.coef_tol;
  j["kkt_tol"] = o.cd.kkt_tol;
  j["max_sweeps"] = o.cd.max_sweeps;
  j["outer_tol"] = o.outer_tol;
  j["outer_kkt_tol"] = o.outer_kkt_tol;
  j["max_outer"] = o.max_outer;
  j["demean"] = o.demean;
  j["standardize"] = o.standardize;
  return j;
}

}  // namespace

StudyConfig study_config_from_json(const Json& j) {
  const std::string ctx = "study config";
  check_keys(j,
             {"preset", "generator", "delta2", "T", "replications", "seed", "burn_in", "methods", "two_stage", "cv",
              "lasso", "oracle_pattern", "threads"},
             ctx);
  StudyConfig c;
  if (j.contains("preset")) {
    c = table1_preset(get<std::string>(j, "preset", ctx));
  } else if (!j.contains("generator")) {
    throw InvalidInput("study config needs a preset or a generator");
  }
  if (j.contains("generator")) c.generator = io::model_from_json(j["generator"]);
  read_if(j, "delta2", ctx, c.delta2);
  read_if(j, "T", ctx, c.length);
  read_if(j, "replications", ctx, c.replications);
  read_if(j, "seed", ctx, c.seed);
  read_if(j, "burn_in", ctx, c.burn_in);
  read_if(j, "threads", ctx, c.threads);
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& name : get<std::vector<std::string>>(j, "methods", ctx)) c.methods.push_back(parse_method(name));
  }
  if (j.contains("two_stage")) c.two_stage = two_stage_config_from_json(j["two_stage"]);
  if (j.contains("cv")) c.cv = cv_plan_from_json(j["cv"]);
  if (j.contains("lasso")) c.lasso = lasso_options_from_json(j["lasso"]);
  if (j.contains("oracle_pattern") && !j["oracle_pattern"].is_null()) {
    const auto triples = get<std::vector<std::vector<int>>>(j, "oracle_pattern", ctx);
    int order = c.generator.order();
    for (const auto& t : triples) {
      if (t.size() != 3) throw InvalidInput("oracle_pattern entries must be [lag, row, col]");
      order = std::max(order, t[0]);
    }
    SparsityPattern p(order, c.generator.dim());
    for (const auto& t : triples) p.insert({t[0], t[1] - 1, t[2] - 1});
    c.oracle_pattern = p;
  }
  if (c.replications < 1) throw InvalidInput("replications must be at least 1");
  if (c.length < 2) throw InvalidInput("T must be at least 2");
  if (c.burn_in < 0) throw InvalidInput("burn_in must be non-negative");
  return c;
}

Json study_config_to_json(const StudyConfig& c) {
  Json j;
  j["generator"] = io::model_to_json(c.generator);
  j["delta2"] = c.delta2;
  j["T"] = c.length;
  j["replications"] = c.replications;
  j["seed"] = c.seed;
  j["burn_in"] = c.burn_in;
  Json methods = Json::array();
  for (Method m : c.methods) methods.push_back(to_string(m));
  j["methods"] = std::move(methods);
  j["two_stage"] = io::config_to_json(c.two_stage);
  j["cv"] = cv_plan_to_json(c.cv);
  j["lasso"] = lasso_options_to_json(c.lasso);
  j["oracle_pattern"] = c.oracle_pattern ? pattern_json(*c.oracle_pattern) : Json(nullptr);
  return j;
}

namespace {

struct FitArgs {
  std::string data;
  std::string config;
  std::string out_dir = ".";
  std::string method = "two_stage";
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  Json cfg = Json::object();
  if (!a.config.empty()) cfg = io::read_json(a.config);
  check_keys(cfg, {"method", "two_stage", "cv", "lasso"}, "fit config");
  std::string method_name = a.method;
  if (cfg.contains("method")) method_name = get<std::string>(cfg, "method", "fit config");
  const Method method = parse_method(method_name);
  if (method == Method::oracle_two_stage) {
    throw InvalidInput("the oracle method needs a known support and is only available in bench");
  }
  const TwoStageConfig ts = two_stage_config_from_json(cfg.value("two_stage", Json::object()));
  const CvPlan plan = cv_plan_from_json(cfg.value("cv", Json::object()));
  const LassoOptions lasso = lasso_options_from_json(cfg.value("lasso", Json::object()));

  const auto table = io::read_csv(a.data);
  const auto& series = table.data;
  if (series.length() <= 2 * series.dim()) {
    out << "warning: T = " << series.length() << " is not larger than 2K\n";
  }
  ensure_dir(a.out_dir);

  Json echo;
  echo["command"] = "fit";
  echo["data"] = a.data;
  echo["method"] = to_string(method);
  echo["two_stage"] = io::config_to_json(ts);
  echo["cv"] = cv_plan_to_json(plan);
  echo["lasso"] = lasso_options_to_json(lasso);
  io::write_json(path_in(a.out_dir, "config.json"), echo);

  VarModel model;
  if (method == Method::two_stage) {
    const auto report = fit_svar(series, ts);
    Json r = io::report_to_json(report);
    r["run_config"] = echo;
    io::write_json(path_in(a.out_dir, "report.json"), r);
    io::write_stage1_bic(path_in(a.out_dir, "bic_stage1.csv"), report.stage1);
    io::write_stage2_bic(path_in(a.out_dir, "bic_stage2.csv"), report.stage2);
    io::write_psc_summary(path_in(a.out_dir, "psc_summary.csv"), report.rank ? report.rank->ranking : PairRanking{});
    model = report.final_model;
    out << "sVAR(" << report.stage2.p_star << ", " << report.stage2.m_star << ")  stage 1: p=" << report.stage1.p
        << " M=" << report.stage1.m_pairs << "  BIC=" << io::format_double(report.final_bic) << '\n';
    for (const auto& w : report.warnings) out << "warning: " << w << '\n';
  } else {
    const auto cv = cross_validate(series, plan, method == Method::lasso_ss ? LossKind::SS : LossKind::LL, lasso);
    Json r = io::lasso_fit_to_json(cv.fit);
    r["p_star"] = cv.p_star;
    Json per = Json::array();
    for (const auto& s : cv.per_order) per.push_back({{"p", s.p}, {"lambda_opt", s.lambda_opt}, {"cv_min", s.cv_min}});
    r["cv_per_order"] = std::move(per);
    r["run_config"] = echo;
    io::write_json(path_in(a.out_dir, "report.json"), r);
    io::write_cv_table(path_in(a.out_dir, "cv_table.csv"), cv.table);
    model = cv.fit.model;
    out << to_string(method) << "  p=" << cv.p_star << " lambda=" << io::format_double(cv.lambda_star)
        << " nonzero=" << cv.fit.nonzero_count() << '\n';
  }
  io::write_coefficients(path_in(a.out_dir, "coefficients.csv"), model);
  io::write_json(path_in(a.out_dir, "model.json"), io::model_to_json(model));
  return ok;
}

struct SimulateArgs {
  std::string model;
  int length = 100;
  int burn_in = 500;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string output = "data.csv";
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const auto model = io::read_model(a.model);
  const auto series = simulate(model, a.length, a.seed, a.burn_in);
  ensure_dir(a.out_dir);
  std::vector<std::string> header;
  for (int i = 0; i < model.dim(); ++i) header.push_back("y" + std::to_string(i + 1));
  io::write_csv(path_in(a.out_dir, a.output), series, header);
  Json echo;
  echo["command"] = "simulate";
  echo["model"] = io::model_to_json(model);
  echo["T"] = a.length;
  echo["burn_in"] = a.burn_in;
  echo["seed"] = a.seed;
  io::write_json(path_in(a.out_dir, "config.json"), echo);
  out << "wrote " << series.length() << " x " << series.dim() << " to " << path_in(a.out_dir, a.output) << '\n';
  return ok;
}

struct BenchArgs {
  std::string config;
  std::string preset;
  std::string out_dir = ".";
  std::optional<int> replications;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> length;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  Json cfg = Json::object();
  if (!a.config.empty()) cfg = io::read_json(a.config);
  if (!a.preset.empty()) {
    if (cfg.contains("preset") && cfg["preset"] != a.preset) {
      throw InvalidInput("--preset conflicts with the preset in the config file");
    }
    cfg["preset"] = a.preset;
  }
  if (cfg.empty()) {
    throw InvalidInput("bench needs --preset or --config");
  }
  StudyConfig study = study_config_from_json(cfg);
  if (a.replications) study.replications = *a.replications;
  if (a.seed) study.seed = *a.seed;
  if (a.length) study.length = *a.length;
  if (a.threads) study.threads = *a.threads;
  if (study.threads == 0) study.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (study.replications < 1) throw InvalidInput("replications must be at least 1");

  ensure_dir(a.out_dir);
  Json echo = study_config_to_json(study);
  echo = Json{{"command", "bench"}, {"preset", cfg.value("preset", Json(nullptr))}, {"study", echo}};
  io::write_json(path_in(a.out_dir, "config.json"), echo);

  const auto table = run_study(study);
  io::write_metrics(path_in(a.out_dir, "metrics.csv"), table.rows);
  io::write_records(path_in(a.out_dir, "records.jsonl"), table.records);
  for (const auto& r : table.rows) {
    char line[256];
    std::snprintf(line, sizeof line, "%-17s delta2=%-6g p_hat=%.3f m_hat=%.3f bias2=%.3f var=%.3f mse=%.3f ok=%d failed=%d%s\n",
                  to_string(r.method).c_str(), r.delta2, r.p_hat, r.m_hat, r.bias2, r.variance, r.mse, r.n_ok,
                  r.n_failed, r.flagged ? " FLAGGED" : "");
    out << line;
  }
  return ok;
}

struct PscArgs {
  std::string data;
  std::string model;
  std::string config;
  std::string out_dir = ".";
};

int cmd_psc(const PscArgs& a, std::ostream& out) {
  if (a.data.empty() && a.model.empty()) {
    throw InvalidInput("psc needs --data, --model or both");
  }
  Json cfg = Json::object();
  if (!a.config.empty()) cfg = io::read_json(a.config);
  const std::string ctx = "psc config";
  check_keys(cfg, {"spans", "grid_length", "two_stage"}, ctx);
  std::vector<int> spans;
  read_if(cfg, "spans", ctx, spans);
  int grid_length = 512;
  read_if(cfg, "grid_length", ctx, grid_length);
  const TwoStageConfig ts = two_stage_config_from_json(cfg.value("two_stage", Json::object()));

  std::optional<PscEstimate> nonpar;
  std::optional<VarModel> model;
  std::vector<double> freqs;
  std::string model_source = "given";
  if (!a.data.empty()) {
    const auto series = io::read_csv(a.data).data;
    if (series.dim() < 2) throw InvalidInput("PSC needs at least two series");
    const auto f = estimate_spectrum(series, spans.empty() ? default_spans(series.length()) : spans);
    nonpar = psc_from_inverse(f);
    freqs = f.frequencies;
    if (a.model.empty()) {
      model = fit_svar(series, ts).final_model;
      model_source = "two_stage fit";
    }
  } else {
    if (grid_length < 2) throw InvalidInput("grid_length must be at least 2");
    freqs = fourier_half_grid(grid_length);
  }
  if (!a.model.empty()) model = io::read_model(a.model);
  if (nonpar && model && model->dim() != static_cast<int>(nonpar->summary.rows())) {
    throw InvalidInput("model dimension does not match the data");
  }
  if (model->dim() < 2) throw InvalidInput("PSC needs at least two series");
  const auto param = psc_from_inverse(model_spectrum(*model, freqs));
  const int k = model->dim();

  ensure_dir(a.out_dir);
  {
    std::ofstream f(path_in(a.out_dir, "psc.csv"), std::ios::binary);
    if (!f) throw InvalidInput("cannot write psc.csv");
    f << "omega,i,j" << (nonpar ? ",psc_sq_nonparametric" : "") << ",psc_sq_model\n";
    for (std::size_t w = 0; w < freqs.size(); ++w) {
      for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) {
          f << io::format_double(freqs[w]) << ',' << i + 1 << ',' << j + 1;
          if (nonpar) f << ',' << io::format_double(std::norm(nonpar->psc[w](i, j)));
          f << ',' << io::format_double(std::norm(param.psc[w](i, j))) << '\n';
        }
      }
    }
  }
  Json echo;
  echo["command"] = "psc";
  echo["data"] = a.data.empty() ? Json(nullptr) : Json(a.data);
  echo["model"] = io::model_to_json(*model);
  echo["model_source"] = model_source;
  echo["spans"] = spans;
  echo["grid_length"] = a.data.empty() ? Json(grid_length) : Json(nullptr);
  echo["ordinary_coherence"] = param.ordinary_coherence;
  std::vector<std::string> warnings = param.warnings;
  if (nonpar) warnings.insert(warnings.end(), nonpar->warnings.begin(), nonpar->warnings.end());
  echo["warnings"] = warnings;
  io::write_json(path_in(a.out_dir, "config.json"), echo);
  out << "wrote " << freqs.size() * static_cast<std::size_t>(k * (k - 1) / 2) << " rows to "
      << path_in(a.out_dir, "psc.csv") << (param.ordinary_coherence ? " (ordinary coherence, K = 2)" : "") << '\n';
  return ok;
}

void diagnose(std::ostream& err, const std::string& kind, const std::string& message) {
  err << Json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse VAR fitting: two-stage PSC/BIC selection and Lasso baselines"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a sparse VAR to a CSV of observations");
  fit_cmd->add_option("data", fit.data, "CSV file, one row per time point")->required();
  fit_cmd->add_option("--config", fit.config, "JSON config {method, two_stage, cv, lasso}");
  fit_cmd->add_option("--out-dir", fit.out_dir, "Output directory");
  fit_cmd->add_option("--method", fit.method, "two_stage, lasso_ss or lasso_ll");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a Gaussian VAR from a model JSON");
  sim_cmd->add_option("model", sim.model, "Model JSON {p, K, A, sigma_z, mu}")->required();
  sim_cmd->add_option("-T,--length", sim.length, "Number of observations");
  sim_cmd->add_option("--burn-in", sim.burn_in, "Discarded initial steps");
  sim_cmd->add_option("--seed", sim.seed, "Random seed");
  sim_cmd->add_option("--out-dir", sim.out_dir, "Output directory");
  sim_cmd->add_option("--output", sim.output, "File name inside the output directory");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run a simulation study");
  bench_cmd->add_option("--config", bench.config, "Study JSON");
  bench_cmd->add_option("--preset", bench.preset, "table1-delta1, table1-delta4, table1-delta25 or table1-delta100");
  bench_cmd->add_option("--replications", bench.replications, "Override the number of replications");
  bench_cmd->add_option("--seed", bench.seed, "Override the master seed");
  bench_cmd->add_option("--threads", bench.threads, "Worker threads (0 = all cores)");
  bench_cmd->add_option("-T,--length", bench.length, "Override the series length");
  bench_cmd->add_option("--out-dir", bench.out_dir, "Output directory");

  PscArgs psc;
  auto* psc_cmd = app.add_subcommand("psc", "Squared partial spectral coherence per frequency and pair");
  psc_cmd->add_option("--data", psc.data, "CSV of observations");
  psc_cmd->add_option("--model", psc.model, "Model JSON");
  psc_cmd->add_option("--config", psc.config, "JSON config {spans, grid_length, two_stage}");
  psc_cmd->add_option("--out-dir", psc.out_dir, "Output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    diagnose(err, "usage", e.what());
    return input_error;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit, out);
    if (*sim_cmd) return cmd_simulate(sim, out);
    if (*bench_cmd) return cmd_bench(bench, out);
    if (*psc_cmd) return cmd_psc(psc, out);
  } catch (const InvalidInput& e) {
    diagnose(err, "input", e.what());
    return input_error;
  } catch (const DomainError& e) {
    diagnose(err, "domain", e.what());
    return input_error;
  } catch (const NumericalError& e) {
    diagnose(err, "numerical", e.what());
    return numerical_failure;
  } catch (const Json::exception& e) {
    diagnose(err, "input", e.what());
    return input_error;
  } catch (const std::exception& e) {
    diagnose(err, "internal", e.what());
    return numerical_failure;
  }
  return input_error;
}

}  // namespace svar::cli
