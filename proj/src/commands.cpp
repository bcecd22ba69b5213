#include "sgcp/commands.hpp"

#include "sgcp/generative.hpp"
#include "sgcp/polya_gamma.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace sgcp {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

json to_json(const Eigen::VectorXd &v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

template <typename Matrix> json rows_to_json(const Matrix &m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::VectorXd vector_from(const json &j, const char *name) {
  if (!j.is_array()) {
    throw Error(std::string("posterior field '") + name + "' must be an array");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

template <typename Matrix> Matrix matrix_from(const json &j, const char *name, Eigen::Index cols) {
  if (!j.is_array()) {
    throw Error(std::string("posterior field '") + name + "' must be an array of rows");
  }
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw Error(std::string("posterior field '") + name + "': row " + std::to_string(i) + " has wrong length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(i), c) = j[i][static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

json bounds_to_json(const std::vector<std::pair<double, double>> &bounds) {
  json out = json::array();
  for (const auto &[lo, hi] : bounds) {
    out.push_back({lo, hi});
  }
  return out;
}

json kernel_to_json(const KernelParams &p) { return {{"theta", p.theta}, {"lengthscales", to_json(p.lengthscales)}}; }

void ensure_directory(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error("cannot create output directory " + dir.string());
  }
}

std::ofstream open_output(const fs::path &path) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out << std::setprecision(17);
  return out;
}

void write_json(const fs::path &path, const json &j) {
  std::ofstream out = open_output(path);
  out << j.dump(2) << '\n';
  if (!out) {
    throw Error("failed writing " + path.string());
  }
}

std::string axis_header(int dim) {
  std::string h;
  for (int i = 0; i < dim; ++i) {
    h += "x" + std::to_string(i) + ",";
  }
  return h;
}

void write_grid(const fs::path &path, const PointMatrix &points, const std::vector<std::string> &names,
                const std::vector<const Eigen::VectorXd *> &columns) {
  std::ofstream out = open_output(path);
  out << axis_header(static_cast<int>(points.cols()));
  for (std::size_t c = 0; c < names.size(); ++c) {
    out << names[c] << (c + 1 < names.size() ? "," : "\n");
  }
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
      out << points(p, i) << ',';
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out << (*columns[c])[p] << (c + 1 < columns.size() ? "," : "\n");
    }
  }
  if (!out) {
    throw Error("failed writing " + path.string());
  }
}

void write_trace(const fs::path &path, const std::vector<double> &trace) {
  std::ofstream out = open_output(path);
  out << "iteration,objective\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << i << ',' << trace[i] << '\n';
  }
}

void write_intensity(const fs::path &path, const IntensitySummary &s) {
  const Eigen::VectorXd lower = (s.mean - s.sd).cwiseMax(0.0);
  const Eigen::VectorXd upper = s.mean + s.sd;
  write_grid(path, s.points, {"mean", "sd", "lower", "upper"}, {&s.mean, &s.sd, &lower, &upper});
}

KernelParams params_of(const Kernel &kernel) {
  const auto *se = dynamic_cast<const SquaredExponential *>(&kernel);
  if (se == nullptr) {
    throw Error("only the squared-exponential kernel can be stored");
  }
  return se->params();
}

} // namespace

json posterior_to_json(const StoredPosterior &s) {
  const InducingSet &ind = *s.posterior.gp.inducing;
  json j;
  j["method"] = method_name(s.method);
  j["domain"] = bounds_to_json(s.bounds);
  j["kernel"] = kernel_to_json(s.kernel);
  j["relative_jitter"] = ind.relative_jitter();
  j["inducing_locations"] = rows_to_json(ind.locations());
  if (s.method == Method::vb) {
    j["mu"] = to_json(s.posterior.gp.mu);
    j["Sigma"] = rows_to_json(s.posterior.gp.Sigma);
    j["alpha2"] = s.posterior.shape;
    j["beta2"] = s.posterior.rate;
  } else {
    if (!s.laplace) {
      throw Error("Laplace posterior is missing its mode and precision");
    }
    j["g_s"] = to_json(s.laplace->g_s);
    j["rho"] = s.laplace->rho;
    j["precision"] = rows_to_json(s.laplace->precision);
  }
  j["mean_lambda"] = s.posterior.mean_lambda();
  return j;
}

StoredPosterior posterior_from_json(const json &j) {
  try {
    StoredPosterior s;
    s.method = parse_method(j.at("method").get<std::string>());
    for (const auto &b : j.at("domain")) {
      s.bounds.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
    }
    const Domain domain(s.bounds);
    s.kernel.theta = j.at("kernel").at("theta").get<double>();
    s.kernel.lengthscales = vector_from(j.at("kernel").at("lengthscales"), "kernel.lengthscales");
    s.kernel.validate();
    if (s.kernel.dim() != domain.dim()) {
      throw Error("kernel and domain dimensions differ");
    }
    const auto locations = matrix_from<PointMatrix>(j.at("inducing_locations"), "inducing_locations", domain.dim());
    const auto inducing = std::make_shared<const InducingSet>(InducingSet::with_fixed_jitter(
        locations, SquaredExponential(s.kernel), j.at("relative_jitter").get<double>()));
    const Eigen::Index L = inducing->size();

    if (s.method == Method::vb) {
      SparsePosterior gp;
      gp.mu = vector_from(j.at("mu"), "mu");
      gp.Sigma = matrix_from<Eigen::MatrixXd>(j.at("Sigma"), "Sigma", L);
      gp.inducing = inducing;
      if (gp.mu.size() != L || gp.Sigma.rows() != L) {
        throw Error("posterior mean/covariance size does not match the inducing set");
      }
      s.posterior.gp = std::move(gp);
      s.posterior.kind = LambdaKind::gamma;
      s.posterior.shape = j.at("alpha2").get<double>();
      s.posterior.rate = j.at("beta2").get<double>();
      if (!(s.posterior.shape > 0.0) || !(s.posterior.rate > 0.0)) {
        throw Error("alpha2 and beta2 must be positive");
      }
    } else {
      LaplacePosterior lp;
      lp.g_s = vector_from(j.at("g_s"), "g_s");
      lp.rho = j.at("rho").get<double>();
      lp.precision = matrix_from<Eigen::MatrixXd>(j.at("precision"), "precision", L + 1);
      lp.inducing = inducing;
      if (lp.g_s.size() != L || lp.precision.rows() != L + 1) {
        throw Error("Laplace mode/precision size does not match the inducing set");
      }
      Eigen::LLT<Eigen::MatrixXd> llt(lp.precision);
      if (llt.info() != Eigen::Success) {
        throw Error("stored Laplace precision is not positive definite");
      }
      s.posterior = ApproximatePosterior::from_laplace(lp);
      s.laplace = std::move(lp);
    }
    return s;
  } catch (const json::exception &e) {
    throw Error(std::string("malformed posterior: ") + e.what());
  }
}

void save_posterior(const fs::path &path, const StoredPosterior &stored) {
  write_json(path, posterior_to_json(stored));
}

StoredPosterior load_posterior(const fs::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open posterior file " + path.string());
  }
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw Error("posterior file " + path.string() + " is not valid JSON");
  }
  return posterior_from_json(j);
}

std::vector<std::vector<double>> read_numeric_csv(const fs::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) {
          numeric = false;
        }
      } catch (const std::exception &) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows.empty() && number == 1) {
        continue;
      }
      throw Error(path.string() + " row " + std::to_string(number) + ": non-numeric value");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(path.string() + " row " + std::to_string(number) + ": expected " +
                  std::to_string(rows.front().size()) + " columns");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json cmd_simulate(const RunConfig &config) {
  config.validate();
  ensure_directory(config.out);
  json meta;
  meta["preset"] = config.simulate_preset;
  meta["seed"] = config.seed;

  if (config.simulate_preset == "adams1d") {
    const Domain domain({{0.0, 50.0}});
    const double scale = config.simulate_scale;
    const double bound = benchmark_max_intensity(scale);
    const PointPattern events = sample_poisson_thinning(
        domain, [scale](const Eigen::Ref<const Eigen::VectorXd> &x) { return benchmark_intensity_1d(x[0], scale); },
        bound, config.seed);
    const PointMatrix grid = evaluation_grid(domain, config.eval_per_dim, config.eval_max_points);
    Eigen::VectorXd truth(grid.rows());
    for (Eigen::Index p = 0; p < grid.rows(); ++p) {
      truth[p] = benchmark_intensity_1d(grid(p, 0), scale);
    }
    save_point_pattern(config.out / "events.csv", events);
    write_grid(config.out / "truth_grid.csv", grid, {"intensity"}, {&truth});
    meta["domain"] = bounds_to_json(domain.bounds());
    meta["scale"] = scale;
    meta["lambda_true"] = bound;
    meta["num_events"] = events.size();
    meta["truth_grid_points"] = grid.rows();
  } else {
    const Domain domain = config.make_domain();
    const SquaredExponential kernel = config.make_kernel();
    // the truth grid is sampled jointly with the candidates, so keep it small
    SgcpOptions options;
    options.extra_points = evaluation_grid(domain, config.eval_per_dim, std::min(config.eval_max_points, 2500));
    const SgcpSample sample = sample_sgcp(domain, kernel, config.simulate_lambda_max, config.seed, options);
    Eigen::VectorXd truth(sample.g_extra.size());
    for (Eigen::Index p = 0; p < truth.size(); ++p) {
      truth[p] = config.simulate_lambda_max * sigmoid(sample.g_extra[p]);
    }
    save_point_pattern(config.out / "events.csv", sample.pattern);
    write_grid(config.out / "truth_grid.csv", options.extra_points, {"intensity"}, {&truth});
    meta["domain"] = bounds_to_json(domain.bounds());
    meta["kernel"] = kernel_to_json(kernel.params());
    meta["lambda_max"] = config.simulate_lambda_max;
    meta["lambda_true"] = config.simulate_lambda_max;
    meta["num_candidates"] = sample.num_candidates;
    meta["num_events"] = sample.pattern.size();
    meta["truth_grid_points"] = options.extra_points.rows();
  }
  write_json(config.out / "meta.json", meta);
  return meta;
}

json cmd_fit(const RunConfig &config, const fs::path &events_path) {
  config.validate();
  const Domain domain = config.make_domain();
  const PointPattern events = load_point_pattern(events_path, domain);
  ensure_directory(config.out);
  const auto start = std::chrono::steady_clock::now();

  StoredPosterior stored;
  stored.method = config.method;
  stored.bounds = domain.bounds();
  std::vector<double> trace;
  json summary;

  if (config.method == Method::vb) {
    const VbResult fit = fit_vb(events, domain, config.make_kernel(), config.vb_config());
    stored.kernel = params_of(*fit.state.kernel);
    stored.posterior = ApproximatePosterior::from_vb(fit.state);
    trace = fit.state.elbo_trace;
    summary["iterations"] = fit.iterations;
    summary["converged"] = fit.converged;
  } else {
    KernelParams params = config.make_kernel().params();
    if (config.laplace_kernel_from_vb) {
      const VbResult pre = fit_vb(events, domain, SquaredExponential(params), config.vb_config());
      params = params_of(*pre.state.kernel);
    }
    const SquaredExponential kernel(params);
    const GammaHyperprior prior = config.prior() ? *config.prior() : init_prior_from_data(events, domain);
    Problem problem(events, domain, draw_integration_grid(domain, config.integration_points, config.integration_seed.value_or(config.seed)),
                    InducingSet::regular_grid(domain, config.inducing_counts()), prior);
    const KernelCache cache = KernelCache::build(problem, kernel);
    const EmResult em = em_fit(problem, cache, config.em_config());
    LaplacePosterior lp = laplace_hessian(em.state, problem, cache);
    stored.kernel = params;
    stored.posterior = ApproximatePosterior::from_laplace(lp);
    stored.laplace = std::move(lp);
    trace = em.state.objective_trace;
    summary["iterations"] = em.iterations;
    summary["converged"] = em.converged;
  }
  const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  save_posterior(config.out / "posterior.json", stored);
  write_trace(config.out / "trace.csv", trace);
  const PointMatrix grid = evaluation_grid(domain, config.eval_per_dim, config.eval_max_points);
  write_intensity(config.out / "intensity_grid.csv", posterior_intensity(stored.posterior, grid));

  summary["method"] = method_name(config.method);
  summary["num_events"] = events.size();
  summary["final_objective"] = trace.empty() ? 0.0 : trace.back();
  summary["mean_lambda"] = stored.posterior.mean_lambda();
  summary["runtime_seconds"] = runtime;
  return summary;
}

json cmd_evaluate(const RunConfig &config, const fs::path &posterior_path, const fs::path &test_path,
                  const std::optional<fs::path> &truth_path, std::optional<Method> expected_method) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const StoredPosterior stored = load_posterior(posterior_path);
  if (expected_method && *expected_method != stored.method) {
    throw Error("posterior was fitted with method " + method_name(stored.method) + ", not " +
                method_name(*expected_method));
  }
  const Domain domain = stored.domain();
  const PointPattern test = load_point_pattern(test_path, domain);
  // independent of the fit grid (seed) and its refresh (seed + 1)
  const IntegrationGrid grid = draw_integration_grid(domain, config.eval_integration_points, config.seed + 2);

  json out;
  out["method"] = method_name(stored.method);
  SampledLikelihoodOptions sampling;
  sampling.num_samples = config.eval_samples;
  sampling.seed = config.seed;
  out["ell_sampled"] = test_likelihood_sampled(stored.posterior, test, grid, sampling);
  if (stored.method == Method::vb) {
    out["ell_taylor"] = test_likelihood_taylor_terms(stored.posterior.gp, stored.posterior.mean_lambda(),
                                                     stored.posterior.var_lambda(), test, grid)
                            .total();
  }
  if (truth_path) {
    const auto rows = read_numeric_csv(*truth_path);
    const int d = domain.dim();
    if (rows.empty() || static_cast<int>(rows.front().size()) != d + 1) {
      throw Error("truth grid " + truth_path->string() + " must have " + std::to_string(d + 1) + " columns");
    }
    PointMatrix points(static_cast<Eigen::Index>(rows.size()), d);
    Eigen::VectorXd truth(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (int i = 0; i < d; ++i) {
        points(static_cast<Eigen::Index>(r), i) = rows[r][static_cast<std::size_t>(i)];
      }
      truth[static_cast<Eigen::Index>(r)] = rows[r][static_cast<std::size_t>(d)];
    }
    double lambda_true = truth.maxCoeff();
    const fs::path meta_path = truth_path->parent_path() / "meta.json";
    if (fs::exists(meta_path)) {
      std::ifstream in(meta_path);
      const json meta = json::parse(in, nullptr, false);
      if (!meta.is_discarded() && meta.contains("lambda_true")) {
        lambda_true = meta["lambda_true"].get<double>();
      }
    }
    const IntensitySummary est = posterior_intensity(stored.posterior, points);
    out["rmse"] = rmse_normalized(est.mean, truth, lambda_true);
  }
  out["runtime_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

void cmd_predict(const RunConfig &config, const fs::path &posterior_path) {
  config.validate();
  const StoredPosterior stored = load_posterior(posterior_path);
  ensure_directory(config.out);
  const PointMatrix grid = evaluation_grid(stored.domain(), config.eval_per_dim, config.eval_max_points);
  write_intensity(config.out / "intensity_grid.csv", posterior_intensity(stored.posterior, grid));
}

} // namespace sgcp
