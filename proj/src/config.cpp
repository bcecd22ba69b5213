#include "sgcp/config.hpp"

#include "sgcp/sparse_gp.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace sgcp {

namespace {

using json = nlohmann::json;

std::string trim(const std::string &s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return "";
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

json parse_value(const std::string &text) {
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) {
    // bare words are strings
    return json(text);
  }
  return v;
}

template <typename T> T as(const std::string &key, const json &v) {
  try {
    return v.get<T>();
  } catch (const json::exception &) {
    throw Error("config key '" + key + "': cannot interpret value " + v.dump());
  }
}

bool as_bool(const std::string &key, const json &v) {
  if (v.is_boolean()) {
    return v.get<bool>();
  }
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "true" || s == "yes" || s == "on") {
      return true;
    }
    if (s == "false" || s == "no" || s == "off") {
      return false;
    }
  }
  if (v.is_number_integer()) {
    return v.get<int>() != 0;
  }
  throw Error("config key '" + key + "': expected a boolean, got " + v.dump());
}

int as_int(const std::string &key, const json &v) {
  if (v.is_number_integer()) {
    return v.get<int>();
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == std::floor(d)) {
      return static_cast<int>(d);
    }
  }
  throw Error("config key '" + key + "': expected an integer, got " + v.dump());
}

double as_double(const std::string &key, const json &v) {
  if (v.is_number()) {
    return v.get<double>();
  }
  throw Error("config key '" + key + "': expected a number, got " + v.dump());
}

std::vector<double> as_doubles(const std::string &key, const json &v) {
  if (v.is_number()) {
    return {v.get<double>()};
  }
  if (!v.is_array()) {
    throw Error("config key '" + key + "': expected a number or array, got " + v.dump());
  }
  std::vector<double> out;
  for (const auto &e : v) {
    out.push_back(as_double(key, e));
  }
  return out;
}

std::vector<int> as_ints(const std::string &key, const json &v) {
  if (v.is_number()) {
    return {as_int(key, v)};
  }
  if (!v.is_array()) {
    throw Error("config key '" + key + "': expected an integer or array, got " + v.dump());
  }
  std::vector<int> out;
  for (const auto &e : v) {
    out.push_back(as_int(key, e));
  }
  return out;
}

} // namespace

Method parse_method(const std::string &name) {
  if (name == "vb") {
    return Method::vb;
  }
  if (name == "laplace") {
    return Method::laplace;
  }
  throw Error("unknown method '" + name + "' (expected vb or laplace)");
}

std::string method_name(Method method) { return method == Method::vb ? "vb" : "laplace"; }

Domain RunConfig::make_domain() const { return Domain(domain); }

SquaredExponential RunConfig::make_kernel() const {
  KernelParams p;
  p.theta = kernel_theta.value_or(1.0);
  const int d = static_cast<int>(domain.size());
  p.lengthscales.resize(d);
  if (kernel_lengthscales) {
    if (static_cast<int>(kernel_lengthscales->size()) == 1) {
      p.lengthscales.setConstant((*kernel_lengthscales)[0]);
    } else if (static_cast<int>(kernel_lengthscales->size()) == d) {
      for (int i = 0; i < d; ++i) {
        p.lengthscales[i] = (*kernel_lengthscales)[static_cast<std::size_t>(i)];
      }
    } else {
      throw Error("kernel.lengthscales needs 1 or " + std::to_string(d) + " entries");
    }
  } else {
    for (int i = 0; i < d; ++i) {
      const auto &b = domain[static_cast<std::size_t>(i)];
      p.lengthscales[i] = (b.second - b.first) / 10.0;
    }
  }
  return SquaredExponential(p);
}

std::vector<int> RunConfig::inducing_counts() const {
  const int d = static_cast<int>(domain.size());
  if (inducing_per_dim.empty()) {
    return std::vector<int>(static_cast<std::size_t>(d), d == 1 ? 50 : 10);
  }
  if (inducing_per_dim.size() == 1) {
    return std::vector<int>(static_cast<std::size_t>(d), inducing_per_dim[0]);
  }
  if (static_cast<int>(inducing_per_dim.size()) != d) {
    throw Error("inducing.per_dim needs 1 or " + std::to_string(d) + " entries");
  }
  return inducing_per_dim;
}

std::optional<GammaHyperprior> RunConfig::prior() const {
  if (!prior_alpha0 && !prior_beta0) {
    return std::nullopt;
  }
  if (!prior_alpha0 || !prior_beta0) {
    throw Error("prior.alpha0 and prior.beta0 must be given together");
  }
  GammaHyperprior p{*prior_alpha0, *prior_beta0};
  p.validate();
  return p;
}

VbConfig RunConfig::vb_config() const {
  VbConfig c;
  c.max_iters = vb_max_iters;
  c.rel_tol = vb_rel_tol;
  c.optimize_hypers = vb_optimize_hypers;
  c.adam_lr = vb_adam_lr;
  c.num_integration_points = integration_points;
  c.seed = integration_seed.value_or(seed);
  c.refresh_points = refresh_points;
  c.inducing_per_dim = inducing_counts();
  c.prior = prior();
  return c;
}

EmConfig RunConfig::em_config() const { return EmConfig{em_max_iters, em_rel_tol}; }

void RunConfig::validate() const {
  make_domain();
  make_kernel().params().validate();
  for (int n : inducing_counts()) {
    if (n < 1) {
      throw Error("inducing.per_dim entries must be positive");
    }
  }
  auto positive = [](const char *key, double v) {
    if (!(v > 0.0)) {
      throw Error(std::string(key) + " must be positive");
    }
  };
  positive("integration.num_points", integration_points);
  if (refresh_points) {
    positive("integration.refresh_points", *refresh_points);
  }
  positive("vb.max_iters", vb_max_iters);
  positive("vb.rel_tol", vb_rel_tol);
  positive("vb.adam_lr", vb_adam_lr);
  positive("em.max_iters", em_max_iters);
  positive("em.rel_tol", em_rel_tol);
  positive("simulate.scale", simulate_scale);
  positive("eval.per_dim", eval_per_dim);
  positive("eval.max_points", eval_max_points);
  positive("eval.samples", eval_samples);
  positive("eval.integration_points", eval_integration_points);
  if (simulate_lambda_max < 0.0) {
    throw Error("simulate.lambda_max must be nonnegative");
  }
  if (simulate_preset != "adams1d" && simulate_preset != "sgcp") {
    throw Error("simulate.preset must be adams1d or sgcp");
  }
  prior();
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string &text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    // a '#' outside a JSON string starts a comment
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') {
        quoted = !quoted;
      } else if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw Error("config line " + std::to_string(number) + ": empty key or value");
    }
    out.emplace_back(key, value);
  }
  return out;
}

void apply_setting(RunConfig &c, const std::string &key, const std::string &text) {
  const json v = parse_value(text);
  using Setter = std::function<void(const json &)>;
  const std::map<std::string, Setter> setters{
      {"bounds",
       [&](const json &j) {
         if (!j.is_array() || j.empty()) {
           throw Error("config key 'bounds': expected [[lo, hi], ...]");
         }
         std::vector<std::pair<double, double>> bounds;
         for (const auto &b : j) {
           if (!b.is_array() || b.size() != 2) {
             throw Error("config key 'bounds': each axis must be [lo, hi]");
           }
           bounds.emplace_back(as_double(key, b[0]), as_double(key, b[1]));
         }
         c.domain = bounds;
       }},
      {"kernel.theta", [&](const json &j) { c.kernel_theta = as_double(key, j); }},
      {"kernel.lengthscales", [&](const json &j) { c.kernel_lengthscales = as_doubles(key, j); }},
      {"inducing.per_dim", [&](const json &j) { c.inducing_per_dim = as_ints(key, j); }},
      {"integration.num_points", [&](const json &j) { c.integration_points = as_int(key, j); }},
      {"integration.seed",
       [&](const json &j) { c.integration_seed = static_cast<std::uint64_t>(as<std::int64_t>(key, j)); }},
      {"integration.refresh_points", [&](const json &j) { c.refresh_points = as_int(key, j); }},
      {"prior.alpha0", [&](const json &j) { c.prior_alpha0 = as_double(key, j); }},
      {"prior.beta0", [&](const json &j) { c.prior_beta0 = as_double(key, j); }},
      {"method", [&](const json &j) { c.method = parse_method(as<std::string>(key, j)); }},
      {"vb.max_iters", [&](const json &j) { c.vb_max_iters = as_int(key, j); }},
      {"vb.rel_tol", [&](const json &j) { c.vb_rel_tol = as_double(key, j); }},
      {"vb.optimize_hypers", [&](const json &j) { c.vb_optimize_hypers = as_bool(key, j); }},
      {"vb.adam_lr", [&](const json &j) { c.vb_adam_lr = as_double(key, j); }},
      {"em.max_iters", [&](const json &j) { c.em_max_iters = as_int(key, j); }},
      {"em.rel_tol", [&](const json &j) { c.em_rel_tol = as_double(key, j); }},
      {"laplace.kernel_from_vb", [&](const json &j) { c.laplace_kernel_from_vb = as_bool(key, j); }},
      {"simulate.preset", [&](const json &j) { c.simulate_preset = as<std::string>(key, j); }},
      {"simulate.scale", [&](const json &j) { c.simulate_scale = as_double(key, j); }},
      {"simulate.lambda_max", [&](const json &j) { c.simulate_lambda_max = as_double(key, j); }},
      {"eval.per_dim", [&](const json &j) { c.eval_per_dim = as_int(key, j); }},
      {"eval.max_points", [&](const json &j) { c.eval_max_points = as_int(key, j); }},
      {"eval.samples", [&](const json &j) { c.eval_samples = as_int(key, j); }},
      {"eval.integration_points", [&](const json &j) { c.eval_integration_points = as_int(key, j); }},
      {"out", [&](const json &j) { c.out = as<std::string>(key, j); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) {
    throw Error("unknown config key '" + key + "'");
  }
  it->second(v);
}

void load_config_file(RunConfig &config, const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open config file " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  for (const auto &[key, value] : parse_config_text(buffer.str())) {
    try {
      apply_setting(config, key, value);
    } catch (const Error &e) {
      throw Error(path.string() + ": " + e.what());
    }
  }
}

void apply_override(RunConfig &config, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw Error("override '" + assignment + "' is not of the form key=value");
  }
  apply_setting(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

PointMatrix evaluation_grid(const Domain &domain, int per_dim, int max_points) {
  int n = per_dim;
  while (n > 1 && std::pow(static_cast<double>(n), domain.dim()) > max_points) {
    --n;
  }
  return InducingSet::regular_grid(domain, std::vector<int>(static_cast<std::size_t>(domain.dim()), n));
}

} // namespace sgcp
