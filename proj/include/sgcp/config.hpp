#pragma once

#include "sgcp/domain.hpp"
#include "sgcp/kernel.hpp"
#include "sgcp/laplace_em.hpp"
#include "sgcp/vb_inference.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sgcp {

enum class Method { vb, laplace };

Method parse_method(const std::string &name);
std::string method_name(Method method);

/// Settings shared by all commands.
///
/// File grammar: one `key = value` per line; blank lines and lines whose
/// first non-blank character is `#` are ignored; a `#` after the value
/// starts a comment. Values are JSON scalars or arrays (strings may be
/// bare). Later assignments win. Unknown keys are errors.
struct RunConfig {
  std::vector<std::pair<double, double>> domain{{0.0, 50.0}};
  std::optional<double> kernel_theta;                 ///< default 1
  std::optional<std::vector<double>> kernel_lengthscales;  ///< default side/10
  std::vector<int> inducing_per_dim;                  ///< default 50 (1D) or 10 per axis
  int integration_points = 2000;
  std::optional<std::uint64_t> integration_seed;  ///< defaults to the run seed
  std::optional<int> refresh_points;
  std::optional<double> prior_alpha0;
  std::optional<double> prior_beta0;
  Method method = Method::vb;

  int vb_max_iters = 200;
  double vb_rel_tol = 1e-6;
  bool vb_optimize_hypers = true;
  double vb_adam_lr = 1e-2;

  int em_max_iters = 200;
  double em_rel_tol = 1e-8;
  bool laplace_kernel_from_vb = false;

  std::string simulate_preset = "adams1d";
  double simulate_scale = 1.0;
  double simulate_lambda_max = 2.0;

  int eval_per_dim = 200;
  int eval_max_points = 10000;
  int eval_samples = 2000;
  int eval_integration_points = 5000;

  std::uint64_t seed = 0;
  std::filesystem::path out = ".";

  Domain make_domain() const;
  SquaredExponential make_kernel() const;
  std::vector<int> inducing_counts() const;
  VbConfig vb_config() const;
  EmConfig em_config() const;
  std::optional<GammaHyperprior> prior() const;
  void validate() const;
};

/// key → raw value text, in file order.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string &text);

void apply_setting(RunConfig &config, const std::string &key, const std::string &value);

/// Applies every assignment of the file at `path` to `config`.
void load_config_file(RunConfig &config, const std::filesystem::path &path);

/// Applies a `key=value` override.
void apply_override(RunConfig &config, const std::string &assignment);

/// Evaluation grid: `per_dim` closed-grid points per axis, reduced until
/// the total does not exceed `max_points`.
PointMatrix evaluation_grid(const Domain &domain, int per_dim, int max_points);

} // namespace sgcp
