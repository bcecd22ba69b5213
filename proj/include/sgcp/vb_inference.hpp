#pragma once

#include "sgcp/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace sgcp {

/// Mean-field iterate. q₁ holds tilted Pólya–Gamma marks at the events
/// (tilt c1_data) and a marked Poisson process for the latent points with
/// ω-marginal intensity Lambda1_int at the integration points (tilt c1_int).
/// q₂ is the sparse Gaussian `posterior` times Gamma(alpha2, beta2) for λ.
struct VariationalState {
  Eigen::VectorXd c1_data;
  Eigen::VectorXd c1_int;
  Eigen::VectorXd mean_g_data;
  Eigen::VectorXd mean_g_int;
  Eigen::VectorXd Lambda1_int;
  double lambda1 = 0.0;  ///< exp(E[ln λ])
  double alpha2 = 0.0;
  double beta2 = 0.0;
  SparsePosterior posterior;
  std::shared_ptr<const Kernel> kernel;
  std::vector<double> elbo_trace;

  double mean_lambda() const { return alpha2 / beta2; }
  double mean_log_lambda() const;
};

/// Prior initialization: μ = 0, Σ = K_s, Gamma at (α₀, β₀). q₁ is left
/// empty until the first update_q1.
VariationalState initial_state(const Problem &problem, const KernelCache &cache, const Kernel &kernel);

/// Optimal q₁ given q₂: c₁ = √E[g²] and Λ₁(x) = λ₁σ(−c₁)exp((c₁ − E[g])/2).
void update_q1(VariationalState &state, const KernelCache &cache);

/// A and B of the effective GP log-likelihood under the current q₁.
Integrands compute_integrands(const VariationalState &state);

/// Optimal sparse Gaussian factor of q₂.
SparsePosterior update_q2_gp(const Integrands &integrands, const KernelCache &cache,
                             const IntegrationGrid &grid);

/// Optimal Gamma factor of q₂: α₂ = N + ∫Λ₁ + α₀, β₂ = β₀ + |X|. Also
/// refreshes λ₁.
void update_q2_lambda(VariationalState &state, const Problem &problem);

/// Lower bound split into its parts; `total()` is the ELBO.
struct ElboTerms {
  double latent = 0.0;     ///< latent marked Poisson process incl. its KL
  double data = 0.0;       ///< events incl. the Pólya–Gamma mark KL
  double gp_kl = 0.0;      ///< −KL(q(g_s) ‖ prior)
  double gamma_kl = 0.0;   ///< −KL(q(λ) ‖ Gamma(α₀, β₀))

  double total() const { return latent + data + gp_kl + gamma_kl; }
};

ElboTerms elbo_terms(const VariationalState &state, const Problem &problem, const KernelCache &cache);
double elbo(const VariationalState &state, const Problem &problem, const KernelCache &cache);

/// ∂ELBO/∂(log kernel parameters) with q held fixed. The inducing jitter
/// is treated as a fixed multiple of the kernel variance.
Eigen::VectorXd elbo_grad_kernel(const VariationalState &state, const Problem &problem,
                                 const KernelCache &cache);

struct AdamState {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int step = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
};

/// One bias-corrected ADAM ascent step on `params` along `grad`.
Eigen::VectorXd adam_step(const Eigen::VectorXd &params, const Eigen::VectorXd &grad, AdamState &adam);

struct VbConfig {
  int max_iters = 200;
  double rel_tol = 1e-6;
  bool optimize_hypers = true;
  double adam_lr = 1e-2;
  int num_integration_points = 2000;
  std::uint64_t seed = 0;
  /// Optional second phase: redraw this many integration points after the
  /// first phase finishes and continue iterating.
  std::optional<int> refresh_points;
  std::vector<int> inducing_per_dim;
  std::optional<GammaHyperprior> prior;
  JitterPolicy jitter;
};

struct VbResult {
  VariationalState state;
  Problem problem;
  KernelCache cache;
  std::vector<Eigen::VectorXd> kernel_trace;  ///< log parameters per sweep
  int iterations = 0;
  bool converged = false;
  double runtime_seconds = 0.0;
};

/// Coordinate ascent q₁ → q₂(GP) → q₂(λ) → optional ADAM step, until the
/// relative ELBO change drops below rel_tol or max_iters is reached.
VbResult fit_vb(const PointPattern &pattern, const Domain &domain, const Kernel &kernel,
                const VbConfig &config);

/// Same loop on a prepared problem; used when the integration grid or the
/// inducing locations are supplied by the caller.
VbResult fit_vb(Problem problem, const Kernel &kernel, const VbConfig &config);

} // namespace sgcp
