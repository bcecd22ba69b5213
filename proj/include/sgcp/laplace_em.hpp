#pragma once

#include "sgcp/model.hpp"

#include <vector>

namespace sgcp {

/// EM iterate for the sparse MAP estimate of (g_s, λ), together with the
/// E-step quantities computed from it.
struct EmState {
  Eigen::VectorXd g_s;
  double lambda = 0.0;
  Eigen::VectorXd c_tilde_data;      ///< |g(x_n)|
  Eigen::VectorXd c_tilde_int;       ///< |g(x_r)|
  Eigen::VectorXd Lambda_tilde_int;  ///< λσ(−g(x_r))
  std::vector<double> objective_trace;
};

/// Gaussian approximation of the posterior over (g_s, ρ = ln λ).
struct LaplacePosterior {
  Eigen::VectorXd g_s;
  double rho = 0.0;
  Eigen::MatrixXd precision;  ///< negative Hessian at the mode, (L+1)×(L+1), ρ last
  std::shared_ptr<const InducingSet> inducing;

  /// Covariance of (g_s, ρ), from the Cholesky factor of the precision.
  Eigen::MatrixXd covariance() const;
};

/// Posterior of the latent marks given (g_s, λ)^old; fills c̃ and Λ̃ in
/// `state` and returns the weights Ã, B̃ of the resulting Gaussian model.
Integrands e_step(EmState &state, const KernelCache &cache);

/// Maximizer of the sparse Q-function in g_s: the mean of the Gaussian
/// model with weights Ã, B̃.
Eigen::VectorXd m_step_g(const Integrands &weights, const KernelCache &cache, const IntegrationGrid &grid);

/// λ = (N + C̃ + α₀ − 1)/(β₀ + |X|) with C̃ = ∫Λ̃ the expected latent count.
double m_step_lambda(int num_events, const Eigen::VectorXd &Lambda_tilde_int, const IntegrationGrid &grid,
                     const GammaHyperprior &prior, double volume);

/// J(g_s, λ) = ln L(D | κᵀg_s, λ) + (α₀−1)ln λ − β₀λ − ½g_sᵀK_s⁻¹g_s.
double penalized_objective(const Eigen::VectorXd &g_s, double lambda, const Problem &problem,
                           const KernelCache &cache);

/// Gradient of J with respect to (g_s, ρ = ln λ), ρ last.
Eigen::VectorXd penalized_objective_gradient(const Eigen::VectorXd &g_s, double lambda,
                                             const Problem &problem, const KernelCache &cache);

/// Log posterior density in (g_s, ρ) up to a constant, including the
/// Jacobian of λ = e^ρ: J(g_s, e^ρ) + ρ.
double log_posterior_rho(const Eigen::VectorXd &g_s, double rho, const Problem &problem,
                         const KernelCache &cache);

/// Analytic Hessian of log_posterior_rho.
Eigen::MatrixXd log_posterior_hessian(const Eigen::VectorXd &g_s, double rho, const Problem &problem,
                                      const KernelCache &cache);

/// g_s-Hessian of ln L^s(events | κᵀg_s, λ) with the integral taken on
/// `integration` with weight `weight`. No prior term.
Eigen::MatrixXd sparse_loglik_hessian_g(const PointProjection &events, const PointProjection &integration,
                                        const Eigen::VectorXd &g_s, double lambda, double weight);

struct EmConfig {
  int max_iters = 200;
  double rel_tol = 1e-8;
};

struct EmResult {
  EmState state;
  int iterations = 0;
  bool converged = false;
  double runtime_seconds = 0.0;
};

/// Initial iterate: g_s = 0 and λ = 2N/|X| (prior mean when N = 0).
EmState initial_em_state(const Problem &problem, const KernelCache &cache);

/// Alternates e_step, m_step_g and m_step_lambda until J changes by less
/// than rel_tol·|J|.
EmResult em_fit(const Problem &problem, const KernelCache &cache, const EmConfig &config);

/// Precision = −Hessian of log_posterior_rho at the EM mode. Throws if it
/// is not positive definite.
LaplacePosterior laplace_hessian(const EmState &state, const Problem &problem, const KernelCache &cache);

} // namespace sgcp
