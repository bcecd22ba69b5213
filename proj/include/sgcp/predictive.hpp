#pragma once

#include "sgcp/integration.hpp"
#include "sgcp/laplace_em.hpp"
#include "sgcp/vb_inference.hpp"

#include <cstdint>
#include <vector>

namespace sgcp {

/// Quadrature rule for expectations under N(0, 1): E[f(Z)] ≈ Σ w_i f(z_i).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;  ///< sum to one
};

/// Golub–Welsch construction; rules are cached per order.
const GaussHermiteRule &gauss_hermite(int order = 32);

/// E[σ(g)] for g ~ N(mean, var).
double expected_sigmoid(double mean, double var, int order = 32);
/// E[σ(g)²] for g ~ N(mean, var).
double expected_sigmoid_squared(double mean, double var, int order = 32);

enum class LambdaKind { gamma, log_normal, point };

/// Approximate posterior over (g_s, λ) in a form both engines can produce.
/// For the Laplace engine λ = e^ρ with (g_s, ρ) jointly Gaussian; the
/// cross covariance is kept so that joint draws respect it.
struct ApproximatePosterior {
  SparsePosterior gp;
  LambdaKind kind = LambdaKind::gamma;
  double shape = 0.0;       ///< gamma
  double rate = 0.0;        ///< gamma
  double log_mean = 0.0;    ///< log-normal: mean of ρ; point: ln λ
  double log_var = 0.0;     ///< log-normal: variance of ρ
  Eigen::VectorXd cross;    ///< Cov(g_s, ρ); empty when independent

  double mean_lambda() const;
  double var_lambda() const;

  static ApproximatePosterior from_vb(const VariationalState &state);
  static ApproximatePosterior from_laplace(const LaplacePosterior &laplace);
  /// Fixed λ and the given Gaussian over g_s.
  static ApproximatePosterior with_fixed_lambda(SparsePosterior gp, double lambda);
};

struct IntensitySummary {
  PointMatrix points;
  Eigen::VectorXd mean;  ///< E[λσ(g(x))], treating λ and g(x) as independent
  Eigen::VectorXd sd;    ///< standard deviation of λσ(g(x)) under the same assumption
};

IntensitySummary posterior_intensity(const ApproximatePosterior &posterior, const PointMatrix &points,
                                     int quadrature_order = 32);

/// ln L(D | Λ) = Σ_n ln Λ(x_n) − ∫Λ, with the integral on `grid`.
double poisson_log_likelihood(const Eigen::VectorXd &intensity_at_events,
                              const Eigen::VectorXd &intensity_at_grid, const IntegrationGrid &grid);

/// ln((1/S) Σ exp v_s), computed stably.
double log_mean_exp(const std::vector<double> &values);

struct SampledLikelihoodOptions {
  int num_samples = 2000;
  std::uint64_t seed = 0;
  /// Add independent N(0, k̃(x)) conditional noise at every point; turn off
  /// to evaluate the sparse model with g = κᵀg_s exactly.
  bool conditional_noise = true;
};

/// Log of the posterior mean test likelihood, by joint posterior draws of
/// (λ, g at test and integration points).
double test_likelihood_sampled(const ApproximatePosterior &posterior, const PointPattern &test,
                               const IntegrationGrid &grid, const SampledLikelihoodOptions &options = {});

/// Per-sample log-likelihoods behind test_likelihood_sampled.
std::vector<double> test_likelihood_samples(const ApproximatePosterior &posterior, const PointPattern &test,
                                            const IntegrationGrid &grid,
                                            const SampledLikelihoodOptions &options = {});

/// Breakdown of the second-order expansion of the log expected test
/// likelihood around Λ_Q(x) = E[λ]σ(E[g(x)]).
struct TaylorLikelihood {
  double plug_in = 0.0;               ///< ln L(test | Λ_Q)
  double inducing_correction = 0.0;   ///< ½tr(H_g Σ) over g_s
  double conditional_correction = 0.0;///< ½Σ_p ∂²ℓ/∂g(x_p)²·k̃(x_p)
  double lambda_correction = 0.0;     ///< ½·(−N/E[λ]²)·Var(λ)
  double total() const { return plug_in + inducing_correction + conditional_correction + lambda_correction; }
};

TaylorLikelihood test_likelihood_taylor_terms(const SparsePosterior &gp, double mean_lambda, double var_lambda,
                                              const PointPattern &test, const IntegrationGrid &grid);

/// Taylor approximation for a variational fit.
double test_likelihood_taylor(const VariationalState &state, const PointPattern &test, const IntegrationGrid &grid);

/// √(mean (estimate − truth)²)/lambda_true.
double rmse_normalized(const Eigen::VectorXd &estimate, const Eigen::VectorXd &truth, double lambda_true);

} // namespace sgcp
