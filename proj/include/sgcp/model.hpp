#pragma once

#include "sgcp/domain.hpp"
#include "sgcp/integration.hpp"
#include "sgcp/kernel.hpp"
#include "sgcp/sparse_gp.hpp"

#include <memory>

namespace sgcp {

/// Gamma(α₀, β₀) prior on the maximal intensity λ (shape, rate).
struct GammaHyperprior {
  double alpha0 = 4.0;
  double beta0 = 1.0;

  void validate() const;
};

/// Prior with mean 2λ̂ and standard deviation λ̂, where λ̂ = N/|X| is the
/// homogeneous rate estimate. With no events λ̂ falls back to 1/|X|.
GammaHyperprior init_prior_from_data(const PointPattern &pattern, const Domain &domain);

/// Everything that stays fixed while a posterior is fitted: observations,
/// the Monte-Carlo integration points, inducing locations and the λ prior.
struct Problem {
  Problem(PointPattern data, Domain domain, IntegrationGrid grid, PointMatrix inducing_locations,
          GammaHyperprior prior);

  PointPattern data;
  Domain domain;
  IntegrationGrid grid;
  PointMatrix inducing_locations;
  GammaHyperprior prior;

  int num_data() const { return data.size(); }
  double volume() const { return domain.volume(); }
};

/// Kernel-dependent quantities for a Problem. Rebuilt whenever the kernel
/// hyperparameters change.
struct KernelCache {
  std::shared_ptr<const InducingSet> inducing;
  PointProjection data;
  PointProjection integration;

  static KernelCache build(const Problem &problem, const Kernel &kernel, const JitterPolicy &policy = {});
  static KernelCache build_fixed_jitter(const Problem &problem, const Kernel &kernel,
                                        double relative_jitter);
  static KernelCache from_inducing(const Problem &problem, std::shared_ptr<const InducingSet> inducing);
};

/// Coefficients of an effective Gaussian log-likelihood
///   U(g) = −½∫A(x)g(x)²dx + ∫B(x)g(x)dx,
/// with A and B given as point masses at the events and as values at the
/// integration points (the latter carry the Monte-Carlo weight downstream).
struct Integrands {
  Eigen::VectorXd a_data;
  Eigen::VectorXd b_data;
  Eigen::VectorXd a_int;
  Eigen::VectorXd b_int;
};

struct GaussianFactor {
  Eigen::VectorXd mu;
  Eigen::MatrixXd Sigma;
};

/// Posterior over inducing values for the sparse Gaussian model defined by
/// `terms`: Σ = [K⁻¹MK⁻¹ + K⁻¹]⁻¹, μ = ΣK⁻¹v with M = ∫A k_s k_sᵀ and
/// v = ∫B k_s. Computed as Σ = K(M+K)⁻¹K, μ = K(M+K)⁻¹v.
GaussianFactor sparse_gaussian_update(const Integrands &terms, const KernelCache &cache,
                                      double weight, bool with_covariance = true);

/// Expected value of ln λ and λ under Gamma(α, β).
double gamma_mean_log(double alpha, double beta);

} // namespace sgcp
