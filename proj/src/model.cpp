#include "sgcp/model.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <spdlog/spdlog.h>

#include <cmath>

namespace sgcp {

void GammaHyperprior::validate() const {
  if (!(alpha0 > 0.0) || !(beta0 > 0.0)) {
    throw Error("Gamma hyperprior parameters must be positive");
  }
}

GammaHyperprior init_prior_from_data(const PointPattern &pattern, const Domain &domain) {
  const double volume = domain.volume();
  double rate = pattern.size() / volume;
  if (pattern.empty()) {
    spdlog::warn("no events; Gamma prior uses rate 1/|X| in place of N/|X|");
    rate = 1.0 / volume;
  }
  // mean α/β = 2·rate, sd √α/β = rate
  return GammaHyperprior{4.0, 2.0 / rate};
}

Problem::Problem(PointPattern data_, Domain domain_, IntegrationGrid grid_, PointMatrix inducing_locations_,
                 GammaHyperprior prior_)
    : data(std::move(data_)), domain(std::move(domain_)), grid(std::move(grid_)),
      inducing_locations(std::move(inducing_locations_)), prior(prior_) {
  prior.validate();
  if (data.dim() != domain.dim() || grid.points.cols() != domain.dim() ||
      inducing_locations.cols() != domain.dim()) {
    throw Error("problem components disagree on dimension");
  }
}

KernelCache KernelCache::from_inducing(const Problem &problem, std::shared_ptr<const InducingSet> inducing) {
  KernelCache cache;
  cache.data = project_points(problem.data.points(), *inducing);
  cache.integration = project_points(problem.grid.points, *inducing);
  cache.inducing = std::move(inducing);
  return cache;
}

KernelCache KernelCache::build(const Problem &problem, const Kernel &kernel, const JitterPolicy &policy) {
  return from_inducing(problem, std::make_shared<const InducingSet>(problem.inducing_locations, kernel, policy));
}

KernelCache KernelCache::build_fixed_jitter(const Problem &problem, const Kernel &kernel,
                                            double relative_jitter) {
  return from_inducing(problem, std::make_shared<const InducingSet>(InducingSet::with_fixed_jitter(
                                    problem.inducing_locations, kernel, relative_jitter)));
}

GaussianFactor sparse_gaussian_update(const Integrands &terms, const KernelCache &cache, double weight,
                                      bool with_covariance) {
  const InducingSet &ind = *cache.inducing;
  const Eigen::MatrixXd &Kd = cache.data.cross;
  const Eigen::MatrixXd &Ki = cache.integration.cross;

  Eigen::MatrixXd M = Kd * terms.a_data.asDiagonal() * Kd.transpose();
  M.noalias() += weight * (Ki * terms.a_int.asDiagonal() * Ki.transpose());
  Eigen::VectorXd v = Kd * terms.b_data;
  v.noalias() += weight * (Ki * terms.b_int);

  Eigen::MatrixXd inner = M + ind.K();
  inner = 0.5 * (inner + inner.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(inner);
  if (llt.info() != Eigen::Success) {
    throw Error("sparse Gaussian update: K + M is not positive definite (min diag " +
                std::to_string(inner.diagonal().minCoeff()) + ", min A " +
                std::to_string(std::min(terms.a_data.size() ? terms.a_data.minCoeff() : 0.0,
                                        terms.a_int.size() ? terms.a_int.minCoeff() : 0.0)) +
                ")");
  }
  GaussianFactor out;
  out.mu = ind.K() * llt.solve(v);
  if (with_covariance) {
    // Σ = (L⁻¹K)ᵀ(L⁻¹K), symmetric by construction
    const Eigen::MatrixXd half = llt.matrixL().solve(ind.K());
    out.Sigma = half.transpose() * half;
  }
  return out;
}

double gamma_mean_log(double alpha, double beta) { return boost::math::digamma(alpha) - std::log(beta); }

} // namespace sgcp
