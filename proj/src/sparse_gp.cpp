#include "sgcp/sparse_gp.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <sstream>

namespace sgcp {

InducingSet::InducingSet(PointMatrix locations, std::shared_ptr<const Kernel> kernel, FactorizedGram gram)
    : locations_(std::move(locations)), kernel_(std::move(kernel)), gram_(std::move(gram)) {}

InducingSet::InducingSet(PointMatrix locations, const Kernel &kernel, const JitterPolicy &policy)
    : locations_(std::move(locations)), kernel_(kernel.clone()) {
  if (locations_.rows() == 0) {
    throw Error("inducing set is empty");
  }
  if (locations_.cols() != kernel.dim()) {
    throw Error("inducing locations do not match kernel dimension");
  }
  gram_ = factorize_gram(locations_, *kernel_, policy);
}

InducingSet InducingSet::with_fixed_jitter(PointMatrix locations, const Kernel &kernel,
                                           double relative_jitter) {
  const JitterPolicy exact{relative_jitter, 10.0, relative_jitter};
  auto gram = factorize_gram(locations, kernel, exact);
  return InducingSet(std::move(locations), kernel.clone(), std::move(gram));
}

PointMatrix InducingSet::regular_grid(const Domain &domain, const std::vector<int> &per_dim) {
  if (static_cast<int>(per_dim.size()) != domain.dim()) {
    throw Error("inducing grid needs one count per dimension");
  }
  Eigen::Index total = 1;
  for (int n : per_dim) {
    if (n < 1) {
      throw Error("inducing grid counts must be positive");
    }
    total *= n;
  }
  PointMatrix grid(total, domain.dim());
  for (Eigen::Index idx = 0; idx < total; ++idx) {
    Eigen::Index rem = idx;
    // last axis varies fastest
    for (int i = domain.dim() - 1; i >= 0; --i) {
      const int n = per_dim[static_cast<std::size_t>(i)];
      const auto k = static_cast<int>(rem % n);
      rem /= n;
      grid(idx, i) = n == 1 ? domain.lower(i) + 0.5 * domain.side(i)
                            : domain.lower(i) + domain.side(i) * k / (n - 1);
    }
  }
  return grid;
}

Eigen::VectorXd InducingSet::cross_cov(const Eigen::Ref<const Eigen::VectorXd> &x) const {
  Eigen::VectorXd k(size());
  for (int l = 0; l < size(); ++l) {
    k[l] = (*kernel_)(x, locations_.row(l).transpose());
  }
  return k;
}

Eigen::MatrixXd InducingSet::cross_cov(const PointMatrix &points) const {
  return cross_covariance(locations_, points, *kernel_);
}

double InducingSet::log_det_K() const {
  return 2.0 * gram_.llt.matrixLLT().diagonal().array().log().sum();
}

SparsePosterior SparsePosterior::prior(std::shared_ptr<const InducingSet> inducing) {
  SparsePosterior p;
  p.mu = Eigen::VectorXd::Zero(inducing->size());
  p.Sigma = inducing->K();
  p.inducing = std::move(inducing);
  return p;
}

Eigen::VectorXd conditional_weights(const Eigen::Ref<const Eigen::VectorXd> &x,
                                    const InducingSet &inducing) {
  return inducing.solve(inducing.cross_cov(x));
}

double predictive_mean(const Eigen::Ref<const Eigen::VectorXd> &x, const SparsePosterior &posterior) {
  return conditional_weights(x, *posterior.inducing).dot(posterior.mu);
}

double predictive_var(const Eigen::Ref<const Eigen::VectorXd> &x, const SparsePosterior &posterior) {
  const InducingSet &ind = *posterior.inducing;
  const Eigen::VectorXd ks = ind.cross_cov(x);
  const Eigen::VectorXd kappa = ind.solve(ks);
  const double v = ind.kernel()(x, x) - kappa.dot(ks) + kappa.dot(posterior.Sigma * kappa);
  if (v < kMinVariance) {
    if (v < -1e-8 * ind.kernel().variance()) {
      spdlog::warn("predictive variance {:.3g} clamped to {:.0g}", v, kMinVariance);
    }
    return kMinVariance;
  }
  return v;
}

double conditional_prior_var(const Eigen::Ref<const Eigen::VectorXd> &x, const InducingSet &inducing) {
  const Eigen::VectorXd ks = inducing.cross_cov(x);
  const double v = inducing.kernel()(x, x) - ks.dot(inducing.solve(ks));
  return std::max(v, 0.0);
}

double second_moment(const Eigen::Ref<const Eigen::VectorXd> &x, const SparsePosterior &posterior) {
  const double m = predictive_mean(x, posterior);
  return m * m + predictive_var(x, posterior);
}

PointProjection project_points(const PointMatrix &points, const InducingSet &inducing) {
  PointProjection proj;
  proj.cross = inducing.cross_cov(points);
  proj.kappa = inducing.solve(proj.cross);
  const double kxx = inducing.kernel().variance();
  proj.conditional_var =
      (kxx - (proj.cross.array() * proj.kappa.array()).colwise().sum()).transpose();
  return proj;
}

Marginals marginals(const PointProjection &proj, const Eigen::VectorXd &mu, const Eigen::MatrixXd &Sigma) {
  Marginals m;
  m.mean = proj.kappa.transpose() * mu;
  const Eigen::MatrixXd sk = Sigma * proj.kappa;
  m.var = proj.conditional_var + (proj.kappa.array() * sk.array()).colwise().sum().transpose().matrix();
  int clamped = 0;
  double worst = 0.0;
  for (Eigen::Index p = 0; p < m.var.size(); ++p) {
    if (m.var[p] < kMinVariance) {
      worst = std::min(worst, m.var[p]);
      m.var[p] = kMinVariance;
      ++clamped;
    }
  }
  if (worst < -1e-8) {
    spdlog::warn("{} predictive variances clamped to {:.0g} (most negative {:.3g})", clamped,
                 kMinVariance, worst);
  }
  return m;
}

} // namespace sgcp
