#pragma once

#include "sgcp/domain.hpp"
#include "sgcp/kernel.hpp"

#include <memory>
#include <vector>

namespace sgcp {

/// Inducing locations together with the factorized kernel matrix K_s.
class InducingSet {
public:
  /// Factorizes K_s, escalating jitter per `policy`.
  InducingSet(PointMatrix locations, const Kernel &kernel, const JitterPolicy &policy = {});

  /// Uses exactly `relative_jitter`·k(x,x) on the diagonal; throws if the
  /// factorization fails. Keeps K_s a smooth function of the kernel
  /// parameters, which hyperparameter gradients rely on.
  static InducingSet with_fixed_jitter(PointMatrix locations, const Kernel &kernel,
                                       double relative_jitter);

  /// Evenly spaced closed grid with `per_dim[i]` points along axis i,
  /// endpoints included. A single point sits at the axis midpoint.
  static PointMatrix regular_grid(const Domain &domain, const std::vector<int> &per_dim);

  int size() const { return static_cast<int>(locations_.rows()); }
  const PointMatrix &locations() const { return locations_; }
  const Kernel &kernel() const { return *kernel_; }
  const Eigen::MatrixXd &K() const { return gram_.matrix; }
  const Eigen::LLT<Eigen::MatrixXd> &chol() const { return gram_.llt; }
  double jitter() const { return gram_.jitter; }
  double relative_jitter() const { return gram_.jitter / kernel_->variance(); }

  /// k_s(x): covariances between x and every inducing location.
  Eigen::VectorXd cross_cov(const Eigen::Ref<const Eigen::VectorXd> &x) const;
  /// L×P matrix with column p = k_s(points.row(p)).
  Eigen::MatrixXd cross_cov(const PointMatrix &points) const;

  template <typename Rhs> auto solve(const Rhs &rhs) const { return gram_.llt.solve(rhs); }
  double log_det_K() const;

private:
  InducingSet(PointMatrix locations, std::shared_ptr<const Kernel> kernel, FactorizedGram gram);

  PointMatrix locations_;
  std::shared_ptr<const Kernel> kernel_;
  FactorizedGram gram_;
};

/// Gaussian q(g_s) = N(mu, Sigma) over the inducing values.
struct SparsePosterior {
  Eigen::VectorXd mu;
  Eigen::MatrixXd Sigma;
  std::shared_ptr<const InducingSet> inducing;

  /// The GP prior itself: mu = 0, Sigma = K_s.
  static SparsePosterior prior(std::shared_ptr<const InducingSet> inducing);
};

/// κ(x) = K_s⁻¹ k_s(x).
Eigen::VectorXd conditional_weights(const Eigen::Ref<const Eigen::VectorXd> &x,
                                    const InducingSet &inducing);
double predictive_mean(const Eigen::Ref<const Eigen::VectorXd> &x, const SparsePosterior &posterior);
/// k(x,x) − κᵀ(K_s − Σ)κ, clamped at 1e-12.
double predictive_var(const Eigen::Ref<const Eigen::VectorXd> &x, const SparsePosterior &posterior);
/// k(x,x) − k_sᵀK_s⁻¹k_s, clamped at 0.
double conditional_prior_var(const Eigen::Ref<const Eigen::VectorXd> &x, const InducingSet &inducing);
/// E[g(x)²] = mean² + var.
double second_moment(const Eigen::Ref<const Eigen::VectorXd> &x, const SparsePosterior &posterior);

/// Everything about a fixed point set that depends on the kernel but not
/// on the posterior. Columns index points.
struct PointProjection {
  Eigen::MatrixXd cross;            ///< k_s(x_p), L×P
  Eigen::MatrixXd kappa;            ///< K_s⁻¹ k_s(x_p), L×P
  Eigen::VectorXd conditional_var;  ///< k̃(x_p, x_p), not clamped

  int size() const { return static_cast<int>(cross.cols()); }
};

PointProjection project_points(const PointMatrix &points, const InducingSet &inducing);

struct Marginals {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

/// Predictive mean and variance (clamped at 1e-12) at projected points.
Marginals marginals(const PointProjection &proj, const Eigen::VectorXd &mu, const Eigen::MatrixXd &Sigma);

inline constexpr double kMinVariance = 1e-12;

} // namespace sgcp
