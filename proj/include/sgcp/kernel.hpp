#pragma once

#include "sgcp/domain.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <memory>
#include <vector>

namespace sgcp {

/// Hyperparameters of the squared-exponential kernel: output variance
/// `theta` and one lengthscale per input dimension.
struct KernelParams {
  double theta = 1.0;
  Eigen::VectorXd lengthscales;

  int dim() const { return static_cast<int>(lengthscales.size()); }
  void validate() const;
};

/// Stationary covariance function with a log-parameterised hyperparameter
/// vector. Hyperparameter ascent works entirely through this interface.
class Kernel {
public:
  virtual ~Kernel() = default;

  virtual int dim() const = 0;
  virtual double operator()(const Eigen::Ref<const Eigen::VectorXd> &a,
                            const Eigen::Ref<const Eigen::VectorXd> &b) const = 0;
  /// k(x, x). Constant for stationary kernels.
  virtual double variance() const = 0;

  virtual int num_params() const = 0;
  virtual Eigen::VectorXd log_params() const = 0;
  virtual std::unique_ptr<Kernel> with_log_params(const Eigen::VectorXd &log_params) const = 0;
  virtual std::unique_ptr<Kernel> clone() const = 0;

  /// d k(a, b) / d log_params, written to `out` (size num_params()).
  virtual void log_param_gradient(const Eigen::Ref<const Eigen::VectorXd> &a,
                                  const Eigen::Ref<const Eigen::VectorXd> &b,
                                  Eigen::Ref<Eigen::VectorXd> out) const = 0;
  /// d k(x, x) / d log_params.
  virtual Eigen::VectorXd log_param_gradient_diag() const = 0;
};

class SquaredExponential final : public Kernel {
public:
  explicit SquaredExponential(KernelParams params);

  const KernelParams &params() const { return params_; }

  int dim() const override { return params_.dim(); }
  double operator()(const Eigen::Ref<const Eigen::VectorXd> &a,
                    const Eigen::Ref<const Eigen::VectorXd> &b) const override;
  double variance() const override { return params_.theta; }

  int num_params() const override { return 1 + params_.dim(); }
  Eigen::VectorXd log_params() const override;
  std::unique_ptr<Kernel> with_log_params(const Eigen::VectorXd &log_params) const override;
  std::unique_ptr<Kernel> clone() const override;
  void log_param_gradient(const Eigen::Ref<const Eigen::VectorXd> &a,
                          const Eigen::Ref<const Eigen::VectorXd> &b,
                          Eigen::Ref<Eigen::VectorXd> out) const override;
  Eigen::VectorXd log_param_gradient_diag() const override;

private:
  KernelParams params_;
  Eigen::VectorXd inv_sq_lengthscales_;
};

/// θ·∏ exp(−(x_i − x'_i)² / (2ν_i²)).
double se_kernel(const Eigen::Ref<const Eigen::VectorXd> &x,
                 const Eigen::Ref<const Eigen::VectorXd> &y, const KernelParams &params);

/// Gram matrix of `points` (one per row) plus `jitter` on the diagonal.
Eigen::MatrixXd kernel_matrix(const PointMatrix &points, const Kernel &kernel, double jitter);
Eigen::MatrixXd kernel_matrix(const PointMatrix &points, const KernelParams &params, double jitter);

/// Cross-covariance, rows index `a`, columns index `b`.
Eigen::MatrixXd cross_covariance(const PointMatrix &a, const PointMatrix &b, const Kernel &kernel);

/// Derivatives of the jitter-free Gram matrix with respect to θ and each
/// ν_i (natural, not log, parameters). Element 0 is ∂K/∂θ.
std::vector<Eigen::MatrixXd> kernel_grads(const PointMatrix &points, const KernelParams &params);

/// Jitter escalation schedule, relative to the kernel variance.
struct JitterPolicy {
  double initial = 1e-8;
  double factor = 10.0;
  double maximum = 1e-2;
};

/// Gram matrix together with its Cholesky factor and the absolute jitter
/// that made the factorization succeed.
struct FactorizedGram {
  Eigen::MatrixXd matrix;
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

/// Factorizes K + jitter·I, escalating the jitter per `policy` until the
/// Cholesky factorization succeeds. Throws if it never does.
FactorizedGram factorize_gram(const PointMatrix &points, const Kernel &kernel,
                              const JitterPolicy &policy = {});

/// Factorizes an arbitrary symmetric matrix with the same escalation
/// schedule; `scale` sets the unit for relative jitter.
FactorizedGram factorize_with_jitter(Eigen::MatrixXd matrix, double scale,
                                     const JitterPolicy &policy = {});

} // namespace sgcp
