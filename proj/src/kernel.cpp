#include "sgcp/kernel.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <sstream>

namespace sgcp {

void KernelParams::validate() const {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw Error("kernel theta must be positive");
  }
  if (lengthscales.size() == 0) {
    throw Error("kernel needs at least one lengthscale");
  }
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) {
    if (!(lengthscales[i] > 0.0) || !std::isfinite(lengthscales[i])) {
      throw Error("kernel lengthscale " + std::to_string(i) + " must be positive");
    }
  }
}

SquaredExponential::SquaredExponential(KernelParams params) : params_(std::move(params)) {
  params_.validate();
  inv_sq_lengthscales_ = params_.lengthscales.array().square().inverse();
}

double SquaredExponential::operator()(const Eigen::Ref<const Eigen::VectorXd> &a,
                                      const Eigen::Ref<const Eigen::VectorXd> &b) const {
  if (a.size() != dim() || b.size() != dim()) {
    throw Error("kernel evaluated on points of wrong dimension");
  }
  const double r2 = ((a - b).array().square() * inv_sq_lengthscales_.array()).sum();
  return params_.theta * std::exp(-0.5 * r2);
}

Eigen::VectorXd SquaredExponential::log_params() const {
  Eigen::VectorXd p(num_params());
  p[0] = std::log(params_.theta);
  p.tail(dim()) = params_.lengthscales.array().log();
  return p;
}

std::unique_ptr<Kernel> SquaredExponential::with_log_params(const Eigen::VectorXd &log_params) const {
  if (log_params.size() != num_params()) {
    throw Error("wrong number of kernel parameters");
  }
  KernelParams p;
  p.theta = std::exp(log_params[0]);
  p.lengthscales = log_params.tail(dim()).array().exp();
  return std::make_unique<SquaredExponential>(std::move(p));
}

std::unique_ptr<Kernel> SquaredExponential::clone() const {
  return std::make_unique<SquaredExponential>(*this);
}

void SquaredExponential::log_param_gradient(const Eigen::Ref<const Eigen::VectorXd> &a,
                                            const Eigen::Ref<const Eigen::VectorXd> &b,
                                            Eigen::Ref<Eigen::VectorXd> out) const {
  const Eigen::ArrayXd scaled = (a - b).array().square() * inv_sq_lengthscales_.array();
  const double k = params_.theta * std::exp(-0.5 * scaled.sum());
  out[0] = k;
  // d/d log ν_i of exp(−Δ²/(2ν²)) = Δ²/ν² · k
  out.tail(dim()) = k * scaled;
}

Eigen::VectorXd SquaredExponential::log_param_gradient_diag() const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(num_params());
  g[0] = params_.theta;
  return g;
}

double se_kernel(const Eigen::Ref<const Eigen::VectorXd> &x,
                 const Eigen::Ref<const Eigen::VectorXd> &y, const KernelParams &params) {
  if (x.size() != params.dim() || y.size() != params.dim()) {
    throw Error("se_kernel: dimension mismatch");
  }
  const double r2 = ((x - y).array() / params.lengthscales.array()).square().sum();
  return params.theta * std::exp(-0.5 * r2);
}

Eigen::MatrixXd kernel_matrix(const PointMatrix &points, const Kernel &kernel, double jitter) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = kernel(points.row(i).transpose(), points.row(i).transpose()) + jitter;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double k = kernel(points.row(i).transpose(), points.row(j).transpose());
      K(i, j) = k;
      K(j, i) = k;
    }
  }
  return K;
}

Eigen::MatrixXd kernel_matrix(const PointMatrix &points, const KernelParams &params, double jitter) {
  return kernel_matrix(points, SquaredExponential(params), jitter);
}

Eigen::MatrixXd cross_covariance(const PointMatrix &a, const PointMatrix &b, const Kernel &kernel) {
  Eigen::MatrixXd K(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      K(i, j) = kernel(a.row(i).transpose(), b.row(j).transpose());
    }
  }
  return K;
}

std::vector<Eigen::MatrixXd> kernel_grads(const PointMatrix &points, const KernelParams &params) {
  const Eigen::MatrixXd K = kernel_matrix(points, params, 0.0);
  std::vector<Eigen::MatrixXd> grads;
  grads.push_back(K / params.theta);
  const Eigen::Index n = points.rows();
  for (int d = 0; d < params.dim(); ++d) {
    const double nu = params.lengthscales[d];
    Eigen::MatrixXd G(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double diff = points(i, d) - points(j, d);
        G(i, j) = K(i, j) * diff * diff / (nu * nu * nu);
      }
    }
    grads.push_back(std::move(G));
  }
  return grads;
}

FactorizedGram factorize_with_jitter(Eigen::MatrixXd matrix, double scale, const JitterPolicy &policy) {
  FactorizedGram out;
  double rel = policy.initial;
  while (true) {
    const double jitter = rel * scale;
    out.matrix = matrix;
    out.matrix.diagonal().array() += jitter;
    out.llt.compute(out.matrix);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      if (rel > policy.initial) {
        spdlog::debug("Cholesky needed jitter {:.3g} (relative {:.1g})", jitter, rel);
      }
      return out;
    }
    if (rel >= policy.maximum) {
      std::ostringstream msg;
      msg << "Cholesky factorization failed; final jitter tried " << jitter << " (relative " << rel
          << ")";
      throw Error(msg.str());
    }
    rel = std::min(rel * policy.factor, policy.maximum);
  }
}

FactorizedGram factorize_gram(const PointMatrix &points, const Kernel &kernel, const JitterPolicy &policy) {
  if (points.rows() > 1) {
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        if (points.row(i) == points.row(j)) {
          spdlog::warn("kernel matrix has duplicate points ({} and {})", j, i);
        }
      }
    }
  }
  return factorize_with_jitter(kernel_matrix(points, kernel, 0.0), kernel.variance(), policy);
}

} // namespace sgcp
