#include "sgcp/predictive.hpp"

#include "sgcp/polya_gamma.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <random>

namespace sgcp {

namespace {

GaussHermiteRule build_gauss_hermite(int order) {
  // Jacobi matrix of the probabilists' Hermite polynomials.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
  GaussHermiteRule rule;
  for (int i = 0; i < order; ++i) {
    rule.nodes.push_back(eig.eigenvalues()[i]);
    const double v = eig.eigenvectors()(0, i);
    rule.weights.push_back(v * v);
  }
  return rule;
}

/// Symmetric square root of a covariance, negative eigenvalues dropped.
Eigen::MatrixXd covariance_root(const Eigen::MatrixXd &cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (cov + cov.transpose()));
  const Eigen::VectorXd s = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * s.asDiagonal();
}

} // namespace

const GaussHermiteRule &gauss_hermite(int order) {
  if (order < 1) {
    throw Error("Gauss-Hermite order must be positive");
  }
  static std::mutex mutex;
  static std::map<int, GaussHermiteRule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) {
    it = cache.emplace(order, build_gauss_hermite(order)).first;
  }
  return it->second;
}

double expected_sigmoid(double mean, double var, int order) {
  const GaussHermiteRule &rule = gauss_hermite(order);
  const double sd = std::sqrt(std::max(var, 0.0));
  double e = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    e += rule.weights[i] * sigmoid(mean + sd * rule.nodes[i]);
  }
  return e;
}

double expected_sigmoid_squared(double mean, double var, int order) {
  const GaussHermiteRule &rule = gauss_hermite(order);
  const double sd = std::sqrt(std::max(var, 0.0));
  double e = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double s = sigmoid(mean + sd * rule.nodes[i]);
    e += rule.weights[i] * s * s;
  }
  return e;
}

double ApproximatePosterior::mean_lambda() const {
  switch (kind) {
  case LambdaKind::gamma:
    return shape / rate;
  case LambdaKind::log_normal:
    return std::exp(log_mean + 0.5 * log_var);
  case LambdaKind::point:
    return std::exp(log_mean);
  }
  return 0.0;
}

double ApproximatePosterior::var_lambda() const {
  switch (kind) {
  case LambdaKind::gamma:
    return shape / (rate * rate);
  case LambdaKind::log_normal:
    return std::expm1(log_var) * std::exp(2.0 * log_mean + log_var);
  case LambdaKind::point:
    return 0.0;
  }
  return 0.0;
}

ApproximatePosterior ApproximatePosterior::from_vb(const VariationalState &state) {
  ApproximatePosterior p;
  p.gp = state.posterior;
  p.kind = LambdaKind::gamma;
  p.shape = state.alpha2;
  p.rate = state.beta2;
  return p;
}

ApproximatePosterior ApproximatePosterior::from_laplace(const LaplacePosterior &laplace) {
  const Eigen::MatrixXd C = laplace.covariance();
  const auto L = laplace.g_s.size();
  ApproximatePosterior p;
  p.gp.mu = laplace.g_s;
  p.gp.Sigma = C.topLeftCorner(L, L);
  p.gp.inducing = laplace.inducing;
  p.kind = LambdaKind::log_normal;
  p.log_mean = laplace.rho;
  p.log_var = C(L, L);
  p.cross = C.topRightCorner(L, 1);
  return p;
}

ApproximatePosterior ApproximatePosterior::with_fixed_lambda(SparsePosterior gp, double lambda) {
  if (!(lambda > 0.0)) {
    throw Error("fixed lambda must be positive");
  }
  ApproximatePosterior p;
  p.gp = std::move(gp);
  p.kind = LambdaKind::point;
  p.log_mean = std::log(lambda);
  return p;
}

IntensitySummary posterior_intensity(const ApproximatePosterior &posterior, const PointMatrix &points,
                                     int quadrature_order) {
  const PointProjection proj = project_points(points, *posterior.gp.inducing);
  const Marginals m = marginals(proj, posterior.gp.mu, posterior.gp.Sigma);
  const double el = posterior.mean_lambda();
  const double el2 = posterior.var_lambda() + el * el;
  IntensitySummary s;
  s.points = points;
  s.mean.resize(points.rows());
  s.sd.resize(points.rows());
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    const double es = expected_sigmoid(m.mean[p], m.var[p], quadrature_order);
    const double es2 = expected_sigmoid_squared(m.mean[p], m.var[p], quadrature_order);
    s.mean[p] = el * es;
    s.sd[p] = std::sqrt(std::max(el2 * es2 - s.mean[p] * s.mean[p], 0.0));
  }
  return s;
}

double poisson_log_likelihood(const Eigen::VectorXd &intensity_at_events,
                              const Eigen::VectorXd &intensity_at_grid, const IntegrationGrid &grid) {
  return intensity_at_events.array().log().sum() - mc_integral(intensity_at_grid, grid);
}

double log_mean_exp(const std::vector<double> &values) {
  if (values.empty()) {
    throw Error("log_mean_exp of an empty sequence");
  }
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) {
    return top;
  }
  double acc = 0.0;
  for (double v : values) {
    acc += std::exp(v - top);
  }
  return top + std::log(acc / static_cast<double>(values.size()));
}

std::vector<double> test_likelihood_samples(const ApproximatePosterior &posterior, const PointPattern &test,
                                            const IntegrationGrid &grid, const SampledLikelihoodOptions &options) {
  if (options.num_samples < 1) {
    throw Error("number of posterior samples must be at least 1");
  }
  const InducingSet &ind = *posterior.gp.inducing;
  const PointProjection at_test = project_points(test.points(), ind);
  const PointProjection at_grid = project_points(grid.points, ind);
  const auto L = posterior.gp.mu.size();
  const bool joint = posterior.kind == LambdaKind::log_normal && posterior.cross.size() == L;

  // Root of the covariance of g_s, or of (g_s, ρ) when they are correlated.
  Eigen::MatrixXd root;
  if (joint) {
    Eigen::MatrixXd C(L + 1, L + 1);
    C.topLeftCorner(L, L) = posterior.gp.Sigma;
    C.topRightCorner(L, 1) = posterior.cross;
    C.bottomLeftCorner(1, L) = posterior.cross.transpose();
    C(L, L) = posterior.log_var;
    root = covariance_root(C);
  } else {
    root = covariance_root(posterior.gp.Sigma);
  }
  const Eigen::VectorXd sd_test = at_test.conditional_var.cwiseMax(0.0).cwiseSqrt();
  const Eigen::VectorXd sd_grid = at_grid.conditional_var.cwiseMax(0.0).cwiseSqrt();

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  std::gamma_distribution<double> gamma(posterior.kind == LambdaKind::gamma ? posterior.shape : 1.0,
                                        posterior.kind == LambdaKind::gamma ? 1.0 / posterior.rate : 1.0);
  const int N = test.size();
  Eigen::VectorXd z(root.cols());
  std::vector<double> out(static_cast<std::size_t>(options.num_samples));
  for (int s = 0; s < options.num_samples; ++s) {
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      z[i] = normal(rng);
    }
    const Eigen::VectorXd draw = root * z;
    const Eigen::VectorXd g_s = posterior.gp.mu + draw.head(L);
    double log_lambda = 0.0;
    switch (posterior.kind) {
    case LambdaKind::gamma:
      log_lambda = std::log(gamma(rng));
      break;
    case LambdaKind::log_normal:
      log_lambda = posterior.log_mean + (joint ? draw[L] : std::sqrt(posterior.log_var) * normal(rng));
      break;
    case LambdaKind::point:
      log_lambda = posterior.log_mean;
      break;
    }
    Eigen::VectorXd g_test = at_test.kappa.transpose() * g_s;
    Eigen::VectorXd g_grid = at_grid.kappa.transpose() * g_s;
    if (options.conditional_noise) {
      for (Eigen::Index p = 0; p < g_test.size(); ++p) {
        g_test[p] += sd_test[p] * normal(rng);
      }
      for (Eigen::Index p = 0; p < g_grid.size(); ++p) {
        g_grid[p] += sd_grid[p] * normal(rng);
      }
    }
    double ll = N * log_lambda;
    for (Eigen::Index n = 0; n < g_test.size(); ++n) {
      ll += log_sigmoid(g_test[n]);
    }
    double integral = 0.0;
    for (Eigen::Index r = 0; r < g_grid.size(); ++r) {
      integral += sigmoid(g_grid[r]);
    }
    ll -= std::exp(log_lambda) * grid.weight * integral;
    out[static_cast<std::size_t>(s)] = ll;
  }
  return out;
}

double test_likelihood_sampled(const ApproximatePosterior &posterior, const PointPattern &test,
                               const IntegrationGrid &grid, const SampledLikelihoodOptions &options) {
  return log_mean_exp(test_likelihood_samples(posterior, test, grid, options));
}

TaylorLikelihood test_likelihood_taylor_terms(const SparsePosterior &gp, double mean_lambda, double var_lambda,
                                              const PointPattern &test, const IntegrationGrid &grid) {
  const InducingSet &ind = *gp.inducing;
  const PointProjection at_test = project_points(test.points(), ind);
  const PointProjection at_grid = project_points(grid.points, ind);
  const Eigen::VectorXd g_test = at_test.kappa.transpose() * gp.mu;
  const Eigen::VectorXd g_grid = at_grid.kappa.transpose() * gp.mu;
  const int N = test.size();

  TaylorLikelihood t;
  double events = N * std::log(mean_lambda);
  double conditional = 0.0;
  for (Eigen::Index n = 0; n < g_test.size(); ++n) {
    events += log_sigmoid(g_test[n]);
    const double s = sigmoid(g_test[n]);
    conditional -= s * (1.0 - s) * std::max(at_test.conditional_var[n], 0.0);
  }
  double integral = 0.0;
  for (Eigen::Index r = 0; r < g_grid.size(); ++r) {
    const double s = sigmoid(g_grid[r]);
    integral += s;
    conditional -= mean_lambda * grid.weight * s * (1.0 - s) * (1.0 - 2.0 * s) *
                   std::max(at_grid.conditional_var[r], 0.0);
  }
  t.plug_in = events - mean_lambda * grid.weight * integral;
  const Eigen::MatrixXd H = sparse_loglik_hessian_g(at_test, at_grid, gp.mu, mean_lambda, grid.weight);
  t.inducing_correction = 0.5 * (H.array() * gp.Sigma.array()).sum();
  t.conditional_correction = 0.5 * conditional;
  t.lambda_correction = 0.5 * (-N / (mean_lambda * mean_lambda)) * var_lambda;
  return t;
}

double test_likelihood_taylor(const VariationalState &state, const PointPattern &test, const IntegrationGrid &grid) {
  const double mean = state.mean_lambda();
  const double var = state.alpha2 / (state.beta2 * state.beta2);
  return test_likelihood_taylor_terms(state.posterior, mean, var, test, grid).total();
}

double rmse_normalized(const Eigen::VectorXd &estimate, const Eigen::VectorXd &truth, double lambda_true) {
  if (estimate.size() != truth.size()) {
    throw Error("rmse_normalized: grid sizes differ (" + std::to_string(estimate.size()) + " vs " +
                std::to_string(truth.size()) + ")");
  }
  if (estimate.size() == 0) {
    throw Error("rmse_normalized: empty grid");
  }
  if (!(lambda_true > 0.0)) {
    throw Error("rmse_normalized: lambda_true must be positive");
  }
  return std::sqrt((estimate - truth).squaredNorm() / static_cast<double>(estimate.size())) / lambda_true;
}

} // namespace sgcp
