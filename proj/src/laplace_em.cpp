#include "sgcp/laplace_em.hpp"

#include "sgcp/polya_gamma.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace sgcp {

namespace {

Eigen::MatrixXd prior_precision(const InducingSet &ind) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(ind.size(), ind.size());
  Eigen::MatrixXd P = ind.solve(I);
  return 0.5 * (P + P.transpose());
}

} // namespace

Eigen::MatrixXd LaplacePosterior::covariance() const {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw Error("Laplace precision is not positive definite");
  }
  const auto n = precision.rows();
  Eigen::MatrixXd C = llt.solve(Eigen::MatrixXd::Identity(n, n));
  return 0.5 * (C + C.transpose());
}

Integrands e_step(EmState &state, const KernelCache &cache) {
  const Eigen::VectorXd g_data = cache.data.kappa.transpose() * state.g_s;
  const Eigen::VectorXd g_int = cache.integration.kappa.transpose() * state.g_s;
  state.c_tilde_data = g_data.cwiseAbs();
  state.c_tilde_int = g_int.cwiseAbs();
  state.Lambda_tilde_int.resize(g_int.size());

  Integrands w;
  w.a_data.resize(g_data.size());
  w.b_data = Eigen::VectorXd::Constant(g_data.size(), 0.5);
  w.a_int.resize(g_int.size());
  w.b_int.resize(g_int.size());
  for (Eigen::Index n = 0; n < g_data.size(); ++n) {
    w.a_data[n] = pg_mean(1.0, state.c_tilde_data[n]);
  }
  for (Eigen::Index r = 0; r < g_int.size(); ++r) {
    const double lam = state.lambda * sigmoid(-g_int[r]);
    state.Lambda_tilde_int[r] = lam;
    w.a_int[r] = pg_mean(1.0, state.c_tilde_int[r]) * lam;
    w.b_int[r] = -0.5 * lam;
  }
  return w;
}

Eigen::VectorXd m_step_g(const Integrands &weights, const KernelCache &cache, const IntegrationGrid &grid) {
  return sparse_gaussian_update(weights, cache, grid.weight, false).mu;
}

double m_step_lambda(int num_events, const Eigen::VectorXd &Lambda_tilde_int, const IntegrationGrid &grid,
                     const GammaHyperprior &prior, double volume) {
  const double latent = mc_integral(Lambda_tilde_int, grid);
  const double numerator = num_events + latent + prior.alpha0 - 1.0;
  if (!(numerator > 0.0)) {
    throw Error("m_step_lambda: N + expected latent count + alpha0 - 1 must be positive (got " +
                std::to_string(numerator) + "); use alpha0 > 1");
  }
  return numerator / (prior.beta0 + volume);
}

double penalized_objective(const Eigen::VectorXd &g_s, double lambda, const Problem &problem,
                           const KernelCache &cache) {
  const Eigen::VectorXd g_data = cache.data.kappa.transpose() * g_s;
  const Eigen::VectorXd g_int = cache.integration.kappa.transpose() * g_s;
  const double log_lambda = std::log(lambda);
  double j = 0.0;
  for (Eigen::Index n = 0; n < g_data.size(); ++n) {
    j += log_lambda + log_sigmoid(g_data[n]);
  }
  double integral = 0.0;
  for (Eigen::Index r = 0; r < g_int.size(); ++r) {
    integral += sigmoid(g_int[r]);
  }
  j -= lambda * problem.grid.weight * integral;
  j += (problem.prior.alpha0 - 1.0) * log_lambda - problem.prior.beta0 * lambda;
  j -= 0.5 * g_s.dot(cache.inducing->solve(g_s));
  return j;
}

Eigen::VectorXd penalized_objective_gradient(const Eigen::VectorXd &g_s, double lambda,
                                             const Problem &problem, const KernelCache &cache) {
  const int L = static_cast<int>(g_s.size());
  const Eigen::VectorXd g_data = cache.data.kappa.transpose() * g_s;
  const Eigen::VectorXd g_int = cache.integration.kappa.transpose() * g_s;
  const double w = problem.grid.weight;

  Eigen::VectorXd coef_data(g_data.size());
  for (Eigen::Index n = 0; n < g_data.size(); ++n) {
    coef_data[n] = 1.0 - sigmoid(g_data[n]);
  }
  Eigen::VectorXd coef_int(g_int.size());
  double integral = 0.0;
  for (Eigen::Index r = 0; r < g_int.size(); ++r) {
    const double s = sigmoid(g_int[r]);
    integral += s;
    coef_int[r] = -lambda * w * s * (1.0 - s);
  }
  Eigen::VectorXd grad(L + 1);
  grad.head(L) = cache.data.kappa * coef_data + cache.integration.kappa * coef_int - cache.inducing->solve(g_s);
  grad[L] = problem.num_data() + problem.prior.alpha0 - 1.0 - lambda * (w * integral + problem.prior.beta0);
  return grad;
}

double log_posterior_rho(const Eigen::VectorXd &g_s, double rho, const Problem &problem,
                         const KernelCache &cache) {
  return penalized_objective(g_s, std::exp(rho), problem, cache) + rho;
}

Eigen::MatrixXd sparse_loglik_hessian_g(const PointProjection &events, const PointProjection &integration,
                                        const Eigen::VectorXd &g_s, double lambda, double weight) {
  const Eigen::VectorXd g_data = events.kappa.transpose() * g_s;
  const Eigen::VectorXd g_int = integration.kappa.transpose() * g_s;
  Eigen::VectorXd d_data(g_data.size());
  for (Eigen::Index n = 0; n < g_data.size(); ++n) {
    const double s = sigmoid(g_data[n]);
    d_data[n] = -s * (1.0 - s);
  }
  Eigen::VectorXd d_int(g_int.size());
  for (Eigen::Index r = 0; r < g_int.size(); ++r) {
    const double s = sigmoid(g_int[r]);
    d_int[r] = -lambda * weight * s * (1.0 - s) * (1.0 - 2.0 * s);
  }
  Eigen::MatrixXd H = events.kappa * d_data.asDiagonal() * events.kappa.transpose();
  H.noalias() += integration.kappa * d_int.asDiagonal() * integration.kappa.transpose();
  return 0.5 * (H + H.transpose());
}

Eigen::MatrixXd log_posterior_hessian(const Eigen::VectorXd &g_s, double rho, const Problem &problem,
                                      const KernelCache &cache) {
  const int L = static_cast<int>(g_s.size());
  const double lambda = std::exp(rho);
  const double w = problem.grid.weight;
  const Eigen::VectorXd g_int = cache.integration.kappa.transpose() * g_s;

  Eigen::MatrixXd H(L + 1, L + 1);
  H.topLeftCorner(L, L) =
      sparse_loglik_hessian_g(cache.data, cache.integration, g_s, lambda, w) - prior_precision(*cache.inducing);

  Eigen::VectorXd dsig(g_int.size());
  double integral = 0.0;
  for (Eigen::Index r = 0; r < g_int.size(); ++r) {
    const double s = sigmoid(g_int[r]);
    integral += s;
    dsig[r] = s * (1.0 - s);
  }
  const Eigen::VectorXd cross = -lambda * w * (cache.integration.kappa * dsig);
  H.topRightCorner(L, 1) = cross;
  H.bottomLeftCorner(1, L) = cross.transpose();
  H(L, L) = -lambda * (w * integral + problem.prior.beta0);
  return H;
}

EmState initial_em_state(const Problem &problem, const KernelCache &cache) {
  EmState s;
  s.g_s = Eigen::VectorXd::Zero(cache.inducing->size());
  // homogeneous rate N/|X| corrected for σ(0) = ½
  s.lambda = problem.num_data() > 0 ? 2.0 * problem.num_data() / problem.volume()
                                    : problem.prior.alpha0 / problem.prior.beta0;
  return s;
}

EmResult em_fit(const Problem &problem, const KernelCache &cache, const EmConfig &config) {
  const auto start = std::chrono::steady_clock::now();
  EmResult result;
  EmState &state = result.state;
  state = initial_em_state(problem, cache);
  double previous = penalized_objective(state.g_s, state.lambda, problem, cache);
  state.objective_trace.push_back(previous);

  for (int it = 0; it < config.max_iters; ++it) {
    const Integrands weights = e_step(state, cache);
    state.g_s = m_step_g(weights, cache, problem.grid);
    state.lambda = m_step_lambda(problem.num_data(), state.Lambda_tilde_int, problem.grid, problem.prior,
                                 problem.volume());
    const double value = penalized_objective(state.g_s, state.lambda, problem, cache);
    if (!std::isfinite(value)) {
      std::ostringstream msg;
      msg << "EM objective is not finite at iteration " << it + 1 << "; trace:";
      for (double v : state.objective_trace) {
        msg << ' ' << v;
      }
      throw Error(msg.str());
    }
    state.objective_trace.push_back(value);
    ++result.iterations;
    if (std::abs(value - previous) <= config.rel_tol * std::abs(value)) {
      result.converged = true;
      break;
    }
    previous = value;
  }
  // leave c̃ and Λ̃ consistent with the final iterate
  e_step(state, cache);
  result.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

LaplacePosterior laplace_hessian(const EmState &state, const Problem &problem, const KernelCache &cache) {
  LaplacePosterior post;
  post.g_s = state.g_s;
  post.rho = std::log(state.lambda);
  post.inducing = cache.inducing;
  const Eigen::MatrixXd H = log_posterior_hessian(post.g_s, post.rho, problem, cache);
  post.precision = -H;
  Eigen::LLT<Eigen::MatrixXd> llt(post.precision);
  if (llt.info() != Eigen::Success) {
    throw Error("Laplace precision is not positive definite; run more EM iterations");
  }
  return post;
}

} // namespace sgcp
