#include "sgcp/vb_inference.hpp"

#include "sgcp/polya_gamma.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sgcp {

namespace {

double log_det_spd(const Eigen::MatrixXd &S) {
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() == Eigen::Success) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Eigen::EigenvaluesOnly);
  const double floor = 1e-300;
  return eig.eigenvalues().array().max(floor).log().sum();
}

// ω̄ = pg_mean(1, c) and the data/latent mark terms −ln cosh(c/2) + c²ω̄/2.
double mark_kl_term(double c, double omega_bar) { return -log_cosh(c / 2.0) + c * c * omega_bar / 2.0; }

} // namespace

double VariationalState::mean_log_lambda() const { return gamma_mean_log(alpha2, beta2); }

VariationalState initial_state(const Problem &problem, const KernelCache &cache, const Kernel &kernel) {
  VariationalState s;
  s.posterior = SparsePosterior::prior(cache.inducing);
  s.kernel = kernel.clone();
  s.alpha2 = problem.prior.alpha0;
  s.beta2 = problem.prior.beta0;
  s.lambda1 = std::exp(s.mean_log_lambda());
  const int n = problem.num_data();
  const int r = problem.grid.size();
  s.c1_data = Eigen::VectorXd::Zero(n);
  s.mean_g_data = Eigen::VectorXd::Zero(n);
  s.c1_int = Eigen::VectorXd::Zero(r);
  s.mean_g_int = Eigen::VectorXd::Zero(r);
  s.Lambda1_int = Eigen::VectorXd::Zero(r);
  return s;
}

void update_q1(VariationalState &state, const KernelCache &cache) {
  const Marginals md = marginals(cache.data, state.posterior.mu, state.posterior.Sigma);
  const Marginals mi = marginals(cache.integration, state.posterior.mu, state.posterior.Sigma);
  if (!md.mean.allFinite() || !md.var.allFinite() || !mi.mean.allFinite() || !mi.var.allFinite()) {
    throw Error("update_q1: non-finite GP moments");
  }
  state.mean_g_data = md.mean;
  state.mean_g_int = mi.mean;
  state.c1_data = (md.mean.array().square() + md.var.array()).sqrt();
  state.c1_int = (mi.mean.array().square() + mi.var.array()).sqrt();

  state.lambda1 = std::exp(state.mean_log_lambda());
  state.Lambda1_int.resize(state.c1_int.size());
  int clamped = 0;
  for (Eigen::Index r = 0; r < state.c1_int.size(); ++r) {
    const double c = state.c1_int[r];
    const double m = state.mean_g_int[r];
    // λ₁σ(−c)e^{(c−m)/2} = λ₁e^{−m/2}/(2cosh(c/2))
    double ratio = std::exp(-m / 2.0 - std::numbers::ln2 - log_cosh(c / 2.0));
    if (ratio > 1.0) {
      ratio = 1.0;
      ++clamped;
    }
    state.Lambda1_int[r] = state.lambda1 * ratio;
  }
  if (clamped > 0) {
    spdlog::warn("update_q1: {} latent intensities clamped to lambda1", clamped);
  }
}

Integrands compute_integrands(const VariationalState &state) {
  Integrands t;
  const auto n = state.c1_data.size();
  const auto r = state.c1_int.size();
  t.a_data.resize(n);
  t.b_data = Eigen::VectorXd::Constant(n, 0.5);
  t.a_int.resize(r);
  t.b_int.resize(r);
  for (Eigen::Index i = 0; i < n; ++i) {
    t.a_data[i] = pg_mean(1.0, state.c1_data[i]);
  }
  for (Eigen::Index i = 0; i < r; ++i) {
    const double lam = state.Lambda1_int[i];
    t.a_int[i] = pg_mean(1.0, state.c1_int[i]) * lam;
    t.b_int[i] = -0.5 * lam;
  }
  return t;
}

SparsePosterior update_q2_gp(const Integrands &integrands, const KernelCache &cache,
                             const IntegrationGrid &grid) {
  GaussianFactor f = sparse_gaussian_update(integrands, cache, grid.weight);
  SparsePosterior p;
  p.mu = std::move(f.mu);
  p.Sigma = std::move(f.Sigma);
  p.inducing = cache.inducing;
  return p;
}

void update_q2_lambda(VariationalState &state, const Problem &problem) {
  const double latent_count = mc_integral(state.Lambda1_int, problem.grid);
  state.alpha2 = problem.num_data() + latent_count + problem.prior.alpha0;
  state.beta2 = problem.prior.beta0 + problem.volume();
  state.lambda1 = std::exp(state.mean_log_lambda());
}

ElboTerms elbo_terms(const VariationalState &state, const Problem &problem, const KernelCache &cache) {
  const SparsePosterior &q = state.posterior;
  const Marginals md = marginals(cache.data, q.mu, q.Sigma);
  const Marginals mi = marginals(cache.integration, q.mu, q.Sigma);
  const double mean_log_lambda = state.mean_log_lambda();
  const double mean_lambda = state.mean_lambda();

  ElboTerms t;
  double latent_sum = 0.0;
  for (Eigen::Index r = 0; r < mi.mean.size(); ++r) {
    const double lam = state.Lambda1_int[r];
    if (lam <= 0.0) {
      continue;
    }
    const double c = state.c1_int[r];
    const double w = pg_mean(1.0, c);
    const double m = mi.mean[r];
    const double e2 = m * m + mi.var[r];
    latent_sum += lam * (mean_log_lambda - m / 2.0 - e2 * w / 2.0 - std::numbers::ln2 - std::log(lam) +
                         mark_kl_term(c, w) + 1.0);
  }
  t.latent = -mean_lambda * problem.volume() + problem.grid.weight * latent_sum;

  for (Eigen::Index n = 0; n < md.mean.size(); ++n) {
    const double c = state.c1_data[n];
    const double w = pg_mean(1.0, c);
    const double m = md.mean[n];
    const double e2 = m * m + md.var[n];
    t.data += mean_log_lambda + m / 2.0 - e2 * w / 2.0 - std::numbers::ln2 + mark_kl_term(c, w);
  }

  const InducingSet &ind = *q.inducing;
  const double trace_term = ind.solve(q.Sigma).trace();
  const double quad = q.mu.dot(ind.solve(q.mu));
  t.gp_kl = -0.5 * (trace_term + quad - ind.size() + ind.log_det_K() - log_det_spd(q.Sigma));

  const double a0 = problem.prior.alpha0;
  const double b0 = problem.prior.beta0;
  const double a2 = state.alpha2;
  const double b2 = state.beta2;
  t.gamma_kl = a0 * std::log(b0) - std::lgamma(a0) + (a0 - 1.0) * mean_log_lambda - b0 * mean_lambda + a2 -
               std::log(b2) + std::lgamma(a2) + (1.0 - a2) * boost::math::digamma(a2);

  if (!std::isfinite(t.total())) {
    std::ostringstream msg;
    msg << "ELBO is not finite: latent=" << t.latent << " data=" << t.data << " gp_kl=" << t.gp_kl
        << " gamma_kl=" << t.gamma_kl;
    throw Error(msg.str());
  }
  return t;
}

double elbo(const VariationalState &state, const Problem &problem, const KernelCache &cache) {
  return elbo_terms(state, problem, cache).total();
}

Eigen::VectorXd elbo_grad_kernel(const VariationalState &state, const Problem &problem,
                                 const KernelCache &cache) {
  const InducingSet &ind = *cache.inducing;
  const Kernel &kernel = ind.kernel();
  const SparsePosterior &q = state.posterior;
  const int L = ind.size();
  const int np = kernel.num_params();
  const int N = problem.num_data();
  const int R = problem.grid.size();
  const int P = N + R;

  // Stack events and integration points.
  PointMatrix points(P, problem.domain.dim());
  points.topRows(N) = problem.data.points();
  points.bottomRows(R) = problem.grid.points;
  Eigen::MatrixXd kappa(L, P);
  kappa.leftCols(N) = cache.data.kappa;
  kappa.rightCols(R) = cache.integration.kappa;

  // ELBO = Σ_p α_p E[g_p] + β_p E[g_p²] + (terms free of the kernel) − KL.
  Eigen::VectorXd alpha(P);
  Eigen::VectorXd beta(P);
  for (int n = 0; n < N; ++n) {
    alpha[n] = 0.5;
    beta[n] = -0.5 * pg_mean(1.0, state.c1_data[n]);
  }
  const double w = problem.grid.weight;
  for (int r = 0; r < R; ++r) {
    const double lam = state.Lambda1_int[r];
    alpha[N + r] = -0.5 * w * lam;
    beta[N + r] = -0.5 * w * lam * pg_mean(1.0, state.c1_int[r]);
  }

  const Eigen::MatrixXd S = q.Sigma + q.mu * q.mu.transpose();
  const Eigen::VectorXd u = ind.solve(q.mu);
  const Eigen::MatrixXd Z = ind.solve(S * kappa);  // K⁻¹Sκ_p

  // dE[g] = (dk − dK κ)ᵀu
  // dE[g²] = dk(x,x) − 2dkᵀκ + κᵀdKκ + 2(dk − dKκ)ᵀz
  // Coefficients of dk_p and the matrix G with Σ_p(...dK...) = tr(dK·G).
  const Eigen::MatrixXd C =
      u * alpha.transpose() + 2.0 * (Z - kappa) * beta.asDiagonal();
  Eigen::MatrixXd G = -u * (kappa * alpha).transpose() + kappa * beta.asDiagonal() * kappa.transpose() -
                      2.0 * Z * beta.asDiagonal() * kappa.transpose();
  // KL part: ½tr(dK(K⁻¹SK⁻¹ − K⁻¹))
  const Eigen::MatrixXd Kinv_S = ind.solve(S);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(L, L);
  G += 0.5 * (ind.solve(Kinv_S.transpose()) - ind.solve(I));
  const Eigen::MatrixXd Gs = 0.5 * (G + G.transpose());

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(np);
  Eigen::VectorXd dk(np);

  // Σ_p Σ_l ∂k(x_l, x_p) C_lp
  for (int p = 0; p < P; ++p) {
    for (int l = 0; l < L; ++l) {
      kernel.log_param_gradient(ind.locations().row(l).transpose(), points.row(p).transpose(), dk);
      grad += C(l, p) * dk;
    }
  }
  // Σ_p β_p ∂k(x_p, x_p)
  grad += beta.sum() * kernel.log_param_gradient_diag();

  // tr(dK·G) over the inducing Gram matrix including its jitter.
  const double rel_jitter = ind.relative_jitter();
  const Eigen::VectorXd diag_grad = kernel.log_param_gradient_diag();
  for (int a = 0; a < L; ++a) {
    for (int b = 0; b < L; ++b) {
      kernel.log_param_gradient(ind.locations().row(a).transpose(), ind.locations().row(b).transpose(), dk);
      if (a == b) {
        dk += rel_jitter * diag_grad;
      }
      grad += Gs(a, b) * dk;
    }
  }
  return grad;
}

Eigen::VectorXd adam_step(const Eigen::VectorXd &params, const Eigen::VectorXd &grad, AdamState &adam) {
  if (adam.m.size() != params.size()) {
    adam.m = Eigen::VectorXd::Zero(params.size());
    adam.v = Eigen::VectorXd::Zero(params.size());
    adam.step = 0;
  }
  ++adam.step;
  adam.m = adam.beta1 * adam.m + (1.0 - adam.beta1) * grad;
  adam.v = adam.beta2 * adam.v + (1.0 - adam.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(adam.beta1, adam.step);
  const double c2 = 1.0 - std::pow(adam.beta2, adam.step);
  const Eigen::ArrayXd m_hat = adam.m.array() / c1;
  const Eigen::ArrayXd v_hat = adam.v.array() / c2;
  return params.array() + adam.learning_rate * m_hat / (v_hat.sqrt() + adam.epsilon);
}

VbResult fit_vb(const PointPattern &pattern, const Domain &domain, const Kernel &kernel,
                const VbConfig &config) {
  std::vector<int> per_dim = config.inducing_per_dim;
  if (per_dim.empty()) {
    per_dim.assign(static_cast<std::size_t>(domain.dim()), domain.dim() == 1 ? 50 : 10);
  }
  IntegrationGrid grid = draw_integration_grid(domain, config.num_integration_points, config.seed);
  const GammaHyperprior prior = config.prior ? *config.prior : init_prior_from_data(pattern, domain);
  Problem problem(pattern, domain, std::move(grid), InducingSet::regular_grid(domain, per_dim), prior);
  return fit_vb(std::move(problem), kernel, config);
}

VbResult fit_vb(Problem problem, const Kernel &kernel, const VbConfig &config) {
  const auto start = std::chrono::steady_clock::now();
  std::unique_ptr<Kernel> current = kernel.clone();
  KernelCache cache = KernelCache::build(problem, *current, config.jitter);
  VariationalState state = initial_state(problem, cache, *current);
  AdamState adam;
  adam.learning_rate = config.adam_lr;
  std::vector<Eigen::VectorXd> kernel_trace;
  int iterations = 0;
  bool converged = false;

  const int phases = config.refresh_points ? 2 : 1;
  for (int phase = 0; phase < phases; ++phase) {
    if (phase == 1) {
      problem.grid = draw_integration_grid(problem.domain, *config.refresh_points, config.seed + 1);
      cache = KernelCache::from_inducing(problem, cache.inducing);
      state.c1_int = Eigen::VectorXd::Zero(problem.grid.size());
      state.mean_g_int = Eigen::VectorXd::Zero(problem.grid.size());
      state.Lambda1_int = Eigen::VectorXd::Zero(problem.grid.size());
      converged = false;
    }
    double previous = 0.0;
    for (int it = 0; it < config.max_iters; ++it) {
      update_q1(state, cache);
      const Integrands terms = compute_integrands(state);
      state.posterior = update_q2_gp(terms, cache, problem.grid);
      update_q2_lambda(state, problem);
      double value = 0.0;
      try {
        value = elbo(state, problem, cache);
      } catch (const Error &e) {
        std::ostringstream msg;
        msg << e.what() << "; trace:";
        for (double v : state.elbo_trace) {
          msg << ' ' << v;
        }
        throw Error(msg.str());
      }
      state.elbo_trace.push_back(value);
      kernel_trace.push_back(current->log_params());
      ++iterations;

      if (it > 0 && std::abs(value - previous) <= config.rel_tol * std::abs(value)) {
        converged = true;
        break;
      }
      previous = value;

      if (config.optimize_hypers && it + 1 < config.max_iters) {
        const Eigen::VectorXd grad = elbo_grad_kernel(state, problem, cache);
        const Eigen::VectorXd next = adam_step(current->log_params(), grad, adam);
        current = current->with_log_params(next);
        cache = KernelCache::build(problem, *current, config.jitter);
        state.kernel = current->clone();
        state.posterior.inducing = cache.inducing;
      }
    }
  }

  VbResult result{std::move(state), std::move(problem), std::move(cache), std::move(kernel_trace), iterations,
                  converged, 0.0};
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

} // namespace sgcp
