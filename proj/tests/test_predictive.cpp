#include "sgcp/predictive.hpp"

#include "sgcp/polya_gamma.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace sgcp;
using sgcp::testing::random_kernel;
using sgcp::testing::random_problem;

namespace {

struct Fitted {
  Problem problem;
  VbResult fit;
};

Fitted small_fit(std::uint64_t seed) {
  Problem p = random_problem(seed, 15, 6, 200);
  VbConfig c;
  c.optimize_hypers = false;
  c.max_iters = 50;
  VbResult r = fit_vb(p, random_kernel(seed), c);
  return {std::move(p), std::move(r)};
}

PointPattern test_events(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  PointMatrix pts(n, 1);
  for (int i = 0; i < n; ++i) {
    pts(i, 0) = u(rng);
  }
  return PointPattern(pts, Domain({{0.0, 5.0}}));
}

} // namespace

TEST_CASE("Gauss-Hermite rule") {
  const GaussHermiteRule &r = gauss_hermite(32);
  double w = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    w += r.weights[i];
    m2 += r.weights[i] * r.nodes[i] * r.nodes[i];
    m4 += r.weights[i] * std::pow(r.nodes[i], 4);
  }
  CHECK(w == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_THROWS_AS(gauss_hermite(0), Error);
}

TEST_CASE("expected sigmoid") {
  CHECK(expected_sigmoid(0.7, 0.0) == doctest::Approx(sigmoid(0.7)).epsilon(1e-15));
  for (double v : {0.1, 1.0, 4.0, 25.0}) {
    CHECK(expected_sigmoid(0.0, v) == doctest::Approx(0.5).epsilon(1e-14));
  }
  // Monte-Carlo oracle with 10⁷ draws: standard error ≈ 6e−5
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(1.0, 1.0);
  double acc = 0.0;
  const int S = 10000000;
  for (int s = 0; s < S; ++s) {
    acc += 1.0 / (1.0 + std::exp(-n(rng)));
  }
  CHECK(std::abs(expected_sigmoid(1.0, 1.0) - acc / S) <= 1e-4);
  double prev = 0.0;
  for (double m = -5.0; m <= 5.0; m += 0.25) {
    const double e = expected_sigmoid(m, 2.0);
    CHECK(e > prev);
    prev = e;
  }
}

TEST_CASE("posterior intensity") {
  const Fitted f = small_fit(1);
  const ApproximatePosterior post = ApproximatePosterior::from_vb(f.fit.state);
  PointMatrix pts(5, 1);
  pts << 0.0, 1.0, 2.5, 4.0, 5.0;
  const IntensitySummary s = posterior_intensity(post, pts);
  CHECK((s.mean.array() >= 0.0).all());
  CHECK((s.sd.array() >= 0.0).all());
  CHECK(post.mean_lambda() == doctest::Approx(f.fit.state.alpha2 / f.fit.state.beta2));

  ApproximatePosterior exact = post;
  exact.gp.Sigma.setZero();
  const Marginals m = marginals(project_points(pts, *post.gp.inducing), exact.gp.mu, exact.gp.Sigma);
  const IntensitySummary s0 = posterior_intensity(exact, pts);
  for (int p = 0; p < 5; ++p) {
    if (m.var[p] <= 1e-10) {
      CHECK(s0.mean[p] == doctest::Approx(post.mean_lambda() * sigmoid(m.mean[p])).epsilon(1e-8));
    }
  }
}

TEST_CASE("log-normal lambda moments") {
  ApproximatePosterior p;
  p.kind = LambdaKind::log_normal;
  p.log_mean = 0.3;
  p.log_var = 0.2;
  CHECK(p.mean_lambda() == doctest::Approx(std::exp(0.4)));
  CHECK(p.var_lambda() == doctest::Approx((std::exp(0.2) - 1.0) * std::exp(0.8)));
}

TEST_CASE("log_mean_exp") {
  const std::vector<double> v{-1000.0, -1001.0, -999.5};
  const double base = log_mean_exp(v);
  CHECK(std::isfinite(base));
  std::vector<double> shifted = v;
  for (double &x : shifted) {
    x += 123.25;
  }
  CHECK(log_mean_exp(shifted) - base == doctest::Approx(123.25).epsilon(1e-14));
  CHECK(log_mean_exp({2.0}) == 2.0);
  CHECK_THROWS_AS(log_mean_exp({}), Error);
}

TEST_CASE("degenerate posterior reproduces the plain log-likelihood") {
  const Fitted f = small_fit(2);
  SparsePosterior gp = f.fit.state.posterior;
  gp.Sigma.setZero();
  const ApproximatePosterior post = ApproximatePosterior::with_fixed_lambda(gp, 2.5);
  const PointPattern test = test_events(5, 12);
  SampledLikelihoodOptions opt;
  opt.num_samples = 7;
  opt.conditional_noise = false;
  const double sampled = test_likelihood_sampled(post, test, f.problem.grid, opt);

  const InducingSet &ind = *gp.inducing;
  const Eigen::VectorXd g_test = project_points(test.points(), ind).kappa.transpose() * gp.mu;
  const Eigen::VectorXd g_grid = project_points(f.problem.grid.points, ind).kappa.transpose() * gp.mu;
  Eigen::VectorXd at_events(g_test.size());
  Eigen::VectorXd at_grid(g_grid.size());
  for (Eigen::Index i = 0; i < g_test.size(); ++i) {
    at_events[i] = 2.5 * sigmoid(g_test[i]);
  }
  for (Eigen::Index i = 0; i < g_grid.size(); ++i) {
    at_grid[i] = 2.5 * sigmoid(g_grid[i]);
  }
  const double plain = poisson_log_likelihood(at_events, at_grid, f.problem.grid);
  CHECK(sampled == doctest::Approx(plain).epsilon(1e-12));

  const TaylorLikelihood t = test_likelihood_taylor_terms(gp, 2.5, 0.0, test, f.problem.grid);
  CHECK(t.plug_in == doctest::Approx(plain).epsilon(1e-12));
  CHECK(t.inducing_correction == 0.0);
  CHECK(t.lambda_correction == 0.0);
}

TEST_CASE("empty test set gives a nonpositive likelihood") {
  const Fitted f = small_fit(3);
  const ApproximatePosterior post = ApproximatePosterior::from_vb(f.fit.state);
  SampledLikelihoodOptions opt;
  opt.num_samples = 200;
  const double ell = test_likelihood_sampled(post, PointPattern(1), f.problem.grid, opt);
  CHECK(ell <= 0.0);
  CHECK(std::isfinite(ell));
}

TEST_CASE("Taylor corrections match a finite-difference Hessian") {
  const Fitted f = small_fit(4);
  const SparsePosterior &gp = f.fit.state.posterior;
  const PointPattern test = test_events(8, 10);
  const double lam = 3.0;
  const IntegrationGrid &grid = f.problem.grid;
  const InducingSet &ind = *gp.inducing;
  const PointProjection at_test = project_points(test.points(), ind);
  const PointProjection at_grid = project_points(grid.points, ind);
  auto ll = [&](const Eigen::VectorXd &g) {
    const Eigen::VectorXd gt = at_test.kappa.transpose() * g;
    const Eigen::VectorXd gg = at_grid.kappa.transpose() * g;
    double v = 0.0;
    for (Eigen::Index i = 0; i < gt.size(); ++i) {
      v += std::log(lam) + log_sigmoid(gt[i]);
    }
    for (Eigen::Index i = 0; i < gg.size(); ++i) {
      v -= lam * grid.weight * sigmoid(gg[i]);
    }
    return v;
  };
  const auto L = gp.mu.size();
  Eigen::MatrixXd H(L, L);
  const double h = 1e-4;
  for (Eigen::Index i = 0; i < L; ++i) {
    for (Eigen::Index j = 0; j < L; ++j) {
      auto at = [&](double si, double sj) {
        Eigen::VectorXd g = gp.mu;
        g[i] += si;
        g[j] += sj;
        return ll(g);
      };
      H(i, j) = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
    }
  }
  const double fd_correction = 0.5 * (H.array() * gp.Sigma.array()).sum();
  const TaylorLikelihood t = test_likelihood_taylor_terms(gp, lam, 0.7, test, grid);
  CHECK(std::abs(t.inducing_correction - fd_correction) <= 1e-4 * std::max(1.0, std::abs(fd_correction)));
  CHECK(t.lambda_correction == doctest::Approx(0.5 * (-10.0 / (lam * lam)) * 0.7));
}

TEST_CASE("sampled likelihood is stable in the number of samples") {
  const Fitted f = small_fit(6);
  const ApproximatePosterior post = ApproximatePosterior::from_vb(f.fit.state);
  const PointPattern test = test_events(9, 15);
  SampledLikelihoodOptions opt;
  opt.num_samples = 2000;
  opt.seed = 1;
  const std::vector<double> v = test_likelihood_samples(post, test, f.problem.grid, opt);
  const double a = log_mean_exp(v);
  opt.num_samples = 4000;
  opt.seed = 2;
  const double b = test_likelihood_sampled(post, test, f.problem.grid, opt);
  // delta method: se(log mean e^v) ≈ sd(e^{v−a})/√S
  double acc = 0.0;
  for (double x : v) {
    const double e = std::exp(x - a);
    acc += (e - 1.0) * (e - 1.0);
  }
  const double se = std::sqrt(acc / (v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
  CHECK(std::abs(a - b) <= 3.0 * se);
}

TEST_CASE("Laplace posterior round trip through the approximate posterior") {
  const Problem p = random_problem(11, 15, 5, 150);
  const KernelCache cache = KernelCache::build(p, random_kernel(11));
  const EmResult r = em_fit(p, cache, EmConfig{});
  const LaplacePosterior lp = laplace_hessian(r.state, p, cache);
  const ApproximatePosterior post = ApproximatePosterior::from_laplace(lp);
  CHECK(post.kind == LambdaKind::log_normal);
  CHECK(post.cross.size() == 5);
  CHECK(post.mean_lambda() > r.state.lambda);
  SampledLikelihoodOptions opt;
  opt.num_samples = 500;
  CHECK(std::isfinite(test_likelihood_sampled(post, test_events(3, 10), p.grid, opt)));
}

TEST_CASE("normalized RMSE") {
  const Eigen::VectorXd truth = Eigen::VectorXd::LinSpaced(10, 0.0, 2.0);
  CHECK(rmse_normalized(truth, truth, 2.0) == 0.0);
  CHECK(rmse_normalized(truth.array() + 0.3, truth, 2.0) == doctest::Approx(0.15));
  CHECK(rmse_normalized(Eigen::VectorXd::Zero(10), Eigen::VectorXd::Constant(10, 3.0), 3.0) ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(rmse_normalized(truth, Eigen::VectorXd::Zero(3), 1.0), Error);
}
