#include "sgcp/sparse_gp.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <random>

using namespace sgcp;

namespace {

SquaredExponential se1(double theta, double ell) {
  KernelParams p;
  p.theta = theta;
  p.lengthscales = Eigen::VectorXd::Constant(1, ell);
  return SquaredExponential(p);
}

/// Dense reference: explicit inverse of the (jittered) inducing matrix.
struct DenseSparseGp {
  Eigen::MatrixXd K_inv;
  const InducingSet &ind;

  explicit DenseSparseGp(const InducingSet &s)
      : K_inv(kernel_matrix(s.locations(), s.kernel(), s.jitter()).fullPivLu().inverse()), ind(s) {}

  Eigen::VectorXd ks(double x) const {
    Eigen::VectorXd k(ind.size());
    for (int l = 0; l < ind.size(); ++l) {
      k[l] = ind.kernel()(Eigen::VectorXd::Constant(1, x), ind.locations().row(l).transpose());
    }
    return k;
  }
  double mean(double x, const Eigen::VectorXd &mu) const { return ks(x).dot(K_inv * mu); }
  double var(double x, const Eigen::MatrixXd &Sigma) const {
    const Eigen::VectorXd k = ks(x);
    const Eigen::MatrixXd K = kernel_matrix(ind.locations(), ind.kernel(), ind.jitter());
    return ind.kernel().variance() - k.dot(K_inv * (K - Sigma) * K_inv * k);
  }
};

} // namespace

TEST_CASE("regular grid is closed, row-major and midpoint for one point") {
  const Domain d({{0.0, 10.0}, {-1.0, 1.0}});
  const PointMatrix g = InducingSet::regular_grid(d, {3, 2});
  REQUIRE(g.rows() == 6);
  CHECK(g(0, 0) == 0.0);
  CHECK(g(0, 1) == -1.0);
  CHECK(g(1, 0) == 0.0);
  CHECK(g(1, 1) == 1.0);
  CHECK(g(5, 0) == 10.0);
  const PointMatrix single = InducingSet::regular_grid(Domain({{2.0, 4.0}}), {1});
  CHECK(single(0, 0) == 3.0);
  CHECK_THROWS_AS(InducingSet::regular_grid(d, {3}), Error);
  CHECK_THROWS_AS(InducingSet::regular_grid(d, {0, 2}), Error);
}

TEST_CASE("conditional weights") {
  const Domain d({{0.0, 10.0}});
  const InducingSet ind(InducingSet::regular_grid(d, {5}), se1(1.0, 2.0));
  for (int l = 0; l < ind.size(); ++l) {
    const Eigen::VectorXd k = conditional_weights(ind.locations().row(l).transpose(), ind);
    const Eigen::VectorXd e = Eigen::VectorXd::Unit(ind.size(), l);
    CHECK((k - e).cwiseAbs().maxCoeff() < 1e-6);
  }
  const Eigen::VectorXd far = conditional_weights(Eigen::VectorXd::Constant(1, 10.0 + 40.0 * 2.0 / 2.0 + 30.0), ind);
  CHECK(far.cwiseAbs().maxCoeff() <= 1e-8);

  PointMatrix one(1, 1);
  one << 3.0;
  const InducingSet single(one, se1(1.5, 1.0));
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 4.2);
  const double expected = single.kernel()(x, one.row(0).transpose()) / single.K()(0, 0);
  CHECK(conditional_weights(x, single)[0] == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("predictive moments against a dense oracle") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  const Domain d({{0.0, 4.0}});
  for (int trial = 0; trial < 5; ++trial) {
    const auto ind = std::make_shared<const InducingSet>(InducingSet::regular_grid(d, {2 + trial}), se1(1.2, 1.5));
    const DenseSparseGp dense(*ind);
    SparsePosterior post;
    post.inducing = ind;
    post.mu = Eigen::VectorXd(ind->size());
    for (int l = 0; l < ind->size(); ++l) {
      post.mu[l] = n(rng);
    }
    Eigen::MatrixXd A(ind->size(), ind->size());
    for (int i = 0; i < A.size(); ++i) {
      A.data()[i] = 0.3 * n(rng);
    }
    post.Sigma = A * A.transpose();
    for (double x : {0.3, 1.7, 3.9}) {
      const Eigen::VectorXd xv = Eigen::VectorXd::Constant(1, x);
      CHECK(std::abs(predictive_mean(xv, post) - dense.mean(x, post.mu)) < 1e-10);
      CHECK(std::abs(predictive_var(xv, post) - dense.var(x, post.Sigma)) < 1e-9);
      const double m = dense.mean(x, post.mu);
      CHECK(std::abs(second_moment(xv, post) - (m * m + dense.var(x, post.Sigma))) < 1e-9);
    }
  }
}

TEST_CASE("prior posterior reproduces the prior variance") {
  const Domain d({{0.0, 10.0}});
  const auto ind = std::make_shared<const InducingSet>(InducingSet::regular_grid(d, {6}), se1(2.0, 1.5));
  const SparsePosterior prior = SparsePosterior::prior(ind);
  for (double x : {0.0, 1.1, 5.5, 9.9}) {
    const Eigen::VectorXd xv = Eigen::VectorXd::Constant(1, x);
    CHECK(predictive_var(xv, prior) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(predictive_mean(xv, prior) == 0.0);
    CHECK(second_moment(xv, prior) == doctest::Approx(2.0).epsilon(1e-10));
  }
}

TEST_CASE("interpolation and certainty at inducing points") {
  const Domain d({{0.0, 10.0}});
  const auto ind = std::make_shared<const InducingSet>(InducingSet::regular_grid(d, {6}), se1(1.0, 1.5));
  SparsePosterior post;
  post.inducing = ind;
  post.mu = Eigen::VectorXd::LinSpaced(6, -1.0, 2.0);
  post.Sigma = Eigen::MatrixXd::Zero(6, 6);
  // with jitter δ the mean at z_l is μ_l − δ(K⁻¹μ)_l
  const Eigen::VectorXd shift = ind->jitter() * ind->solve(post.mu);
  for (int l = 0; l < 6; ++l) {
    const Eigen::VectorXd x = ind->locations().row(l).transpose();
    CHECK(predictive_mean(x, post) == doctest::Approx(post.mu[l] - shift[l]).epsilon(1e-9));
    CHECK(predictive_var(x, post) < 1e-6);
    CHECK(conditional_prior_var(x, *ind) <= 1e-6);
    CHECK(second_moment(x, post) == doctest::Approx(post.mu[l] * post.mu[l]).epsilon(1e-6));
  }
  CHECK(conditional_prior_var(Eigen::VectorXd::Constant(1, 100.0), *ind) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("variance lies in (0, k(x,x)] when Sigma is below K") {
  const Domain d({{0.0, 10.0}});
  const auto ind = std::make_shared<const InducingSet>(InducingSet::regular_grid(d, {8}), se1(1.0, 1.2));
  SparsePosterior post = SparsePosterior::prior(ind);
  post.Sigma *= 0.3;
  post.mu = Eigen::VectorXd::Ones(8);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2.0, 12.0);
  for (int t = 0; t < 200; ++t) {
    const double v = predictive_var(Eigen::VectorXd::Constant(1, u(rng)), post);
    CHECK(v > 0.0);
    CHECK(v <= 1.0 + 1e-12);
  }
}

TEST_CASE("Cholesky reconstructs the inducing matrix") {
  const Domain d({{0.0, 5.0}, {0.0, 5.0}});
  KernelParams p;
  p.theta = 1.0;
  p.lengthscales = Eigen::Vector2d(1.0, 1.5);
  const InducingSet ind(InducingSet::regular_grid(d, {5, 5}), SquaredExponential(p));
  const Eigen::MatrixXd L = ind.chol().matrixL();
  CHECK((L * L.transpose() - ind.K()).norm() / ind.K().norm() <= 1e-12);
  CHECK(ind.log_det_K() == doctest::Approx(std::log(ind.K().determinant())).epsilon(1e-8));
}

TEST_CASE("projections agree with pointwise functions") {
  const Domain d({{0.0, 10.0}});
  const auto ind = std::make_shared<const InducingSet>(InducingSet::regular_grid(d, {7}), se1(1.3, 2.0));
  SparsePosterior post = SparsePosterior::prior(ind);
  post.Sigma *= 0.5;
  post.mu = Eigen::VectorXd::LinSpaced(7, 0.0, 1.0);
  PointMatrix pts(4, 1);
  pts << 0.5, 2.5, 6.1, 9.7;
  const PointProjection proj = project_points(pts, *ind);
  const Marginals m = marginals(proj, post.mu, post.Sigma);
  for (int p = 0; p < 4; ++p) {
    const Eigen::VectorXd x = pts.row(p).transpose();
    CHECK(m.mean[p] == doctest::Approx(predictive_mean(x, post)).epsilon(1e-12));
    CHECK(m.var[p] == doctest::Approx(predictive_var(x, post)).epsilon(1e-10));
    CHECK(proj.conditional_var[p] == doctest::Approx(conditional_prior_var(x, *ind)).epsilon(1e-8));
  }
}
