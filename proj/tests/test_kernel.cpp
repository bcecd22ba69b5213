#include "sgcp/kernel.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace sgcp;
using sgcp::testing::relative_error;

namespace {

KernelParams params1(double theta, double ell) {
  KernelParams p;
  p.theta = theta;
  p.lengthscales = Eigen::VectorXd::Constant(1, ell);
  return p;
}

} // namespace

TEST_CASE("squared exponential values") {
  Eigen::VectorXd x(1);
  x << 0.3;
  CHECK(se_kernel(x, x, params1(2.5, 1.0)) == 2.5);

  Eigen::VectorXd y(1);
  y << 0.3 + std::sqrt(2.0 * std::log(2.0));
  CHECK(se_kernel(x, y, params1(1.0, 1.0)) == doctest::Approx(0.5).epsilon(1e-14));

  KernelParams p;
  p.theta = 1.0;
  p.lengthscales = Eigen::Vector2d(1.0, 2.0);
  CHECK(se_kernel(Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(0.0, 0.0), p) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

  CHECK_THROWS_AS(se_kernel(x, Eigen::Vector2d(0.0, 0.0), p), Error);
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(params1(0.0, 1.0).validate(), Error);
  CHECK_THROWS_AS(params1(1.0, -1.0).validate(), Error);
  CHECK_THROWS_AS(SquaredExponential(params1(-2.0, 1.0)), Error);
}

TEST_CASE("symmetry and bound") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  KernelParams p;
  p.theta = 1.7;
  p.lengthscales = Eigen::Vector3d(0.5, 1.0, 2.0);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Vector3d a(n(rng), n(rng), n(rng));
    const Eigen::Vector3d b(n(rng), n(rng), n(rng));
    const double kab = se_kernel(a, b, p);
    CHECK(kab == se_kernel(b, a, p));
    CHECK(kab > 0.0);
    CHECK(kab < p.theta);
  }
}

TEST_CASE("kernel matrix") {
  PointMatrix one(1, 1);
  one << 0.4;
  const Eigen::MatrixXd K1 = kernel_matrix(one, params1(1.0, 1.0), 0.0);
  CHECK(K1.rows() == 1);
  CHECK(K1(0, 0) == 1.0);

  PointMatrix twin(2, 1);
  twin << 0.4, 0.4;
  const Eigen::MatrixXd K2 = kernel_matrix(twin, params1(1.0, 1.0), 1e-6);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K2);
  CHECK(eig.eigenvalues()[0] == doctest::Approx(1e-6).epsilon(1e-9));
  CHECK(eig.eigenvalues()[1] == doctest::Approx(2.0 + 1e-6).epsilon(1e-12));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  PointMatrix pts(30, 2);
  for (int i = 0; i < 30; ++i) {
    pts(i, 0) = u(rng);
    pts(i, 1) = u(rng);
  }
  KernelParams p;
  p.theta = 2.0;
  p.lengthscales = Eigen::Vector2d(1.5, 0.7);
  const Eigen::MatrixXd K = kernel_matrix(pts, p, 1e-8);
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("jitter escalation succeeds on duplicates and reports failure") {
  PointMatrix twin(2, 1);
  twin << 1.0, 1.0;
  const FactorizedGram g = factorize_gram(twin, SquaredExponential(params1(1.0, 1.0)));
  CHECK(g.jitter > 0.0);
  CHECK(g.llt.info() == Eigen::Success);

  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_WITH_AS(factorize_with_jitter(bad, 1.0), doctest::Contains("final jitter"), Error);
}

TEST_CASE("kernel_grads match central finite differences") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::uniform_real_distribution<double> pos(0.5, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    PointMatrix pts(3, 2);
    for (int i = 0; i < 3; ++i) {
      pts(i, 0) = u(rng);
      pts(i, 1) = u(rng);
    }
    KernelParams p;
    p.theta = pos(rng);
    p.lengthscales = Eigen::Vector2d(pos(rng), pos(rng));
    const auto grads = kernel_grads(pts, p);
    REQUIRE(grads.size() == 3);
    const double h = 1e-5;
    for (int k = 0; k < 3; ++k) {
      KernelParams up = p;
      KernelParams down = p;
      if (k == 0) {
        up.theta += h;
        down.theta -= h;
      } else {
        up.lengthscales[k - 1] += h;
        down.lengthscales[k - 1] -= h;
      }
      const Eigen::MatrixXd fd = (kernel_matrix(pts, up, 0.0) - kernel_matrix(pts, down, 0.0)) / (2.0 * h);
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          if (std::abs(fd(a, b)) > 1e-8) {
            CHECK(relative_error(grads[static_cast<std::size_t>(k)](a, b), fd(a, b)) < 1e-5);
          } else {
            CHECK(std::abs(grads[static_cast<std::size_t>(k)](a, b)) < 1e-8);
          }
        }
      }
    }
    // ∂k(x,x)/∂θ = 1 and ∂k(x,x)/∂ν = 0
    CHECK(grads[0](1, 1) == doctest::Approx(1.0));
    CHECK(grads[1](1, 1) == 0.0);
  }
}

TEST_CASE("log-parameter gradients are consistent with natural-parameter gradients") {
  KernelParams p;
  p.theta = 1.3;
  p.lengthscales = Eigen::Vector2d(0.8, 1.9);
  const SquaredExponential k(p);
  const Eigen::Vector2d a(0.1, 0.7);
  const Eigen::Vector2d b(1.2, -0.4);
  Eigen::VectorXd g(3);
  k.log_param_gradient(a, b, g);
  const double h = 1e-6;
  const Eigen::VectorXd lp = k.log_params();
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd up = lp;
    Eigen::VectorXd down = lp;
    up[i] += h;
    down[i] -= h;
    const double fd = ((*k.with_log_params(up))(a, b) - (*k.with_log_params(down))(a, b)) / (2.0 * h);
    CHECK(relative_error(g[i], fd) < 1e-7);
  }
  const Eigen::VectorXd diag = k.log_param_gradient_diag();
  CHECK(diag[0] == doctest::Approx(p.theta));
  CHECK(diag[1] == 0.0);
}
