#pragma once

#include "sgcp/domain.hpp"
#include "sgcp/kernel.hpp"

#include <cstdint>
#include <functional>
#include <optional>

namespace sgcp {

using ScalarField = std::function<double(const Eigen::Ref<const Eigen::VectorXd> &)>;

/// Joint draw of a zero-mean GP at a finite set of points.
struct GpSample {
  PointMatrix points;
  Eigen::VectorXd values;
  double jitter = 0.0;
};

GpSample sample_gp(const PointMatrix &points, const Kernel &kernel, std::uint64_t seed,
                   const JitterPolicy &policy = {});

struct SgcpOptions {
  /// Replace the GP by a constant g (±infinity allowed).
  std::optional<double> fixed_g;
  /// Points at which the GP is drawn jointly with the candidates, e.g. an
  /// evaluation grid for the ground-truth intensity.
  PointMatrix extra_points;
};

struct SgcpSample {
  PointPattern pattern;
  Eigen::VectorXd g_events;       ///< g at the accepted events
  int num_candidates = 0;
  Eigen::VectorXd g_extra;        ///< g at SgcpOptions::extra_points
};

/// Sigmoidal Gaussian Cox process by thinning: Poisson(λ|X|) uniform
/// candidates, a joint GP draw at the candidates, and acceptance with
/// probability σ(g).
SgcpSample sample_sgcp(const Domain &domain, const Kernel &kernel, double lambda_max, std::uint64_t seed,
                       const SgcpOptions &options = {});

/// Inhomogeneous Poisson process with intensity ≤ `bound` by thinning.
PointPattern sample_poisson_thinning(const Domain &domain, const ScalarField &intensity, double bound,
                                     std::uint64_t seed);

/// 1D benchmark rate 2exp(−x/15) + exp(−(x−25)²/100) on [0, 50], times `scale`.
double benchmark_intensity_1d(double x, double scale = 1.0);
/// Maximum of benchmark_intensity_1d on [0, 50] (attained at x = 0).
double benchmark_max_intensity(double scale = 1.0);

/// Tensor-product composite Gauss–Legendre quadrature over the domain.
double integrate_over_domain(const ScalarField &f, const Domain &domain, int panels_per_dim = 32);

/// Both sides of Campbell's theorem for H = Σ_{x∈Π} h(x):
/// empirical mean/variance over simulated processes versus ∫hΛ and ∫h²Λ.
struct CampbellResult {
  double empirical_mean = 0.0;
  double analytic_mean = 0.0;
  double empirical_var = 0.0;
  double analytic_var = 0.0;
  double empirical_fourth_moment = 0.0;  ///< of H − mean, for the variance standard error
  int trials = 0;

  double mean_stderr() const;
  double var_stderr() const;
};

CampbellResult campbell_check(const ScalarField &intensity, double bound, const ScalarField &h,
                              const Domain &domain, int trials, std::uint64_t seed);

} // namespace sgcp
