#include "sgcp/generative.hpp"

#include "sgcp/polya_gamma.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <random>

namespace sgcp {

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

PointMatrix uniform_points(const Domain &domain, int n, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointMatrix pts(n, domain.dim());
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < domain.dim(); ++i) {
      pts(k, i) = domain.lower(i) + domain.side(i) * unit(rng);
    }
  }
  return pts;
}

} // namespace

GpSample sample_gp(const PointMatrix &points, const Kernel &kernel, std::uint64_t seed,
                   const JitterPolicy &policy) {
  GpSample s;
  s.points = points;
  if (points.rows() == 0) {
    s.values.resize(0);
    return s;
  }
  const FactorizedGram gram = factorize_gram(points, kernel, policy);
  std::mt19937_64 rng = make_rng(seed, 0x6770);
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(points.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z[i] = normal(rng);
  }
  s.values = gram.llt.matrixL() * z;
  s.jitter = gram.jitter;
  return s;
}

SgcpSample sample_sgcp(const Domain &domain, const Kernel &kernel, double lambda_max, std::uint64_t seed,
                       const SgcpOptions &options) {
  if (!(lambda_max >= 0.0)) {
    throw Error("sample_sgcp: lambda_max must be nonnegative");
  }
  std::mt19937_64 rng = make_rng(seed, 0x5c);
  const double mean_count = lambda_max * domain.volume();
  int count = 0;
  if (mean_count > 0.0) {
    std::poisson_distribution<int> poisson(mean_count);
    count = poisson(rng);
  }
  const PointMatrix candidates = uniform_points(domain, count, rng);
  const auto extra = static_cast<int>(options.extra_points.rows());

  Eigen::VectorXd g(count + extra);
  if (options.fixed_g) {
    g.setConstant(*options.fixed_g);
  } else if (count + extra > 0) {
    PointMatrix all(count + extra, domain.dim());
    all.topRows(count) = candidates;
    if (extra > 0) {
      all.bottomRows(extra) = options.extra_points;
    }
    g = sample_gp(all, kernel, rng()).values;
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> accepted;
  for (int k = 0; k < count; ++k) {
    if (unit(rng) < sigmoid(g[k])) {
      accepted.push_back(k);
    }
  }
  PointMatrix pts(static_cast<Eigen::Index>(accepted.size()), domain.dim());
  SgcpSample out{PointPattern(domain.dim()), Eigen::VectorXd(static_cast<Eigen::Index>(accepted.size())), count,
                 g.tail(extra)};
  for (std::size_t a = 0; a < accepted.size(); ++a) {
    pts.row(static_cast<Eigen::Index>(a)) = candidates.row(accepted[a]);
    out.g_events[static_cast<Eigen::Index>(a)] = g[accepted[a]];
  }
  out.pattern = PointPattern(std::move(pts), domain);
  return out;
}

PointPattern sample_poisson_thinning(const Domain &domain, const ScalarField &intensity, double bound,
                                     std::uint64_t seed) {
  if (!(bound >= 0.0)) {
    throw Error("thinning bound must be nonnegative");
  }
  std::mt19937_64 rng = make_rng(seed, 0x7e);
  int count = 0;
  if (bound * domain.volume() > 0.0) {
    std::poisson_distribution<int> poisson(bound * domain.volume());
    count = poisson(rng);
  }
  const PointMatrix candidates = uniform_points(domain, count, rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Eigen::Index> keep;
  for (int k = 0; k < count; ++k) {
    const double rate = intensity(candidates.row(k).transpose());
    if (rate > bound * (1.0 + 1e-12)) {
      throw Error("thinning bound " + std::to_string(bound) + " exceeded by intensity " + std::to_string(rate));
    }
    if (unit(rng) * bound < rate) {
      keep.push_back(k);
    }
  }
  PointMatrix pts(static_cast<Eigen::Index>(keep.size()), domain.dim());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    pts.row(static_cast<Eigen::Index>(i)) = candidates.row(keep[i]);
  }
  return PointPattern(std::move(pts), domain);
}

double benchmark_intensity_1d(double x, double scale) {
  return scale * (2.0 * std::exp(-x / 15.0) + std::exp(-(x - 25.0) * (x - 25.0) / 100.0));
}

double benchmark_max_intensity(double scale) { return benchmark_intensity_1d(0.0, scale); }

double integrate_over_domain(const ScalarField &f, const Domain &domain, int panels_per_dim) {
  using Rule = boost::math::quadrature::gauss<double, 10>;
  const auto &abscissa = Rule::abscissa();
  const auto &weights = Rule::weights();
  // Symmetric rule: nodes ±abscissa[k], node 0 only when the order is odd.
  std::vector<double> nodes;
  std::vector<double> node_weights;
  for (std::size_t k = 0; k < abscissa.size(); ++k) {
    nodes.push_back(abscissa[k]);
    node_weights.push_back(weights[k]);
    if (abscissa[k] != 0.0) {
      nodes.push_back(-abscissa[k]);
      node_weights.push_back(weights[k]);
    }
  }
  const int d = domain.dim();
  const int per_axis = panels_per_dim * static_cast<int>(nodes.size());
  std::vector<std::vector<double>> axis_x(static_cast<std::size_t>(d));
  std::vector<std::vector<double>> axis_w(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    const double h = domain.side(i) / panels_per_dim;
    for (int p = 0; p < panels_per_dim; ++p) {
      const double mid = domain.lower(i) + (p + 0.5) * h;
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        axis_x[static_cast<std::size_t>(i)].push_back(mid + 0.5 * h * nodes[k]);
        axis_w[static_cast<std::size_t>(i)].push_back(0.5 * h * node_weights[k]);
      }
    }
  }
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Eigen::VectorXd x(d);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      x[i] = axis_x[static_cast<std::size_t>(i)][static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
      w *= axis_w[static_cast<std::size_t>(i)][static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    }
    total += w * f(x);
    int axis = d - 1;
    while (axis >= 0 && ++idx[static_cast<std::size_t>(axis)] == per_axis) {
      idx[static_cast<std::size_t>(axis)] = 0;
      --axis;
    }
    if (axis < 0) {
      break;
    }
  }
  return total;
}

double CampbellResult::mean_stderr() const { return std::sqrt(empirical_var / trials); }

double CampbellResult::var_stderr() const {
  // Var of the sample variance ≈ (μ₄ − σ⁴)/n
  return std::sqrt(std::max(empirical_fourth_moment - empirical_var * empirical_var, 0.0) / trials);
}

CampbellResult campbell_check(const ScalarField &intensity, double bound, const ScalarField &h,
                              const Domain &domain, int trials, std::uint64_t seed) {
  if (trials < 2) {
    throw Error("campbell_check needs at least two trials");
  }
  std::vector<double> sums(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    const PointPattern p = sample_poisson_thinning(domain, intensity, bound, seed + static_cast<std::uint64_t>(t));
    double s = 0.0;
    for (int n = 0; n < p.size(); ++n) {
      s += h(p.point(n).transpose());
    }
    sums[static_cast<std::size_t>(t)] = s;
  }
  CampbellResult r;
  r.trials = trials;
  double mean = 0.0;
  for (double s : sums) {
    mean += s;
  }
  mean /= trials;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double s : sums) {
    const double d = s - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  r.empirical_mean = mean;
  r.empirical_var = m2 / (trials - 1);
  r.empirical_fourth_moment = m4 / trials;
  r.analytic_mean = integrate_over_domain(
      [&](const Eigen::Ref<const Eigen::VectorXd> &x) { return h(x) * intensity(x); }, domain);
  r.analytic_var = integrate_over_domain(
      [&](const Eigen::Ref<const Eigen::VectorXd> &x) {
        const double v = h(x);
        return v * v * intensity(x);
      },
      domain);
  return r;
}

} // namespace sgcp
