#include "sgcp/integration.hpp"

#include <random>

namespace sgcp {

IntegrationGrid draw_integration_grid(const Domain &domain, int num_points, std::uint64_t seed) {
  if (num_points < 1) {
    throw Error("integration grid needs at least one point");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  IntegrationGrid grid;
  grid.points.resize(num_points, domain.dim());
  for (int r = 0; r < num_points; ++r) {
    for (int i = 0; i < domain.dim(); ++i) {
      grid.points(r, i) = domain.lower(i) + domain.side(i) * unit(rng);
    }
  }
  grid.weight = domain.volume() / num_points;
  grid.seed = seed;
  return grid;
}

double mc_integral(const Eigen::Ref<const Eigen::VectorXd> &values, const IntegrationGrid &grid) {
  if (values.size() != grid.size()) {
    throw Error("mc_integral: got " + std::to_string(values.size()) + " values for " +
                std::to_string(grid.size()) + " integration points");
  }
  double sum = 0.0;
  for (Eigen::Index r = 0; r < values.size(); ++r) {
    sum += values[r];
  }
  return grid.weight * sum;
}

} // namespace sgcp
