#pragma once

#include "sgcp/domain.hpp"

#include <cstdint>

namespace sgcp {

/// Uniform Monte-Carlo quadrature rule on a Domain: ∫F ≈ weight·Σ F(x_r).
struct IntegrationGrid {
  PointMatrix points;
  double weight = 0.0;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(points.rows()); }
};

IntegrationGrid draw_integration_grid(const Domain &domain, int num_points, std::uint64_t seed);

/// weight·Σ values, summed left to right.
double mc_integral(const Eigen::Ref<const Eigen::VectorXd> &values, const IntegrationGrid &grid);

} // namespace sgcp
