#pragma once

#include "sgcp/config.hpp"
#include "sgcp/predictive.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>

namespace sgcp {

/// A fitted posterior as stored in posterior.json.
struct StoredPosterior {
  Method method = Method::vb;
  std::vector<std::pair<double, double>> bounds;
  KernelParams kernel;
  ApproximatePosterior posterior;
  /// Laplace only: the raw mode and precision over (g_s, ρ).
  std::optional<LaplacePosterior> laplace;

  Domain domain() const { return Domain(bounds); }
};

nlohmann::json posterior_to_json(const StoredPosterior &stored);
StoredPosterior posterior_from_json(const nlohmann::json &j);

void save_posterior(const std::filesystem::path &path, const StoredPosterior &stored);
StoredPosterior load_posterior(const std::filesystem::path &path);

/// Rows of a numeric CSV file; a non-numeric first row is taken as a header.
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path &path);

/// Writes events.csv, truth_grid.csv and meta.json into config.out.
/// Returns the metadata written to meta.json.
nlohmann::json cmd_simulate(const RunConfig &config);

/// Fits the configured method to the events; writes posterior.json,
/// trace.csv and intensity_grid.csv into config.out. Returns a run summary.
nlohmann::json cmd_fit(const RunConfig &config, const std::filesystem::path &events);

/// Test-set metrics for a stored posterior. `expected_method`, when set,
/// must match the stored method. `truth` is a truth_grid.csv; λ for the
/// normalization comes from the sibling meta.json when present, otherwise
/// from the largest truth value.
nlohmann::json cmd_evaluate(const RunConfig &config, const std::filesystem::path &posterior,
                            const std::filesystem::path &test,
                            const std::optional<std::filesystem::path> &truth,
                            std::optional<Method> expected_method = std::nullopt);

/// Writes intensity_grid.csv for a stored posterior into config.out.
void cmd_predict(const RunConfig &config, const std::filesystem::path &posterior);

} // namespace sgcp
