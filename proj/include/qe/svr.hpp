#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qe/features.hpp"

namespace qe::svr {

struct SvrHyperparams {
  double C = 10.0;
  double epsilon = 0.05;
  double kernel_gamma = 0.1;

  void validate() const;
  bool operator==(const SvrHyperparams&) const = default;
};

// C x epsilon x gamma grid spanning three orders of magnitude around the
// standard defaults; gamma scales with the feature count d.
std::vector<SvrHyperparams> default_grid(std::size_t d);

double rbf_kernel(const std::vector<double>& a, const std::vector<double>& b,
                  double gamma);

struct TrainedModel {
  std::vector<std::vector<double>> support;  // standardized rows, beta != 0
  std::vector<double> coef;                  // beta_i = alpha_i - alpha_i*
  double bias = 0.0;
  SvrHyperparams hp;
  features::Standardizer standardizer;  // identity when trained on raw X
  std::string manifest_name;
  // Solver diagnostics.
  double kkt_residual = 0.0;
  long long iterations = 0;
  bool iteration_capped = false;

  // Prediction on an already-standardized row.
  double predict_standardized(const std::vector<double>& x) const;
  // Standardizes, predicts, optionally clamps to [0,1].
  double predict(const std::vector<double>& raw, bool clamp = false) const;
};

struct SmoOptions {
  double tol = 1e-3;
  long long max_iterations = 1'000'000;
};

// Epsilon-SVR in the dual, solved by SMO with maximal-violating-pair
// selection (ties by lowest index). X is used as given; the returned model
// carries an identity standardizer of matching width.
TrainedModel train_svr(const std::vector<std::vector<double>>& X,
                       const std::vector<double>& y, const SvrHyperparams& hp,
                       const SmoOptions& opts = {});

// Fits a standardizer on the raw rows, then trains; the model standardizes
// incoming rows itself at prediction time.
TrainedModel fit_standardized(const std::vector<std::vector<double>>& raw_X,
                              const std::vector<double>& y,
                              const SvrHyperparams& hp,
                              const std::string& manifest_name,
                              const SmoOptions& opts = {});

// Largest KKT violation recomputed from the stored duals against a training
// set; machine-checks the TrainedModel invariants.
double kkt_residual_of(const TrainedModel& m,
                       const std::vector<std::vector<double>>& raw_X,
                       const std::vector<double>& y);

struct GridCell {
  SvrHyperparams hp;
  std::optional<double> dev_r;  // empty when the dev correlation is undefined
};

struct GridSearchResult {
  SvrHyperparams best;
  TrainedModel best_model;
  std::vector<GridCell> cells;
};

// Trains on (train_X, train_y) per grid cell and picks the cell with the
// highest dev Pearson r; ties broken by smaller C, then larger epsilon, then
// smaller gamma. Throws UndefinedCorrelation if the dev labels have zero
// variance.
GridSearchResult grid_search(const std::vector<std::vector<double>>& train_X,
                             const std::vector<double>& train_y,
                             const std::vector<std::vector<double>>& dev_X,
                             const std::vector<double>& dev_y,
                             const std::vector<SvrHyperparams>& grid,
                             const std::string& manifest_name,
                             const SmoOptions& opts = {});

nlohmann::json model_to_json(const TrainedModel& m);  // "svr-v1"
TrainedModel model_from_json(const nlohmann::json& j);
void save_model(const TrainedModel& m, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace qe::svr
