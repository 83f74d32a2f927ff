#include "qe/svr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "qe/eval.hpp"

namespace qe::svr {

void SvrHyperparams::validate() const {
  if (!(C > 0.0)) throw std::invalid_argument("svr: C must be > 0");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("svr: epsilon must be >= 0");
  if (!(kernel_gamma > 0.0)) {
    throw std::invalid_argument("svr: kernel_gamma must be > 0");
  }
}

std::vector<SvrHyperparams> default_grid(std::size_t d) {
  const double dd = static_cast<double>(std::max<std::size_t>(1, d));
  std::vector<SvrHyperparams> grid;
  // Gamma-major so a grid search reuses each kernel across the C/eps cells.
  for (double g : {0.1 / dd, 1.0 / dd, 10.0 / dd}) {
    for (double C : {1.0, 10.0, 100.0}) {
      for (double eps : {0.01, 0.05, 0.1}) {
        grid.push_back({C, eps, g});
      }
    }
  }
  return grid;
}

double rbf_kernel(const std::vector<double>& a, const std::vector<double>& b,
                  double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

double TrainedModel::predict_standardized(const std::vector<double>& x) const {
  double f = bias;
  for (std::size_t i = 0; i < support.size(); ++i) {
    f += coef[i] * rbf_kernel(support[i], x, hp.kernel_gamma);
  }
  return f;
}

double TrainedModel::predict(const std::vector<double>& raw, bool clamp) const {
  const double f = predict_standardized(standardizer.apply(raw));
  if (!clamp) return f;
  return std::clamp(f, 0.0, 1.0);
}

namespace {

// Dense kernel matrix over the training rows.
std::vector<double> kernel_matrix(const std::vector<std::vector<double>>& X,
                                  double gamma) {
  const std::size_t n = X.size();
  std::vector<double> K(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    K[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double k = rbf_kernel(X[i], X[j], gamma);
      K[i * n + j] = k;
      K[j * n + i] = k;
    }
  }
  return K;
}

features::Standardizer identity_standardizer(std::size_t d) {
  features::Standardizer s;
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 1.0);
  return s;
}

}  // namespace

namespace {

void validate_training_data(const std::vector<std::vector<double>>& X,
                            const std::vector<double>& y) {
  const std::size_t n = X.size();
  if (n < 2 || y.size() != n) {
    throw std::invalid_argument("train_svr: need |X| = |y| >= 2");
  }
  const std::size_t d = X.front().size();
  for (const auto& row : X) {
    if (row.size() != d) {
      throw std::invalid_argument("train_svr: ragged feature rows");
    }
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("train_svr: non-finite feature value");
      }
    }
  }
  for (double v : y) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("train_svr: non-finite label");
    }
  }
}

// The dual is written over 2n variables a = [alpha; alpha*] with signs
// z = [+1; -1], box [0, C], linear term eps - z_p * y_i, and the single
// constraint sum z_p a_p = 0. Each SMO step picks the maximal violating
// pair (i from I_up, j from I_low) and moves the pair analytically. K is
// the precomputed kernel matrix over the training rows.
TrainedModel train_svr_on_kernel(const std::vector<double>& K,
                                 const std::vector<std::vector<double>>& X,
                                 const std::vector<double>& y,
                                 const SvrHyperparams& hp,
                                 const SmoOptions& opts) {
  const std::size_t n = X.size();
  const double C = hp.C;
  std::vector<double> a(2 * n, 0.0);
  std::vector<double> G(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    G[i] = hp.epsilon - y[i];
    G[n + i] = hp.epsilon + y[i];
  }
  // score(p) = -z_p G_p: -G[i] for the alpha block, +G[n+i] for alpha*.

  long long iter = 0;
  double residual = 0.0;
  bool capped = false;
  std::size_t bi = 2 * n, bj = 2 * n;

  // Maximal violating pair; ties resolved by the lowest index. The scan is
  // fused with the gradient update after the first pass.
  auto select_pair = [&] {
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    bi = bj = 2 * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = -G[i];
      if (a[i] < C && s > m_up) {
        m_up = s;
        bi = i;
      }
      if (a[i] > 0.0 && s < m_low) {
        m_low = s;
        bj = i;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double s = G[n + i];
      if (a[n + i] > 0.0 && s > m_up) {
        m_up = s;
        bi = n + i;
      }
      if (a[n + i] < C && s < m_low) {
        m_low = s;
        bj = n + i;
      }
    }
    residual = m_up - m_low;
  };

  select_pair();
  while (true) {
    if (bi == 2 * n || bj == 2 * n || residual <= opts.tol) break;
    if (iter >= opts.max_iterations) {
      capped = true;  // keep the best-so-far solution, warn via the flag
      break;
    }
    ++iter;

    const std::size_t ui = bi % n, uj = bj % n;
    const bool zi_pos = bi < n, zj_pos = bj < n;
    double eta = K[ui * n + ui] + K[uj * n + uj] - 2.0 * K[ui * n + uj];
    if (eta < 1e-12) eta = 1e-12;
    double delta = residual / eta;
    // Box caps for a_i moving by +z_i*delta and a_j by -z_j*delta.
    delta = std::min(delta, zi_pos ? C - a[bi] : a[bi]);
    delta = std::min(delta, zj_pos ? a[bj] : C - a[bj]);
    a[bi] += zi_pos ? delta : -delta;
    a[bj] -= zj_pos ? delta : -delta;

    const double* Ki = &K[ui * n];
    const double* Kj = &K[uj * n];
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    bi = bj = 2 * n;
    for (std::size_t p = 0; p < n; ++p) {
      const double step = delta * (Ki[p] - Kj[p]);
      const double g = G[p] + step;
      G[p] = g;
      const double s = -g;
      if (a[p] < C && s > m_up) {
        m_up = s;
        bi = p;
      }
      if (a[p] > 0.0 && s < m_low) {
        m_low = s;
        bj = p;
      }
    }
    for (std::size_t p = 0; p < n; ++p) {
      const double step = delta * (Ki[p] - Kj[p]);
      const double g = G[n + p] - step;
      G[n + p] = g;
      if (a[n + p] > 0.0 && g > m_up) {
        m_up = g;
        bi = n + p;
      }
      if (a[n + p] < C && g < m_low) {
        m_low = g;
        bj = n + p;
      }
    }
    residual = m_up - m_low;
  }

  // Bias from the free variables, or the midpoint of the violating bounds.
  double bias;
  {
    double sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i] > 0.0 && a[i] < C) {
        sum += -G[i];
        ++free_count;
      }
      if (a[n + i] > 0.0 && a[n + i] < C) {
        sum += G[n + i];
        ++free_count;
      }
    }
    if (free_count > 0) {
      bias = sum / static_cast<double>(free_count);
    } else {
      double m_up = -std::numeric_limits<double>::infinity();
      double m_low = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (a[i] < C) m_up = std::max(m_up, -G[i]);
        if (a[i] > 0.0) m_low = std::min(m_low, -G[i]);
        if (a[n + i] > 0.0) m_up = std::max(m_up, G[n + i]);
        if (a[n + i] < C) m_low = std::min(m_low, G[n + i]);
      }
      bias = (m_up + m_low) / 2.0;
    }
  }

  TrainedModel model;
  model.hp = hp;
  model.bias = bias;
  model.standardizer = identity_standardizer(X.front().size());
  model.kkt_residual = std::max(residual, 0.0);
  model.iterations = iter;
  model.iteration_capped = capped;
  for (std::size_t i = 0; i < n; ++i) {
    const double beta = a[i] - a[n + i];
    if (beta != 0.0) {
      model.support.push_back(X[i]);
      model.coef.push_back(beta);
    }
  }
  return model;
}

}  // namespace

TrainedModel train_svr(const std::vector<std::vector<double>>& X,
                       const std::vector<double>& y, const SvrHyperparams& hp,
                       const SmoOptions& opts) {
  hp.validate();
  validate_training_data(X, y);
  const std::vector<double> K = kernel_matrix(X, hp.kernel_gamma);
  return train_svr_on_kernel(K, X, y, hp, opts);
}

TrainedModel fit_standardized(const std::vector<std::vector<double>>& raw_X,
                              const std::vector<double>& y,
                              const SvrHyperparams& hp,
                              const std::string& manifest_name,
                              const SmoOptions& opts) {
  auto standardizer = features::Standardizer::fit(raw_X);
  std::vector<std::vector<double>> X;
  X.reserve(raw_X.size());
  for (const auto& row : raw_X) X.push_back(standardizer.apply(row));
  TrainedModel m = train_svr(X, y, hp, opts);
  m.standardizer = std::move(standardizer);
  m.manifest_name = manifest_name;
  return m;
}

double kkt_residual_of(const TrainedModel& m,
                       const std::vector<std::vector<double>>& raw_X,
                       const std::vector<double>& y) {
  // For each training point, how far the residual strays outside what its
  // implied multiplier state allows. At the optimum this matches the
  // solver's violating-pair gap up to the bias placement.
  double worst = 0.0;
  std::vector<double> beta_of(raw_X.size(), 0.0);
  // Recover beta per training row by matching support rows.
  for (std::size_t i = 0; i < raw_X.size(); ++i) {
    const auto xs = m.standardizer.apply(raw_X[i]);
    for (std::size_t s = 0; s < m.support.size(); ++s) {
      if (m.support[s] == xs) {
        beta_of[i] = m.coef[s];
        break;
      }
    }
  }
  const double C = m.hp.C, eps = m.hp.epsilon;
  for (std::size_t i = 0; i < raw_X.size(); ++i) {
    const double r = y[i] - m.predict(raw_X[i]);
    const double b = beta_of[i];
    double viol = 0.0;
    if (b <= -C) {
      viol = std::max(0.0, r + eps);          // must sit at or below -eps
    } else if (b >= C) {
      viol = std::max(0.0, eps - r);          // must sit at or above +eps
    } else if (b > 0.0) {
      viol = std::abs(r - eps);
    } else if (b < 0.0) {
      viol = std::abs(r + eps);
    } else {
      viol = std::max(0.0, std::abs(r) - eps);
    }
    worst = std::max(worst, viol);
  }
  return worst;
}

GridSearchResult grid_search(const std::vector<std::vector<double>>& train_X,
                             const std::vector<double>& train_y,
                             const std::vector<std::vector<double>>& dev_X,
                             const std::vector<double>& dev_y,
                             const std::vector<SvrHyperparams>& grid,
                             const std::string& manifest_name,
                             const SmoOptions& opts) {
  if (grid.empty()) {
    throw std::invalid_argument("grid_search: empty grid");
  }
  validate_training_data(train_X, train_y);
  // Zero-variance dev labels make every candidate's r undefined.
  {
    const double first = dev_y.empty() ? 0.0 : dev_y.front();
    bool varies = false;
    for (double v : dev_y) varies = varies || v != first;
    if (!varies) {
      throw eval::UndefinedCorrelation(
          "grid_search: dev labels have zero variance");
    }
  }

  auto standardizer = features::Standardizer::fit(train_X);
  std::vector<std::vector<double>> X, D;
  X.reserve(train_X.size());
  for (const auto& row : train_X) X.push_back(standardizer.apply(row));
  D.reserve(dev_X.size());
  for (const auto& row : dev_X) D.push_back(standardizer.apply(row));

  // Squared distances once; one kernel per distinct gamma in the grid.
  const std::size_t n = X.size();
  std::vector<double> sqdist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t f = 0; f < X[i].size(); ++f) {
        const double d = X[i][f] - X[j][f];
        d2 += d * d;
      }
      sqdist[i * n + j] = d2;
      sqdist[j * n + i] = d2;
    }
  }
  double cached_gamma = -1.0;
  std::vector<double> K(n * n);
  auto kernel_for = [&](double gamma) -> const std::vector<double>& {
    if (gamma != cached_gamma) {
      for (std::size_t p = 0; p < n * n; ++p) K[p] = std::exp(-gamma * sqdist[p]);
      cached_gamma = gamma;
    }
    return K;
  };

  GridSearchResult out;
  bool have_best = false;
  double best_r = 0.0;
  for (const auto& hp : grid) {
    hp.validate();
    TrainedModel model =
        train_svr_on_kernel(kernel_for(hp.kernel_gamma), X, train_y, hp, opts);
    std::vector<double> pred;
    pred.reserve(D.size());
    for (const auto& x : D) pred.push_back(model.predict_standardized(x));
    GridCell cell{hp, std::nullopt};
    try {
      cell.dev_r = eval::pearson(pred, dev_y);
    } catch (const eval::UndefinedCorrelation&) {
      // Constant predictions on dev; the cell simply cannot win.
    }
    const double r = cell.dev_r.value_or(
        -std::numeric_limits<double>::infinity());
    auto prefer = [&] {
      if (!have_best) return true;
      if (r != best_r) return r > best_r;
      const auto& b = out.best;
      if (hp.C != b.C) return hp.C < b.C;
      if (hp.epsilon != b.epsilon) return hp.epsilon > b.epsilon;
      return hp.kernel_gamma < b.kernel_gamma;
    };
    if (prefer()) {
      have_best = true;
      best_r = r;
      out.best = hp;
      model.standardizer = standardizer;
      model.manifest_name = manifest_name;
      out.best_model = std::move(model);
    }
    out.cells.push_back(std::move(cell));
  }
  return out;
}

nlohmann::json model_to_json(const TrainedModel& m) {
  nlohmann::json j;
  j["format"] = "svr-v1";
  j["manifest"] = m.manifest_name;
  j["standardizer"] = {{"mean", m.standardizer.mean},
                       {"stddev", m.standardizer.stddev}};
  j["hyperparams"] = {{"C", m.hp.C},
                      {"epsilon", m.hp.epsilon},
                      {"kernel_gamma", m.hp.kernel_gamma}};
  j["duals"] = {{"support", m.support}, {"coef", m.coef}};
  j["bias"] = m.bias;
  return j;
}

TrainedModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "svr-v1") {
    throw std::runtime_error("model_from_json: unexpected format");
  }
  TrainedModel m;
  m.manifest_name = j.at("manifest").get<std::string>();
  j.at("standardizer").at("mean").get_to(m.standardizer.mean);
  j.at("standardizer").at("stddev").get_to(m.standardizer.stddev);
  m.hp.C = j.at("hyperparams").at("C").get<double>();
  m.hp.epsilon = j.at("hyperparams").at("epsilon").get<double>();
  m.hp.kernel_gamma = j.at("hyperparams").at("kernel_gamma").get<double>();
  j.at("duals").at("support").get_to(m.support);
  j.at("duals").at("coef").get_to(m.coef);
  m.bias = j.at("bias").get<double>();
  m.hp.validate();
  return m;
}

void save_model(const TrainedModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << model_to_json(m).dump(2) << "\n";
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  nlohmann::json j;
  in >> j;
  return model_from_json(j);
}

}  // namespace qe::svr
