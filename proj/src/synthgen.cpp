#include "clfa/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <utility>

#include "clfa/errors.hpp"
#include "clfa/metrics.hpp"
#include "clfa/model.hpp"
#include "clfa/select.hpp"

namespace clfa {

void SimDesign::validate() const {
  if (n < 2) throw UsageError("sim design: n must be >= 2");
  if (p < 2) throw UsageError("sim design: p must be >= 2");
  if (k_true < 1 || k_true >= p) throw UsageError("sim design: need 1 <= K_true < p");
  if (g_true < 1 || g_true > p) throw UsageError("sim design: need 1 <= G_true <= p");
  if (b < 1) throw UsageError("sim design: need at least one replicate");
  if (k_grid.empty() || g_grid.empty()) throw UsageError("sim design: empty evaluation grid");
  for (int k : k_grid)
    if (k < 1 || k >= p) throw UsageError("sim design: grid k out of range");
  for (int g : g_grid)
    if (g < 1 || g > p) throw UsageError("sim design: grid g out of range");
  if (!(loading_sigma > 0.0)) throw UsageError("sim design: loading_sigma must be positive");
  if (min_row_gap < 0.0) throw UsageError("sim design: negative row gap");
  if (!(psi_lo > 0.0) || psi_hi < psi_lo) throw UsageError("sim design: need 0 < psi_lo <= psi_hi");
  if (max_resample < 1) throw UsageError("sim design: max_resample must be >= 1");
}

MatrixXd Truth::covariance() const {
  return model_covariance(partition, loadings, psi);
}

MatrixXd Truth::correlation() const { return covariance_to_correlation(covariance()); }

Truth generate_truth(const SimDesign& design, Rng& rng) {
  design.validate();
  Truth truth;

  // symmetric multinomial allocation conditioned on all clusters occupied
  std::vector<int> assign(static_cast<std::size_t>(design.p));
  for (int attempt = 0;; ++attempt) {
    if (attempt >= design.max_resample)
      throw UsageError("generate_truth: could not draw a fully occupied partition");
    std::vector<int> occupancy(static_cast<std::size_t>(design.g_true), 0);
    for (int j = 0; j < design.p; ++j) {
      assign[static_cast<std::size_t>(j)] = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(design.g_true)));
      ++occupancy[static_cast<std::size_t>(assign[static_cast<std::size_t>(j)])];
    }
    if (*std::min_element(occupancy.begin(), occupancy.end()) >= 1) break;
  }
  truth.partition = Partition(assign, design.g_true);

  // loading rows with a minimum mutual gap, resampled row by row
  truth.loadings.values.resize(design.g_true, design.k_true);
  for (int g = 0; g < design.g_true; ++g) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= design.max_resample)
        throw UsageError("generate_truth: row separation infeasible; lower min_row_gap");
      for (int k = 0; k < design.k_true; ++k)
        truth.loadings.values(g, k) = design.loading_sigma * rng.normal();
      bool ok = true;
      for (int h = 0; h < g && ok; ++h)
        ok = (truth.loadings.values.row(g) - truth.loadings.values.row(h)).norm() >= design.min_row_gap;
      if (ok) break;
    }
  }

  truth.psi.psi.resize(design.p);
  for (int j = 0; j < design.p; ++j)
    truth.psi.psi[j] = design.psi_lo + (design.psi_hi - design.psi_lo) * rng.uniform();
  return truth;
}

DataMatrix generate_data(const Truth& truth, int n, Rng& rng) {
  if (n < 2) throw UsageError("generate_data: n must be >= 2");
  const Eigen::Index p = truth.psi.psi.size();
  const Eigen::Index k = truth.loadings.K();
  const MatrixXd lt = expand_loadings(truth.partition, truth.loadings);
  const VectorXd noise_sd = truth.psi.psi.cwiseSqrt();

  DataMatrix data;
  data.values.resize(n, p);
  VectorXd u(k);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index t = 0; t < k; ++t) u[t] = rng.normal();
    data.values.row(i) = (lt * u).transpose();
    for (Eigen::Index j = 0; j < p; ++j) data.values(i, j) += noise_sd[j] * rng.normal();
  }
  data.variable_labels.resize(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j)
    data.variable_labels[static_cast<std::size_t>(j)] = "v" + std::to_string(j + 1);
  center_columns(data);
  return data;
}

Truth perturb_truth(const Truth& truth, double loading_sd, double psi_jitter, Rng& rng) {
  if (loading_sd < 0.0 || psi_jitter < 0.0) throw UsageError("perturb_truth: negative noise scale");
  Truth out = truth;
  for (Eigen::Index g = 0; g < out.loadings.G(); ++g)
    for (Eigen::Index k = 0; k < out.loadings.K(); ++k)
      out.loadings.values(g, k) += loading_sd * rng.normal();
  for (Eigen::Index j = 0; j < out.psi.psi.size(); ++j)
    out.psi.psi[j] *= std::exp(psi_jitter * (2.0 * rng.uniform() - 1.0));
  return out;
}

std::size_t StudyReport::cell_index(int k, int g) const {
  const auto ki = std::find(design.k_grid.begin(), design.k_grid.end(), k);
  const auto gi = std::find(design.g_grid.begin(), design.g_grid.end(), g);
  if (ki == design.k_grid.end() || gi == design.g_grid.end())
    throw UsageError("study report: (k, g) not in the evaluation grid");
  return static_cast<std::size_t>(ki - design.k_grid.begin()) * design.g_grid.size() +
         static_cast<std::size_t>(gi - design.g_grid.begin());
}

StudyReport::CellSummary StudyReport::summarize(int k, int g) const {
  const std::size_t idx = cell_index(k, g);
  CellSummary s;
  s.k = k;
  s.g = g;
  std::vector<double> ari, mse, rv;
  for (const auto& rep : raw) {
    const CellMetrics& m = rep[idx];
    if (!m.ok) {
      ++s.n_fail;
      continue;
    }
    ari.push_back(m.ari);
    mse.push_back(m.mse);
    rv.push_back(m.rv);
  }
  s.n_ok = static_cast<int>(ari.size());
  auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
    if (v.empty()) return;
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    sd = 0.0;
    if (v.size() < 2) return;
    for (double x : v) sd += (x - mean) * (x - mean);
    sd = std::sqrt(sd / (static_cast<double>(v.size()) - 1.0));
  };
  mean_sd(ari, s.mean_ari, s.sd_ari);
  mean_sd(mse, s.mean_mse, s.sd_mse);
  mean_sd(rv, s.mean_rv, s.sd_rv);
  return s;
}

double StudyReport::selection_proportion(int k, int g) const {
  if (selections.empty()) return 0.0;
  int hits = 0;
  for (const auto& [sk, sg] : selections)
    if (sk == k && sg == g) ++hits;
  return static_cast<double>(hits) / static_cast<double>(selections.size());
}

namespace {

struct ReplicateOutcome {
  std::vector<CellMetrics> cells;
  int sel_k = 0, sel_g = 0;
  bool sel_ok = false;
};

ReplicateOutcome run_replicate(const SimDesign& design, const SamplerConfig& sampler_config,
                               int replicate) {
  ReplicateOutcome out;
  out.cells.resize(design.k_grid.size() * design.g_grid.size());

  Rng gen_rng(derive_seed(design.seed, {0x747275746866756cULL, static_cast<std::uint64_t>(replicate)}));
  const Truth truth = generate_truth(design, gen_rng);
  const DataMatrix data = generate_data(truth, design.n, gen_rng);
  const MatrixXd true_corr = truth.correlation();

  std::size_t idx = 0;
  for (int k : design.k_grid) {
    for (int g : design.g_grid) {
      CellMetrics& cell = out.cells[idx++];
      try {
        SamplerConfig cfg = sampler_config;
        cfg.seed = derive_seed(design.seed, {static_cast<std::uint64_t>(replicate),
                                             static_cast<std::uint64_t>(k),
                                             static_cast<std::uint64_t>(g)});
        ChainTrace trace = run_chain(data, k, g, make_hyperparameters(data), cfg,
                                     make_initial_state(data, k, g));
        const PointEstimates est = point_estimates(trace);
        cell.ari = adjusted_rand_index(truth.partition.assignment, est.partition.assignment);
        cell.mse = correlation_mse(true_corr, est.correlation);
        cell.rv = rv_coefficient(true_corr, est.correlation);
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  }

  try {
    const InitSelection sel = initialize_kg(data, design.sel_k_max, design.sel_g_max);
    out.sel_k = sel.k_init;
    out.sel_g = sel.g_init;
    out.sel_ok = true;
  } catch (const std::exception&) {
    out.sel_ok = false;
  }
  return out;
}

}  // namespace

StudyReport run_study(const SimDesign& design, const SamplerConfig& sampler_config,
                      int max_threads) {
  design.validate();
  sampler_config.validate();

  StudyReport report;
  report.design = design;
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(design.b));

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const unsigned n_threads = std::min<unsigned>(
      max_threads > 0 ? static_cast<unsigned>(max_threads) : hw,
      static_cast<unsigned>(design.b));

  auto worker = [&](unsigned tid) {
    for (int rep = static_cast<int>(tid); rep < design.b; rep += static_cast<int>(n_threads))
      outcomes[static_cast<std::size_t>(rep)] = run_replicate(design, sampler_config, rep);
  };
  if (n_threads <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }

  for (auto& outcome : outcomes) {
    report.raw.push_back(std::move(outcome.cells));
    if (outcome.sel_ok) report.selections.emplace_back(outcome.sel_k, outcome.sel_g);
  }
  return report;
}

}  // namespace clfa
