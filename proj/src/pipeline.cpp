#include "clfa/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>
#include <utility>

#include <nlohmann/json.hpp>

#include "clfa/csv.hpp"
#include "clfa/errors.hpp"
#include "clfa/model.hpp"
#include "clfa/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace clfa {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::string> file_comments(std::uint64_t seed, const std::string& config_hash) {
  return {std::string("# clfa ") + kToolVersion, "# seed " + std::to_string(seed),
          "# config " + config_hash};
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed for " + path);
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return j;
}

std::string opt_str(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

json fit_config_json(const FitOptions& opts) {
  json bands = json::array();
  for (const Band& b : opts.ingest.exclusion_bands) bands.push_back({b.lo, b.hi});
  return json{{"command", "fit"},
              {"group_by", opts.ingest.group_by},
              {"exclusion_bands", bands},
              {"label_map", opts.ingest.label_map},
              {"transpose", opts.ingest.transpose},
              {"k_max", opts.k_max},
              {"g_max", opts.g_max},
              {"n_iter", opts.sampler.n_iter},
              {"burn_in", opts.sampler.burn_in},
              {"thin", opts.sampler.thin},
              {"seed", opts.sampler.seed},
              {"moves_per_sweep", opts.sampler.moves_per_sweep},
              {"distance_epsilon", opts.sampler.distance_epsilon},
              {"budget", opts.search.budget},
              {"axis_neighbors", opts.search.axis_neighbors},
              {"sigma_lambda", opts.sigma_lambda},
              {"alpha", opts.alpha},
              {"alpha_z", opts.alpha_z}};
}

// occupied cluster ids, ascending, renumbered 1..G_occ for serialization
std::vector<int> compact_one_based(const Partition& partition) {
  std::vector<int> remap(static_cast<std::size_t>(partition.G), 0);
  int next = 0;
  for (int g = 0; g < partition.G; ++g)
    if (partition.occupancy[static_cast<std::size_t>(g)] > 0) remap[static_cast<std::size_t>(g)] = ++next;
  std::vector<int> out(partition.assignment.size());
  for (std::size_t j = 0; j < partition.assignment.size(); ++j)
    out[j] = remap[static_cast<std::size_t>(partition.assignment[j])];
  return out;
}

struct GroupArtifacts {
  GroupFitSummary summary;
  json summary_json;
};

GroupArtifacts analyze_group(const std::string& group, const GroupData& gd, const FitOptions& opts,
                             std::size_t input_rows, const std::string& config_hash) {
  GroupArtifacts art;
  art.summary.group = group;
  const std::string dir = (fs::path(opts.out_dir) / group).string();
  art.summary.dir = dir;
  ensure_dir(dir);

  const DataMatrix& data = gd.data;
  const Hyperparameters hyper =
      make_hyperparameters(data, opts.sigma_lambda, opts.alpha, opts.alpha_z);
  SamplerConfig cfg = opts.sampler;
  cfg.seed = derive_seed(opts.sampler.seed, {fnv1a64(group)});

  const InitSelection sel = initialize_kg(data, opts.k_max, opts.g_max);
  const FitResult fit = greedy_search(data, sel.k_init, sel.g_init, hyper, cfg, opts.search);

  const double n = static_cast<double>(data.n());
  const MatrixXd sample_corr = covariance_to_correlation(data.values.transpose() * data.values / n);
  art.summary.k = fit.k;
  art.summary.g = fit.g;
  art.summary.mse_vs_sample = correlation_mse(sample_corr, fit.estimates.correlation);
  art.summary.rv_vs_sample = rv_coefficient(sample_corr, fit.estimates.correlation);
  art.summary.acceptance_rate = fit.trace.acceptance_rate();

  const auto comments = file_comments(opts.sampler.seed, config_hash);
  const auto& labels = data.variable_labels;

  write_matrix_csv(dir + "/correlation.csv", comments, fit.estimates.correlation, labels,
                   std::make_pair(std::string("variable"), labels));
  write_matrix_csv(dir + "/coclustering.csv", comments, fit.estimates.coclustering, labels,
                   std::make_pair(std::string("variable"), labels));

  const std::vector<int> cluster_ids = compact_one_based(fit.estimates.partition);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t j = 0; j < labels.size(); ++j)
    rows.push_back({labels[j], std::to_string(cluster_ids[j])});
  write_csv(dir + "/partition.csv", comments, {"variable", "cluster"}, rows);

  rows.clear();
  for (const InitCandidate& c : sel.candidates)
    rows.push_back({std::to_string(c.k), std::to_string(c.g), format_double(c.bic)});
  write_csv(dir + "/init_candidates.csv", comments, {"k", "g", "bic"}, rows);

  rows.clear();
  for (const ModelScore& s : fit.history)
    rows.push_back({std::to_string(s.k), std::to_string(s.g), opt_str(s.bicm), opt_str(s.aicm),
                    opt_str(s.bic_mcmc)});
  write_csv(dir + "/criteria.csv", comments, {"k", "g", "bicm", "aicm", "bic_mcmc"}, rows);

  rows.clear();
  for (std::size_t t = 0; t < fit.trace.loglik_trace.size(); ++t)
    rows.push_back({std::to_string(t + 1), format_double(fit.trace.loglik_trace[t])});
  write_csv(dir + "/loglik_trace.csv", comments, {"sweep", "loglik"}, rows);

  rows.clear();
  for (std::size_t j = 0; j < labels.size(); ++j)
    rows.push_back({labels[j], format_double(fit.estimates.psi_mean[static_cast<Eigen::Index>(j)])});
  write_csv(dir + "/psi.csv", comments, {"variable", "psi_mean"}, rows);

  std::vector<std::string> factor_labels;
  for (Eigen::Index k = 0; k < fit.estimates.loadings_mean.cols(); ++k)
    factor_labels.push_back("factor" + std::to_string(k + 1));
  auto loadings_comments = comments;
  loadings_comments.push_back(
      "# raw posterior mean of Lambda_c: labels and rotation are not identified across draws");
  write_matrix_csv(dir + "/loadings_mean.csv", loadings_comments, fit.estimates.loadings_mean,
                   factor_labels);

  std::vector<std::string> row_ids(static_cast<std::size_t>(data.n()));
  for (std::size_t i = 0; i < row_ids.size(); ++i) row_ids[i] = std::to_string(gd.row_indices[i]);
  write_matrix_csv(dir + "/centered_data.csv", comments, data.values, labels,
                   std::make_pair(std::string("row_index"), row_ids));

  json criteria;
  criteria["bicm"] = fit.score.bicm ? json(*fit.score.bicm) : json();
  criteria["aicm"] = fit.score.aicm ? json(*fit.score.aicm) : json();
  criteria["bic_mcmc"] = fit.score.bic_mcmc ? json(*fit.score.bic_mcmc) : json();
  art.summary_json = json{{"group", group},
                          {"version", kToolVersion},
                          {"config", config_hash},
                          {"seed", opts.sampler.seed},
                          {"n", data.n()},
                          {"p", data.p()},
                          {"input_rows", input_rows},
                          {"k", fit.k},
                          {"g", fit.g},
                          {"g_occupied", fit.estimates.partition.occupied_count()},
                          {"k_init", sel.k_init},
                          {"g_init", sel.g_init},
                          {"criteria", criteria},
                          {"mse_vs_sample_correlation", art.summary.mse_vs_sample},
                          {"rv_vs_sample_correlation", art.summary.rv_vs_sample},
                          {"z_move_acceptance_rate", art.summary.acceptance_rate},
                          {"loadings_label_variant", true}};
  write_json(dir + "/summary.json", art.summary_json);
  art.summary.ok = true;
  return art;
}

}  // namespace

std::vector<GroupFitSummary> run_fit(const FitOptions& opts) {
  if (opts.input_path.empty() || opts.out_dir.empty())
    throw UsageError("fit: input path and output directory are required");
  opts.sampler.validate();
  ensure_dir(opts.out_dir);

  const std::string config_hash = hex64(fnv1a64(fit_config_json(opts).dump()));
  const auto groups = ingest_csv(opts.input_path, opts.ingest);
  std::size_t input_rows = 0;
  for (const auto& [name, gd] : groups) input_rows += gd.row_indices.size();

  std::vector<std::pair<std::string, const GroupData*>> order;
  for (const auto& [name, gd] : groups) order.emplace_back(name, &gd);
  std::vector<GroupFitSummary> summaries(order.size());

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const unsigned n_threads = std::min<unsigned>(
      opts.max_threads > 0 ? static_cast<unsigned>(opts.max_threads) : hw,
      static_cast<unsigned>(order.size()));
  auto worker = [&](unsigned tid) {
    for (std::size_t i = tid; i < order.size(); i += n_threads) {
      try {
        summaries[i] = analyze_group(order[i].first, *order[i].second, opts, input_rows, config_hash).summary;
      } catch (const std::exception& e) {
        summaries[i].group = order[i].first;
        summaries[i].ok = false;
        summaries[i].error = e.what();
      }
    }
  };
  if (n_threads <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }

  json group_entries = json::array();
  for (const GroupFitSummary& s : summaries) {
    json e{{"group", s.group}, {"ok", s.ok}};
    if (s.ok) {
      e["k"] = s.k;
      e["g"] = s.g;
      e["dir"] = fs::path(s.dir).filename().string();
    } else {
      e["error"] = s.error;
    }
    group_entries.push_back(e);
  }
  write_json((fs::path(opts.out_dir) / "manifest.json").string(),
             json{{"version", kToolVersion},
                  {"command", "fit"},
                  {"config", config_hash},
                  {"options", fit_config_json(opts)},
                  {"input", fs::path(opts.input_path).filename().string()},
                  {"input_rows", input_rows},
                  {"groups", group_entries}});
  return summaries;
}

StudyReport run_simulate(const SimulateOptions& opts) {
  if (opts.out_dir.empty()) throw UsageError("simulate: output directory is required");
  ensure_dir(opts.out_dir);
  const StudyReport report = run_study(opts.design, opts.sampler, opts.max_threads);

  json design_json{{"n", opts.design.n},
                   {"p", opts.design.p},
                   {"k_true", opts.design.k_true},
                   {"g_true", opts.design.g_true},
                   {"b", opts.design.b},
                   {"seed", opts.design.seed},
                   {"k_grid", opts.design.k_grid},
                   {"g_grid", opts.design.g_grid},
                   {"sel_k_max", opts.design.sel_k_max},
                   {"sel_g_max", opts.design.sel_g_max},
                   {"loading_sigma", opts.design.loading_sigma},
                   {"min_row_gap", opts.design.min_row_gap},
                   {"psi_lo", opts.design.psi_lo},
                   {"psi_hi", opts.design.psi_hi},
                   {"n_iter", opts.sampler.n_iter},
                   {"burn_in", opts.sampler.burn_in},
                   {"thin", opts.sampler.thin},
                   {"moves_per_sweep", opts.sampler.moves_per_sweep}};
  const std::string config_hash = hex64(fnv1a64(design_json.dump()));
  const auto comments = file_comments(opts.design.seed, config_hash);

  auto write_metric_table = [&](const std::string& name, auto mean_of, auto sd_of) {
    std::vector<std::vector<std::string>> rows;
    for (int k : report.design.k_grid)
      for (int g : report.design.g_grid) {
        const auto s = report.summarize(k, g);
        rows.push_back({std::to_string(k), std::to_string(g), format_double(mean_of(s)),
                        format_double(sd_of(s)), std::to_string(s.n_ok), std::to_string(s.n_fail)});
      }
    write_csv((fs::path(opts.out_dir) / name).string(), comments,
              {"k", "g", "mean", "sd", "n_ok", "n_fail"}, rows);
  };
  using S = StudyReport::CellSummary;
  write_metric_table("table_ari.csv", [](const S& s) { return s.mean_ari; },
                     [](const S& s) { return s.sd_ari; });
  write_metric_table("table_mse.csv", [](const S& s) { return s.mean_mse; },
                     [](const S& s) { return s.sd_mse; });
  write_metric_table("table_rv.csv", [](const S& s) { return s.mean_rv; },
                     [](const S& s) { return s.sd_rv; });

  std::map<std::pair<int, int>, int> counts;
  for (const auto& kg : report.selections) ++counts[kg];
  std::vector<std::vector<std::string>> rows;
  for (const auto& [kg, count] : counts)
    rows.push_back({std::to_string(kg.first), std::to_string(kg.second), std::to_string(count),
                    format_double(static_cast<double>(count) /
                                  static_cast<double>(report.selections.size()))});
  write_csv((fs::path(opts.out_dir) / "table_selection.csv").string(), comments,
            {"k", "g", "count", "proportion"}, rows);

  write_json((fs::path(opts.out_dir) / "manifest.json").string(),
             json{{"version", kToolVersion},
                  {"command", "simulate"},
                  {"config", config_hash},
                  {"options", design_json},
                  {"replicates_completed", report.raw.size()},
                  {"selection_runs", report.selections.size()}});
  return report;
}

namespace {

struct LoadedFit {
  std::vector<std::string> labels;
  MatrixXd correlation;
  std::vector<int> assignment;  // 1-based ids from file
};

LoadedFit load_fit_dir(const std::string& dir) {
  LoadedFit lf;
  lf.correlation = read_matrix_csv((fs::path(dir) / "correlation.csv").string(), true, &lf.labels);
  const CsvTable part = read_csv((fs::path(dir) / "partition.csv").string());
  if (part.header != std::vector<std::string>{"variable", "cluster"})
    throw DataError(dir + "/partition.csv: unexpected header");
  if (part.rows.size() != lf.labels.size())
    throw DataError(dir + ": partition and correlation disagree on variable count");
  for (std::size_t j = 0; j < part.rows.size(); ++j) {
    if (part.rows[j][0] != lf.labels[j])
      throw DataError(dir + ": partition variable order disagrees with correlation");
    lf.assignment.push_back(static_cast<int>(parse_double(part.rows[j][1], "cluster id")));
  }
  return lf;
}

}  // namespace

ComparisonReport run_compare(const CompareOptions& opts) {
  if (opts.dir_a.empty() || opts.dir_b.empty()) throw UsageError("compare: both directories required");
  const LoadedFit a = load_fit_dir(opts.dir_a);
  const LoadedFit b = load_fit_dir(opts.dir_b);

  if (a.labels != b.labels) {
    std::set<std::string> sa(a.labels.begin(), a.labels.end());
    std::set<std::string> sb(b.labels.begin(), b.labels.end());
    std::string diff;
    for (const auto& l : sa)
      if (!sb.count(l)) diff += " -" + l;
    for (const auto& l : sb)
      if (!sa.count(l)) diff += " +" + l;
    if (diff.empty()) diff = " (same set, different order)";
    throw UsageError("compare: variable labels differ:" + diff);
  }

  Eigen::Index lo = 0, len = a.correlation.rows();
  if (opts.has_range) {
    if (opts.range_lo < 1 || opts.range_hi < opts.range_lo ||
        opts.range_hi > a.correlation.rows())
      throw UsageError("compare: range out of bounds");
    lo = opts.range_lo - 1;
    len = opts.range_hi - opts.range_lo + 1;
  }
  const MatrixXd ra = a.correlation.block(lo, lo, len, len);
  const MatrixXd rb = b.correlation.block(lo, lo, len, len);
  const std::vector<int> pa(a.assignment.begin() + lo, a.assignment.begin() + lo + len);
  const std::vector<int> pb(b.assignment.begin() + lo, b.assignment.begin() + lo + len);

  ComparisonReport rep;
  rep.tabulation = cross_tabulate(pa, pb);
  rep.mse = correlation_mse(ra, rb);
  rep.rv = rv_coefficient(ra, rb);
  rep.n_variables = static_cast<int>(len);

  if (!opts.out_dir.empty()) {
    ensure_dir(opts.out_dir);
    json j{{"version", kToolVersion},
           {"command", "compare"},
           {"a", opts.dir_a},
           {"b", opts.dir_b},
           {"n_variables", rep.n_variables},
           {"ari", rep.tabulation.ari},
           {"mse", rep.mse},
           {"rv", rep.rv}};
    if (opts.has_range) j["range"] = {opts.range_lo, opts.range_hi};
    write_json((fs::path(opts.out_dir) / "comparison.json").string(), j);

    std::vector<std::string> header{"cluster_a"};
    for (int cb : rep.tabulation.col_labels) header.push_back("b" + std::to_string(cb));
    std::vector<std::vector<std::string>> rows;
    for (Eigen::Index i = 0; i < rep.tabulation.confusion.rows(); ++i) {
      std::vector<std::string> row{std::to_string(rep.tabulation.row_labels[static_cast<std::size_t>(i)])};
      for (Eigen::Index jcol = 0; jcol < rep.tabulation.confusion.cols(); ++jcol)
        row.push_back(std::to_string(rep.tabulation.confusion(i, jcol)));
      rows.push_back(std::move(row));
    }
    write_csv((fs::path(opts.out_dir) / "confusion.csv").string(), {}, header, rows);
  }
  return rep;
}

RegressReport run_regress(const RegressOptions& opts) {
  if (opts.fit_dir.empty() || opts.responses_path.empty())
    throw UsageError("regress: fit directory and responses file required");
  const std::string out_dir = opts.out_dir.empty() ? opts.fit_dir : opts.out_dir;

  std::vector<std::string> labels;
  const MatrixXd values =
      read_matrix_csv((fs::path(opts.fit_dir) / "centered_data.csv").string(), true, &labels);
  const CsvTable data_table = read_csv((fs::path(opts.fit_dir) / "centered_data.csv").string());
  std::vector<int> row_indices;
  for (const auto& row : data_table.rows)
    row_indices.push_back(static_cast<int>(parse_double(row[0], "row_index")));

  const LoadedFit lf = load_fit_dir(opts.fit_dir);
  if (lf.labels != labels)
    throw DataError(opts.fit_dir + ": centered_data and partition label mismatch");
  std::vector<int> assign0(lf.assignment.size());
  int g_max = 0;
  for (std::size_t j = 0; j < lf.assignment.size(); ++j) {
    assign0[j] = lf.assignment[j] - 1;
    g_max = std::max(g_max, lf.assignment[j]);
  }

  const json summary = read_json((fs::path(opts.fit_dir) / "summary.json").string());
  const std::size_t input_rows = summary.at("input_rows").get<std::size_t>();

  DataMatrix data;
  data.values = values;
  data.variable_labels = labels;
  data.centered = true;

  RegressReport rep;
  rep.partition = Partition(assign0, g_max);

  const CsvTable resp = read_csv(opts.responses_path);
  if (resp.rows.size() != input_rows)
    throw UsageError("regress: responses have " + std::to_string(resp.rows.size()) +
                     " rows, the fitted input had " + std::to_string(input_rows));
  ensure_dir(out_dir);

  std::vector<std::vector<std::string>> out_rows;
  for (std::size_t c = 0; c < resp.header.size(); ++c) {
    VectorXd y(static_cast<Eigen::Index>(row_indices.size()));
    for (std::size_t i = 0; i < row_indices.size(); ++i) {
      const int src = row_indices[i];
      if (src < 0 || static_cast<std::size_t>(src) >= resp.rows.size())
        throw DataError("regress: row index " + std::to_string(src) + " outside responses");
      y[static_cast<Eigen::Index>(i)] =
          parse_double(resp.rows[static_cast<std::size_t>(src)][c], resp.header[c].c_str());
    }
    const ClusterRegression cr = cluster_regression(data, rep.partition, y);
    rep.responses.push_back(resp.header[c]);
    rep.fits.push_back(cr);
    for (int g = 0; g < rep.partition.G; ++g) {
      out_rows.push_back(
          {resp.header[c], std::to_string(g + 1),
           std::to_string(rep.partition.occupancy[static_cast<std::size_t>(g)]),
           cr.skipped[static_cast<std::size_t>(g)] ? "" : format_double(cr.adjusted_r2[g]),
           cr.skipped[static_cast<std::size_t>(g)] ? "1" : "0",
           cr.rank_deficient[static_cast<std::size_t>(g)] ? "1" : "0"});
    }
  }
  write_csv((fs::path(out_dir) / "regression.csv").string(), {},
            {"response", "cluster", "n_vars", "adjusted_r2", "skipped", "rank_deficient"},
            out_rows);
  return rep;
}

}  // namespace clfa
