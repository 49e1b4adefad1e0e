#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "clfa/errors.hpp"
#include "clfa/pipeline.hpp"

using nlohmann::json;

namespace {

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(std::stoi(cur));
      cur.clear();
    }
  };
  for (char c : csv) {
    if (c == ',') {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  if (out.empty()) throw clfa::UsageError("empty integer list: '" + csv + "'");
  return out;
}

void load_design_file(const std::string& path, clfa::SimDesign& design,
                      clfa::SamplerConfig& sampler) {
  std::ifstream in(path);
  if (!in) throw clfa::DataError("cannot open design file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw clfa::DataError(path + ": " + e.what());
  }
  auto get = [&](const char* key, auto& slot) {
    if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
  };
  get("n", design.n);
  get("p", design.p);
  get("k_true", design.k_true);
  get("g_true", design.g_true);
  get("b", design.b);
  get("seed", design.seed);
  get("k_grid", design.k_grid);
  get("g_grid", design.g_grid);
  get("sel_k_max", design.sel_k_max);
  get("sel_g_max", design.sel_g_max);
  get("loading_sigma", design.loading_sigma);
  get("min_row_gap", design.min_row_gap);
  get("psi_lo", design.psi_lo);
  get("psi_hi", design.psi_hi);
  get("n_iter", sampler.n_iter);
  get("burn_in", sampler.burn_in);
  get("thin", sampler.thin);
  get("moves_per_sweep", sampler.moves_per_sweep);
}

int dispatch(CLI::App& app, int argc, char** argv) {
  // --- simulate ---------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "replicated synthetic study (grid tables)");
  clfa::SimulateOptions sim_opts;
  sim_opts.design.b = 20;
  sim_opts.sampler.n_iter = 1500;
  sim_opts.sampler.burn_in = 500;
  sim_opts.sampler.thin = 5;
  std::string design_path, k_grid_str, g_grid_str;
  sim->add_option("--design", design_path, "design JSON file (CLI flags override it)");
  sim->add_option("--out", sim_opts.out_dir, "output directory")->required();
  sim->add_option("--b", sim_opts.design.b, "replicates");
  sim->add_option("--n", sim_opts.design.n, "observations per replicate");
  sim->add_option("--p", sim_opts.design.p, "variables");
  sim->add_option("--k-true", sim_opts.design.k_true, "true factor count");
  sim->add_option("--g-true", sim_opts.design.g_true, "true cluster count");
  sim->add_option("--seed", sim_opts.design.seed, "base seed");
  sim->add_option("--k-grid", k_grid_str, "comma-separated K grid");
  sim->add_option("--g-grid", g_grid_str, "comma-separated G grid");
  sim->add_option("--iters", sim_opts.sampler.n_iter, "sweeps per chain");
  sim->add_option("--burn-in", sim_opts.sampler.burn_in, "burn-in sweeps");
  sim->add_option("--thin", sim_opts.sampler.thin, "thinning stride");
  sim->add_option("--moves-per-sweep", sim_opts.sampler.moves_per_sweep,
                  "Z-move attempts per sweep (0 = p/10)");
  sim->add_option("--threads", sim_opts.max_threads, "max worker threads (0 = hardware)");

  // --- fit ----------------------------------------------------------------
  auto* fit = app.add_subcommand("fit", "ingest spectra and fit per group");
  clfa::FitOptions fit_opts;
  std::string bands_arg = "defaults";
  std::vector<std::string> label_map_args;
  fit->add_option("--input", fit_opts.input_path, "input CSV")->required();
  fit->add_option("--out", fit_opts.out_dir, "output directory")->required();
  fit->add_option("--group-by", fit_opts.ingest.group_by, "grouping column");
  fit->add_option("--exclude-bands", bands_arg, "'defaults', 'none', or a bands file");
  fit->add_option("--label-map", label_map_args, "group relabeling FROM=TO (repeatable)");
  fit->add_flag("--transpose", fit_opts.ingest.transpose, "input rows are wavelengths");
  fit->add_option("--kmax", fit_opts.k_max, "max factors for initialization");
  fit->add_option("--gmax", fit_opts.g_max, "max clusters for initialization (0 = min(p,30))");
  fit->add_option("--iters", fit_opts.sampler.n_iter, "sweeps per chain");
  fit->add_option("--burn-in", fit_opts.sampler.burn_in, "burn-in sweeps");
  fit->add_option("--thin", fit_opts.sampler.thin, "thinning stride");
  fit->add_option("--seed", fit_opts.sampler.seed, "base seed");
  fit->add_option("--moves-per-sweep", fit_opts.sampler.moves_per_sweep,
                  "Z-move attempts per sweep (0 = p/10)");
  fit->add_option("--budget", fit_opts.search.budget, "greedy search rings");
  fit->add_flag("--axis-neighbors", fit_opts.search.axis_neighbors,
                "also search (K±1,G) and (K,G±1)");
  fit->add_option("--sigma-lambda", fit_opts.sigma_lambda, "loading prior sd");
  fit->add_option("--alpha", fit_opts.alpha, "uniqueness prior shape");
  fit->add_option("--alpha-z", fit_opts.alpha_z, "partition cohesion mass");
  fit->add_option("--threads", fit_opts.max_threads, "max worker threads (0 = hardware)");

  // --- compare -------------------------------------------------------------
  auto* cmp = app.add_subcommand("compare", "compare two fitted groups");
  clfa::CompareOptions cmp_opts;
  std::string range_arg;
  cmp->add_option("--a", cmp_opts.dir_a, "first group directory")->required();
  cmp->add_option("--b", cmp_opts.dir_b, "second group directory")->required();
  cmp->add_option("--range", range_arg, "variable index range lo:hi (1-based)");
  cmp->add_option("--out", cmp_opts.out_dir, "write comparison files here");

  // --- regress ---------------------------------------------------------------
  auto* reg = app.add_subcommand("regress", "per-cluster trait regressions");
  clfa::RegressOptions reg_opts;
  reg->add_option("--fit", reg_opts.fit_dir, "fitted group directory")->required();
  reg->add_option("--responses", reg_opts.responses_path, "trait CSV, one row per input sample")
      ->required();
  reg->add_option("--out", reg_opts.out_dir, "output directory (default: fit dir)");

  app.require_subcommand(1);
  app.parse(argc, argv);

  if (sim->parsed()) {
    if (!design_path.empty()) load_design_file(design_path, sim_opts.design, sim_opts.sampler);
    // re-apply CLI overrides on top of the file
    if (!k_grid_str.empty()) sim_opts.design.k_grid = parse_int_list(k_grid_str);
    if (!g_grid_str.empty()) sim_opts.design.g_grid = parse_int_list(g_grid_str);
    const clfa::StudyReport report = clfa::run_simulate(sim_opts);
    std::cout << "simulate: " << report.raw.size() << " replicates -> " << sim_opts.out_dir << "\n";
    for (int k : report.design.k_grid)
      for (int g : report.design.g_grid) {
        const auto s = report.summarize(k, g);
        std::printf("  (K=%d,G=%d)  ARI %.3f (%.3f)  MSE %.4f (%.4f)  RV %.3f (%.3f)  [%d ok, %d failed]\n",
                    k, g, s.mean_ari, s.sd_ari, s.mean_mse, s.sd_mse, s.mean_rv, s.sd_rv, s.n_ok,
                    s.n_fail);
      }
    return 0;
  }
  if (fit->parsed()) {
    if (bands_arg == "defaults") {
      fit_opts.ingest.exclusion_bands = clfa::default_exclusion_bands();
    } else if (bands_arg == "none") {
      fit_opts.ingest.exclusion_bands.clear();
    } else {
      fit_opts.ingest.exclusion_bands = clfa::read_bands_file(bands_arg);
    }
    for (const std::string& m : label_map_args) {
      const std::size_t eq = m.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == m.size())
        throw clfa::UsageError("--label-map needs FROM=TO, got '" + m + "'");
      fit_opts.ingest.label_map[m.substr(0, eq)] = m.substr(eq + 1);
    }
    const auto summaries = clfa::run_fit(fit_opts);
    bool any_ok = false;
    for (const auto& s : summaries) {
      if (s.ok) {
        any_ok = true;
        std::printf("fit %s: K=%d G=%d  MSE(sample)=%.4f RV(sample)=%.4f  accept=%.3f -> %s\n",
                    s.group.c_str(), s.k, s.g, s.mse_vs_sample, s.rv_vs_sample,
                    s.acceptance_rate, s.dir.c_str());
      } else {
        std::fprintf(stderr, "fit %s FAILED: %s\n", s.group.c_str(), s.error.c_str());
      }
    }
    if (!any_ok) throw clfa::NumericError("all groups failed");
    return 0;
  }
  if (cmp->parsed()) {
    if (!range_arg.empty()) {
      const std::size_t colon = range_arg.find(':');
      if (colon == std::string::npos)
        throw clfa::UsageError("--range needs lo:hi, got '" + range_arg + "'");
      cmp_opts.has_range = true;
      cmp_opts.range_lo = std::stoi(range_arg.substr(0, colon));
      cmp_opts.range_hi = std::stoi(range_arg.substr(colon + 1));
    }
    const clfa::ComparisonReport rep = clfa::run_compare(cmp_opts);
    std::printf("compare: %d variables  ARI=%.4f  MSE=%.4f  RV=%.4f\n", rep.n_variables,
                rep.tabulation.ari, rep.mse, rep.rv);
    for (Eigen::Index i = 0; i < rep.tabulation.confusion.rows(); ++i) {
      std::string line = "  a" + std::to_string(rep.tabulation.row_labels[static_cast<std::size_t>(i)]) + ":";
      for (Eigen::Index j = 0; j < rep.tabulation.confusion.cols(); ++j)
        line += " " + std::to_string(rep.tabulation.confusion(i, j));
      std::cout << line << "\n";
    }
    return 0;
  }
  if (reg->parsed()) {
    const clfa::RegressReport rep = clfa::run_regress(reg_opts);
    const std::string out = reg_opts.out_dir.empty() ? reg_opts.fit_dir : reg_opts.out_dir;
    std::cout << "regress: " << rep.responses.size() << " responses x " << rep.partition.G
              << " clusters -> " << out << "/regression.csv\n";
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clustered-loading Bayesian factor analysis"};
  app.set_version_flag("--version", clfa::kToolVersion);
  try {
    return dispatch(app, argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const clfa::UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const clfa::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const clfa::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}
