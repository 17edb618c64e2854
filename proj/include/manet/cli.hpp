#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "manet/baseline.hpp"
#include "manet/diagnostics.hpp"
#include "manet/error.hpp"
#include "manet/experiments.hpp"
#include "manet/io.hpp"
#include "manet/sampler.hpp"
#include "manet/selection.hpp"
#include "manet/simgen.hpp"
#include "manet/version.hpp"

namespace manet::cli {

namespace detail {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

/// Flag values shared by the chain-running subcommands; unset flags fall back
/// to the config file, then to the built-in defaults.
struct ChainFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> data_path;
  std::optional<std::string> out_dir;
  std::optional<uint64_t> seed;
  std::optional<int> iterations;
  std::optional<int> burn_in;
  std::optional<int> thinning;
  std::optional<int> parents;
  std::optional<std::string> combiner;
  std::optional<double> prior_a;
  std::optional<double> prior_b1;
  std::optional<double> prior_b2;
  std::optional<int> threads;

  void add_common(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value configuration file");
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--iterations", iterations, "total Gibbs sweeps");
    cmd->add_option("--burn-in", burn_in, "discarded initial sweeps");
    cmd->add_option("--thin", thinning, "retain every thin-th sweep after burn-in");
    cmd->add_option("--out", out_dir, "output directory");
  }

  io::Config load_config() const {
    return config_path ? io::Config::from_file(*config_path) : io::Config{};
  }
};

template <typename T>
T pick(const std::optional<T>& flag, T from_config) {
  return flag ? *flag : from_config;
}

struct Resolved {
  ChainConfig chain;
  std::string data_path;
  std::string out_dir;
  int threads = 1;
  std::map<std::string, std::string> settings;
};

/// Merges defaults < config file < flags into an effective ChainConfig and
/// records the choices for the manifest echo.
inline Resolved resolve(const ChainFlags& flags, const io::Config& cfg) {
  Resolved r;
  r.chain.iterations = pick<int>(flags.iterations, (int)cfg.get_int("iterations", 30000));
  r.chain.burn_in = pick<int>(flags.burn_in, (int)cfg.get_int("burn_in", 15000));
  r.chain.thinning = pick<int>(flags.thinning, (int)cfg.get_int("thinning", 1));
  r.chain.seed = pick<uint64_t>(flags.seed, (uint64_t)cfg.get_int("seed", 0));
  r.chain.parents = pick<int>(flags.parents, (int)cfg.get_int("k", 2));
  r.chain.combiner =
      combiner_from_name(pick<std::string>(flags.combiner, cfg.get_string("combiner", "min")));
  r.chain.prior_a = pick<double>(flags.prior_a, cfg.get_double("dirichlet_a", 1.0));
  r.chain.prior_b1 = pick<double>(flags.prior_b1, cfg.get_double("beta_b1", 1.0));
  r.chain.prior_b2 = pick<double>(flags.prior_b2, cfg.get_double("beta_b2", 1.0));
  r.data_path = pick<std::string>(flags.data_path, cfg.get_string("data", ""));
  r.out_dir = pick<std::string>(flags.out_dir, cfg.get_string("out", ""));
  r.threads = pick<int>(flags.threads, (int)cfg.get_int("threads", 1));

  r.settings["iterations"] = std::to_string(r.chain.iterations);
  r.settings["burn_in"] = std::to_string(r.chain.burn_in);
  r.settings["thinning"] = std::to_string(r.chain.thinning);
  r.settings["k"] = std::to_string(r.chain.parents);
  r.settings["combiner"] = combiner_name(r.chain.combiner);
  r.settings["dirichlet_a"] = io::format_full(r.chain.prior_a);
  r.settings["beta_b1"] = io::format_full(r.chain.prior_b1);
  r.settings["beta_b2"] = io::format_full(r.chain.prior_b2);
  return r;
}

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

inline io::RunManifest make_manifest(const std::string& command, const Resolved& r,
                                     const Timer& timer) {
  io::RunManifest m;
  m.command = command;
  m.seed = r.chain.seed;
  m.duration_seconds = timer.seconds();
  m.input_path = r.data_path;
  if (!r.data_path.empty()) m.input_digest = io::digest_file(r.data_path);
  m.settings = r.settings;
  return m;
}

inline void print_cluster_sizes(std::ostream& os, const MembershipMatrix& u,
                                const ClusteringLabels& labels) {
  std::vector<int> sizes(u.heirs(), 0);
  for (int label : labels) ++sizes[label];
  os << "heir  parents  units\n";
  for (int h = 0; h < u.heirs(); ++h)
    os << h + 1 << "     " << u.subset_label(h) << "       " << sizes[h] << "\n";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// subcommands

inline void run_simulate(const detail::ChainFlags& flags, std::optional<int> n_flag,
                         std::optional<int> d_flag, std::optional<std::string> alpha_flag,
                         std::optional<std::string> base_flag) {
  const detail::Timer timer;
  const io::Config cfg = flags.load_config();
  detail::Resolved r = detail::resolve(flags, cfg);
  detail::require(!r.out_dir.empty(), "simulate needs --out (or 'out' in the config)");

  SimConfig sim;
  sim.actors = detail::pick<int>(n_flag, (int)cfg.get_int("n", 300));
  sim.events = detail::pick<int>(d_flag, (int)cfg.get_int("d", 18));
  sim.parents = r.chain.parents;
  sim.seed = r.chain.seed;

  const SimulationStudy defaults;
  std::vector<double> default_alpha;
  if (sim.parents == defaults.parents) {
    default_alpha = defaults.alpha_star;
  } else {
    default_alpha.assign(1 << sim.parents, 1.0 / (1 << sim.parents));
  }
  sim.alpha_star = alpha_flag ? io::Config{{{"v", *alpha_flag}}}.get_double_list("v", {})
                              : cfg.get_double_list("alpha_star", default_alpha);
  std::vector<double> default_base = sim.parents == defaults.parents
                                         ? defaults.base_column
                                         : std::vector<double>(sim.parents, 0.5);
  sim.base_column = base_flag ? io::Config{{{"v", *base_flag}}}.get_double_list("v", {})
                              : cfg.get_double_list("base_column", default_base);

  const SimDataset ds = generate_dataset(sim);

  const std::filesystem::path out(r.out_dir);
  io::write_incidence((out / "data.csv").string(), ds.data);
  io::write_labels((out / "truth.txt").string(), ds.true_labels);
  {
    std::vector<std::string> rows(sim.parents), cols(sim.events);
    for (int k = 0; k < sim.parents; ++k) rows[k] = "parent_" + std::to_string(k + 1);
    for (int j = 0; j < sim.events; ++j) cols[j] = ds.data.event_labels[j];
    io::write_matrix_csv(out / "true_pi.csv", ds.true_pi, cols, rows, "parent");
  }
  {
    auto f = io::open_output(out / "true_alpha_star.csv");
    const MembershipMatrix u = MembershipMatrix::subsets(sim.parents);
    f << "heir,parents,alpha_star\n";
    for (int h = 0; h < u.heirs(); ++h)
      f << h + 1 << ',' << u.subset_label(h) << ',' << io::format_full(ds.true_alpha_star[h])
        << '\n';
  }

  r.settings["n"] = std::to_string(sim.actors);
  r.settings["d"] = std::to_string(sim.events);
  std::string alpha_echo, base_echo;
  for (double a : sim.alpha_star) alpha_echo += (alpha_echo.empty() ? "" : ",") + io::format_full(a);
  for (double b : sim.base_column) base_echo += (base_echo.empty() ? "" : ",") + io::format_full(b);
  r.settings["alpha_star"] = alpha_echo;
  r.settings["base_column"] = base_echo;
  io::write_manifest(out / "manifest.json", detail::make_manifest("simulate", r, timer));

  std::cout << "simulated " << sim.actors << " x " << sim.events << " incidence matrix (K="
            << sim.parents << ") -> " << r.out_dir << "\n";
}

inline void run_fit(const detail::ChainFlags& flags, bool relabel) {
  const detail::Timer timer;
  const io::Config cfg = flags.load_config();
  detail::Resolved r = detail::resolve(flags, cfg);
  detail::require(!r.data_path.empty(), "fit needs --data (or 'data' in the config)");
  detail::require(!r.out_dir.empty(), "fit needs --out (or 'out' in the config)");

  const IncidenceMatrix data = io::read_incidence(r.data_path);
  PosteriorSamples samples = run_chain(data, r.chain);
  if (relabel) samples = relabel_chain(samples, data);

  const Matrix<double>& avg = samples.avg_alloc;
  const ClusteringLabels labels = map_allocate(avg);
  const Pcm pcm = posterior_confusion_matrix(samples, data);
  const DicResult dic = dic3(samples, data);

  r.settings["relabel"] = relabel ? "1" : "0";
  io::write_results(r.out_dir, data, samples, avg, labels, pcm, {dic}, dic.parents,
                    detail::make_manifest("fit", r, timer));

  std::cout << "fit: n=" << data.actors() << " d=" << data.events() << " K=" << r.chain.parents
            << " retained=" << samples.retained() << "\n";
  detail::print_cluster_sizes(std::cout, samples.u, labels);
  std::cout << "DIC(" << dic.parents << ") = " << dic.dic << "\n";
  std::cout << "results -> " << r.out_dir << "\n";
}

inline void run_select_k(const detail::ChainFlags& flags, std::optional<std::string> k_values_flag,
                         bool relabel) {
  const detail::Timer timer;
  const io::Config cfg = flags.load_config();
  detail::Resolved r = detail::resolve(flags, cfg);
  detail::require(!r.data_path.empty(), "select-k needs --data (or 'data' in the config)");
  detail::require(!r.out_dir.empty(), "select-k needs --out (or 'out' in the config)");

  const std::vector<int> k_values =
      k_values_flag ? io::Config{{{"v", *k_values_flag}}}.get_int_list("v", {})
                    : cfg.get_int_list("k_values", {2, 3, 4});
  detail::require(!k_values.empty(), "select-k needs a non-empty k_values list");

  const IncidenceMatrix data = io::read_incidence(r.data_path);
  const ScanResult scan = scan_k(data, k_values, r.chain, r.threads);

  // Rerun the winner (same derived seed, so the identical chain) and write
  // the full fit output for it.
  ChainConfig best = r.chain;
  best.parents = scan.selected_parents;
  best.seed = r.chain.seed + static_cast<uint64_t>(scan.selected_parents);
  best.hyper.reset();
  const IncidenceMatrix& d = data;
  PosteriorSamples samples = run_chain(d, best);
  if (relabel) samples = relabel_chain(samples, d);
  const Matrix<double>& avg = samples.avg_alloc;
  const ClusteringLabels labels = map_allocate(avg);
  const Pcm pcm = posterior_confusion_matrix(samples, d);

  std::string k_echo;
  for (int k : k_values) k_echo += (k_echo.empty() ? "" : ",") + std::to_string(k);
  r.settings["k_values"] = k_echo;
  r.settings["k"] = std::to_string(scan.selected_parents);  // effective K of the written fit
  r.settings["relabel"] = relabel ? "1" : "0";
  io::write_results(r.out_dir, d, samples, avg, labels, pcm, scan.results,
                    scan.selected_parents, detail::make_manifest("select-k", r, timer));

  std::cout << "K     DIC\n";
  for (const auto& res : scan.results)
    std::cout << res.parents << "     " << res.dic
              << (res.parents == scan.selected_parents ? "   <- selected" : "") << "\n";
  detail::print_cluster_sizes(std::cout, samples.u, labels);
  std::cout << "results -> " << r.out_dir << "\n";
}

inline void run_pcm(const std::string& run_dir, std::optional<std::string> data_flag,
                    std::optional<std::string> out_flag) {
  const detail::Timer timer;
  const std::filesystem::path run(run_dir);
  const io::RunManifest manifest = io::read_manifest(run / "manifest.json");
  const std::string data_path = data_flag ? *data_flag : manifest.input_path;
  detail::require(!data_path.empty(), "pcm needs --data (manifest has no input path)");

  const IncidenceMatrix data = io::read_incidence(data_path);
  const PosteriorSamples samples = io::read_samples_dir(run, data);
  const Pcm pcm = posterior_confusion_matrix(samples, data);

  const std::filesystem::path out = out_flag ? std::filesystem::path(*out_flag) : run;
  const auto names = io::heir_column_names(samples.u);
  io::write_matrix_csv(out / "tables" / "pcm_raw.csv", pcm.raw, names, names, "heir");
  io::write_matrix_csv(out / "tables" / "pcm_rescaled.csv", pcm.rescaled, names, names, "heir");

  std::cout << "rescaled PCM diagonal:";
  for (int h = 0; h < samples.u.heirs(); ++h) std::cout << ' ' << pcm.rescaled(h, h);
  std::cout << "\ntables -> " << (out / "tables").string() << "\n";
  (void)timer;
}

inline void run_evaluate(const std::string& est_path, const std::string& truth_path, int parents,
                         std::optional<int> flat_components) {
  const ClusteringLabels est = io::read_labels(est_path);
  const ClusteringLabels truth = io::read_labels(truth_path);
  if (est.size() != truth.size())
    throw DataError("label files disagree on length: " + std::to_string(est.size()) + " vs " +
                    std::to_string(truth.size()));
  const double mis = flat_components
                         ? misclassification_rate_flat(est, truth, *flat_components)
                         : misclassification_rate(est, truth, parents);
  const double ari = adjusted_rand_index(est, truth);
  std::cout << "misclassification = " << mis << "\n";
  std::cout << "ari = " << ari << "\n";
}

inline void run_compare(const detail::ChainFlags& flags, std::optional<std::string> d_values_flag,
                        std::optional<int> n_flag, std::optional<int> replicates_flag) {
  const detail::Timer timer;
  const io::Config cfg = flags.load_config();
  detail::Resolved r = detail::resolve(flags, cfg);
  detail::require(!r.out_dir.empty(), "compare needs --out (or 'out' in the config)");

  SimulationStudy study;
  study.actors = detail::pick<int>(n_flag, (int)cfg.get_int("n", study.actors));
  // The simulation defaults to the 3-parent study design; an explicit k
  // switches to uniform weights and a flat base column unless overridden.
  study.parents = flags.parents ? *flags.parents : (int)cfg.get_int("k", study.parents);
  r.chain.parents = study.parents;
  r.settings["k"] = std::to_string(study.parents);
  if (static_cast<int>(study.alpha_star.size()) != (1 << study.parents))
    study.alpha_star.assign(1 << study.parents, 1.0 / (1 << study.parents));
  study.alpha_star = cfg.get_double_list("alpha_star", study.alpha_star);
  if (static_cast<int>(study.base_column.size()) != study.parents)
    study.base_column.assign(study.parents, 0.5);
  study.base_column = cfg.get_double_list("base_column", study.base_column);

  const std::vector<int> d_values =
      d_values_flag ? io::Config{{{"v", *d_values_flag}}}.get_int_list("v", {})
                    : cfg.get_int_list("d_values", {18, 36});
  const int replicates = detail::pick<int>(replicates_flag, (int)cfg.get_int("replicates", 25));
  detail::require(!d_values.empty(), "compare needs a non-empty d_values list");
  detail::require(replicates >= 1, "compare needs replicates >= 1");

  const std::filesystem::path out(r.out_dir);
  auto table = io::open_output(out / "compare_table.csv");
  table << "d,replicates,manet_misclass_mean,manet_misclass_se,manet_ari_mean,manet_ari_se,"
           "mixtbern_misclass_mean,mixtbern_misclass_se,mixtbern_ari_mean,mixtbern_ari_se\n";
  auto detail_file = io::open_output(out / "compare_replicates.csv");
  detail_file << "d,replicate,manet_misclass,manet_ari,mixtbern_misclass,mixtbern_ari\n";

  std::cout << "d     manet mis%   mixtbern mis%   manet ARI   mixtbern ARI\n";
  for (int d : d_values) {
    SimulationStudy s = study;
    s.events = d;
    const auto metrics = classification_experiment(s, replicates, r.chain,
                                                   derive_seed(r.chain.seed, d), r.threads, true);
    std::vector<double> mm, ma, bm, ba;
    for (int i = 0; i < replicates; ++i) {
      mm.push_back(metrics[i].manet_misclass);
      ma.push_back(metrics[i].manet_ari);
      bm.push_back(metrics[i].baseline_misclass);
      ba.push_back(metrics[i].baseline_ari);
      detail_file << d << ',' << i + 1 << ',' << io::format_full(metrics[i].manet_misclass) << ','
                  << io::format_full(metrics[i].manet_ari) << ','
                  << io::format_full(metrics[i].baseline_misclass) << ','
                  << io::format_full(metrics[i].baseline_ari) << '\n';
    }
    const auto smm = summarize(mm), sma = summarize(ma), sbm = summarize(bm), sba = summarize(ba);
    table << d << ',' << replicates << ',' << io::format_full(smm.mean) << ','
          << io::format_full(smm.se) << ',' << io::format_full(sma.mean) << ','
          << io::format_full(sma.se) << ',' << io::format_full(sbm.mean) << ','
          << io::format_full(sbm.se) << ',' << io::format_full(sba.mean) << ','
          << io::format_full(sba.se) << '\n';
    std::cout << d << "    " << 100 * smm.mean << " (" << 100 * smm.se << ")   " << 100 * sbm.mean
              << " (" << 100 * sbm.se << ")   " << sma.mean << " (" << sma.se << ")   "
              << sba.mean << " (" << sba.se << ")\n";
  }

  std::string d_echo;
  for (int d : d_values) d_echo += (d_echo.empty() ? "" : ",") + std::to_string(d);
  r.settings["d_values"] = d_echo;
  r.settings["replicates"] = std::to_string(replicates);
  r.settings["n"] = std::to_string(study.actors);
  io::write_manifest(out / "manifest.json", detail::make_manifest("compare", r, timer));
  std::cout << "results -> " << r.out_dir << "\n";
}

// ---------------------------------------------------------------------------

/// Builds the CLI and dispatches. Exit statuses: 0 success, 2 usage/config
/// error, 3 data error, 4 numerical error.
inline int run(int argc, char** argv) {
  CLI::App app{"manet: overlapping-cluster Bernoulli mixtures for actor-event networks"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  detail::ChainFlags sim_flags;
  std::optional<int> sim_n, sim_d;
  std::optional<std::string> sim_alpha, sim_base;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset with known truth");
  sim_flags.add_common(simulate);
  simulate->add_option("--k", sim_flags.parents, "number of parent clusters");
  simulate->add_option("--n", sim_n, "number of actors");
  simulate->add_option("--d", sim_d, "number of events");
  simulate->add_option("--alpha-star", sim_alpha, "comma list of 2^K heir weights");
  simulate->add_option("--base-column", sim_base, "comma list of K base attendance probabilities");
  simulate->callback([&] { run_simulate(sim_flags, sim_n, sim_d, sim_alpha, sim_base); });

  detail::ChainFlags fit_flags;
  bool fit_relabel = false;
  auto* fit = app.add_subcommand("fit", "fit the overlapping mixture at a fixed K");
  fit_flags.add_common(fit);
  fit->add_option("--data", fit_flags.data_path, "incidence csv");
  fit->add_option("--k", fit_flags.parents, "number of parent clusters");
  fit->add_option("--combiner", fit_flags.combiner, "min or max");
  fit->add_option("--dirichlet-a", fit_flags.prior_a, "Dirichlet concentration");
  fit->add_option("--beta-b1", fit_flags.prior_b1, "Beta shape 1");
  fit->add_option("--beta-b2", fit_flags.prior_b2, "Beta shape 2");
  fit->add_flag("--relabel", fit_relabel, "canonically relabel parents after the run");
  fit->callback([&] { run_fit(fit_flags, fit_relabel); });

  detail::ChainFlags scan_flags;
  std::optional<std::string> scan_k_values;
  bool scan_relabel = false;
  auto* select = app.add_subcommand("select-k", "DIC scan over candidate K values");
  scan_flags.add_common(select);
  select->add_option("--data", scan_flags.data_path, "incidence csv");
  select->add_option("--k-values", scan_k_values, "comma list of candidate K values");
  select->add_option("--combiner", scan_flags.combiner, "min or max");
  select->add_option("--threads", scan_flags.threads, "parallel candidate chains");
  select->add_flag("--relabel", scan_relabel, "canonically relabel the winning fit");
  select->callback([&] { run_select_k(scan_flags, scan_k_values, scan_relabel); });

  std::string pcm_run;
  std::optional<std::string> pcm_data, pcm_out;
  auto* pcm = app.add_subcommand("pcm", "recompute the posterior confusion matrix of a stored fit");
  pcm->add_option("--run", pcm_run, "fit output directory")->required();
  pcm->add_option("--data", pcm_data, "incidence csv (defaults to the manifest's input)");
  pcm->add_option("--out", pcm_out, "output directory (defaults to the run directory)");
  pcm->callback([&] { run_pcm(pcm_run, pcm_data, pcm_out); });

  std::string eval_est, eval_truth;
  int eval_k = 0;
  std::optional<int> eval_flat;
  auto* evaluate = app.add_subcommand("evaluate", "score labels against a truth sidecar");
  evaluate->add_option("--est", eval_est, "estimated labels, one 1-based index per line")
      ->required();
  evaluate->add_option("--truth", eval_truth, "true labels, one 1-based index per line")
      ->required();
  evaluate->add_option("--k", eval_k, "parent count for heir-structured matching");
  evaluate->add_option("--flat", eval_flat,
                       "match as flat component labels with this many components instead");
  evaluate->callback([&] {
    if (!eval_flat && eval_k < 1)
      throw ConfigError("evaluate needs --k (heir matching) or --flat (component matching)");
    run_evaluate(eval_est, eval_truth, eval_k, eval_flat);
  });

  detail::ChainFlags cmp_flags;
  std::optional<std::string> cmp_d_values;
  std::optional<int> cmp_n, cmp_replicates;
  auto* compare = app.add_subcommand(
      "compare", "replicated simulations: overlapping model vs flat Bernoulli mixture");
  cmp_flags.add_common(compare);
  compare->add_option("--k", cmp_flags.parents, "true parent count for simulation");
  compare->add_option("--n", cmp_n, "actors per replicate");
  compare->add_option("--d-values", cmp_d_values, "comma list of event counts");
  compare->add_option("--replicates", cmp_replicates, "replicates per event count");
  compare->add_option("--threads", cmp_flags.threads, "parallel replicate chains");
  compare->callback([&] { run_compare(cmp_flags, cmp_d_values, cmp_n, cmp_replicates); });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace manet::cli
