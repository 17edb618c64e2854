#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "manet/cli.hpp"
#include "manet/io.hpp"
#include "manet/simgen.hpp"

using namespace manet;
namespace fs = std::filesystem;

namespace {

fs::path make_temp_dir() {
  static std::mt19937_64 gen(std::random_device{}());
  const fs::path p =
      fs::temp_directory_path() / ("manet_test_" + std::to_string(gen()));
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_cli(std::vector<std::string> args) {
  std::vector<char*> argv;
  args.insert(args.begin(), "manet");
  for (auto& a : args) argv.push_back(a.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

SimDataset small_dataset(uint64_t seed) {
  SimConfig cfg;
  cfg.actors = 25;
  cfg.events = 5;
  cfg.parents = 2;
  cfg.alpha_star = {0.2, 0.3, 0.3, 0.2};
  cfg.base_column = {0.3, 0.8};
  cfg.seed = seed;
  return generate_dataset(cfg);
}

}  // namespace

TEST_CASE("incidence files round trip") {
  const auto dir = make_temp_dir();
  const auto ds = small_dataset(5);
  const auto path = (dir / "data.csv").string();
  io::write_incidence(path, ds.data);
  const auto back = io::read_incidence(path);
  REQUIRE(back.y == ds.data.y);
  REQUIRE(back.actor_labels == ds.data.actor_labels);
  REQUIRE(back.event_labels == ds.data.event_labels);
  fs::remove_all(dir);
}

TEST_CASE("incidence parsing rejects malformed input with positions") {
  const auto dir = make_temp_dir();
  const auto path = dir / "bad.csv";

  SECTION("non-binary cell") {
    write_text(path, "actor,E1,E2\nA1,0,1\nA2,2,0\n");
    REQUIRE_THROWS_MATCHES(io::read_incidence(path.string()), DataError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("line 3") &&
                               Catch::Matchers::ContainsSubstring("'2'")));
  }
  SECTION("ragged row") {
    write_text(path, "actor,E1,E2\nA1,0\n");
    REQUIRE_THROWS_MATCHES(io::read_incidence(path.string()), DataError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("expected 3 cells")));
  }
  SECTION("duplicate actor label") {
    write_text(path, "actor,E1\nA1,0\nA1,1\n");
    REQUIRE_THROWS_MATCHES(io::read_incidence(path.string()), DataError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("duplicate actor label")));
  }
  SECTION("duplicate event label") {
    write_text(path, "actor,E1,E1\nA1,0,1\n");
    REQUIRE_THROWS_AS(io::read_incidence(path.string()), DataError);
  }
  SECTION("missing file") {
    REQUIRE_THROWS_AS(io::read_incidence((dir / "nope.csv").string()), DataError);
  }
  fs::remove_all(dir);
}

TEST_CASE("label sidecars are 1-based on disk") {
  const auto dir = make_temp_dir();
  const auto path = (dir / "labels.txt").string();
  io::write_labels(path, {0, 1, 3});
  REQUIRE(read_text(path) == "1\n2\n4\n");
  REQUIRE(io::read_labels(path) == ClusteringLabels{0, 1, 3});

  write_text(path, "# comment\n2\n\n1\n");
  REQUIRE(io::read_labels(path) == ClusteringLabels{1, 0});

  write_text(path, "0\n");
  REQUIRE_THROWS_AS(io::read_labels(path), DataError);
  write_text(path, "x\n");
  REQUIRE_THROWS_AS(io::read_labels(path), DataError);
  fs::remove_all(dir);
}

TEST_CASE("config files parse key = value lines") {
  const auto dir = make_temp_dir();
  const auto path = dir / "run.cfg";
  write_text(path, "# chain\niterations = 500\nseed = 9\nalpha_star = 0.5, 0.25, 0.25\n"
                   "combiner = max\n");
  const auto cfg = io::Config::from_file(path.string());
  REQUIRE(cfg.get_int("iterations", 0) == 500);
  REQUIRE(cfg.get_int("missing", 7) == 7);
  REQUIRE(cfg.get_string("combiner", "min") == "max");
  REQUIRE(cfg.get_double_list("alpha_star", {}) == std::vector<double>{0.5, 0.25, 0.25});

  write_text(path, "iterations 500\n");
  REQUIRE_THROWS_AS(io::Config::from_file(path.string()), ConfigError);
  write_text(path, "iterations = abc\n");
  REQUIRE_THROWS_AS(io::Config::from_file(path.string()).get_int("iterations", 0), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("manifests round trip") {
  const auto dir = make_temp_dir();
  io::RunManifest m;
  m.command = "fit";
  m.seed = 42;
  m.duration_seconds = 1.25;
  m.input_path = "data.csv";
  m.input_digest = "00ff";
  m.settings["k"] = "2";
  m.settings["combiner"] = "min";
  io::write_manifest(dir / "manifest.json", m);
  const auto back = io::read_manifest(dir / "manifest.json");
  REQUIRE(back.command == "fit");
  REQUIRE(back.seed == 42);
  REQUIRE(back.input_digest == "00ff");
  REQUIRE(back.settings.at("k") == "2");
  fs::remove_all(dir);
}

TEST_CASE("write_results produces the documented tree and round-trips") {
  const auto dir = make_temp_dir();
  const auto ds = small_dataset(11);

  ChainConfig cfg;
  cfg.iterations = 40;
  cfg.burn_in = 10;
  cfg.seed = 3;
  cfg.parents = 2;
  const auto samples = run_chain(ds.data, cfg);
  const auto& avg = samples.avg_alloc;
  const auto labels = map_allocate(avg);
  const auto pcm = posterior_confusion_matrix(samples, ds.data);
  const auto dic = dic3(samples, ds.data);

  io::RunManifest manifest;
  manifest.command = "fit";
  manifest.seed = cfg.seed;
  manifest.settings["k"] = "2";
  manifest.settings["combiner"] = "min";
  io::write_results(dir, ds.data, samples, avg, labels, pcm, {dic}, dic.parents, manifest);

  for (const char* rel :
       {"manifest.json", "draws/alpha_star.csv", "draws/pi.csv",
        "summaries/averaged_allocations.csv", "summaries/map_labels.csv",
        "summaries/map_labels.txt", "summaries/cluster_sizes.csv", "summaries/ternary.csv",
        "tables/pcm_raw.csv", "tables/pcm_rescaled.csv", "tables/dic_scan.csv"})
    REQUIRE(fs::exists(dir / rel));

  SECTION("averaged allocations round trip at full precision") {
    std::ifstream f(dir / "summaries" / "averaged_allocations.csv");
    std::string line;
    std::getline(f, line);  // header
    for (int i = 0; i < avg.rows(); ++i) {
      std::getline(f, line);
      const auto cells = io::split(line, ',');
      REQUIRE(cells[0] == ds.data.actor_labels[i]);
      for (int h = 0; h < avg.cols(); ++h)
        REQUIRE(std::stod(cells[h + 1]) == avg(i, h));
    }
  }
  SECTION("ternary coordinates renormalize over the non-empty heirs") {
    std::ifstream f(dir / "summaries" / "ternary.csv");
    std::string line;
    std::getline(f, line);
    for (int i = 0; i < avg.rows(); ++i) {
      std::getline(f, line);
      const auto cells = io::split(line, ',');
      double sum = 0.0;
      for (size_t c = 1; c < cells.size(); ++c) sum += std::stod(cells[c]);
      if (1.0 - avg(i, 0) > 1e-12)
        REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));
    }
  }
  SECTION("map labels sidecar matches the csv") {
    const auto back = io::read_labels((dir / "summaries" / "map_labels.txt").string());
    REQUIRE(back == labels);
  }
  SECTION("draw files reload into an equivalent chain") {
    const auto back = io::read_samples_dir(dir, ds.data);
    REQUIRE(back.retained() == samples.retained());
    REQUIRE(back.alpha_draws == samples.alpha_draws);
    REQUIRE(back.pi_draws == samples.pi_draws);
    const auto pcm2 = posterior_confusion_matrix(back, ds.data);
    REQUIRE(pcm2.raw == pcm.raw);
  }
  SECTION("writing twice is byte-identical") {
    const auto dir2 = make_temp_dir();
    io::write_results(dir2, ds.data, samples, avg, labels, pcm, {dic}, dic.parents, manifest);
    REQUIRE(read_text(dir / "draws" / "alpha_star.csv") ==
            read_text(dir2 / "draws" / "alpha_star.csv"));
    REQUIRE(read_text(dir / "draws" / "pi.csv") == read_text(dir2 / "draws" / "pi.csv"));
    fs::remove_all(dir2);
  }
  fs::remove_all(dir);
}

TEST_CASE("cli workflow: simulate, fit, evaluate, pcm") {
  const auto dir = make_temp_dir();
  const auto sim_dir = (dir / "sim").string();
  const auto fit_dir = (dir / "fit").string();

  REQUIRE(run_cli({"simulate", "--k", "2", "--n", "30", "--d", "6", "--seed", "7",
                   "--alpha-star", "0.2,0.3,0.3,0.2", "--base-column", "0.3,0.8",
                   "--out", sim_dir}) == 0);
  REQUIRE(fs::exists(fs::path(sim_dir) / "data.csv"));
  REQUIRE(fs::exists(fs::path(sim_dir) / "truth.txt"));
  REQUIRE(fs::exists(fs::path(sim_dir) / "manifest.json"));

  REQUIRE(run_cli({"fit", "--data", sim_dir + "/data.csv", "--k", "2", "--iterations", "80",
                   "--burn-in", "20", "--seed", "13", "--out", fit_dir}) == 0);
  REQUIRE(fs::exists(fs::path(fit_dir) / "summaries" / "map_labels.txt"));

  REQUIRE(run_cli({"evaluate", "--est", sim_dir + "/truth.txt", "--truth", sim_dir + "/truth.txt",
                   "--k", "2"}) == 0);

  REQUIRE(run_cli({"pcm", "--run", fit_dir}) == 0);

  SECTION("manifest-driven reruns are bit-identical") {
    const auto fit2 = (dir / "fit2").string();
    REQUIRE(run_cli({"fit", "--data", sim_dir + "/data.csv", "--k", "2", "--iterations", "80",
                     "--burn-in", "20", "--seed", "13", "--out", fit2}) == 0);
    REQUIRE(read_text(fs::path(fit_dir) / "draws" / "pi.csv") ==
            read_text(fs::path(fit2) / "draws" / "pi.csv"));
    REQUIRE(read_text(fs::path(fit_dir) / "summaries" / "averaged_allocations.csv") ==
            read_text(fs::path(fit2) / "summaries" / "averaged_allocations.csv"));
  }
  fs::remove_all(dir);
}

TEST_CASE("cli exit statuses") {
  const auto dir = make_temp_dir();
  SECTION("unknown subcommand is a usage error") {
    REQUIRE(run_cli({"frobnicate"}) == 2);
  }
  SECTION("missing required pieces are usage errors") {
    REQUIRE(run_cli({"fit", "--k", "2"}) == 2);
    REQUIRE(run_cli({"evaluate", "--est", "x", "--truth", "y"}) == 2);
  }
  SECTION("unreadable data is a data error") {
    REQUIRE(run_cli({"fit", "--data", (dir / "missing.csv").string(), "--k", "2", "--out",
                     (dir / "out").string()}) == 3);
  }
  SECTION("help exits zero") {
    REQUIRE(run_cli({"--help"}) == 0);
  }
  fs::remove_all(dir);
}
