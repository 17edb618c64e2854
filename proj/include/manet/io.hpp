#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "manet/data.hpp"
#include "manet/diagnostics.hpp"
#include "manet/error.hpp"
#include "manet/sampler.hpp"
#include "manet/selection.hpp"
#include "manet/version.hpp"

namespace manet::io {

// ---------------------------------------------------------------------------
// small helpers

/// Full-precision formatting so round trips do not quantize.
inline std::string format_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delim)) out.push_back(cell);
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw DataError("cannot open for writing: " + path.string());
  return f;
}

/// FNV-1a 64 over the file bytes, as a 16-hex-digit string. Identity check
/// for manifests, not a cryptographic digest.
inline std::string digest_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open for digest: " + path);
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
    for (std::streamsize i = 0; i < f.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

// ---------------------------------------------------------------------------
// incidence data

/// Reads the rectangular comma-delimited incidence format: header row of
/// event labels, one row per actor with its label in the first cell, cells
/// "0"/"1". Parse errors name the line and column.
inline IncidenceMatrix read_incidence(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open incidence file: " + path);

  struct Row {
    int line_no;
    std::vector<std::string> cells;
  };
  std::vector<Row> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    for (auto& c : cells) c = trim(c);
    rows.push_back({line_no, std::move(cells)});
  }
  if (rows.size() < 2) throw DataError(path + ": need a header row and at least one actor row");

  IncidenceMatrix data;
  const auto& header = rows[0].cells;
  const int d = static_cast<int>(header.size()) - 1;  // first cell is the corner
  if (d < 1) throw DataError(path + ": header row has no event labels");
  data.event_labels.assign(header.begin() + 1, header.end());
  for (int j = 0; j < d; ++j) {
    if (data.event_labels[j].empty())
      throw DataError(path + ": empty event label in column " + std::to_string(j + 2));
    for (int j2 = 0; j2 < j; ++j2)
      if (data.event_labels[j] == data.event_labels[j2])
        throw DataError(path + ": duplicate event label '" + data.event_labels[j] + "'");
  }

  const int n = static_cast<int>(rows.size()) - 1;
  data.y = Matrix<uint8_t>(n, d);
  data.actor_labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& [origin, cells] = rows[i + 1];
    if (static_cast<int>(cells.size()) != d + 1)
      throw DataError(path + ": line " + std::to_string(origin) + ": expected " +
                      std::to_string(d + 1) + " cells, got " + std::to_string(cells.size()));
    data.actor_labels[i] = cells[0];
    if (data.actor_labels[i].empty())
      throw DataError(path + ": line " + std::to_string(origin) + ": empty actor label");
    for (int i2 = 0; i2 < i; ++i2)
      if (data.actor_labels[i] == data.actor_labels[i2])
        throw DataError(path + ": duplicate actor label '" + data.actor_labels[i] + "'");
    for (int j = 0; j < d; ++j) {
      const std::string& cell = cells[j + 1];
      if (cell == "0")
        data.y(i, j) = 0;
      else if (cell == "1")
        data.y(i, j) = 1;
      else
        throw DataError(path + ": line " + std::to_string(origin) + ", column " +
                        std::to_string(j + 2) + ": cell '" + cell + "' is not 0/1");
    }
  }
  data.validate();
  return data;
}

inline void write_incidence(const std::string& path, const IncidenceMatrix& data) {
  data.validate();
  for (const auto& label : data.actor_labels)
    if (label.find(',') != std::string::npos)
      throw DataError("actor label contains a comma: " + label);
  for (const auto& label : data.event_labels)
    if (label.find(',') != std::string::npos)
      throw DataError("event label contains a comma: " + label);
  auto f = open_output(path);
  f << "actor";
  for (const auto& e : data.event_labels) f << ',' << e;
  f << '\n';
  for (int i = 0; i < data.actors(); ++i) {
    f << data.actor_labels[i];
    for (int j = 0; j < data.events(); ++j) f << ',' << int(data.y(i, j));
    f << '\n';
  }
}

// ---------------------------------------------------------------------------
// label sidecars (1-based heir indices on disk, 0-based in memory)

inline ClusteringLabels read_labels(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open label file: " + path);
  ClusteringLabels labels;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    try {
      size_t pos = 0;
      const int v = std::stoi(s, &pos);
      if (pos != s.size() || v < 1) throw std::invalid_argument("");
      labels.push_back(v - 1);
    } catch (const std::exception&) {
      throw DataError(path + ": line " + std::to_string(line_no) + ": '" + s +
                      "' is not a positive cluster index");
    }
  }
  if (labels.empty()) throw DataError(path + ": no labels found");
  return labels;
}

inline void write_labels(const std::string& path, const ClusteringLabels& labels) {
  auto f = open_output(path);
  for (int label : labels) f << label + 1 << '\n';
}

// ---------------------------------------------------------------------------
// configuration files: `key = value` lines, '#' comments

struct Config {
  std::map<std::string, std::string> values;

  static Config from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    Config cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
      ++line_no;
      const std::string s = trim(line);
      if (s.empty() || s[0] == '#') continue;
      const auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError(path + ": line " + std::to_string(line_no) + ": expected key = value");
      const std::string key = trim(s.substr(0, eq));
      const std::string value = trim(s.substr(eq + 1));
      if (key.empty())
        throw ConfigError(path + ": line " + std::to_string(line_no) + ": empty key");
      cfg.values[key] = value;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
  }

  long long get_int(const std::string& key, long long fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
      size_t pos = 0;
      const long long v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': '" + it->second + "' is not an integer");
    }
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
      size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': '" + it->second + "' is not a number");
    }
  }

  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    std::vector<double> out;
    for (const auto& cell : split(it->second, ',')) {
      const std::string s = trim(cell);
      try {
        size_t pos = 0;
        out.push_back(std::stod(s, &pos));
        if (pos != s.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + s + "' is not a number");
      }
    }
    return out;
  }

  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    std::vector<int> out;
    for (const auto& cell : split(it->second, ',')) {
      const std::string s = trim(cell);
      try {
        size_t pos = 0;
        out.push_back(std::stoi(s, &pos));
        if (pos != s.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + s + "' is not an integer");
      }
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// run manifest

/// Everything needed to reproduce a run bit-for-bit (plus timing, which is
/// informational and excluded from reproducibility comparisons).
struct RunManifest {
  std::string command;
  std::string version = kVersion;
  uint64_t seed = 0;
  double duration_seconds = 0.0;
  std::string input_path;
  std::string input_digest;
  std::map<std::string, std::string> settings;
};

inline void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  nlohmann::json j;
  j["command"] = m.command;
  j["version"] = m.version;
  j["seed"] = m.seed;
  j["duration_seconds"] = m.duration_seconds;
  j["input_path"] = m.input_path;
  j["input_digest"] = m.input_digest;
  j["settings"] = m.settings;
  auto f = open_output(path);
  f << j.dump(2) << '\n';
}

inline RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open manifest: " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("cannot parse manifest " + path.string() + ": " + e.what());
  }
  RunManifest m;
  m.command = j.value("command", "");
  m.version = j.value("version", "");
  m.seed = j.value("seed", uint64_t{0});
  m.duration_seconds = j.value("duration_seconds", 0.0);
  m.input_path = j.value("input_path", "");
  m.input_digest = j.value("input_digest", "");
  if (j.contains("settings"))
    for (auto& [k, v] : j["settings"].items()) m.settings[k] = v.get<std::string>();
  return m;
}

// ---------------------------------------------------------------------------
// fit results

inline void write_matrix_csv(const std::filesystem::path& path, const Matrix<double>& m,
                             const std::vector<std::string>& col_names,
                             const std::vector<std::string>& row_names,
                             const std::string& corner) {
  auto f = open_output(path);
  if (!col_names.empty()) {
    f << corner;
    for (const auto& c : col_names) f << ',' << c;
    f << '\n';
  }
  for (int i = 0; i < m.rows(); ++i) {
    f << row_names[i];
    for (int j = 0; j < m.cols(); ++j) f << ',' << format_full(m(i, j));
    f << '\n';
  }
}

inline std::vector<std::string> heir_column_names(const MembershipMatrix& u) {
  std::vector<std::string> names(u.heirs());
  for (int h = 0; h < u.heirs(); ++h) names[h] = "heir_" + std::to_string(h + 1);
  return names;
}

inline void write_draws(const std::filesystem::path& dir, const PosteriorSamples& samples) {
  const int T = samples.retained();
  const int heirs = samples.u.heirs();
  const int K = samples.u.parents();
  const int d = samples.events;
  {
    auto f = open_output(dir / "alpha_star.csv");
    for (int h = 0; h < heirs; ++h) f << (h ? "," : "") << "heir_" << h + 1;
    f << '\n';
    for (int t = 0; t < T; ++t) {
      const auto a = samples.alpha(t);
      for (int h = 0; h < heirs; ++h) f << (h ? "," : "") << format_full(a[h]);
      f << '\n';
    }
  }
  {
    auto f = open_output(dir / "pi.csv");
    for (int k = 0; k < K; ++k)
      for (int j = 0; j < d; ++j)
        f << (k + j ? "," : "") << "pi_" << k + 1 << "_" << j + 1;
    f << '\n';
    for (int t = 0; t < T; ++t) {
      const auto pi = samples.pi_flat(t);
      for (size_t c = 0; c < pi.size(); ++c) f << (c ? "," : "") << format_full(pi[c]);
      f << '\n';
    }
  }
}

inline void write_dic_table(const std::filesystem::path& path,
                            const std::vector<DicResult>& results, int selected_parents) {
  auto f = open_output(path);
  f << "parents,dic,expected_deviance_term,log_phat_term,retained,selected\n";
  for (const auto& r : results)
    f << r.parents << ',' << format_full(r.dic) << ',' << format_full(r.expected_deviance_term)
      << ',' << format_full(r.log_phat_term) << ',' << r.retained << ','
      << (r.parents == selected_parents ? 1 : 0) << '\n';
}

/// Writes the standard fit output tree: posterior draws, averaged
/// allocations, MAP labels (rich csv and bare sidecar), cluster sizes,
/// raw/rescaled PCM, any DIC table, ternary-plot coordinates, and the
/// manifest.
inline void write_results(const std::filesystem::path& out_dir, const IncidenceMatrix& data,
                          const PosteriorSamples& samples, const Matrix<double>& avg,
                          const ClusteringLabels& labels, const Pcm& pcm,
                          const std::vector<DicResult>& dic_results, int selected_parents,
                          const RunManifest& manifest) {
  const MembershipMatrix& u = samples.u;
  const int heirs = u.heirs();

  write_manifest(out_dir / "manifest.json", manifest);
  write_draws(out_dir / "draws", samples);

  write_matrix_csv(out_dir / "summaries" / "averaged_allocations.csv", avg,
                   heir_column_names(u), data.actor_labels, "actor");

  {
    auto f = open_output(out_dir / "summaries" / "map_labels.csv");
    f << "actor,heir,parents\n";
    for (int i = 0; i < data.actors(); ++i)
      f << data.actor_labels[i] << ',' << labels[i] + 1 << ',' << u.subset_label(labels[i])
        << '\n';
  }
  write_labels((out_dir / "summaries" / "map_labels.txt").string(), labels);

  {
    std::vector<int> sizes(heirs, 0);
    for (int label : labels) ++sizes[label];
    auto f = open_output(out_dir / "summaries" / "cluster_sizes.csv");
    f << "heir,parents,count\n";
    for (int h = 0; h < heirs; ++h)
      f << h + 1 << ',' << u.subset_label(h) << ',' << sizes[h] << '\n';
  }

  {
    // Averaged allocation probabilities conditioned on not being in the
    // empty heir cluster; rows with all mass on the empty cluster are zero.
    auto f = open_output(out_dir / "summaries" / "ternary.csv");
    f << "actor";
    for (int h = 1; h < heirs; ++h) f << ",heir_" << h + 1;
    f << '\n';
    for (int i = 0; i < data.actors(); ++i) {
      const double denom = 1.0 - avg(i, 0);
      f << data.actor_labels[i];
      for (int h = 1; h < heirs; ++h)
        f << ',' << format_full(denom > 1e-15 ? avg(i, h) / denom : 0.0);
      f << '\n';
    }
  }

  const auto heir_names = heir_column_names(u);
  write_matrix_csv(out_dir / "tables" / "pcm_raw.csv", pcm.raw, heir_names, heir_names, "heir");
  write_matrix_csv(out_dir / "tables" / "pcm_rescaled.csv", pcm.rescaled, heir_names, heir_names,
                   "heir");
  if (!dic_results.empty())
    write_dic_table(out_dir / "tables" / "dic_scan.csv", dic_results, selected_parents);
}

// ---------------------------------------------------------------------------
// draw read-back (for the pcm subcommand)

inline Matrix<double> read_numeric_csv(const std::filesystem::path& path, bool skip_header) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (skip_header) {
      skip_header = false;
      continue;
    }
    std::vector<double> row;
    for (const auto& cell : split(line, ',')) {
      const std::string s = trim(cell);
      try {
        size_t pos = 0;
        row.push_back(std::stod(s, &pos));
        if (pos != s.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw DataError(path.string() + ": line " + std::to_string(line_no) + ": '" + s +
                        "' is not a number");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path.string() + ": no data rows");
  Matrix<double> m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

/// Rebuilds a PosteriorSamples (without z draws) from a fit directory's
/// manifest and draw files; enough for allocation-based diagnostics.
inline PosteriorSamples read_samples_dir(const std::filesystem::path& run_dir,
                                         const IncidenceMatrix& data) {
  const RunManifest manifest = read_manifest(run_dir / "manifest.json");
  const auto k_it = manifest.settings.find("k");
  if (k_it == manifest.settings.end())
    throw DataError(run_dir.string() + ": manifest has no 'k' setting");
  const int parents = std::stoi(k_it->second);

  PosteriorSamples samples;
  samples.u = MembershipMatrix::subsets(parents);
  const auto comb_it = manifest.settings.find("combiner");
  samples.combiner = comb_it == manifest.settings.end() ? Combiner::kMin
                                                        : combiner_from_name(comb_it->second);
  samples.actors = data.actors();
  samples.events = data.events();

  const Matrix<double> alpha = read_numeric_csv(run_dir / "draws" / "alpha_star.csv", true);
  const Matrix<double> pi = read_numeric_csv(run_dir / "draws" / "pi.csv", true);
  if (alpha.cols() != samples.u.heirs())
    throw DataError("alpha_star.csv has " + std::to_string(alpha.cols()) +
                    " columns, expected " + std::to_string(samples.u.heirs()));
  if (pi.cols() != parents * data.events())
    throw DataError("pi.csv has " + std::to_string(pi.cols()) + " columns, expected " +
                    std::to_string(parents * data.events()));
  if (alpha.rows() != pi.rows()) throw DataError("alpha_star.csv and pi.csv disagree on length");

  samples.alpha_draws.assign(alpha.data(), alpha.data() + alpha.size());
  samples.pi_draws.assign(pi.data(), pi.data() + pi.size());
  return samples;
}

}  // namespace manet::io
