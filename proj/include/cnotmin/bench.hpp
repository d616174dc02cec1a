#pragma once

// Benchmark harness: runs synthesizers on shared seeded instance lists and
// emits Table-shaped CSV / markdown reports next to published reference
// numbers. Reference numbers are kept as their printed text.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "cnotmin/core.hpp"
#include "cnotmin/exact.hpp"
#include "cnotmin/heuristics.hpp"
#include "cnotmin/io.hpp"
#include "cnotmin/mcts.hpp"
#include "cnotmin/topology.hpp"
#include "cnotmin/trainer.hpp"

namespace cnotmin {

// Reference numbers ------------------------------------------------------------

namespace reference {

struct Row {
  std::string_view label;
  std::vector<std::string_view> values;  // "" where not reported
};

inline const std::vector<int>& table1_sizes() {
  static const std::vector<int> s{4, 5, 6, 7, 8};
  return s;
}

inline const std::vector<Row>& table1() {
  static const std::vector<Row> rows = {
      {"PMH", {"6.98", "11.07", "16.40", "22.62", "30.58"}},
      {"AECM", {"6.61", "10.58", "15.34", "21.08", "27.51"}},
      {"GreedyGE", {"7.94", "12.34", "17.49", "23.40", "29.81"}},
      {"RL-GS_100", {"7.19", "11.84", "16.20", "22.61", "28.02"}},
      {"MCTS (inf.)", {"5.38", "8.55", "12.39", "17.85", "25.81"}},
      {"MCTS (mix.)", {"5.32", "8.31", "11.98", "17.45", "23.64"}},
      {"MCTS_100 (inf.)", {"5.37", "8.29", "11.44", "15.72", "21.03"}},
      {"MCTS_100 (mix.)", {"5.32", "8.16", "11.10", "15.41", "20.87"}},
      {"Optimal", {"5.28", "8.01", "10.64", "", ""}},
  };
  return rows;
}

inline const std::vector<std::string_view>& table2_columns() {
  static const std::vector<std::string_view> c{"Optimal", "PMH+SABRE", "RL-CL_1", "MCTS_1 (mix.)", "RL-CL_100",
                                               "MCTS_100 (mix.)"};
  return c;
}

inline const std::vector<Row>& table2() {
  static const std::vector<Row> rows = {
      {"4-L", {"8.96", "15.6", "10.2", "8.97", "10.0", "8.97"}},
      {"4-Y", {"7.37", "12.9", "8.3", "7.37", "8.1", "7.37"}},
      {"5-L", {"15.18", "29.9", "17.2", "15.46", "16.1", "15.24"}},
      {"5-T", {"13.00", "24.8", "14.8", "13.23", "13.9", "13.03"}},
      {"6-L", {"23.33", "53.3", "27.1", "24.54", "25.4", "23.44"}},
      {"6-T", {"20.50", "45.8", "23.9", "21.47", "22.5", "20.66"}},
      {"6-Y", {"19.76", "44.4", "23.1", "20.95", "21.6", "19.89"}},
      {"7-L", {"", "84.3", "40.1", "37.48", "37.5", "34.67"}},
      {"7-T", {"", "76.2", "36.7", "33.36", "34.3", "31.01"}},
      {"7-Y", {"", "67.9", "34.4", "31.54", "31.0", "28.55"}},
      {"8-H", {"", "104.2", "48.9", "42.40", "45.0", "38.70"}},
      {"8-F", {"", "116.3", "52.2", "46.35", "47.6", "42.03"}},
      {"8-T1", {"", "123.5", "54.1", "49.18", "49.5", "44.82"}},
      {"8-T2", {"", "106.3", "50.6", "43.21", "45.4", "39.19"}},
  };
  return rows;
}

inline const std::vector<std::string_view>& table3_settings() {
  static const std::vector<std::string_view> s{"4-L", "4-Y", "5-L", "5-T", "6-L", "6-Y"};
  return s;
}

inline const std::vector<Row>& table3() {
  static const std::vector<Row> rows = {
      {"32", {"9.10", "7.71", "16.30", "14.05", "", "22.98"}},
      {"64", {"9.14", "7.67", "16.06", "13.70", "26.46", "22.13"}},
      {"128", {"9.04", "7.61", "15.92", "13.65", "25.41", "21.51"}},
      {"256", {"8.94", "7.59", "15.53", "13.37", "24.89", "20.97"}},
  };
  return rows;
}

inline std::string_view table1_value(std::string_view label, int n) {
  const auto& sizes = table1_sizes();
  const auto it = std::find(sizes.begin(), sizes.end(), n);
  if (it == sizes.end()) return {};
  for (const auto& r : table1())
    if (r.label == label) return r.values[static_cast<std::size_t>(it - sizes.begin())];
  return {};
}

inline std::string_view table2_value(std::string_view column, std::string_view topology) {
  const auto& cols = table2_columns();
  const auto c = std::find(cols.begin(), cols.end(), column);
  if (c == cols.end()) return {};
  for (const auto& r : table2())
    if (r.label == topology) return r.values[static_cast<std::size_t>(c - cols.begin())];
  return {};
}

inline std::string_view table3_value(int width, std::string_view topology) {
  const auto& s = table3_settings();
  const auto c = std::find(s.begin(), s.end(), topology);
  if (c == s.end()) return {};
  for (const auto& r : table3())
    if (r.label == std::to_string(width)) return r.values[static_cast<std::size_t>(c - s.begin())];
  return {};
}

}  // namespace reference

// CSV ----------------------------------------------------------------------------

using CsvRow = std::vector<std::string>;

struct CsvTable {
  CsvRow header;
  std::vector<CsvRow> rows;
};

namespace detail {

inline std::string csv_field(const std::string& f) {
  if (f.find_first_of(",\"\n") == std::string::npos) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline std::string to_csv(const CsvTable& t) {
  std::string out;
  auto line = [&out](const CsvRow& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += detail::csv_field(r[i]);
    }
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

inline CsvTable parse_csv(const std::string& text) {
  std::vector<CsvRow> lines;
  CsvRow row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    any = true;
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      lines.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += c;
    }
  }
  if (quoted) throw std::runtime_error("unterminated quoted csv field");
  if (any) {
    row.push_back(std::move(field));
    lines.push_back(std::move(row));
  }
  if (lines.empty()) throw std::runtime_error("csv has no header");
  CsvTable t;
  t.header = std::move(lines.front());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].size() != t.header.size())
      throw std::runtime_error("csv row " + std::to_string(i) + " has " + std::to_string(lines[i].size()) + " fields, expected " +
                               std::to_string(t.header.size()));
    t.rows.push_back(std::move(lines[i]));
  }
  return t;
}

inline std::string to_markdown(const CsvTable& t) {
  std::string out;
  auto line = [&out](const CsvRow& r) {
    out += '|';
    for (const auto& f : r) out += ' ' + f + " |";
    out += '\n';
  };
  line(t.header);
  out += '|';
  for (std::size_t i = 0; i < t.header.size(); ++i) out += " --- |";
  out += '\n';
  for (const auto& r : t.rows) line(r);
  return out;
}

inline std::string format_number(double v, int decimals = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

// Suites -------------------------------------------------------------------------

struct BenchSuite {
  std::vector<int> sizes{4, 5, 6, 7, 8};
  std::vector<std::string> topologies{"4-L", "4-Y", "5-L", "5-T", "6-L", "6-T", "6-Y"};
  int instances = 100;
  RngSeed seed{1};
  std::vector<std::string> methods{"gauss", "pmh", "greedy", "exact", "mcts", "reference"};
  std::string models_dir;
  std::vector<int> shots{1};
  ExactConfig exact;
  int max_exact_qubits = 6;
  SearchConfig search = [] {
    SearchConfig s;
    s.num_simulations = 256;
    return s;
  }();
  int jobs = 1;
  InstanceWalk walk = InstanceWalk::AllToAll;

  bool wants(std::string_view m) const { return std::find(methods.begin(), methods.end(), m) != methods.end(); }
};

struct MethodRun {
  std::string setting;
  std::string method;
  bool available = true;
  std::string note;            // reason when unavailable
  std::vector<int> lengths;    // -1 where unsolved
  std::vector<double> millis;

  int solved() const { return static_cast<int>(std::count_if(lengths.begin(), lengths.end(), [](int v) { return v >= 0; })); }

  struct Stats {
    double mean = 0, stddev = 0;
    int min = 0, max = 0;
  };
  Stats stats() const {
    Stats s;
    std::vector<int> ok;
    for (int v : lengths)
      if (v >= 0) ok.push_back(v);
    if (ok.empty()) return s;
    double sum = 0;
    for (int v : ok) sum += v;
    s.mean = sum / static_cast<double>(ok.size());
    double var = 0;
    for (int v : ok) var += (v - s.mean) * (v - s.mean);
    s.stddev = ok.size() > 1 ? std::sqrt(var / static_cast<double>(ok.size() - 1)) : 0.0;
    s.min = *std::min_element(ok.begin(), ok.end());
    s.max = *std::max_element(ok.begin(), ok.end());
    return s;
  }
};

struct BenchReport {
  std::string table;  // "table1", "table2", "table3"
  std::vector<MethodRun> runs;
  CsvTable csv;

  const MethodRun* find(std::string_view setting, std::string_view method) const {
    for (const auto& r : runs)
      if (r.setting == setting && r.method == method) return &r;
    return nullptr;
  }
};

inline std::vector<ParityMatrix> bench_instances(const Topology& t, const BenchSuite& suite) {
  std::vector<ParityMatrix> out;
  for (int i = 0; i < suite.instances; ++i) out.push_back(sample_instance(t, instance_seed(suite.seed, static_cast<std::size_t>(i)), suite.walk));
  return out;
}

namespace detail {

/// Runs f(i) for i in [0, count) on `jobs` threads; results land by index.
template <typename F>
void parallel_for(int count, int jobs, F&& f) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < count;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline void check_solution(const ParityMatrix& m, const SynthResult& r, const Topology* t) {
  if (!verify_synthesis(m, r.reduction())) throw std::logic_error(r.method + " produced an invalid synthesis");
  if (t)
    for (const auto& g : r.circuit.gates)
      if (!t->allows(g)) throw std::logic_error(r.method + " used a gate outside the topology");
}

inline std::string model_path(const BenchSuite& suite, const std::string& setting) {
  return (std::filesystem::path(suite.models_dir) / (setting + ".bin")).string();
}

}  // namespace detail

/// Runs one classical method over the instance list.
inline MethodRun run_classical(const std::string& method, const std::string& setting, const Topology& t,
                               const std::vector<ParityMatrix>& instances, const BenchSuite& suite) {
  MethodRun run{setting, method, true, {}, std::vector<int>(instances.size(), -1), std::vector<double>(instances.size(), 0.0)};
  const bool constrained = !t.is_complete();
  if (method == "exact" && t.size() > suite.max_exact_qubits) {
    run.available = false;
    run.note = "exact search limited to n <= " + std::to_string(suite.max_exact_qubits);
    return run;
  }
  ExactConfig ecfg = suite.exact;
  ecfg.topology = t;
  detail::parallel_for(static_cast<int>(instances.size()), suite.jobs, [&](int i) {
    const auto& m = instances[static_cast<std::size_t>(i)];
    const auto t0 = std::chrono::steady_clock::now();
    std::optional<SynthResult> r;
    try {
      if (method == "gauss")
        r = gaussian_synth(m);
      else if (method == "pmh")
        r = pmh_synth(m);
      else if (method == "greedy")
        r = greedy_hamming_synth(m, t);
      else if (method == "exact")
        r = optimal_synth(m, ecfg);
      else
        throw std::invalid_argument("unknown method '" + method + "'");
    } catch (const BudgetExceededError&) {
    } catch (const SearchTimeoutError&) {
    }
    run.millis[static_cast<std::size_t>(i)] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (r) {
      detail::check_solution(m, *r, (constrained && method != "gauss" && method != "pmh") ? &t : nullptr);
      run.lengths[static_cast<std::size_t>(i)] = static_cast<int>(r->gate_count());
    }
  });
  return run;
}

/// MCTS rows (one per shot count) for a trained checkpoint, or a single
/// unavailable row when the checkpoint is missing.
inline std::vector<MethodRun> run_mcts(const std::string& setting, const Topology& t, const std::vector<ParityMatrix>& instances,
                                       const BenchSuite& suite) {
  std::vector<MethodRun> out;
  const std::string path = detail::model_path(suite, setting);
  std::shared_ptr<const Network> net;
  std::string note;
  if (suite.models_dir.empty())
    note = "no models directory";
  else if (!std::filesystem::exists(path))
    note = "missing checkpoint " + path;
  else
    net = std::make_shared<const Network>(load_network(path));
  if (net && (net->config().input_dim != t.size() * t.size() || net->config().action_dim != static_cast<int>(t.num_actions()))) {
    note = "checkpoint " + path + " does not match " + setting;
    net.reset();
  }
  for (int shots : suite.shots) {
    MethodRun run{setting, "mcts_" + std::to_string(shots) + "shot", true, {}, {}, {}};
    if (!net) {
      run.available = false;
      run.note = note;
      out.push_back(std::move(run));
      continue;
    }
    const NetworkEvaluator ev(net);
    EpisodeConfig env = EpisodeConfig::make(t);
    const auto t0 = std::chrono::steady_clock::now();
    const EvaluationRecord rec =
        evaluate(ev, env, search_kind_for(net->config()), suite.search, instances, shots, derive_seed(suite.seed, 20, 0));
    const double per = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() /
                       static_cast<double>(std::max<std::size_t>(1, instances.size()));
    run.lengths = rec.best_lengths;
    run.millis.assign(instances.size(), per);
    out.push_back(std::move(run));
  }
  return out;
}

namespace detail {

inline const std::vector<std::string>& report_header() {
  static const std::vector<std::string> h{"setting", "method",         "mean",          "stddev",
                                          "min",     "max",            "solved",        "instances",
                                          "normalized_pct", "normalization", "reference_label", "reference_mean"};
  return h;
}

inline CsvRow measured_row(const MethodRun& r, std::optional<double> pmh, const std::string& normalization,
                           std::string_view ref_label, std::string_view ref_value) {
  CsvRow row{r.setting, r.method};
  if (!r.available || r.solved() == 0) {
    row.insert(row.end(), {"", "", "", "", std::to_string(r.solved()), std::to_string(r.lengths.size()), "", ""});
  } else {
    const auto s = r.stats();
    row.insert(row.end(), {format_number(s.mean), format_number(s.stddev), std::to_string(s.min), std::to_string(s.max),
                           std::to_string(r.solved()), std::to_string(r.lengths.size()),
                           pmh && *pmh > 0 ? format_number(100.0 * s.mean / *pmh, 2) : "", pmh ? normalization : ""});
  }
  row.emplace_back(ref_value.empty() ? "" : std::string(ref_label));
  row.emplace_back(ref_value);
  return row;
}

inline CsvRow reference_row(const std::string& setting, std::string_view label, std::string_view value) {
  return {setting, "reference", "", "", "", "", "", "", "", "", std::string(label), std::string(value)};
}

inline std::string_view table1_label(const std::string& method) {
  if (method == "pmh") return "PMH";
  if (method == "exact") return "Optimal";
  if (method == "mcts_1shot") return "MCTS (mix.)";
  if (method == "mcts_100shot") return "MCTS_100 (mix.)";
  return {};
}

inline std::string_view table2_label(const std::string& method) {
  if (method == "exact") return "Optimal";
  if (method == "mcts_1shot") return "MCTS_1 (mix.)";
  if (method == "mcts_100shot") return "MCTS_100 (mix.)";
  return {};
}

}  // namespace detail

inline BenchReport run_unconstrained_bench(const BenchSuite& suite) {
  BenchReport report;
  report.table = "table1";
  report.csv.header = detail::report_header();
  for (int n : suite.sizes) {
    const Topology t = all_to_all(n);
    const std::string setting = t.name();
    const auto instances = bench_instances(t, suite);
    std::vector<MethodRun> runs;
    for (const auto& m : suite.methods) {
      if (m == "reference" || m == "greedy") continue;
      if (m == "mcts") {
        for (auto& r : run_mcts(setting, t, instances, suite)) runs.push_back(std::move(r));
      } else {
        runs.push_back(run_classical(m, setting, t, instances, suite));
      }
    }
    std::optional<double> pmh;
    for (const auto& r : runs)
      if (r.method == "pmh" && r.solved() > 0) pmh = r.stats().mean;
    for (const auto& r : runs) {
      const auto label = detail::table1_label(r.method);
      report.csv.rows.push_back(detail::measured_row(r, pmh, "pmh-measured", label, reference::table1_value(label, n)));
    }
    if (suite.wants("reference"))
      for (const auto& ref : reference::table1()) {
        const auto v = reference::table1_value(ref.label, n);
        if (!v.empty()) report.csv.rows.push_back(detail::reference_row(setting, ref.label, v));
      }
    for (auto& r : runs) report.runs.push_back(std::move(r));
  }
  return report;
}

inline BenchReport run_constrained_bench(const BenchSuite& suite) {
  BenchReport report;
  report.table = "table2";
  report.csv.header = detail::report_header();
  for (const auto& name : suite.topologies) {
    const Topology t = resolve_topology(name);
    const std::string setting = t.name().empty() ? name : t.name();
    const auto instances = bench_instances(t, suite);
    std::vector<MethodRun> runs;
    for (const auto& m : suite.methods) {
      if (m == "reference" || m == "gauss" || m == "pmh") continue;
      if (m == "mcts") {
        for (auto& r : run_mcts(setting, t, instances, suite)) runs.push_back(std::move(r));
      } else {
        runs.push_back(run_classical(m, setting, t, instances, suite));
      }
    }
    std::optional<double> pmh;
    if (const auto v = reference::table2_value("PMH+SABRE", setting); !v.empty()) pmh = std::stod(std::string(v));
    for (const auto& r : runs) {
      const auto label = detail::table2_label(r.method);
      report.csv.rows.push_back(detail::measured_row(r, pmh, "pmh+sabre-reference", label, reference::table2_value(label, setting)));
    }
    if (suite.wants("reference"))
      for (const auto& col : reference::table2_columns()) {
        const auto v = reference::table2_value(col, setting);
        if (!v.empty()) report.csv.rows.push_back(detail::reference_row(setting, col, v));
      }
    for (auto& r : runs) report.runs.push_back(std::move(r));
  }
  return report;
}

// Ablation -----------------------------------------------------------------------

struct AblationSuite {
  std::vector<int> hidden_sizes{32, 64, 128, 256};
  std::vector<std::string> topologies{"4-L", "4-Y", "5-L", "5-T", "6-L", "6-Y"};
  std::uint64_t steps_per_qubit = 75'000;  // training budget is steps_per_qubit * n
  double switch_fraction = 0.8;
  TrainConfig train;
  SearchConfig search;
  RngSeed seed{1};
  bool include_reference = true;
};

struct AblationCell {
  int width = 0;
  std::string setting;
  EvaluationRecord record;
};

inline BenchReport run_ablation(const AblationSuite& suite, std::vector<AblationCell>* cells = nullptr,
                                const TrainObserver& observer = {}) {
  BenchReport report;
  report.table = "table3";
  report.csv.header = {"width", "setting", "mean", "success_rate", "solved", "instances", "converged", "reference_mean"};
  for (int width : suite.hidden_sizes) {
    for (const auto& name : suite.topologies) {
      const Topology t = resolve_topology(name);
      EpisodeConfig env = EpisodeConfig::make(t);
      env.reward = RewardMode::mixed(suite.switch_fraction);
      NetConfig nc;
      nc.hidden_width = width;
      nc = net_config_for(env, nc);
      TrainConfig tc = suite.train;
      tc.total_env_steps = suite.steps_per_qubit * static_cast<std::uint64_t>(t.size());
      tc.seed = suite.seed;
      const TrainResult tr = run_training(tc, env, nc, suite.search, observer);
      const NetworkEvaluator ev(tr.network);
      SearchConfig greedy = suite.search;
      greedy.num_simulations = tc.eval_simulations;
      const auto inst = held_out_instances(env, tc.eval_instances, tc.seed);
      const EvaluationRecord rec = evaluate(ev, env, RewardKind::Sparse, greedy, inst, 1, derive_seed(tc.seed, 21, 0));
      const int solved = static_cast<int>(std::count_if(rec.best_lengths.begin(), rec.best_lengths.end(), [](int v) { return v >= 0; }));
      const std::string ref = suite.include_reference ? std::string(reference::table3_value(width, t.name())) : "";
      report.csv.rows.push_back({std::to_string(width), t.name(), solved > 0 ? format_number(rec.mean_length) : "",
                                 format_number(rec.success_rate, 2), std::to_string(solved), std::to_string(inst.size()),
                                 rec.success_rate >= 1.0 ? "yes" : "no", ref});
      if (cells) cells->push_back({width, t.name(), rec});
    }
  }
  return report;
}

// Output -------------------------------------------------------------------------

/// Writes <table>.csv, <table>.md and appends per-instance rows to timing.csv.
inline void emit_reports(const BenchReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  detail::write_file((dir / (report.table + ".csv")).string(), to_csv(report.csv));
  detail::write_file((dir / (report.table + ".md")).string(), to_markdown(report.csv));
  const auto timing = dir / "timing.csv";
  CsvTable t;
  if (std::filesystem::exists(timing)) t = parse_csv(detail::read_file(timing.string()));
  if (t.header.empty()) t.header = {"table", "setting", "method", "instance", "length", "millis"};
  for (const auto& r : report.runs) {
    if (!r.available) continue;
    for (std::size_t i = 0; i < r.lengths.size(); ++i)
      t.rows.push_back({report.table, r.setting, r.method, std::to_string(i), std::to_string(r.lengths[i]), format_number(r.millis[i], 3)});
  }
  detail::write_file(timing.string(), to_csv(t));
}

}  // namespace cnotmin
