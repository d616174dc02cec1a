// Command-line front end: synth, verify, train, bench, exact, topo.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cnotmin/cnotmin.hpp"

namespace fs = std::filesystem;
using namespace cnotmin;
using json = nlohmann::json;

namespace {

enum Exit : int { kOk = 0, kDomain = 1, kInput = 2, kTimeout = 3 };

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int verbosity = 0;

void log(int level, const std::string& msg) {
  if (verbosity >= level) std::cerr << msg << '\n';
}

std::string read_input(const std::string& path) {
  try {
    return detail::read_file(path);
  } catch (const std::runtime_error& e) {
    throw InputError(e.what());
  }
}

std::string first_keyword(const std::string& text) {
  std::istringstream in(text);
  auto lines = detail::content_lines(in);
  if (lines.empty()) throw InputError("input file is empty");
  std::istringstream ss(lines.front().second);
  std::string kw;
  ss >> kw;
  return kw;
}

struct LoadedInput {
  ParityMatrix matrix;
  std::optional<Circuit> circuit;
};

LoadedInput load_input(const std::string& path) {
  const std::string text = read_input(path);
  const std::string kw = first_keyword(text);
  if (kw == "matrix") return {parse_matrix(text), std::nullopt};
  if (kw == "qubits") {
    Circuit c = parse_circuit(text);
    return {circuit_to_parity(c), std::move(c)};
  }
  throw InputError(path + ": expected a 'matrix <n>' or 'qubits <n>' file");
}

Topology load_topology_arg(const std::string& arg, int n) {
  Topology t;
  if (arg.empty())
    t = all_to_all(n);
  else if (fs::exists(arg))
    t = parse_topology(read_input(arg));
  else
    t = resolve_topology(arg);
  if (t.size() != n)
    throw InputError("topology has " + std::to_string(t.size()) + " qubits but the input has " + std::to_string(n));
  return t;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  for (const auto& x : split_list(s)) {
    try {
      out.push_back(std::stoi(x));
    } catch (const std::exception&) {
      throw InputError("expected an integer list, got '" + s + "'");
    }
  }
  return out;
}

/// Every option of the app and of the invoked subcommand(s), resolved.
json resolved_options(const CLI::App& app) {
  json out = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_name(false, true);
    if (name == "--help" || name == "-h") continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      for (std::size_t i = 0; i < r.size(); ++i) value += (i ? "," : "") + r[i];
      if (r.empty()) value = "true";
    } else {
      value = opt->get_default_str();
    }
    out[name] = value;
  }
  for (const CLI::App* sub : app.get_subcommands()) out[sub->get_name()] = resolved_options(*sub);
  return out;
}

void write_manifest(const fs::path& path, const CLI::App& app, const std::string& command, json extra = json::object()) {
  json m;
  m["command"] = command;
  m["version"] = std::string(kVersion);
  m["options"] = resolved_options(app);
  for (auto& [k, v] : extra.items()) m[k] = v;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  detail::write_file(path.string(), m.dump(2) + "\n");
}

// synth -----------------------------------------------------------------------------

struct SynthArgs {
  std::string input, method = "pmh", model, topology, out, emit_matrix, format = "circuit";
  int shots = 1, sims = 256, section = 0;
  double time_budget = 600;
  bool literal_puct = false;
};

int cmd_synth(const SynthArgs& a, const CLI::App& app, std::uint64_t seed) {
  const LoadedInput in = load_input(a.input);
  const int n = in.matrix.size();
  const Topology topo = load_topology_arg(a.topology, n);
  if (in.circuit && !a.topology.empty())
    for (const auto& g : in.circuit->gates)
      if (!topo.allows(g)) {
        std::cerr << "warning: input gate cnot " << g.control << ' ' << g.target << " is not allowed by topology " << topo.name()
                  << "; the input may predate the constraint\n";
        break;
      }
  if (!a.emit_matrix.empty()) {
    if (a.emit_matrix == "-")
      std::cout << serialize_matrix(in.matrix);
    else
      detail::write_file(a.emit_matrix, serialize_matrix(in.matrix));
  }
  if (!is_invertible(in.matrix)) throw SingularMatrixError("input matrix is singular over GF(2)");

  const auto t0 = std::chrono::steady_clock::now();
  SynthResult result;
  if (a.method == "gauss") {
    result = gaussian_synth(in.matrix);
  } else if (a.method == "pmh") {
    result = a.section > 0 ? pmh_synth(in.matrix, a.section) : pmh_synth(in.matrix);
  } else if (a.method == "greedy") {
    result = greedy_hamming_synth(in.matrix, topo);
  } else if (a.method == "exact") {
    ExactConfig cfg;
    cfg.topology = topo;
    cfg.time_budget_seconds = a.time_budget;
    result = optimal_synth(in.matrix, cfg);
  } else if (a.method == "mcts") {
    if (a.model.empty()) throw InputError("--method mcts needs --model");
    if (!fs::exists(a.model)) throw InputError("model file " + a.model + " not found");
    auto net = std::make_shared<const Network>(load_network(a.model));
    if (net->config().input_dim != n * n || net->config().action_dim != static_cast<int>(topo.num_actions()))
      throw InputError("model does not match the matrix size / topology");
    const NetworkEvaluator ev(net);
    const EpisodeConfig env = EpisodeConfig::make(topo);
    SearchConfig sc;
    sc.num_simulations = a.sims;
    sc.minmax_q = sc.parent_fpu = !a.literal_puct;
    const RewardKind kind = search_kind_for(net->config());
    std::optional<Circuit> best;
    if (in.matrix.is_identity()) best = Circuit{n, {}};
    for (int shot = 0; shot < a.shots && !in.matrix.is_identity(); ++shot) {
      SearchConfig s = sc;
      s.root_noise = shot > 0;
      const Trajectory t = play_episode(in.matrix, ev, env, kind, s, shot == 0 ? PlayMode::Greedy : PlayMode::Train,
                                        derive_seed(RngSeed{seed}, 0, static_cast<std::uint64_t>(shot)));
      if (t.solved() && (!best || t.length() < best->size())) best = t.circuit(topo);
    }
    if (!best) throw BudgetExceededError("mcts did not solve the instance in " + std::to_string(a.shots) + " shot(s)");
    result = SynthResult{*best, "mcts"};
  } else {
    throw InputError("unknown method '" + a.method + "'");
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!verify_synthesis(in.matrix, result.reduction())) {
    std::cerr << "error: synthesized circuit failed verification\n";
    return kDomain;
  }

  const std::string text = a.format == "qasm" ? to_qasm(result.circuit) : serialize_circuit(result.circuit);
  std::ostringstream summary;
  summary << "method " << result.method << " gates " << result.gate_count() << " seconds " << secs;
  if (a.out.empty()) {
    std::cout << text;
  } else {
    detail::write_file(a.out, text);
    write_manifest(a.out + ".manifest.json", app, "synth", {{"gates", result.gate_count()}, {"seed", seed}});
  }
  std::cerr << summary.str() << '\n';
  return kOk;
}

// verify ----------------------------------------------------------------------------

int cmd_verify(const std::string& matrix_path, const std::string& circuit_path) {
  const LoadedInput target = load_input(matrix_path);
  const Circuit c = parse_circuit(read_input(circuit_path));
  if (c.n != target.matrix.size())
    throw InputError("circuit has " + std::to_string(c.n) + " qubits, matrix has " + std::to_string(target.matrix.size()));
  const bool ok = verify_synthesis(target.matrix, c.reversed());
  std::cout << (ok ? "ok" : "mismatch") << '\n';
  return ok ? kOk : kDomain;
}

// train -----------------------------------------------------------------------------

struct TrainArgs {
  int n = 4;
  std::string topology, reward = "mixed", out = "train_out", checkpoint, walk = "all-to-all";
  std::uint64_t steps = 0;
  double switch_fraction = -1;
  int hidden = 256, depth = 9, skip = 2, sims = 128, eval_sims = 256, eval_instances = 100, batch = 128,
      episodes_per_round = 32, ratio = 4;
  std::size_t buffer = 100'000;
  double lr = 1e-3, l2 = 1e-4, discount = 0.99;
  bool retain_buffer = false, separate_trunks = false, literal_puct = false;
};

int cmd_train(const TrainArgs& a, const CLI::App& app, std::uint64_t seed) {
  const Topology topo = a.topology.empty() ? all_to_all(a.n) : load_topology_arg(a.topology, resolve_topology(a.topology).size());
  EpisodeConfig env = EpisodeConfig::make(topo);
  const double fraction = a.switch_fraction > 0 ? a.switch_fraction : (topo.is_complete() ? 0.5 : 0.8);
  env.reward = parse_reward_mode(a.reward, fraction);
  env.discount = a.discount;
  env.walk = parse_instance_walk(a.walk);
  TrainConfig tc = TrainConfig::defaults_for(topo);
  if (a.steps > 0) tc.total_env_steps = a.steps;
  tc.buffer_capacity = a.buffer;
  tc.batch_size = a.batch;
  tc.env_steps_per_train_step = a.ratio;
  tc.episodes_per_round = a.episodes_per_round;
  tc.eval_instances = a.eval_instances;
  tc.eval_simulations = a.eval_sims;
  tc.retain_buffer_at_switch = a.retain_buffer;
  tc.optimizer.learning_rate = a.lr;
  tc.seed = RngSeed{seed};
  tc.checkpoint_dir = (fs::path(a.out) / "checkpoints").string();
  NetConfig nc;
  nc.hidden_width = a.hidden;
  nc.depth = a.depth;
  nc.skip_period = a.skip;
  nc.l2 = a.l2;
  nc.shared_trunk = !a.separate_trunks;
  nc = net_config_for(env, nc);
  SearchConfig sc;
  sc.num_simulations = a.sims;
  sc.minmax_q = sc.parent_fpu = !a.literal_puct;

  fs::create_directories(a.out);
  const fs::path metrics_path = fs::path(a.out) / "metrics.csv";
  write_manifest(fs::path(a.out) / "manifest.json", app, "train",
                 {{"seed", seed}, {"total_env_steps", tc.total_env_steps}, {"switch_step", env.reward.switch_step(tc.total_env_steps)},
                  {"parameters", ParamLayout(nc).total}});
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult r = run_training(tc, env, nc, sc, [&](const MetricRow& row, const TrainResult& partial) {
    detail::write_file(metrics_path.string(), metrics_csv(partial.metrics));
    std::ostringstream msg;
    msg << "step " << row.env_step << " phase " << to_string(row.phase) << " success " << row.success_rate << " length "
        << row.mean_length << " loss " << partial.last_loss << " elapsed "
        << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << "s";
    log(0, msg.str());
  });
  detail::write_file(metrics_path.string(), metrics_csv(r.metrics));
  const std::string model = a.checkpoint.empty() ? (fs::path(a.out) / "model.bin").string() : a.checkpoint;
  if (fs::path(model).has_parent_path()) fs::create_directories(fs::path(model).parent_path());
  save_network(model, *r.network);
  const SwitchReport rep = reward_switch_report(r.metrics);
  std::cout << "model " << model << " env_steps " << r.env_steps << " train_steps " << r.train_steps << '\n';
  if (rep.crossed)
    std::cout << "switch pre " << rep.pre_switch << " post " << rep.post_switch << " reduction " << rep.reduction_percent << "%"
              << (rep.plateaued ? "" : " (no plateau before switch)") << '\n';
  return kOk;
}

// bench -----------------------------------------------------------------------------

struct BenchArgs {
  std::string kind, sizes = "4,5,6,7,8", topologies = "4-L,4-Y,5-L,5-T,6-L,6-T,6-Y", models_dir, out = "bench_out",
                    methods = "gauss,pmh,greedy,exact,mcts,reference", shots = "1", widths = "32,64,128,256",
                    ablation_topologies = "4-L,4-Y,5-L,5-T,6-L,6-Y", walk = "all-to-all";
  int instances = 100, sims = 256, max_exact = 6;
  double exact_budget = 600;
  std::uint64_t steps_per_qubit = 75'000;
  bool literal_puct = false;
};

int cmd_bench(const BenchArgs& a, const CLI::App& app, std::uint64_t seed, int jobs) {
  fs::create_directories(a.out);
  const fs::path timing = fs::path(a.out) / "timing.csv";
  if (fs::exists(timing)) fs::remove(timing);
  BenchReport report;
  if (a.kind == "ablation") {
    AblationSuite s;
    s.hidden_sizes = split_ints(a.widths);
    s.topologies = split_list(a.ablation_topologies);
    s.steps_per_qubit = a.steps_per_qubit;
    s.seed = RngSeed{seed};
    s.include_reference = a.methods.find("reference") != std::string::npos;
    s.search.minmax_q = s.search.parent_fpu = !a.literal_puct;
    report = run_ablation(s, nullptr, [](const MetricRow& row, const TrainResult&) {
      log(1, "step " + std::to_string(row.env_step) + " success " + std::to_string(row.success_rate));
    });
  } else {
    BenchSuite s;
    s.sizes = split_ints(a.sizes);
    s.topologies = split_list(a.topologies);
    s.instances = a.instances;
    s.seed = RngSeed{seed};
    s.methods = split_list(a.methods);
    for (const auto& m : s.methods)
      if (m != "gauss" && m != "pmh" && m != "greedy" && m != "exact" && m != "mcts" && m != "reference")
        throw InputError("unknown bench method '" + m + "'");
    s.models_dir = a.models_dir;
    s.shots = split_ints(a.shots);
    s.exact.time_budget_seconds = a.exact_budget;
    s.max_exact_qubits = a.max_exact;
    s.search.num_simulations = a.sims;
    s.search.minmax_q = s.search.parent_fpu = !a.literal_puct;
    s.jobs = jobs;
    s.walk = parse_instance_walk(a.walk);
    report = a.kind == "unconstrained" ? run_unconstrained_bench(s) : run_constrained_bench(s);
    for (const auto& r : report.runs)
      if (!r.available) log(0, r.setting + " " + r.method + ": " + r.note);
  }
  emit_reports(report, a.out);
  write_manifest(fs::path(a.out) / (report.table + ".manifest.json"), app, "bench " + a.kind, {{"seed", seed}});
  std::cout << to_markdown(report.csv);
  return kOk;
}

// exact -----------------------------------------------------------------------------

struct ExactArgs {
  std::string input, topology, out;
  int n = 0, instances = 0;
  double time_budget = 600;
  bool no_pdb = false;
  std::string walk = "all-to-all";
};

int cmd_exact(const ExactArgs& a, const CLI::App& app, std::uint64_t seed) {
  CsvTable t;
  t.header = {"instance", "seed", "length", "nodes", "millis", "lower_bound"};
  ExactConfig cfg;
  cfg.time_budget_seconds = a.time_budget;
  cfg.use_pattern_databases = !a.no_pdb;
  bool timed_out = false;
  auto solve = [&](const ParityMatrix& m, const std::string& id, const std::string& s) {
    try {
      const ExactResult r = optimal_synth_detailed(m, cfg);
      t.rows.push_back({id, s, std::to_string(r.synth.gate_count()), std::to_string(r.nodes_expanded), format_number(r.seconds * 1e3, 3),
                        std::to_string(r.root_heuristic)});
    } catch (const SearchTimeoutError&) {
      timed_out = true;
      t.rows.push_back({id, s, "", "", format_number(cfg.time_budget_seconds * 1e3, 3), ""});
    }
  };
  if (!a.input.empty()) {
    const LoadedInput in = load_input(a.input);
    cfg.topology = load_topology_arg(a.topology, in.matrix.size());
    if (!is_invertible(in.matrix)) throw SingularMatrixError("input matrix is singular over GF(2)");
    solve(in.matrix, "0", "");
  } else {
    if (a.n < 2 || a.instances < 1) throw InputError("exact needs an input file or --n and --instances");
    const Topology topo = load_topology_arg(a.topology, a.n);
    cfg.topology = topo;
    const InstanceWalk walk = parse_instance_walk(a.walk);
    for (int i = 0; i < a.instances; ++i) {
      const RngSeed s = instance_seed(RngSeed{seed}, static_cast<std::size_t>(i));
      solve(sample_instance(topo, s, walk), std::to_string(i), std::to_string(s.value));
    }
  }
  const std::string csv = to_csv(t);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    detail::write_file(a.out, csv);
    write_manifest(a.out + ".manifest.json", app, "exact", {{"seed", seed}});
  }
  return timed_out ? kTimeout : kOk;
}

// topo ------------------------------------------------------------------------------

int cmd_topo_show(const std::string& name) {
  const Topology t = fs::exists(name) ? parse_topology(read_input(name)) : resolve_topology(name);
  std::cout << serialize_topology(t);
  std::cout << "# edges " << t.edges().size() << " actions " << t.num_actions() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CNOT-count minimisation for linear reversible circuits"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value file; command-line flags override it");
  app.allow_config_extras(false);
  std::uint64_t seed = 1;
  int jobs = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  app.add_option("--seed", seed, "Master seed")->capture_default_str();
  app.add_option("--jobs", jobs, "Worker threads for instance-parallel work")->capture_default_str();
  app.add_flag("-v,--verbose", verbosity, "Increase log verbosity");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Synthesize a circuit for a matrix or circuit file");
  synth->add_option("input", sa.input, "Matrix ('matrix <n>') or circuit ('qubits <n>') file")->required();
  synth->add_option("--method", sa.method, "gauss | pmh | greedy | mcts | exact")
      ->check(CLI::IsMember({"gauss", "pmh", "greedy", "mcts", "exact"}))
      ->capture_default_str();
  synth->add_option("--model", sa.model, "Checkpoint for --method mcts");
  synth->add_option("--topology", sa.topology, "Builtin name, all-<n>, or topology file");
  synth->add_option("--shots", sa.shots, "MCTS episodes; the shortest solution is kept")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--sims", sa.sims, "MCTS simulations per move")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--section", sa.section, "PMH section width (0 tries every width)")->capture_default_str();
  synth->add_option("--time-budget", sa.time_budget, "Exact search budget in seconds")->capture_default_str();
  synth->add_option("--out", sa.out, "Output circuit file (stdout when omitted)");
  synth->add_option("--emit-matrix", sa.emit_matrix, "Also write the input's parity matrix ('-' for stdout)");
  synth->add_flag("--literal-puct", sa.literal_puct, "Plain PUCT: raw Q values and 0 for unvisited edges");
  synth->add_option("--format", sa.format, "circuit | qasm")->check(CLI::IsMember({"circuit", "qasm"}))->capture_default_str();

  std::string verify_matrix, verify_circuit;
  auto* verify = app.add_subcommand("verify", "Check that a circuit implements a matrix (exit 0 yes, 1 no, 2 bad input)");
  verify->add_option("matrix", verify_matrix, "Target matrix or circuit file")->required();
  verify->add_option("circuit", verify_circuit, "Candidate circuit file")->required();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Self-play training");
  train->add_option("--n", ta.n, "Qubits (all-to-all) when no topology is given")->capture_default_str();
  train->add_option("--topology", ta.topology, "Builtin name or all-<n>");
  train->add_option("--steps", ta.steps, "Total env steps (default 500k unconstrained, 750k*n constrained)");
  train->add_option("--reward", ta.reward, "mixed | informed | sparse")->check(CLI::IsMember({"mixed", "informed", "sparse"}))->capture_default_str();
  train->add_option("--switch-fraction", ta.switch_fraction, "Mixed reward switch point (default 0.5 / 0.8 constrained)");
  train->add_option("--hidden", ta.hidden, "Hidden width")->capture_default_str();
  train->add_option("--depth", ta.depth, "Hidden layers")->capture_default_str();
  train->add_option("--skip", ta.skip, "Layers per residual block")->capture_default_str();
  train->add_flag("--separate-trunks", ta.separate_trunks, "Separate policy and value trunks");
  train->add_option("--sims", ta.sims, "Simulations per self-play move")->capture_default_str();
  train->add_option("--eval-sims", ta.eval_sims, "Simulations per evaluation move")->capture_default_str();
  train->add_option("--eval-instances", ta.eval_instances, "Held-out evaluation instances")->capture_default_str();
  train->add_option("--batch", ta.batch, "Batch size")->capture_default_str();
  train->add_option("--buffer", ta.buffer, "Replay capacity")->capture_default_str();
  train->add_option("--ratio", ta.ratio, "Env steps per train step")->capture_default_str();
  train->add_option("--episodes-per-round", ta.episodes_per_round, "Episodes generated per snapshot")->capture_default_str();
  train->add_option("--lr", ta.lr, "Learning rate")->capture_default_str();
  train->add_option("--l2", ta.l2, "L2 coefficient")->capture_default_str();
  train->add_option("--discount", ta.discount, "Discount factor")->capture_default_str();
  train->add_flag("--literal-puct", ta.literal_puct, "Plain PUCT: raw Q values and 0 for unvisited edges");
  train->add_flag("--retain-buffer", ta.retain_buffer, "Relabel instead of purging the buffer at the switch");
  train->add_option("--walk", ta.walk, "Instance walk: all-to-all | topology")->capture_default_str();
  train->add_option("--out", ta.out, "Output directory (metrics.csv, checkpoints/, manifest.json)")->capture_default_str();
  train->add_option("--checkpoint", ta.checkpoint, "Final model path (default <out>/model.bin)");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Regenerate the benchmark tables");
  bench->add_option("kind", ba.kind, "unconstrained | constrained | ablation")
      ->required()
      ->check(CLI::IsMember({"unconstrained", "constrained", "ablation"}));
  bench->add_option("--sizes", ba.sizes, "Qubit counts (unconstrained)")->capture_default_str();
  bench->add_option("--topologies", ba.topologies, "Topology names (constrained)")->capture_default_str();
  bench->add_option("--instances", ba.instances, "Instances per setting")->capture_default_str();
  bench->add_option("--methods", ba.methods, "Subset of gauss,pmh,greedy,exact,mcts,reference")->capture_default_str();
  bench->add_option("--models-dir", ba.models_dir, "Directory of <setting>.bin checkpoints");
  bench->add_option("--shots", ba.shots, "MCTS shot counts, e.g. 1,100")->capture_default_str();
  bench->add_option("--sims", ba.sims, "MCTS simulations per move")->capture_default_str();
  bench->add_option("--exact-budget", ba.exact_budget, "Exact search budget per instance (s)")->capture_default_str();
  bench->add_option("--max-exact-qubits", ba.max_exact, "Largest n given to the exact solver")->capture_default_str();
  bench->add_option("--widths", ba.widths, "Ablation hidden widths")->capture_default_str();
  bench->add_option("--ablation-topologies", ba.ablation_topologies, "Ablation topologies")->capture_default_str();
  bench->add_option("--steps-per-qubit", ba.steps_per_qubit, "Ablation training steps per qubit")->capture_default_str();
  bench->add_flag("--literal-puct", ba.literal_puct, "Plain PUCT: raw Q values and 0 for unvisited edges");
  bench->add_option("--walk", ba.walk, "Instance walk: all-to-all | topology")->capture_default_str();
  bench->add_option("--out", ba.out, "Output directory")->capture_default_str();

  ExactArgs ea;
  auto* exact = app.add_subcommand("exact", "Optimal synthesis; writes CSV");
  exact->add_option("input", ea.input, "Matrix or circuit file (omit to sample instances)");
  exact->add_option("--n", ea.n, "Qubits for sampled instances");
  exact->add_option("--instances", ea.instances, "Number of sampled instances");
  exact->add_option("--topology", ea.topology, "Builtin name, all-<n>, or topology file");
  exact->add_option("--time-budget", ea.time_budget, "Seconds per instance")->capture_default_str();
  exact->add_flag("--no-pdb", ea.no_pdb, "Disable pattern-database heuristics");
  exact->add_option("--walk", ea.walk, "Instance walk: all-to-all | topology")->capture_default_str();
  exact->add_option("--out", ea.out, "CSV output path (stdout when omitted)");

  std::string topo_name;
  auto* topo = app.add_subcommand("topo", "Inspect topologies");
  topo->require_subcommand(1);
  auto* show = topo->add_subcommand("show", "Print a topology's edges");
  show->add_option("name", topo_name, "Builtin name, all-<n>, or file")->required();
  auto* list = topo->add_subcommand("list", "List builtin topologies");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (*synth) return cmd_synth(sa, app, seed);
    if (*verify) return cmd_verify(verify_matrix, verify_circuit);
    if (*train) return cmd_train(ta, app, seed);
    if (*bench) return cmd_bench(ba, app, seed, jobs);
    if (*exact) return cmd_exact(ea, app, seed);
    if (*show) return cmd_topo_show(topo_name);
    if (*list) {
      for (const auto& name : builtin_names()) std::cout << name << '\n';
      return kOk;
    }
  } catch (const SearchTimeoutError& e) {
    std::cerr << "timeout: " << e.what() << '\n';
    return kTimeout;
  } catch (const BudgetExceededError& e) {
    std::cerr << "unsolved: " << e.what() << '\n';
    return kDomain;
  } catch (const DepthCapError& e) {
    std::cerr << "unsolved: " << e.what() << '\n';
    return kDomain;
  } catch (const NonFiniteError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kDomain;
  } catch (const std::invalid_argument& e) {  // ParseError, TopologyError, shape errors
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const SingularMatrixError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const CheckpointError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomain;
  }
  return kInput;
}
