#include "ces/cli/commands.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"

#include "ces/cli/config.hpp"
#include "ces/core/log.hpp"
#include "ces/eval/ingest.hpp"
#include "ces/eval/metrics.hpp"
#include "ces/eval/probe.hpp"
#include "ces/rollout/stages.hpp"
#include "ces/rollout/train.hpp"
#include "ces/sim/scripts.hpp"
#include "ces/sim/tasks.hpp"

namespace ces {

namespace fs = std::filesystem;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::ConfigError:
    case Errc::InvalidArgument:
    case Errc::UnboundPlaceholder:
    case Errc::UnknownPlaceholder:
      return kExitConfig;
    case Errc::BackendFailure:
    case Errc::Timeout:
    case Errc::BackendUnreachable:
    case Errc::MalformedResponse:
    case Errc::UnknownContext:
      return kExitBackend;
    default:
      return kExitData;
  }
}

namespace {

std::string fixed(double x, int digits = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << x;
  return os.str();
}

std::vector<TaskRecord> load_tasks(const fs::path& path) {
  return read_jsonl_as<TaskRecord>(path);
}

World load_world(const fs::path& path) {
  try {
    return build_world(Json::parse(read_file(path)));
  } catch (const Json::exception& e) {
    throw Error(Errc::InvalidSpec, path.string() + ": " + e.what());
  }
}

template <typename T>
T pick(const std::optional<T>& flag, const std::optional<T>& config, const std::string& what) {
  if (flag) return *flag;
  if (config) return *config;
  throw Error(Errc::ConfigError, what + " not given by flag or config");
}

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// Primary output plus timing, written next to it as <file>.log.
void write_sidecar(const fs::path& primary, const std::vector<std::string>& args, int code,
                   double seconds) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ofstream os(primary.string() + ".log");
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << " ces";
  for (const auto& a : args) os << " " << a;
  os << "\nexit " << code << " after " << fixed(seconds, 3) << "s\n";
}

struct GenWorldFlags {
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> suite_seed;
  WorldParams world;
  TaskSuiteParams suite;
  std::string out;
};

int cmd_gen_world(const GenWorldFlags& f, std::ostream& out, fs::path& primary) {
  const World w = generate_world(f.seed, f.world);
  TaskSuiteParams suite = f.suite;
  suite.seed = f.suite_seed.value_or(f.seed);
  const auto tasks = generate_task_suite(w, suite);
  const fs::path dir = f.out;
  fs::create_directories(dir);
  write_file(dir / "world.json", Json(w).dump(2) + "\n");
  write_jsonl_of(dir / "tasks.jsonl", tasks);
  primary = dir / "tasks.jsonl";
  std::size_t confusers = 0;
  std::size_t steps = 0;
  for (const auto& t : tasks) {
    confusers += has_nonadjacent_repeat(t);
    steps += t.steps.size();
  }
  std::size_t edges = 0;
  for (const auto& [_, ts] : w.transitions) edges += ts.size();
  out << "world: " << w.screens.size() << " screens, " << edges << " transitions -> "
      << (dir / "world.json").string() << "\n";
  out << "tasks: " << tasks.size() << " (" << confusers << " with repeated screens), " << steps
      << " steps -> " << (dir / "tasks.jsonl").string() << "\n";
  return kExitOk;
}

struct RunFlags {
  std::string config;
  std::string tasks;
  std::string world;
  std::string mode;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> parallelism;
  std::optional<int> max_steps;
  std::optional<int> history_window;
};

Backends backends_for(const HarnessConfig& cfg, bool need_coordinator, bool need_tracker,
                      const World* world, const std::vector<TaskRecord>* tasks) {
  Backends b;
  auto need = [&](const std::optional<BackendDescriptor>& d, AgentRole role) {
    if (!d) {
      throw Error(Errc::ConfigError,
                  "backends." + std::string(to_string(role)) + " is required for this command");
    }
    return make_backend(*d, role, world, tasks);
  };
  b.executor = need(cfg.executor, AgentRole::Executor);
  if (need_coordinator) b.coordinator = need(cfg.coordinator, AgentRole::Coordinator);
  if (need_tracker) b.state_tracker = need(cfg.state_tracker, AgentRole::StateTracker);
  return b;
}

int cmd_run(const RunFlags& f, std::ostream& out, fs::path& primary) {
  HarnessConfig cfg = load_config(f.config);
  if (!f.mode.empty()) {
    const auto mode = loop_mode_from_string(f.mode);
    if (!mode) throw Error(Errc::ConfigError, "unknown mode '" + f.mode + "'");
    cfg.loop.mode = *mode;
  }
  if (f.max_steps) cfg.loop.max_steps = *f.max_steps;
  if (f.history_window) cfg.loop.history_window = *f.history_window;
  cfg.loop.validate();
  if (f.seed) cfg.seed = *f.seed;
  if (f.parallelism) cfg.parallelism = *f.parallelism;
  if (cfg.parallelism < 1) throw Error(Errc::ConfigError, "parallelism must be >= 1");
  const fs::path tasks_path = pick(opt_path(f.tasks), cfg.tasks, "tasks");
  const fs::path out_path = pick(opt_path(f.out), cfg.output, "output path");
  const auto world_path = f.world.empty() ? cfg.world : opt_path(f.world);

  const auto tasks = load_tasks(tasks_path);
  std::optional<World> world;
  if (world_path) world = load_world(*world_path);
  const PromptSet prompts = cfg.templates ? load_prompt_set(*cfg.templates) : PromptSet{};
  const Backends backends =
      backends_for(cfg, cfg.loop.mode != LoopMode::NoCoordinator,
                   cfg.loop.mode != LoopMode::NoStateTracker, world ? &*world : nullptr, &tasks);
  EnvFactory factory = [&](const TaskRecord& task) -> std::unique_ptr<Environment> {
    if (world) {
      const std::string start =
          task.steps.empty() ? world->home_screen : task.steps.front().observation.screen_id;
      return std::make_unique<WorldEnv>(*world, start);
    }
    return std::make_unique<ReplayEnv>(task);
  };
  const auto trajs = run_suite(tasks, factory, backends, cfg.loop, cfg.reward, cfg.seed,
                               cfg.parallelism, prompts);
  ensure_parent(out_path);
  write_jsonl_of(out_path, trajs);
  primary = out_path;

  long completed = 0, truncated = 0, env_errors = 0, successes = 0;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    switch (trajs[i].status) {
      case TrajectoryStatus::CompletedByAgent: ++completed; break;
      case TrajectoryStatus::Truncated: ++truncated; break;
      case TrajectoryStatus::EnvError: ++env_errors; break;
    }
    successes += episode_success(trajs[i], tasks[i], cfg.reward);
  }
  out << "mode " << to_string(cfg.loop.mode) << ": " << trajs.size() << " episodes, " << completed
      << " completed, " << truncated << " truncated, " << env_errors << " env errors; "
      << successes << " successful -> " << out_path.string() << "\n";
  for (const auto& t : trajs) {
    if (t.error) out << "  " << t.task_id << ": " << *t.error << "\n";
  }
  return env_errors == 0 ? kExitOk : kExitBackend;
}

struct EvalFlags {
  std::string pred;
  std::string tasks;
  std::string schema;
  std::string config;
  std::string mode;
  std::string out;
  std::string table;
};

int cmd_eval(const EvalFlags& f, std::ostream& out, fs::path& primary) {
  RewardConfig reward;
  if (!f.config.empty()) reward = load_config(f.config).reward;
  std::vector<TaskRecord> tasks;
  if (f.schema.empty()) {
    tasks = load_tasks(f.tasks);
  } else {
    const auto descriptor = SchemaDescriptor::from_json(Json::parse(read_file(f.schema)));
    auto ingested = ingest_benchmark(f.tasks, descriptor);
    if (ingested.skipped > 0) out << "skipped " << ingested.skipped << " invalid task records\n";
    tasks = std::move(ingested.tasks);
  }
  const auto preds = read_jsonl_as<Trajectory>(f.pred);
  std::string mode = f.mode;
  if (mode.empty() && !preds.empty()) mode = preds.front().mode;
  const Report report = aggregate(score_trajectories(preds, tasks, reward), mode, reward);
  const std::string table = report_table(report);
  out << table;
  if (!f.out.empty()) {
    ensure_parent(f.out);
    write_file(f.out, report_json(report).dump(2) + "\n");
    primary = f.out;
  }
  if (!f.table.empty()) {
    ensure_parent(f.table);
    write_file(f.table, table);
    if (primary.empty()) primary = f.table;
  }
  return kExitOk;
}

struct RolloutFlags {
  std::string config;
  int stage = 1;
  std::string tasks;
  std::string world;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_rollout(const RolloutFlags& f, std::ostream& out, fs::path& primary) {
  HarnessConfig cfg = load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  const fs::path tasks_path = pick(opt_path(f.tasks), cfg.tasks, "tasks");
  const fs::path out_path = pick(opt_path(f.out), cfg.output, "output path");
  const auto world_path = f.world.empty() ? cfg.world : opt_path(f.world);
  const auto tasks = load_tasks(tasks_path);
  std::optional<World> world;
  if (world_path) world = load_world(*world_path);
  const auto contexts = build_contexts(tasks, f.stage);
  const Backends b = backends_for(cfg, true, f.stage == 2, world ? &*world : nullptr, &tasks);

  std::vector<StageBatch> batches;
  batches.reserve(contexts.size());
  double reward_sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    Rng rng(derive_seed(cfg.seed, i));
    batches.push_back(f.stage == 1 ? stage1_collect(contexts[i], *b.coordinator, *b.executor,
                                                    cfg.reward, cfg.grpo, rng)
                                   : stage2_collect(contexts[i], *b.state_tracker,
                                                    *b.coordinator, *b.executor, cfg.reward,
                                                    cfg.grpo, rng));
    for (const auto& c : batches.back().group.candidates) {
      reward_sum += c.reward;
      ++n;
    }
  }
  ensure_parent(out_path);
  emit_batches(batches, out_path);
  primary = out_path;
  out << "stage " << f.stage << ": " << batches.size() << " groups of " << cfg.grpo.group_size
      << ", mean reward " << fixed(n ? reward_sum / static_cast<double>(n) : 0.0) << " -> "
      << out_path.string() << "\n";
  return kExitOk;
}

struct TrainFlags {
  int stage = 1;
  int iters = 200;
  std::optional<int> stage1_iters;
  std::uint64_t seed = 0;
  std::optional<double> lr;
  int candidates = kStandardCandidates;
  std::string config;
  std::string world;
  std::string tasks;
  std::string out;
  std::string policy_out;
};

int cmd_train_toy(const TrainFlags& f, std::ostream& out, fs::path& primary) {
  StagedToyParams p;
  if (!f.config.empty()) {
    const auto cfg = load_config(f.config);
    p.reward = cfg.reward;
    p.grpo = cfg.grpo;
  }
  p.seed = f.seed;
  p.candidates = f.candidates;
  if (f.lr) p.stage1_lr = p.stage2_lr = *f.lr;
  if (f.stage == 1) {
    p.stage1_iterations = f.iters;
    p.stage2_iterations = 0;
  } else {
    p.stage1_iterations = f.stage1_iters.value_or(f.iters);
    p.stage2_iterations = f.iters;
  }
  Fixture fx;
  if (f.world.empty() != f.tasks.empty()) {
    throw Error(Errc::ConfigError, "--world and --tasks go together");
  }
  if (f.world.empty()) {
    fx = standard_fixture();
  } else {
    fx.world = load_world(f.world);
    fx.tasks = load_tasks(f.tasks);
  }
  const auto result = run_staged_toy(fx.world, fx.tasks, p);
  const TrainResult& tr = f.stage == 1 ? result.stage1 : result.stage2;

  std::ostringstream csv;
  csv << "iteration,mean_reward\n";
  for (std::size_t i = 0; i < tr.curve.size(); ++i) {
    csv << i + 1 << "," << fixed(tr.curve[i], 9) << "\n";
  }
  ensure_parent(f.out);
  write_file(f.out, csv.str());
  primary = f.out;
  if (!f.policy_out.empty()) {
    ensure_parent(f.policy_out);
    write_file(f.policy_out, Json(tr.policy).dump(2) + "\n");
  }
  const auto ma = moving_average(tr.curve, 10);
  out << "stage " << f.stage << ": initial expectation " << fixed(tr.initial_expectation)
      << ", final moving average " << fixed(ma.empty() ? 0.0 : ma.back()) << " over "
      << tr.curve.size() << " iterations -> " << f.out << "\n";
  return kExitOk;
}

struct ProbeFlags {
  std::string tasks;
  std::string trajectories;
  std::string judge = "window";
  int window = 4;
  int max_interval = 12;
  int pairs = 400;
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
  std::string csv;
};

int cmd_probe(const ProbeFlags& f, std::ostream& out, fs::path& primary) {
  std::vector<ScreenSequence> seqs;
  if (!f.trajectories.empty()) {
    seqs = screen_sequences(read_jsonl_as<Trajectory>(f.trajectories));
  } else if (!f.tasks.empty()) {
    seqs = screen_sequences(load_tasks(f.tasks));
  } else {
    seqs = screen_sequences(probe_fixture().tasks);
  }
  std::unique_ptr<TemporalJudge> judge;
  if (f.judge == "perfect") {
    judge = std::make_unique<PerfectJudge>();
  } else if (f.judge == "window") {
    judge = std::make_unique<WindowJudge>(f.window);
  } else if (f.judge == "backend") {
    if (f.config.empty()) throw Error(Errc::ConfigError, "--judge backend needs --config");
    const auto cfg = load_config(f.config);
    if (!cfg.judge) throw Error(Errc::ConfigError, "backends.judge is required");
    judge = std::make_unique<BackendJudge>(
        make_backend(*cfg.judge, AgentRole::Coordinator, nullptr, nullptr));
  } else {
    throw Error(Errc::ConfigError, "unknown judge '" + f.judge + "'");
  }
  const auto result = temporal_probe(seqs, *judge, f.max_interval, f.pairs, f.seed);
  const std::string csv = probe_csv(result);
  out << csv;
  if (!f.out.empty()) {
    ensure_parent(f.out);
    write_file(f.out, probe_json(result).dump(2) + "\n");
    primary = f.out;
  }
  if (!f.csv.empty()) {
    ensure_parent(f.csv);
    write_file(f.csv, csv);
    if (primary.empty()) primary = f.csv;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coordinator / executor / state-tracker harness"};
  app.require_subcommand(1);

  GenWorldFlags gw;
  auto* gen = app.add_subcommand("gen-world", "Generate a screen-graph world and a task suite");
  gen->add_option("--seed", gw.seed, "World seed")->required();
  gen->add_option("--suite-seed", gw.suite_seed, "Task suite seed (defaults to --seed)");
  gen->add_option("--screens", gw.world.screens, "Number of screens")->capture_default_str();
  gen->add_option("--branching", gw.world.branching, "Children per screen")->capture_default_str();
  gen->add_option("--elements", gw.world.elements_per_screen, "UI elements per screen")
      ->capture_default_str();
  gen->add_option("--tasks", gw.suite.n_tasks, "Number of tasks")->capture_default_str();
  gen->add_option("--min-len", gw.suite.min_len, "Minimum task length in steps")
      ->capture_default_str();
  gen->add_option("--confuser-rate", gw.suite.confuser_rate, "Fraction of confuser tasks")
      ->capture_default_str();
  gen->add_option("--max-subgoals", gw.suite.max_subgoals, "Trips per task at most")
      ->capture_default_str();
  gen->add_option("--out", gw.out, "Output directory")->required();

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Run the collaborative loop over a task suite");
  run->add_option("--config", rf.config, "Harness config JSON")->required();
  run->add_option("--tasks", rf.tasks, "Task suite JSON Lines (overrides config)");
  run->add_option("--world", rf.world, "World JSON for live episodes (otherwise replay)");
  run->add_option("--mode", rf.mode, "full | no-coordinator | no-state-tracker");
  run->add_option("--out", rf.out, "Trajectory JSON Lines output");
  run->add_option("--seed", rf.seed, "Override the config seed");
  run->add_option("--parallelism", rf.parallelism, "Concurrent episodes");
  run->add_option("--max-steps", rf.max_steps, "Step budget per episode");
  run->add_option("--history-window", rf.history_window, "Actions kept without a state tracker");

  EvalFlags ef;
  auto* ev = app.add_subcommand("eval", "Score trajectories with Type / GR / SR");
  ev->add_option("--pred", ef.pred, "Trajectory JSON Lines")->required();
  ev->add_option("--tasks", ef.tasks, "Task suite or benchmark JSON Lines")->required();
  ev->add_option("--schema", ef.schema, "Schema descriptor for benchmark ingestion");
  ev->add_option("--config", ef.config, "Harness config for reward settings");
  ev->add_option("--mode", ef.mode, "Mode label for the report");
  ev->add_option("--out", ef.out, "Report JSON output");
  ev->add_option("--table", ef.table, "Plain-text table output");

  RolloutFlags ro;
  auto* roll = app.add_subcommand("rollout", "Collect one GRPO group per step context");
  roll->add_option("--config", ro.config, "Harness config JSON")->required();
  roll->add_option("--stage", ro.stage, "1 (coordinator) or 2 (state tracker)")
      ->required()
      ->check(CLI::IsMember({1, 2}));
  roll->add_option("--tasks", ro.tasks, "Task suite JSON Lines (overrides config)");
  roll->add_option("--world", ro.world, "World JSON (overrides config)");
  roll->add_option("--out", ro.out, "Batch JSON Lines output");
  roll->add_option("--seed", ro.seed, "Override the config seed");

  TrainFlags tf;
  auto* train = app.add_subcommand("train-toy", "Staged GRPO training of toy policies");
  train->add_option("--stage", tf.stage, "Stage whose curve is written")
      ->required()
      ->check(CLI::IsMember({1, 2}));
  train->add_option("--iters", tf.iters, "Iterations of the chosen stage")->capture_default_str();
  train->add_option("--stage1-iters", tf.stage1_iters,
                    "Stage-1 iterations before Stage 2 (defaults to --iters)");
  train->add_option("--seed", tf.seed, "Training seed")->required();
  train->add_option("--lr", tf.lr, "Learning rate");
  train->add_option("--candidates", tf.candidates, "Payloads per toy context")
      ->capture_default_str();
  train->add_option("--config", tf.config, "Harness config for reward and GRPO settings");
  train->add_option("--world", tf.world, "World JSON (default: standard fixture)");
  train->add_option("--tasks", tf.tasks, "Task suite JSON Lines (default: standard fixture)");
  train->add_option("--out", tf.out, "Learning-curve CSV output")->required();
  train->add_option("--policy-out", tf.policy_out, "Trained toy policy JSON output");

  ProbeFlags pf;
  auto* probe = app.add_subcommand("probe-temporal", "Temporal-order probe over screen pairs");
  probe->add_option("--tasks", pf.tasks, "Task suite JSON Lines (default: probe fixture)");
  probe->add_option("--trajectories", pf.trajectories, "Trajectory JSON Lines instead of tasks");
  probe->add_option("--judge", pf.judge, "perfect | window | backend")->capture_default_str();
  probe->add_option("--window", pf.window, "Window-judge recall window")->capture_default_str();
  probe->add_option("--max-interval", pf.max_interval, "Largest step interval")
      ->capture_default_str();
  probe->add_option("--pairs", pf.pairs, "Pairs per interval")->capture_default_str();
  probe->add_option("--seed", pf.seed, "Sampling seed")->required();
  probe->add_option("--config", pf.config, "Harness config with a judge backend");
  probe->add_option("--out", pf.out, "Probe JSON output");
  probe->add_option("--csv", pf.csv, "Probe CSV output");

  std::vector<std::string> argv_store{"ces"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const auto start = std::chrono::steady_clock::now();
  fs::path primary;
  int code = kExitOk;
  try {
    if (*gen) code = cmd_gen_world(gw, out, primary);
    if (*run) code = cmd_run(rf, out, primary);
    if (*ev) code = cmd_eval(ef, out, primary);
    if (*roll) code = cmd_rollout(ro, out, primary);
    if (*train) code = cmd_train_toy(tf, out, primary);
    if (*probe) code = cmd_probe(pf, out, primary);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    code = exit_code_for(e.code());
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << "\n";
    code = kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    code = kExitData;
  }
  if (!primary.empty()) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_sidecar(primary, args, code, secs);
  }
  return code;
}

}  // namespace ces
