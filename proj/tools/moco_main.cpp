// Command-line driver: single-round subset selection benchmarks, multi-round
// active-learning runs, guarantee verification, exact/Monte-Carlo oracles and
// a hypervolume debug helper. All artifacts except the timing files are
// byte-identical for a fixed config and seed.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "moco/active_learning.hpp"
#include "moco/errors.hpp"
#include "moco/rng.hpp"
#include "moco/selection.hpp"
#include "moco/theory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace moco;

namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr const char* kSchemaVersion = "v1";

constexpr const char* kSchemaText = R"(schema v1

All decimal values use the shortest round-trip form of "%.17g"; reruns with the
same resolved config and seed are byte-identical. timings.csv is the one
exception: wall-clock columns vary run to run and are excluded from that
guarantee. A -1 in an aggregate column means the statistic is undefined (for
example, no trial reached the target).

config.resolved.json  full configuration with defaults applied, plus mode,
                      version and schema; re-running it reproduces the run
trials.csv    strategy,n,trial,seed,value,queries
              one row per (cardinality, trial); value is the true acquisition
              objective of the selected batch, queries counts surrogate
              evaluations spent selecting it
summary.csv   strategy,n,trials,mean,std,median,p30,p70,mean_queries
              per-cardinality aggregate over trials (std is the population
              standard deviation)
rounds.csv    trial,round,queries,queries_with_init,hypervolume,
              relative_hypervolume,absolute_fallback
              one row per active-learning round; round 0 is the initial
              dataset, queries counts post-initialization oracle calls
curve.csv     round,median_queries,hv_p30,hv_p50,hv_p70,rel_p30,rel_p50,rel_p70
              per-round percentiles across trials
targets.csv   target,fraction,reached,median_queries,median_queries_with_init
              queries-to-target table; fraction is -1 for absolute targets
bounds.csv    instance,bound,alpha,gamma,achieved,optimal,factor,slack,holds
              one row per verified instance and bound
oracle.csv    quantity,n,value,detail
              exact and Monte-Carlo hypervolume plus exhaustive optima
timings.csv   context columns plus wall_seconds (not reproducible)
trial_<k>/dataset.jsonl  one JSON record per oracle query: round, candidate,
                         objective; replayable with the al resume option
trial_<k>/state.json     closed round count and skipped-duplicate warnings
violations.json          replay details for every failed bound instance
)";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Config plumbing

json default_config() {
  return json{
      {"task", {{"vocab", "AB"}, {"min_len", 1}, {"max_len", 3}, {"targets", {"AB", "BA"}}}},
      {"strategy", "exact-greedy"},
      {"cardinalities", {3}},
      {"seed", 1},
      {"trials", 3},
      {"threads", 1},
      {"out", "runs/out"},
      {"space_cap", 100000},
      {"acquisition",
       {{"beta", 0.0}, {"beta_feat", 0.1}, {"lambda", 0.0}, {"ref", {0.0, 0.0}}}},
      {"surrogate",
       {{"kind", "oracle-direct"},
        {"members", 5},
        {"hidden", 32},
        {"epochs", 200},
        {"lr", 0.01},
        {"minibatch", 32}}},
      {"selection",
       {{"budget", 512},
        {"samples_per_step", 16},
        {"rl", {{"episodes", 32}, {"lr", 0.01}, {"p_rand", 0.05}, {"extract_samples", 32}}}}},
      {"train",
       {{"updates", 300},
        {"snapshot_every", 10},
        {"episodes", 32},
        {"lr", 0.02},
        {"cond_sizes", 4},
        {"eval_every", 50},
        {"eval_samples", 16},
        {"eval_p_rand", 0.0},
        {"norm_eps", 0.08}}},
      {"policy",
       {{"embed", 16},
        {"state_hidden", 32},
        {"cond_hidden", 64},
        {"dec_hidden", 64},
        {"p_rand", 0.05},
        {"pref_updates", 200},
        {"pref_episodes", 32},
        {"pref_lr", 0.02},
        {"samples_per_pref", 8}}},
      {"al",
       {{"rounds", 5},
        {"batch_size", 4},
        {"init", 6},
        {"resume", ""},
        {"targets", json::array()}}},
      {"verify",
       {{"instances", 100},
        {"bound", "both"},
        {"n", 3},
        {"lambda", 0.02},
        {"trace", "exact"}}},
      {"oracle", {{"front", json::array()}, {"mc_samples", 200000}}},
  };
}

const json& at_path(const json& cfg, const std::string& dotted) {
  const json* cur = &cfg;
  std::size_t begin = 0;
  while (begin <= dotted.size()) {
    const std::size_t dot = dotted.find('.', begin);
    const std::string key = dotted.substr(begin, dot == std::string::npos ? dot : dot - begin);
    if (!cur->is_object() || !cur->contains(key))
      throw ConfigError(dotted + ": missing configuration key");
    cur = &(*cur)[key];
    if (dot == std::string::npos) break;
    begin = dot + 1;
  }
  return *cur;
}

template <typename T>
T get_as(const json& cfg, const std::string& dotted) {
  try {
    return at_path(cfg, dotted).get<T>();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError(dotted + ": wrong type");
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

json load_config(const std::string& path) {
  json cfg = default_config();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json user;
    try {
      in >> user;
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.merge_patch(user);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Shared builders

struct TaskBundle {
  SequenceSpace space;
  Oracle oracle;
  int m = 0;
};

TaskBundle make_task(const json& cfg) {
  const auto vocab = get_as<std::string>(cfg, "task.vocab");
  const int min_len = get_as<int>(cfg, "task.min_len");
  const int max_len = get_as<int>(cfg, "task.max_len");
  const auto targets = get_as<std::vector<std::string>>(cfg, "task.targets");
  require(!targets.empty(), "task.targets: at least one bigram required");
  try {
    SequenceSpace space(vocab, min_len, max_len);
    BigramTask task(space, targets);
    Oracle oracle = [task](const Candidate& x) { return task.objective(x); };
    return TaskBundle{std::move(space), std::move(oracle), static_cast<int>(targets.size())};
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("task: ") + e.what());
  }
}

ReferencePoint make_ref(const json& cfg, int m) {
  auto vals = get_as<std::vector<double>>(cfg, "acquisition.ref");
  require(static_cast<int>(vals.size()) == m,
          "acquisition.ref: dimension must match the objective count");
  return ReferencePoint(std::move(vals));
}

// guide=true yields the selection-time context (the non-oblivious guide when
// lambda > 0); guide=false the reporting context carrying the true objective.
AcquisitionContext make_context(const json& cfg, std::shared_ptr<const Surrogate> surrogate,
                                const ReferencePoint& ref, bool guide) {
  AcquisitionContext ctx;
  ctx.surrogate = std::move(surrogate);
  ctx.ref = ref;
  ctx.beta = get_as<double>(cfg, "acquisition.beta");
  ctx.beta_feat = get_as<double>(cfg, "acquisition.beta_feat");
  ctx.lambda = get_as<double>(cfg, "acquisition.lambda");
  ctx.mode = ctx.lambda > 0.0
                 ? (guide ? AcqMode::kDiversifiedGuide : AcqMode::kDiversifiedObjective)
                 : AcqMode::kPlain;
  try {
    ctx.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("acquisition: ") + e.what());
  }
  return ctx;
}

PolicyDims policy_dims(const json& cfg) {
  PolicyDims d;
  d.embed = get_as<int>(cfg, "policy.embed");
  d.state_hidden = get_as<int>(cfg, "policy.state_hidden");
  d.cond_hidden = get_as<int>(cfg, "policy.cond_hidden");
  d.dec_hidden = get_as<int>(cfg, "policy.dec_hidden");
  return d;
}

RlProposalConfig rl_config(const json& cfg) {
  RlProposalConfig c;
  c.episodes = get_as<int>(cfg, "selection.rl.episodes");
  c.lr = get_as<double>(cfg, "selection.rl.lr");
  c.p_rand = get_as<double>(cfg, "selection.rl.p_rand");
  c.extract_samples = get_as<int>(cfg, "selection.rl.extract_samples");
  c.dims = policy_dims(cfg);
  return c;
}

TrainConfig train_config(const json& cfg, int batch_size) {
  TrainConfig tc;
  tc.updates = get_as<int>(cfg, "train.updates");
  tc.snapshot_every = get_as<int>(cfg, "train.snapshot_every");
  tc.episodes = get_as<int>(cfg, "train.episodes");
  tc.lr = get_as<double>(cfg, "train.lr");
  tc.cond_sizes = get_as<int>(cfg, "train.cond_sizes");
  tc.eval_every = get_as<int>(cfg, "train.eval_every");
  tc.eval_batch = batch_size;
  tc.eval_samples = get_as<int>(cfg, "train.eval_samples");
  tc.eval_p_rand = get_as<double>(cfg, "train.eval_p_rand");
  tc.norm_eps = get_as<double>(cfg, "train.norm_eps");
  return tc;
}

enum class StrategyKind {
  kOurs,
  kExactGreedy,
  kGreedyRs,
  kGreedyHc,
  kGreedyRl,
  kPcRlWs,
  kPcRlTs,
};

StrategyKind parse_strategy(const std::string& s) {
  if (s == "ours") return StrategyKind::kOurs;
  if (s == "exact-greedy") return StrategyKind::kExactGreedy;
  if (s == "greedy-rs") return StrategyKind::kGreedyRs;
  if (s == "greedy-hc") return StrategyKind::kGreedyHc;
  if (s == "greedy-rl") return StrategyKind::kGreedyRl;
  if (s == "pc-rl-ws") return StrategyKind::kPcRlWs;
  if (s == "pc-rl-ts") return StrategyKind::kPcRlTs;
  throw ConfigError("strategy: unknown strategy '" + s + "'");
}

bool needs_enumeration(StrategyKind kind) { return kind == StrategyKind::kExactGreedy; }

// Selects a batch of at most n candidates with the configured strategy. The
// pool is only consulted by exact greedy; sampling strategies draw from the
// space directly. Every stage seed is derived from `seed` with its own tag.
std::vector<Candidate> propose_batch(StrategyKind kind, const json& cfg,
                                     const SequenceSpace& space, const AcquisitionContext& ctx,
                                     std::span<const Candidate> pool, int n,
                                     std::uint64_t seed) {
  switch (kind) {
    case StrategyKind::kExactGreedy:
      return exact_greedy(ctx, pool, n).batch;
    case StrategyKind::kGreedyRs:
    case StrategyKind::kGreedyHc:
    case StrategyKind::kGreedyRl: {
      Rng rng(derive_seed(seed, 0, "cli-search"));
      const int budget = get_as<int>(cfg, "selection.budget");
      if (kind == StrategyKind::kGreedyRs)
        return approx_greedy(ctx, space, n, ProposalMethod::kRandomSearch, budget, rng).batch;
      if (kind == StrategyKind::kGreedyHc)
        return approx_greedy(ctx, space, n, ProposalMethod::kHillClimb, budget, rng).batch;
      const RlProposalConfig rl = rl_config(cfg);
      return approx_greedy(ctx, space, n, ProposalMethod::kReinforce, budget, rng, &rl).batch;
    }
    case StrategyKind::kOurs: {
      PolicyConfig pc{space, ctx.ref.dim(), ConditioningKind::kSet, policy_dims(cfg),
                      get_as<double>(cfg, "policy.p_rand")};
      const Policy policy(pc);
      const auto res =
          train_policy(ctx, policy, train_config(cfg, n), derive_seed(seed, 0, "cli-train"));
      PolicyConfig ec = pc;
      ec.p_rand = 0.0;
      const Policy extractor(ec);
      Rng rng(derive_seed(seed, 0, "cli-extract"));
      const PolicyParams& params = res.evaluated ? res.best_params : res.params;
      const int l = get_as<int>(cfg, "selection.samples_per_step");
      return greedy_sample(ctx, extractor, params, n, l, rng).batch;
    }
    case StrategyKind::kPcRlWs:
    case StrategyKind::kPcRlTs: {
      const Scalarization kind_s = kind == StrategyKind::kPcRlWs ? Scalarization::kWeighted
                                                                 : Scalarization::kChebyshev;
      PolicyConfig pc{space, ctx.ref.dim(), ConditioningKind::kPreference, policy_dims(cfg),
                      get_as<double>(cfg, "policy.p_rand")};
      const Policy policy(pc);
      PreferenceTrainConfig ptc;
      ptc.updates = get_as<int>(cfg, "policy.pref_updates");
      ptc.episodes = get_as<int>(cfg, "policy.pref_episodes");
      ptc.lr = get_as<double>(cfg, "policy.pref_lr");
      ptc.scalarization = kind_s;
      const auto res = train_preference_policy(ctx, policy, ptc, derive_seed(seed, 0, "cli-pref"));
      PolicyConfig ec = pc;
      ec.p_rand = 0.0;
      const Policy extractor(ec);
      Rng rng(derive_seed(seed, 0, "cli-pref-batch"));
      return preference_batch(ctx, extractor, res.params, n,
                              get_as<int>(cfg, "policy.samples_per_pref"), kind_s, rng);
    }
  }
  throw ContractViolation("propose_batch: unreachable");
}

// ---------------------------------------------------------------------------
// Artifact plumbing

fs::path prepare_out(const json& cfg, const std::string& mode) {
  const fs::path dir = get_as<std::string>(cfg, "out");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("out: cannot create '" + dir.string() + "': " + ec.message());
  json resolved = cfg;
  resolved["mode"] = mode;
  resolved["version"] = kToolVersion;
  resolved["schema"] = kSchemaVersion;
  std::ofstream(dir / "config.resolved.json") << resolved.dump(2) << '\n';
  std::ofstream(dir / "schema.txt") << kSchemaText;
  return dir;
}

void write_csv(const fs::path& path, const std::string& header,
               const std::vector<std::string>& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("out: cannot write '" + path.string() + "'");
  out << header << '\n';
  for (const auto& row : rows) out << row << '\n';
}

// Runs body(trial) for every trial, optionally on a small thread pool. Each
// body writes only its own result slot, so the merge is deterministic.
void for_each_trial(int trials, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, trials));
  if (threads == 1) {
    for (int t = 0; t < trials; ++t) body(t);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int t = next.fetch_add(1); t < trials; t = next.fetch_add(1)) {
        try {
          body(t);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  const double mu = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

// ---------------------------------------------------------------------------
// subset

int cmd_subset(const json& cfg) {
  const TaskBundle tb = make_task(cfg);
  const ReferencePoint ref = make_ref(cfg, tb.m);
  const auto strategy_name = get_as<std::string>(cfg, "strategy");
  const StrategyKind kind = parse_strategy(strategy_name);
  const auto cardinalities = get_as<std::vector<int>>(cfg, "cardinalities");
  require(!cardinalities.empty(), "cardinalities: at least one entry required");
  for (int n : cardinalities) require(n >= 1, "cardinalities: entries must be positive");
  const int trials = get_as<int>(cfg, "trials");
  require(trials >= 1, "trials: must be positive");
  const int threads = get_as<int>(cfg, "threads");
  require(threads >= 1, "threads: must be positive");
  const auto master = get_as<std::uint64_t>(cfg, "seed");
  require(get_as<std::string>(cfg, "surrogate.kind") == "oracle-direct",
          "surrogate.kind: subset mode runs on the exact objective (oracle-direct)");

  std::vector<Candidate> ground;
  if (needs_enumeration(kind))
    ground = enumerate_space(tb.space, get_as<std::int64_t>(cfg, "space_cap"));

  const fs::path dir = prepare_out(cfg, "subset");

  struct Row {
    double value = 0.0;
    std::int64_t queries = 0;
    std::uint64_t seed = 0;
    double wall = 0.0;
  };
  std::vector<std::string> trial_rows, timing_rows;
  std::vector<std::string> summary_rows;
  for (int n : cardinalities) {
    std::vector<Row> rows(static_cast<std::size_t>(trials));
    for_each_trial(trials, threads, [&](int t) {
      const auto t0 = std::chrono::steady_clock::now();
      const std::uint64_t trial_seed = derive_seed(master, static_cast<std::uint64_t>(t), "subset-trial");
      const auto select_ctx = make_context(
          cfg, std::make_shared<DeterministicSurrogate>(tb.oracle, tb.m), ref, true);
      const auto report_ctx = make_context(
          cfg, std::make_shared<DeterministicSurrogate>(tb.oracle, tb.m), ref, false);
      const auto batch = propose_batch(kind, cfg, tb.space, select_ctx, ground, n, trial_seed);
      Row& row = rows[static_cast<std::size_t>(t)];
      row.seed = trial_seed;
      row.queries = select_ctx.surrogate->query_count();
      row.value = report_ctx.value(batch);
      row.wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });
    std::vector<double> values, queries;
    for (int t = 0; t < trials; ++t) {
      const Row& row = rows[static_cast<std::size_t>(t)];
      trial_rows.push_back(strategy_name + "," + std::to_string(n) + "," + std::to_string(t) +
                           "," + std::to_string(row.seed) + "," + fmt(row.value) + "," +
                           std::to_string(row.queries));
      timing_rows.push_back(std::to_string(n) + "," + std::to_string(t) + "," + fmt(row.wall));
      values.push_back(row.value);
      queries.push_back(static_cast<double>(row.queries));
    }
    summary_rows.push_back(strategy_name + "," + std::to_string(n) + "," +
                           std::to_string(trials) + "," + fmt(mean_of(values)) + "," +
                           fmt(stddev_of(values)) + "," + fmt(percentile(values, 50)) + "," +
                           fmt(percentile(values, 30)) + "," + fmt(percentile(values, 70)) +
                           "," + fmt(mean_of(queries)));
  }
  write_csv(dir / "trials.csv", "strategy,n,trial,seed,value,queries", trial_rows);
  write_csv(dir / "summary.csv", "strategy,n,trials,mean,std,median,p30,p70,mean_queries",
            summary_rows);
  write_csv(dir / "timings.csv", "n,trial,wall_seconds", timing_rows);
  std::cout << "subset: wrote " << trial_rows.size() << " trial rows to " << dir.string()
            << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// al

ProposalStrategy make_al_strategy(StrategyKind kind, const json& cfg,
                                  std::shared_ptr<const std::vector<Candidate>> ground) {
  return [kind, &cfg, ground = std::move(ground)](const ProposalRequest& req) {
    std::vector<Candidate> pool;
    if (ground) {
      for (const auto& x : *ground)
        if (!req.dataset.contains(x)) pool.push_back(x);
      if (pool.empty()) return std::vector<Candidate>{};  // the space is exhausted
    }
    return propose_batch(kind, cfg, req.space, req.acquisition, pool, req.batch_size, req.seed);
  };
}

Dataset draw_initial(const Oracle& oracle, const SequenceSpace& space, int count,
                     std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0, "al-init"));
  std::vector<Candidate> xs;
  std::set<Candidate> seen;
  int attempts = 0;
  while (static_cast<int>(xs.size()) < count) {
    if (++attempts > 1000 * count)
      throw ConfigError("al.init: could not draw that many distinct candidates");
    Candidate x = uniform_candidate(space, rng);
    if (seen.insert(x).second) xs.push_back(std::move(x));
  }
  return initial_dataset(oracle, xs);
}

int cmd_al(const json& cfg) {
  const TaskBundle tb = make_task(cfg);
  const ReferencePoint ref = make_ref(cfg, tb.m);
  const StrategyKind kind = parse_strategy(get_as<std::string>(cfg, "strategy"));
  const int trials = get_as<int>(cfg, "trials");
  require(trials >= 1, "trials: must be positive");
  const int threads = get_as<int>(cfg, "threads");
  require(threads >= 1, "threads: must be positive");
  const auto master = get_as<std::uint64_t>(cfg, "seed");
  const int init_count = get_as<int>(cfg, "al.init");
  require(init_count >= 1, "al.init: must be positive");
  const auto resume = get_as<std::string>(cfg, "al.resume");

  ActiveLearningConfig alcfg;
  alcfg.rounds = get_as<int>(cfg, "al.rounds");
  alcfg.batch_size = get_as<int>(cfg, "al.batch_size");
  const auto surrogate_kind = get_as<std::string>(cfg, "surrogate.kind");
  if (surrogate_kind == "ensemble") {
    alcfg.surrogate = SurrogateKind::kEnsemble;
    alcfg.ensemble.members = get_as<int>(cfg, "surrogate.members");
    alcfg.ensemble.hidden = get_as<int>(cfg, "surrogate.hidden");
    alcfg.ensemble.epochs = get_as<int>(cfg, "surrogate.epochs");
    alcfg.ensemble.lr = get_as<double>(cfg, "surrogate.lr");
    alcfg.ensemble.minibatch = get_as<int>(cfg, "surrogate.minibatch");
  } else if (surrogate_kind == "oracle-direct") {
    alcfg.surrogate = SurrogateKind::kOracleDirect;
  } else {
    throw ConfigError("surrogate.kind: unknown kind '" + surrogate_kind + "'");
  }
  alcfg.beta = get_as<double>(cfg, "acquisition.beta");
  alcfg.beta_feat = get_as<double>(cfg, "acquisition.beta_feat");
  alcfg.lambda = get_as<double>(cfg, "acquisition.lambda");
  alcfg.ref = ref;

  std::shared_ptr<const std::vector<Candidate>> ground;
  if (needs_enumeration(kind))
    ground = std::make_shared<const std::vector<Candidate>>(
        enumerate_space(tb.space, get_as<std::int64_t>(cfg, "space_cap")));
  const ProposalStrategy strategy = make_al_strategy(kind, cfg, ground);

  const fs::path dir = prepare_out(cfg, "al");

  std::vector<ActiveLearningResult> results(static_cast<std::size_t>(trials));
  for_each_trial(trials, threads, [&](int t) {
    const std::uint64_t trial_seed = derive_seed(master, static_cast<std::uint64_t>(t), "al-trial");
    Dataset start;
    if (resume.empty()) {
      start = draw_initial(tb.oracle, tb.space, init_count, trial_seed);
    } else {
      const fs::path prev = fs::path(resume) / ("trial_" + std::to_string(t));
      std::ifstream state_in(prev / "state.json");
      if (!state_in)
        throw ConfigError("al.resume: missing '" + (prev / "state.json").string() + "'");
      json state;
      state_in >> state;
      std::ifstream log_in(prev / "dataset.jsonl");
      if (!log_in)
        throw ConfigError("al.resume: missing '" + (prev / "dataset.jsonl").string() + "'");
      start = read_dataset_jsonl(tb.space, log_in, state.at("rounds").get<int>());
    }
    results[static_cast<std::size_t>(t)] =
        run_active_learning(tb.oracle, tb.space, strategy, alcfg, std::move(start), trial_seed);
  });

  std::vector<std::string> round_rows, timing_rows;
  for (int t = 0; t < trials; ++t) {
    const auto& res = results[static_cast<std::size_t>(t)];
    const fs::path tdir = dir / ("trial_" + std::to_string(t));
    fs::create_directories(tdir);
    std::ofstream log_out(tdir / "dataset.jsonl");
    write_dataset_jsonl(res.dataset, tb.space, log_out);
    json state{{"rounds", res.dataset.rounds()}, {"warnings", res.warnings}};
    std::ofstream(tdir / "state.json") << state.dump(2) << '\n';
    for (const auto& row : res.metrics) {
      round_rows.push_back(std::to_string(t) + "," + std::to_string(row.round) + "," +
                           std::to_string(row.queries) + "," +
                           std::to_string(row.queries_with_init) + "," + fmt(row.hypervolume) +
                           "," + fmt(row.relative_hypervolume) + "," +
                           (row.absolute_fallback ? "1" : "0"));
      timing_rows.push_back(std::to_string(t) + "," + std::to_string(row.round) + "," +
                            fmt(row.wall_seconds));
    }
  }
  write_csv(dir / "rounds.csv",
            "trial,round,queries,queries_with_init,hypervolume,relative_hypervolume,"
            "absolute_fallback",
            round_rows);
  write_csv(dir / "timings.csv", "trial,round,wall_seconds", timing_rows);

  std::size_t common_rounds = results.front().metrics.size();
  for (const auto& res : results) common_rounds = std::min(common_rounds, res.metrics.size());
  std::vector<std::string> curve_rows;
  for (std::size_t r = 0; r < common_rounds; ++r) {
    std::vector<double> hv, rel, q;
    for (const auto& res : results) {
      hv.push_back(res.metrics[r].hypervolume);
      rel.push_back(res.metrics[r].relative_hypervolume);
      q.push_back(static_cast<double>(res.metrics[r].queries));
    }
    curve_rows.push_back(std::to_string(r) + "," + fmt(percentile(q, 50)) + "," +
                         fmt(percentile(hv, 30)) + "," + fmt(percentile(hv, 50)) + "," +
                         fmt(percentile(hv, 70)) + "," + fmt(percentile(rel, 30)) + "," +
                         fmt(percentile(rel, 50)) + "," + fmt(percentile(rel, 70)));
  }
  write_csv(dir / "curve.csv",
            "round,median_queries,hv_p30,hv_p50,hv_p70,rel_p30,rel_p50,rel_p70", curve_rows);

  auto targets = get_as<std::vector<double>>(cfg, "al.targets");
  std::vector<double> fractions;
  if (targets.empty()) {
    std::vector<double> finals;
    for (const auto& res : results) finals.push_back(res.metrics.back().hypervolume);
    const double median_final = percentile(finals, 50);
    for (double f : {0.5, 0.75, 0.9}) {
      fractions.push_back(f);
      targets.push_back(f * median_final);
    }
  } else {
    fractions.assign(targets.size(), -1.0);
  }
  std::vector<std::string> target_rows;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    std::vector<double> hit, hit_init;
    for (const auto& res : results) {
      if (const auto q = queries_to_target(res.metrics, targets[i], false))
        hit.push_back(static_cast<double>(*q));
      if (const auto q = queries_to_target(res.metrics, targets[i], true))
        hit_init.push_back(static_cast<double>(*q));
    }
    target_rows.push_back(fmt(targets[i]) + "," + fmt(fractions[i]) + "," +
                          std::to_string(hit.size()) + "," +
                          (hit.empty() ? "-1" : fmt(percentile(hit, 50))) + "," +
                          (hit_init.empty() ? "-1" : fmt(percentile(hit_init, 50))));
  }
  write_csv(dir / "targets.csv", "target,fraction,reached,median_queries,median_queries_with_init",
            target_rows);
  std::cout << "al: wrote " << trials << " trials x " << common_rounds << " rounds to "
            << dir.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// verify

Oracle hash_objective(const SequenceSpace& space, int m, std::uint64_t salt) {
  return [space, m, salt](const Candidate& x) {
    const std::string s = candidate_to_string(space, x);
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
      const std::uint64_t h = derive_seed(salt, static_cast<std::uint64_t>(j), s);
      v.push_back(0.1 + 0.8 * static_cast<double>(h >> 11) * 0x1.0p-53);
    }
    return ObjectiveVector(std::move(v));
  };
}

int cmd_verify(const json& cfg) {
  const auto vocab = get_as<std::string>(cfg, "task.vocab");
  const int min_len = get_as<int>(cfg, "task.min_len");
  const int max_len = get_as<int>(cfg, "task.max_len");
  const SequenceSpace space(vocab, min_len, max_len);
  const auto ref_vals = get_as<std::vector<double>>(cfg, "acquisition.ref");
  const int m = static_cast<int>(ref_vals.size());
  require(m >= 1, "acquisition.ref: at least one objective required");
  const ReferencePoint ref(ref_vals);

  const int instances = get_as<int>(cfg, "verify.instances");
  require(instances >= 1, "verify.instances: must be positive");
  const int n = get_as<int>(cfg, "verify.n");
  require(n >= 1, "verify.n: must be positive");
  const double lambda = get_as<double>(cfg, "verify.lambda");
  require(lambda > 0.0, "verify.lambda: the guided bound needs a positive diversity weight");
  const auto bound = get_as<std::string>(cfg, "verify.bound");
  require(bound == "near-submodular" || bound == "guided" || bound == "both",
          "verify.bound: expected near-submodular, guided or both");
  const auto trace_kind = get_as<std::string>(cfg, "verify.trace");
  require(trace_kind == "exact" || trace_kind == "random-search",
          "verify.trace: expected exact or random-search");
  const auto master = get_as<std::uint64_t>(cfg, "seed");

  BoundOverrides overrides;
  const json& vc = at_path(cfg, "verify");
  if (vc.contains("alpha_override") && !vc["alpha_override"].is_null())
    overrides.alpha = vc["alpha_override"].get<double>();
  if (vc.contains("gamma_override") && !vc["gamma_override"].is_null())
    overrides.gamma = vc["gamma_override"].get<double>();

  const auto ground = enumerate_space(space, get_as<std::int64_t>(cfg, "space_cap"));
  const fs::path dir = prepare_out(cfg, "verify");

  const auto make_trace = [&](const AcquisitionContext& ctx, std::uint64_t seed) {
    if (trace_kind == "exact") return exact_greedy(ctx, ground, n);
    Rng rng(derive_seed(seed, 0, "verify-trace"));
    return approx_greedy(ctx, space, n, ProposalMethod::kRandomSearch,
                         get_as<int>(cfg, "selection.budget"), rng);
  };

  std::vector<std::string> rows;
  json violations = json::array();
  const auto record = [&](int i, const std::string& kind, std::uint64_t salt,
                          const BoundReport& rep, const GreedyTrace& trace) {
    rows.push_back(rep.instance + "," + kind + "," + fmt(rep.alpha) + "," + fmt(rep.gamma) +
                   "," + fmt(rep.achieved) + "," + fmt(rep.optimal) + "," + fmt(rep.factor) +
                   "," + fmt(rep.slack) + "," + (rep.holds ? "1" : "0"));
    if (!rep.holds) {
      std::vector<std::string> batch;
      for (const auto& x : trace.batch) batch.push_back(candidate_to_string(space, x));
      violations.push_back(json{{"instance", i},
                                {"bound", kind},
                                {"salt", salt},
                                {"n", n},
                                {"lambda", kind == "guided" ? lambda : 0.0},
                                {"batch", batch},
                                {"alpha", rep.alpha},
                                {"gamma", rep.gamma},
                                {"achieved", rep.achieved},
                                {"optimal", rep.optimal},
                                {"factor", rep.factor},
                                {"slack", rep.slack}});
    }
  };

  for (int i = 0; i < instances; ++i) {
    const std::uint64_t salt = derive_seed(master, static_cast<std::uint64_t>(i), "verify-salt");
    const std::uint64_t trace_seed =
        derive_seed(master, static_cast<std::uint64_t>(i), "verify-seed");
    const Oracle objective = hash_objective(space, m, salt);
    VerifyOptions opts;
    opts.overrides = overrides;
    opts.instance = "verify-" + std::to_string(i);

    if (bound == "near-submodular" || bound == "both") {
      AcquisitionContext ctx;
      ctx.surrogate = std::make_shared<DeterministicSurrogate>(objective, m);
      ctx.ref = ref;
      ctx.mode = AcqMode::kPlain;
      ctx.validate();
      const GreedyTrace trace = make_trace(ctx, trace_seed);
      record(i, "near-submodular", salt, verify_near_submodular_bound(ctx, ground, trace, n, opts),
             trace);
    }
    if (bound == "guided" || bound == "both") {
      AcquisitionContext ctx;
      ctx.surrogate = std::make_shared<DeterministicSurrogate>(objective, m);
      ctx.ref = ref;
      ctx.lambda = lambda;
      ctx.mode = AcqMode::kDiversifiedGuide;
      ctx.validate();
      const GreedyTrace trace = make_trace(ctx, trace_seed);
      record(i, "guided", salt, verify_guided_dispersion_bound(ctx, ground, trace, n, opts),
             trace);
    }
  }
  write_csv(dir / "bounds.csv", "instance,bound,alpha,gamma,achieved,optimal,factor,slack,holds",
            rows);
  if (!violations.empty()) {
    std::ofstream(dir / "violations.json") << violations.dump(2) << '\n';
    std::cerr << "verify: " << violations.size() << " bound violation(s); replay details in "
              << (dir / "violations.json").string() << '\n';
    return 2;
  }
  std::cout << "verify: " << rows.size() << " instances hold; rows in "
            << (dir / "bounds.csv").string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// oracle and hv

struct FrontInput {
  std::vector<ObjectiveVector> points;
  std::vector<std::string> labels;  // candidate strings for task-derived fronts
};

FrontInput load_front(const json& cfg) {
  FrontInput front;
  const json& raw = at_path(cfg, "oracle.front");
  if (!raw.empty()) {
    for (const auto& row : raw) {
      auto vals = row.get<std::vector<double>>();
      if (!front.points.empty() &&
          static_cast<int>(vals.size()) != front.points.front().dim())
        throw ConfigError("oracle.front: inconsistent dimensions");
      front.labels.push_back("p" + std::to_string(front.points.size()));
      front.points.emplace_back(std::move(vals));
    }
    return front;
  }
  const TaskBundle tb = make_task(cfg);
  const auto ground = enumerate_space(tb.space, get_as<std::int64_t>(cfg, "space_cap"));
  for (const auto& x : ground) {
    front.labels.push_back(candidate_to_string(tb.space, x));
    front.points.push_back(tb.oracle(x));
  }
  return front;
}

ReferencePoint front_ref(const json& cfg, const FrontInput& front) {
  auto vals = get_as<std::vector<double>>(cfg, "acquisition.ref");
  require(front.points.empty() ||
              static_cast<int>(vals.size()) == front.points.front().dim(),
          "acquisition.ref: dimension must match the front");
  return ReferencePoint(std::move(vals));
}

int cmd_oracle(const json& cfg) {
  const FrontInput front = load_front(cfg);
  require(!front.points.empty(), "oracle.front: no points to evaluate");
  const ReferencePoint ref = front_ref(cfg, front);
  const int m = ref.dim();
  const auto master = get_as<std::uint64_t>(cfg, "seed");
  const fs::path dir = prepare_out(cfg, "oracle");

  const double exact = hypervolume(front.points, ref);

  const auto mc_samples = get_as<std::int64_t>(cfg, "oracle.mc_samples");
  require(mc_samples >= 1, "oracle.mc_samples: must be positive");
  std::vector<double> upper(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    double hi = ref[j];
    for (const auto& p : front.points) hi = std::max(hi, p[j]);
    upper[static_cast<std::size_t>(j)] = hi;
  }
  double box = 1.0;
  for (int j = 0; j < m; ++j) box *= upper[static_cast<std::size_t>(j)] - ref[j];
  double mc = 0.0, sigma = 0.0;
  if (box > 0.0) {
    Rng rng(derive_seed(master, 0, "oracle-mc"));
    std::int64_t hits = 0;
    std::vector<double> u(static_cast<std::size_t>(m));
    for (std::int64_t s = 0; s < mc_samples; ++s) {
      for (int j = 0; j < m; ++j)
        u[static_cast<std::size_t>(j)] = rng.uniform(ref[j], upper[static_cast<std::size_t>(j)]);
      for (const auto& p : front.points) {
        bool covered = true;
        for (int j = 0; j < m; ++j)
          if (p[j] < u[static_cast<std::size_t>(j)]) {
            covered = false;
            break;
          }
        if (covered) {
          ++hits;
          break;
        }
      }
    }
    const double frac = static_cast<double>(hits) / static_cast<double>(mc_samples);
    mc = box * frac;
    sigma = box * std::sqrt(frac * (1.0 - frac) / static_cast<double>(mc_samples));
  }

  std::vector<std::string> rows;
  std::cout << "exact_hypervolume " << fmt(exact) << '\n';
  std::cout << "mc_hypervolume " << fmt(mc) << " sigma " << fmt(sigma) << '\n';
  rows.push_back("exact_hypervolume,-1," + fmt(exact) + ",");
  rows.push_back("mc_hypervolume,-1," + fmt(mc) + ",sigma=" + fmt(sigma));

  const auto cardinalities = get_as<std::vector<int>>(cfg, "cardinalities");
  if (static_cast<int>(front.points.size()) <= 64) {
    const SetFunction a = [&](std::uint64_t mask) {
      std::vector<ObjectiveVector> sel;
      for (std::size_t i = 0; i < front.points.size(); ++i)
        if (mask >> i & 1) sel.push_back(front.points[i]);
      return hypervolume(sel, ref);
    };
    for (int n : cardinalities) {
      require(n >= 1, "cardinalities: entries must be positive");
      const OptimalSubset best = optimal_subset(a, static_cast<int>(front.points.size()), n);
      std::string subset;
      for (std::size_t i = 0; i < front.points.size(); ++i)
        if (best.mask >> i & 1) subset += (subset.empty() ? "" : " ") + front.labels[i];
      std::cout << "optimal_subset n=" << n << " value " << fmt(best.value) << " members "
                << subset << '\n';
      rows.push_back("optimal_subset," + std::to_string(n) + "," + fmt(best.value) + "," + subset);
    }
  } else if (!cardinalities.empty()) {
    throw ResourceCapExceeded("oracle: exhaustive subset search needs at most 64 points, got " +
                              std::to_string(front.points.size()));
  }
  write_csv(dir / "oracle.csv", "quantity,n,value,detail", rows);
  return 0;
}

int cmd_hv(const json& cfg) {
  const FrontInput front = load_front(cfg);
  require(!front.points.empty(), "oracle.front: no points to evaluate");
  const ReferencePoint ref = front_ref(cfg, front);
  std::cout << "hypervolume " << fmt(hypervolume(front.points, ref)) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

int parse_env_int(const char* name, const char* value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != std::string(value).size()) throw std::invalid_argument(name);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string(name) + ": not an integer");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-objective batch selection toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_flag;
  std::uint64_t seed_flag = 0;
  int trials_flag = 0, threads_flag = 0;
  for (const auto& name : {"subset", "al", "verify", "oracle", "hv"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "path to the JSON config file");
    sub->add_option("--seed", seed_flag, "master seed override");
    sub->add_option("--trials", trials_flag, "trial count override");
    sub->add_option("--out", out_flag, "output directory override");
    sub->add_option("--threads", threads_flag, "worker thread override");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    json cfg = load_config(config_path);
    if (const char* v = std::getenv("MOCO_OUT")) cfg["out"] = std::string(v);
    if (const char* v = std::getenv("MOCO_THREADS")) cfg["threads"] = parse_env_int("MOCO_THREADS", v);
    const CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed") > 0) cfg["seed"] = seed_flag;
    if (sub->count("--trials") > 0) cfg["trials"] = trials_flag;
    if (sub->count("--out") > 0) cfg["out"] = out_flag;
    if (sub->count("--threads") > 0) cfg["threads"] = threads_flag;

    const std::string mode = sub->get_name();
    if (mode == "subset") return cmd_subset(cfg);
    if (mode == "al") return cmd_al(cfg);
    if (mode == "verify") return cmd_verify(cfg);
    if (mode == "oracle") return cmd_oracle(cfg);
    return cmd_hv(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const BoundViolation& e) {
    std::cerr << "bound violation: " << e.what() << '\n';
    return 2;
  } catch (const ResourceCapExceeded& e) {
    std::cerr << "resource cap exceeded: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
