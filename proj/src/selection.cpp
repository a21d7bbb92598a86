#include "moco/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "moco/errors.hpp"

namespace moco {
namespace {

std::int64_t queries_of(const AcquisitionContext& ctx) {
  return static_cast<std::int64_t>(ctx.surrogate->query_count());
}

std::vector<ObjectiveVector> batch_features(const AcquisitionContext& ctx,
                                            std::span<const Candidate> batch) {
  std::vector<ObjectiveVector> feats;
  feats.reserve(batch.size());
  for (const auto& x : batch) feats.push_back(ctx.feature(x));
  return feats;
}

// 1-Hamming neighborhood under the padded Hamming metric: substitutions,
// a single appended token, and dropping the last token.
std::vector<Candidate> hamming_neighbors(const SequenceSpace& space, const Candidate& x) {
  std::vector<Candidate> out;
  const int V = space.vocab_size();
  for (int pos = 0; pos < x.length(); ++pos) {
    for (int t = 0; t < V; ++t) {
      if (t == x.tokens[static_cast<size_t>(pos)]) continue;
      Candidate y = x;
      y.tokens[static_cast<size_t>(pos)] = static_cast<uint8_t>(t);
      out.push_back(std::move(y));
    }
  }
  if (x.length() < space.max_len()) {
    for (int t = 0; t < V; ++t) {
      Candidate y = x;
      y.tokens.push_back(static_cast<uint8_t>(t));
      out.push_back(std::move(y));
    }
  }
  if (x.length() > space.min_len()) {
    Candidate y = x;
    y.tokens.pop_back();
    out.push_back(std::move(y));
  }
  return out;
}

void normalize_returns(std::vector<double>& r, double eps) {
  const double n = static_cast<double>(r.size());
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : r) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  for (double& v : r) v = (v - mean) / (sd + eps);
}

void check_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw NumericalError(std::string(what) + " turned non-finite");
}

// One greedy step shared by the budgeted maximizers: scores proposals with a
// per-step cache and tracks the best non-member.
class StepSearch {
 public:
  explicit StepSearch(const BatchCursor& cursor) : cursor_(&cursor) {}

  const BatchCursor::Probe& score(const Candidate& x) {
    auto it = scored_.find(x);
    if (it == scored_.end()) it = scored_.emplace(x, cursor_->probe(x)).first;
    evaluated_++;
    if (!it->second.member && (!found_ || it->second.gain > best_probe_.gain)) {
      found_ = true;
      best_ = x;
      best_probe_ = it->second;
    }
    return it->second;
  }

  bool found() const { return found_; }
  const Candidate& best() const { return best_; }
  const BatchCursor::Probe& best_probe() const { return best_probe_; }
  int evaluated() const { return evaluated_; }

 private:
  const BatchCursor* cursor_;
  std::map<Candidate, BatchCursor::Probe> scored_;
  bool found_ = false;
  Candidate best_;
  BatchCursor::Probe best_probe_;
  int evaluated_ = 0;
};

// Applies a finished step search to the cursor and trace.
void finish_step(BatchCursor& cursor, GreedyTrace& trace, StepSearch& search) {
  StepRecord rec;
  rec.evaluated = search.evaluated();
  if (!search.found()) {
    rec.stalled = true;
    trace.steps.push_back(rec);
    return;
  }
  cursor.push(search.best(), search.best_probe());
  rec.chosen = search.best();
  rec.gain = search.best_probe().gain;
  rec.value_after = cursor.value();
  trace.steps.push_back(rec);
}

void rl_proposal_step(const AcquisitionContext& ctx, const SequenceSpace& space,
                      StepSearch& search, int budget, const RlProposalConfig& rl, Rng& rng) {
  if (rl.episodes < 1 || rl.extract_samples < 1 || !(rl.lr > 0.0) || !(rl.norm_eps > 0.0))
    throw ConfigError("approx_greedy: bad REINFORCE proposal settings");
  PolicyConfig pc{space, ctx.ref.dim(), ConditioningKind::kNone, rl.dims, rl.p_rand};
  const Policy policy(pc);
  PolicyConfig gc = pc;
  gc.p_rand = 0.0;
  const Policy greedy(gc);
  PolicyParams params = policy.init_params(rng);
  const Condition cond = NoCondition{};

  const int extract = std::min(rl.extract_samples, budget);
  const int updates = (budget - extract) / rl.episodes;
  std::vector<Trajectory> trajs(static_cast<size_t>(rl.episodes));
  std::vector<double> returns(static_cast<size_t>(rl.episodes));
  for (int u = 0; u < updates; ++u) {
    for (int j = 0; j < rl.episodes; ++j) {
      trajs[static_cast<size_t>(j)] = policy.sample_trajectory(params, cond, rng);
      returns[static_cast<size_t>(j)] =
          search.score(trajs[static_cast<size_t>(j)].result).gain;
    }
    normalize_returns(returns, rl.norm_eps);
    Eigen::VectorXd grad;
    policy.weighted_logprob_grad(params, cond, trajs, returns, grad);
    check_finite(grad, "approx_greedy: proposal gradient");
    params.flat += rl.lr * grad;
    check_finite(params.flat, "approx_greedy: proposal parameters");
  }
  for (int s = 0; s < extract; ++s)
    search.score(greedy.sample_trajectory(params, cond, rng).result);
}

}  // namespace

GreedyTrace exact_greedy(const AcquisitionContext& ctx, std::span<const Candidate> ground,
                         int batch_size, TieBreak tie, Rng* rng) {
  ctx.validate();
  if (batch_size < 1) throw ContractViolation("exact_greedy: batch_size must be positive");
  if (ground.empty()) throw ContractViolation("exact_greedy: empty ground set");
  if (tie == TieBreak::kRandom && rng == nullptr)
    throw ContractViolation("exact_greedy: random tie-break needs an RNG");

  std::vector<Candidate> pool(ground.begin(), ground.end());
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

  const std::int64_t before = queries_of(ctx);
  GreedyTrace trace;
  BatchCursor cursor(ctx);
  for (int step = 0; step < batch_size; ++step) {
    StepRecord rec;
    bool found = false;
    double best_gain = 0.0;
    std::vector<size_t> ties;
    std::vector<BatchCursor::Probe> probes(pool.size());
    for (size_t i = 0; i < pool.size(); ++i) {
      if (cursor.contains(pool[i])) continue;
      probes[i] = cursor.probe(pool[i]);
      rec.evaluated++;
      if (!found || probes[i].gain > best_gain) {
        found = true;
        best_gain = probes[i].gain;
        ties.assign(1, i);
      } else if (probes[i].gain == best_gain) {
        ties.push_back(i);
      }
    }
    if (!found) {
      rec.stalled = true;
      trace.steps.push_back(rec);
      break;  // the ground set is exhausted; later steps cannot differ
    }
    const size_t pick =
        tie == TieBreak::kLexicographic ? ties.front() : ties[rng->uniform_index(ties.size())];
    cursor.push(pool[pick], probes[pick]);
    rec.chosen = pool[pick];
    rec.gain = best_gain;
    rec.value_after = cursor.value();
    trace.steps.push_back(rec);
  }
  trace.batch = cursor.batch();
  trace.value = cursor.value();
  trace.queries = queries_of(ctx) - before;
  return trace;
}

GreedyTrace approx_greedy(const AcquisitionContext& ctx, const SequenceSpace& space,
                          int batch_size, ProposalMethod method, int total_budget, Rng& rng,
                          const RlProposalConfig* rl) {
  ctx.validate();
  if (batch_size < 1) throw ContractViolation("approx_greedy: batch_size must be positive");
  if (total_budget < batch_size)
    throw ContractViolation("approx_greedy: budget must cover one proposal per step");
  if (method == ProposalMethod::kReinforce && rl == nullptr)
    throw ContractViolation("approx_greedy: REINFORCE proposals need settings");
  const int per_step = total_budget / batch_size;

  const std::int64_t before = queries_of(ctx);
  GreedyTrace trace;
  BatchCursor cursor(ctx);
  for (int step = 0; step < batch_size; ++step) {
    StepSearch search(cursor);
    if (method == ProposalMethod::kRandomSearch) {
      for (int b = 0; b < per_step; ++b) search.score(uniform_candidate(space, rng));
    } else if (method == ProposalMethod::kHillClimb) {
      // Members rank below every non-member so climbs escape them.
      const auto rank = [](const BatchCursor::Probe& p) { return p.member ? -1.0 : p.gain; };
      Candidate current;
      double current_rank = 0.0;
      bool restart = true;
      int budget = per_step;
      while (budget > 0) {
        if (restart) {
          current = uniform_candidate(space, rng);
          current_rank = rank(search.score(current));
          budget--;
          restart = false;
          continue;
        }
        // steepest ascent: score the whole neighborhood, move to its best
        // member only if that improves on the current point
        bool moved = false;
        Candidate best_nb;
        double best_nb_rank = current_rank;
        for (const Candidate& y : hamming_neighbors(space, current)) {
          if (budget == 0) break;
          const double r = rank(search.score(y));
          budget--;
          if (r > best_nb_rank) {
            moved = true;
            best_nb = y;
            best_nb_rank = r;
          }
        }
        if (moved) {
          current = std::move(best_nb);
          current_rank = best_nb_rank;
        } else {
          restart = true;  // local maximum: restart from a fresh draw
        }
      }
    } else {
      rl_proposal_step(ctx, space, search, per_step, *rl, rng);
    }
    finish_step(cursor, trace, search);
  }
  trace.batch = cursor.batch();
  trace.value = cursor.value();
  trace.queries = queries_of(ctx) - before;
  return trace;
}

GreedyTrace greedy_sample(const AcquisitionContext& ctx, const BatchSampler& sampler,
                          int batch_size, int samples_per_step, Rng& rng) {
  ctx.validate();
  if (!sampler) throw ContractViolation("greedy_sample: missing sampler");
  if (batch_size < 0) throw ContractViolation("greedy_sample: negative batch size");
  if (samples_per_step < 1)
    throw ContractViolation("greedy_sample: need at least one sample per step");

  const std::int64_t before = queries_of(ctx);
  GreedyTrace trace;
  BatchCursor cursor(ctx);
  for (int step = 0; step < batch_size; ++step) {
    StepSearch search(cursor);
    for (int s = 0; s < samples_per_step; ++s) search.score(sampler(cursor.batch(), rng));
    finish_step(cursor, trace, search);
  }
  trace.batch = cursor.batch();
  trace.value = cursor.value();
  trace.queries = queries_of(ctx) - before;
  return trace;
}

GreedyTrace greedy_sample(const AcquisitionContext& ctx, const Policy& policy,
                          const PolicyParams& params, int batch_size, int samples_per_step,
                          Rng& rng) {
  if (policy.config().kind != ConditioningKind::kSet)
    throw ContractViolation("greedy_sample: policy must be set-conditioned");
  // Cache features of batch members so the condition is rebuilt cheaply.
  auto feature_cache = std::make_shared<std::map<Candidate, ObjectiveVector>>();
  BatchSampler sampler = [&ctx, &policy, &params, feature_cache](
                             std::span<const Candidate> batch, Rng& r) {
    SetCondition cond;
    cond.features.reserve(batch.size());
    for (const auto& x : batch) {
      auto it = feature_cache->find(x);
      if (it == feature_cache->end()) it = feature_cache->emplace(x, ctx.feature(x)).first;
      cond.features.push_back(it->second);
    }
    return policy.sample_trajectory(params, cond, r).result;
  };
  return greedy_sample(ctx, sampler, batch_size, samples_per_step, rng);
}

TrainResult train_policy(const AcquisitionContext& ctx, const Policy& policy,
                         const TrainConfig& cfg, std::uint64_t seed) {
  ctx.validate();
  if (policy.config().kind != ConditioningKind::kSet)
    throw ContractViolation("train_policy: policy must be set-conditioned");
  if (policy.config().feat_dim != ctx.ref.dim())
    throw ContractViolation("train_policy: feature dimension does not match objectives");
  if (cfg.updates < 1 || cfg.snapshot_every < 1 || cfg.episodes < 1 || cfg.cond_sizes < 1)
    throw ConfigError("train_policy: counts must be positive");
  if (!(cfg.lr > 0.0) || !std::isfinite(cfg.lr) || !(cfg.norm_eps > 0.0))
    throw ConfigError("train_policy: bad learning rate or epsilon");
  if (cfg.eval_every < 0 ||
      (cfg.eval_every > 0 && (cfg.eval_batch < 1 || cfg.eval_samples < 1)))
    throw ConfigError("train_policy: bad evaluation settings");

  PolicyConfig eval_cfg = policy.config();
  eval_cfg.p_rand = cfg.eval_p_rand;
  const Policy eval_policy(eval_cfg);

  Rng init_rng(derive_seed(seed, 0, "train-init"));
  Rng loop_rng(derive_seed(seed, 1, "train-loop"));

  const std::int64_t before = queries_of(ctx);
  TrainResult res;
  PolicyParams params = policy.init_params(init_rng);
  PolicyParams snapshot = params;
  std::vector<Trajectory> trajs(static_cast<size_t>(cfg.episodes));
  std::vector<double> returns(static_cast<size_t>(cfg.episodes));

  for (int u = 0; u < cfg.updates; ++u) {
    if (u % cfg.snapshot_every == 0) snapshot = params;

    const int k = static_cast<int>(loop_rng.uniform_index(static_cast<size_t>(cfg.cond_sizes)));
    const GreedyTrace partial = greedy_sample(ctx, policy, snapshot, k, 1, loop_rng);
    const SetCondition cond{batch_features(ctx, partial.batch)};
    const BatchCursor cursor(ctx, partial.batch);

    double mean_return = 0.0;
    for (int j = 0; j < cfg.episodes; ++j) {
      trajs[static_cast<size_t>(j)] = policy.sample_trajectory(params, cond, loop_rng);
      returns[static_cast<size_t>(j)] =
          cursor.probe(trajs[static_cast<size_t>(j)].result).gain;
      mean_return += returns[static_cast<size_t>(j)];
    }
    mean_return /= static_cast<double>(cfg.episodes);
    normalize_returns(returns, cfg.norm_eps);

    Eigen::VectorXd grad;
    policy.weighted_logprob_grad(params, cond, trajs, returns, grad);
    check_finite(grad, "train_policy: gradient");
    params.flat += cfg.lr * grad;
    check_finite(params.flat, "train_policy: parameters");
    res.updates_done = u + 1;

    if (cfg.eval_every > 0 && ((u + 1) % cfg.eval_every == 0 || u + 1 == cfg.updates)) {
      Rng eval_rng(derive_seed(seed, static_cast<std::uint64_t>(u), "train-eval"));
      const GreedyTrace ev =
          greedy_sample(ctx, eval_policy, params, cfg.eval_batch, cfg.eval_samples, eval_rng);
      res.eval_values.push_back(ev.value);
      if (!res.evaluated || ev.value > res.best_value) {
        res.evaluated = true;
        res.best_value = ev.value;
        res.best_params = params;
      }
    }
    res.log.push_back({u + 1, mean_return, res.best_value});
  }
  res.params = params;
  if (!res.evaluated) res.best_params = params;
  res.queries = queries_of(ctx) - before;
  return res;
}

TrainResult train_preference_policy(const AcquisitionContext& ctx, const Policy& policy,
                                    const PreferenceTrainConfig& cfg, std::uint64_t seed) {
  ctx.validate();
  if (policy.config().kind != ConditioningKind::kPreference)
    throw ContractViolation("train_preference_policy: policy must be preference-conditioned");
  if (policy.config().feat_dim != ctx.ref.dim())
    throw ContractViolation("train_preference_policy: feature dimension mismatch");
  if (cfg.updates < 1 || cfg.episodes < 1)
    throw ConfigError("train_preference_policy: counts must be positive");
  if (!(cfg.lr > 0.0) || !std::isfinite(cfg.lr) || !(cfg.norm_eps > 0.0))
    throw ConfigError("train_preference_policy: bad learning rate or epsilon");

  Rng init_rng(derive_seed(seed, 0, "pref-init"));
  Rng loop_rng(derive_seed(seed, 1, "pref-loop"));

  const std::int64_t before = queries_of(ctx);
  TrainResult res;
  PolicyParams params = policy.init_params(init_rng);
  std::vector<Trajectory> trajs(static_cast<size_t>(cfg.episodes));
  std::vector<double> returns(static_cast<size_t>(cfg.episodes));

  for (int u = 0; u < cfg.updates; ++u) {
    const std::vector<double> w = loop_rng.dirichlet_flat(ctx.ref.dim());
    const Condition cond = PreferenceCondition(w);
    double mean_return = 0.0;
    for (int j = 0; j < cfg.episodes; ++j) {
      trajs[static_cast<size_t>(j)] = policy.sample_trajectory(params, cond, loop_rng);
      returns[static_cast<size_t>(j)] =
          scalarize(w, ctx.image(trajs[static_cast<size_t>(j)].result), cfg.scalarization);
      mean_return += returns[static_cast<size_t>(j)];
    }
    mean_return /= static_cast<double>(cfg.episodes);
    normalize_returns(returns, cfg.norm_eps);

    Eigen::VectorXd grad;
    policy.weighted_logprob_grad(params, cond, trajs, returns, grad);
    check_finite(grad, "train_preference_policy: gradient");
    params.flat += cfg.lr * grad;
    check_finite(params.flat, "train_preference_policy: parameters");
    res.updates_done = u + 1;
    res.log.push_back({u + 1, mean_return, 0.0});
  }
  res.params = params;
  res.best_params = params;
  res.queries = queries_of(ctx) - before;
  return res;
}

std::vector<Candidate> preference_batch(const AcquisitionContext& ctx, const Policy& policy,
                                        const PolicyParams& params, int batch_size,
                                        int samples_per_pref, Scalarization scalarization,
                                        Rng& rng) {
  ctx.validate();
  if (policy.config().kind != ConditioningKind::kPreference)
    throw ContractViolation("preference_batch: policy must be preference-conditioned");
  if (batch_size < 0) throw ContractViolation("preference_batch: negative batch size");
  if (samples_per_pref < 1)
    throw ContractViolation("preference_batch: need at least one sample per preference");

  std::vector<Candidate> batch;
  std::set<Candidate> members;
  for (int i = 0; i < batch_size; ++i) {
    const std::vector<double> w = rng.dirichlet_flat(ctx.ref.dim());
    const Condition cond = PreferenceCondition(w);
    Candidate best;
    double best_value = 0.0;
    for (int s = 0; s < samples_per_pref; ++s) {
      const Candidate x = policy.sample_trajectory(params, cond, rng).result;
      const double v = scalarize(w, ctx.image(x), scalarization);
      if (s == 0 || v > best_value) {
        best = x;
        best_value = v;
      }
    }
    if (members.insert(best).second) batch.push_back(best);  // deduplicate tops
  }
  return batch;
}

}  // namespace moco
