#include "moco/theory.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>
#include <vector>

#include "moco/errors.hpp"

namespace moco {
namespace {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

void check_scope(int ground_size, std::uint64_t batch_mask, int n) {
  if (ground_size < 1 || ground_size > 64)
    throw ContractViolation("set-function scope: ground size must be in [1, 64]");
  if (n < 0) throw ContractViolation("set-function scope: negative cardinality");
  if (ground_size < 64 && (batch_mask >> ground_size) != 0)
    throw ContractViolation("set-function scope: batch mask outside the ground set");
}

void check_cost(double cost, std::uint64_t cap, const char* what) {
  if (cost > static_cast<double>(cap)) {
    throw ResourceCapExceeded(std::string(what) + " needs " +
                              std::to_string(static_cast<std::uint64_t>(cost)) +
                              " enumeration steps, above the cap of " + std::to_string(cap));
  }
}

// Memoized view of a set function; every distinct mask is evaluated once.
class Memo {
 public:
  explicit Memo(const SetFunction& fn) : fn_(&fn) {}
  double operator()(std::uint64_t mask) const {
    auto it = cache_.find(mask);
    if (it == cache_.end()) it = cache_.emplace(mask, (*fn_)(mask)).first;
    return it->second;
  }

 private:
  const SetFunction* fn_;
  mutable std::unordered_map<std::uint64_t, double> cache_;
};

// Calls visit(mask) for every subset of `universe` with exactly k bits.
template <typename Visit>
void for_each_k_subset(std::uint64_t universe, int k, Visit&& visit) {
  std::vector<int> positions;
  for (int i = 0; i < 64; ++i)
    if ((universe >> i) & 1) positions.push_back(i);
  const int m = static_cast<int>(positions.size());
  if (k > m) return;
  std::vector<int> idx(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<size_t>(i)] = i;
  for (;;) {
    std::uint64_t mask = 0;
    for (int i : idx) mask |= 1ULL << positions[static_cast<size_t>(i)];
    visit(mask);
    int j = k - 1;
    while (j >= 0 && idx[static_cast<size_t>(j)] == m - k + j) --j;
    if (j < 0) break;
    idx[static_cast<size_t>(j)]++;
    for (int i = j + 1; i < k; ++i)
      idx[static_cast<size_t>(i)] = idx[static_cast<size_t>(i - 1)] + 1;
  }
}

// Builds the candidate list selected by a mask over the enumerated ground set.
std::vector<Candidate> members_of(std::span<const Candidate> ground, std::uint64_t mask) {
  std::vector<Candidate> out;
  out.reserve(static_cast<size_t>(std::popcount(mask)));
  for (size_t i = 0; i < ground.size(); ++i)
    if ((mask >> i) & 1) out.push_back(ground[i]);
  return out;
}

struct GroundIndex {
  std::vector<Candidate> ground;
  std::map<Candidate, int> index;
};

GroundIndex index_ground(std::span<const Candidate> ground) {
  if (ground.empty()) throw ContractViolation("bound verification: empty ground set");
  if (ground.size() > 64)
    throw ResourceCapExceeded("bound verification: ground sets hold at most 64 elements, got " +
                              std::to_string(ground.size()));
  GroundIndex gi;
  gi.ground.assign(ground.begin(), ground.end());
  for (size_t i = 0; i < gi.ground.size(); ++i) {
    if (!gi.index.emplace(gi.ground[i], static_cast<int>(i)).second)
      throw ContractViolation("bound verification: duplicate ground-set element");
  }
  return gi;
}

std::uint64_t mask_of(const GroundIndex& gi, std::span<const Candidate> batch) {
  std::uint64_t mask = 0;
  for (const Candidate& x : batch) {
    const auto it = gi.index.find(x);
    if (it == gi.index.end())
      throw ContractViolation("bound verification: trace member outside the ground set");
    mask |= 1ULL << it->second;
  }
  return mask;
}

SetFunction value_over(const AcquisitionContext& ctx, const GroundIndex& gi) {
  return [&ctx, &gi](std::uint64_t mask) {
    const std::vector<Candidate> members = members_of(gi.ground, mask);
    return ctx.value(members);
  };
}

void check_overrides(const BoundOverrides& ov) {
  for (const auto& v : {ov.alpha, ov.gamma}) {
    if (v && (!std::isfinite(*v) || *v < 0.0))
      throw ConfigError("bound verification: overrides must be finite and non-negative");
  }
}

BoundReport assemble(const VerifyOptions& opt, double alpha, double gamma, double achieved,
                     double optimal, double factor) {
  BoundReport rep;
  rep.instance = opt.instance;
  rep.alpha = alpha;
  rep.gamma = gamma;
  rep.achieved = achieved;
  rep.optimal = optimal;
  rep.factor = factor;
  rep.slack = achieved - factor * optimal;
  rep.holds = rep.slack >= -opt.tolerance;
  return rep;
}

}  // namespace

double submodularity_ratio_cost(int ground_size, std::uint64_t batch_mask, int n) {
  check_scope(ground_size, batch_mask, n);
  const int b = std::popcount(batch_mask);
  const int outside = ground_size - b;
  double cost = 0.0;
  for (int k = 0; k <= n; ++k) {
    for (int j = 0; j <= std::min(k, b); ++j) {
      // S takes j elements inside the batch and k - j outside; B' then ranges
      // over the 2^(b - j) subsets of what the batch keeps.
      cost += binomial(b, j) * binomial(outside, k - j) * std::exp2(b - j);
      if (!std::isfinite(cost)) return std::numeric_limits<double>::max();
    }
  }
  return cost;
}

double submodularity_ratio(const SetFunction& a, int ground_size, std::uint64_t batch_mask,
                           int n, std::uint64_t cap) {
  check_scope(ground_size, batch_mask, n);
  if (!a) throw ContractViolation("submodularity_ratio: missing set function");
  check_cost(submodularity_ratio_cost(ground_size, batch_mask, n), cap,
             "submodularity_ratio");

  const Memo value(a);
  const std::uint64_t universe =
      ground_size == 64 ? ~0ULL : ((1ULL << ground_size) - 1);
  // The empty and singleton scopes evaluate to 1 by the 0/0 convention and by
  // numerator == denominator, so the minimum starts there.
  double ratio = 1.0;
  for (int k = 2; k <= n; ++k) {
    for_each_k_subset(universe, k, [&](std::uint64_t s_mask) {
      const std::uint64_t keep = batch_mask & ~s_mask;
      std::uint64_t sub = keep;
      for (;;) {
        const double base = value(sub);
        const double denom = value(sub | s_mask) - base;
        double numer = 0.0;
        for (std::uint64_t rest = s_mask; rest != 0; rest &= rest - 1) {
          const std::uint64_t x = rest & (~rest + 1);
          numer += value(sub | x) - base;
        }
        if (denom > 0.0) {
          ratio = std::min(ratio, numer / denom);
        } else if (denom == 0.0 && numer == 0.0) {
          ratio = std::min(ratio, 1.0);
        }  // zero denominator with nonzero numerator imposes no constraint
        if (sub == 0) break;
        sub = (sub - 1) & keep;
      }
    });
  }
  return ratio;
}

OptimalSubset optimal_subset(const SetFunction& a, int ground_size, int n,
                             std::uint64_t cap) {
  check_scope(ground_size, 0, n);
  if (!a) throw ContractViolation("optimal_subset: missing set function");
  double cost = 0.0;
  for (int k = 0; k <= n; ++k) cost += binomial(ground_size, k);
  check_cost(cost, cap, "optimal_subset");

  const std::uint64_t universe =
      ground_size == 64 ? ~0ULL : ((1ULL << ground_size) - 1);
  OptimalSubset best{0, a(0)};
  for (int k = 1; k <= std::min(n, ground_size); ++k) {
    for_each_k_subset(universe, k, [&](std::uint64_t mask) {
      const double v = a(mask);
      if (v > best.value) best = {mask, v};
    });
  }
  return best;
}

double stepwise_approximation_factor(const AcquisitionContext& ctx,
                                     std::span<const Candidate> ground,
                                     const GreedyTrace& trace) {
  ctx.validate();
  const GroundIndex gi = index_ground(ground);
  std::vector<Candidate> prefix;
  double alpha = 1.0;
  for (const StepRecord& step : trace.steps) {
    if (step.stalled) continue;
    if (gi.index.find(step.chosen) == gi.index.end())
      throw ContractViolation("bound verification: trace member outside the ground set");
    const double achieved = ctx.marginal(step.chosen, prefix);
    double best = 0.0;
    for (const Candidate& x : gi.ground) {
      if (std::find(prefix.begin(), prefix.end(), x) != prefix.end()) continue;
      best = std::max(best, ctx.marginal(x, prefix));
    }
    const double ratio = best > 0.0 ? achieved / best : 1.0;  // 0/0 := 1
    alpha = std::min(alpha, std::clamp(ratio, 0.0, 1.0));
    prefix.push_back(step.chosen);
  }
  if (prefix != trace.batch)
    throw ContractViolation("bound verification: trace steps and batch disagree");
  return alpha;
}

BoundReport verify_near_submodular_bound(const AcquisitionContext& ctx,
                                         std::span<const Candidate> ground,
                                         const GreedyTrace& trace, int n,
                                         const VerifyOptions& opt) {
  ctx.validate();
  check_overrides(opt.overrides);
  if (n < 1) throw ContractViolation("bound verification: cardinality must be positive");
  if (static_cast<int>(trace.batch.size()) > n)
    throw ContractViolation("bound verification: trace batch exceeds the cardinality bound");
  const GroundIndex gi = index_ground(ground);
  const std::uint64_t batch_mask = mask_of(gi, trace.batch);
  const SetFunction a = value_over(ctx, gi);

  const double alpha = opt.overrides.alpha
                           ? *opt.overrides.alpha
                           : stepwise_approximation_factor(ctx, gi.ground, trace);
  const double gamma =
      opt.overrides.gamma
          ? *opt.overrides.gamma
          : submodularity_ratio(a, static_cast<int>(gi.ground.size()), batch_mask, n, opt.cap);
  const OptimalSubset best =
      optimal_subset(a, static_cast<int>(gi.ground.size()), n, opt.cap);
  const double achieved = a(batch_mask);
  const double factor = 1.0 - std::exp(-alpha * gamma);
  return assemble(opt, alpha, gamma, achieved, best.value, factor);
}

BoundReport verify_guided_dispersion_bound(const AcquisitionContext& ctx,
                                           std::span<const Candidate> ground,
                                           const GreedyTrace& trace, int n,
                                           const VerifyOptions& opt) {
  check_overrides(opt.overrides);
  if (n < 1) throw ContractViolation("bound verification: cardinality must be positive");
  if (static_cast<int>(trace.batch.size()) > n)
    throw ContractViolation("bound verification: trace batch exceeds the cardinality bound");
  const GroundIndex gi = index_ground(ground);
  const std::uint64_t batch_mask = mask_of(gi, trace.batch);

  AcquisitionContext objective = ctx;
  objective.mode = AcqMode::kDiversifiedObjective;
  objective.validate();
  AcquisitionContext guide = ctx;
  guide.mode = AcqMode::kDiversifiedGuide;
  AcquisitionContext improvement = ctx;
  improvement.mode = AcqMode::kPlain;
  improvement.lambda = 0.0;  // plain mode rejects a dangling diversity weight

  // alpha is the maximizer's quality on what it actually optimized: the guide.
  const double alpha = opt.overrides.alpha
                           ? *opt.overrides.alpha
                           : stepwise_approximation_factor(guide, gi.ground, trace);
  const SetFunction objective_fn = value_over(objective, gi);
  const OptimalSubset best =
      optimal_subset(objective_fn, static_cast<int>(gi.ground.size()), n, opt.cap);
  // gamma is taken on the improvement part alone, at the union of the achieved
  // and optimal batches.
  const SetFunction improvement_fn = value_over(improvement, gi);
  const double gamma = opt.overrides.gamma
                           ? *opt.overrides.gamma
                           : submodularity_ratio(improvement_fn,
                                                 static_cast<int>(gi.ground.size()),
                                                 batch_mask | best.mask, n, opt.cap);
  const double achieved = objective_fn(batch_mask);
  const double factor = alpha * gamma / 2.0;
  return assemble(opt, alpha, gamma, achieved, best.value, factor);
}

}  // namespace moco
