#ifndef MOCO_THEORY_HPP_
#define MOCO_THEORY_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "moco/acquisition.hpp"
#include "moco/selection.hpp"

namespace moco {

// Value oracle over subsets of an enumerated ground set, addressed by bitmask
// (bit i = element i). Ground sets hold at most 64 elements.
using SetFunction = std::function<double(std::uint64_t)>;

inline constexpr std::uint64_t kDefaultEnumerationCap = 20'000'000;

// Number of (S, B') pairs the submodularity-ratio enumeration visits, where S
// ranges over subsets of the ground set with |S| <= n and B' over subsets of
// batch \ S. Saturates instead of overflowing.
double submodularity_ratio_cost(int ground_size, std::uint64_t batch_mask, int n);

// Exact submodularity ratio of a monotone set function at scope (batch, n):
// the minimum over all (S, B') pairs of
//     sum_{x in S} [a(B' + x) - a(B')]  /  [a(B' + S) - a(B')]
// with 0/0 := 1 and zero-denominator pairs imposing no constraint. The empty
// and singleton choices of S pin the ratio at 1, so the result is <= 1; it
// equals 1 exactly when the function is submodular on the tested scopes.
double submodularity_ratio(const SetFunction& a, int ground_size, std::uint64_t batch_mask,
                           int n, std::uint64_t cap = kDefaultEnumerationCap);

struct OptimalSubset {
  std::uint64_t mask = 0;
  double value = 0.0;
};

// Exhaustive maximum of a over all subsets with at most n elements.
OptimalSubset optimal_subset(const SetFunction& a, int ground_size, int n,
                             std::uint64_t cap = kDefaultEnumerationCap);

struct BoundReport {
  std::string instance;  // free-form descriptor for CSV emission
  double alpha = 1.0;    // worst per-step achieved / exact-best marginal gain
  double gamma = 1.0;    // submodularity ratio at the reported scope
  double achieved = 0.0;
  double optimal = 0.0;  // exhaustive optimum over subsets of size <= n
  double factor = 0.0;   // guarantee factor applied to the optimum
  double slack = 0.0;    // achieved - factor * optimal
  bool holds = false;    // slack >= -tolerance
};

// Test hooks: replace the measured alpha or the enumerated gamma before the
// guarantee factor is formed (a deflated gamma must keep the bound holding, an
// inflated alpha must be caught as a violation).
struct BoundOverrides {
  std::optional<double> alpha;
  std::optional<double> gamma;
};

struct VerifyOptions {
  BoundOverrides overrides;
  double tolerance = 1e-9;  // absolute slack tolerance for `holds`
  std::uint64_t cap = kDefaultEnumerationCap;
  std::string instance;  // descriptor copied into the report
};

// Worst per-step ratio of the achieved marginal gain to the exact best
// marginal gain over the ground set, replaying the trace's choices under ctx;
// steps where nothing can improve count as 1 (0/0 := 1).
double stepwise_approximation_factor(const AcquisitionContext& ctx,
                                     std::span<const Candidate> ground,
                                     const GreedyTrace& trace);

// Near-submodularity guarantee of a greedy run: the achieved batch value must
// reach at least (1 - e^{-alpha*gamma}) of the optimal n-subset value, with
// alpha the stepwise approximation factor of the trace and gamma the
// submodularity ratio of the batch value at the achieved batch. A violated
// inequality is flagged in the report, never silently dropped.
BoundReport verify_near_submodular_bound(const AcquisitionContext& ctx,
                                         std::span<const Candidate> ground,
                                         const GreedyTrace& trace, int n,
                                         const VerifyOptions& opt = {});

// Diversity-guided guarantee: a greedy run on the half-improvement guide
// (s/2 + lambda*div) must reach at least (alpha*gamma/2) of the optimal
// (s + lambda*div) value, with alpha measured against the guide and gamma the
// submodularity ratio of the improvement part s at the union of the achieved
// and optimal batches. The context's lambda and dispersion setup are used for
// both the guide and the objective; its mode is ignored.
BoundReport verify_guided_dispersion_bound(const AcquisitionContext& ctx,
                                           std::span<const Candidate> ground,
                                           const GreedyTrace& trace, int n,
                                           const VerifyOptions& opt = {});

}  // namespace moco

#endif  // MOCO_THEORY_HPP_
