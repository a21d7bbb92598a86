#ifndef MOCO_SELECTION_HPP_
#define MOCO_SELECTION_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "moco/acquisition.hpp"
#include "moco/policy.hpp"
#include "moco/rng.hpp"
#include "moco/sequence.hpp"

namespace moco {

enum class TieBreak { kLexicographic, kRandom };

struct StepRecord {
  Candidate chosen;
  double gain = 0.0;         // marginal value added this step
  double value_after = 0.0;  // batch value once the step is applied
  int evaluated = 0;         // candidate proposals scored this step
  bool stalled = false;      // every proposal was already a member
};

struct GreedyTrace {
  std::vector<Candidate> batch;
  std::vector<StepRecord> steps;
  double value = 0.0;
  std::int64_t queries = 0;  // surrogate queries consumed by the call
};

// Exhaustive greedy: each step scores every non-member of the ground set and
// adds the best. Ties are broken lexicographically or by the supplied RNG.
GreedyTrace exact_greedy(const AcquisitionContext& ctx, std::span<const Candidate> ground,
                         int batch_size, TieBreak tie = TieBreak::kLexicographic,
                         Rng* rng = nullptr);

enum class ProposalMethod { kRandomSearch, kHillClimb, kReinforce };

// Per-step settings for the kReinforce proposal maximizer: a fresh
// unconditioned policy is trained on the step's marginal gain, then the best
// of extract_samples draws is kept.
struct RlProposalConfig {
  int episodes = 32;         // trajectories per REINFORCE update
  double lr = 0.01;
  double p_rand = 0.05;
  int extract_samples = 32;  // best-of-samples at the end of the step
  PolicyDims dims{8, 16, 16, 32};
  double norm_eps = 1e-8;
};

// Budgeted greedy: splits total_budget evenly across steps; each step spends
// its share of proposal evaluations searching for the best non-member.
//  - kRandomSearch: uniform draws from the space.
//  - kHillClimb: steepest ascent over 1-Hamming neighborhoods (substitute a
//    token, append one, or drop the last), restarting from a fresh uniform
//    draw at local maxima.
//  - kReinforce: fresh policy trained on this step's marginal gain, then
//    best-of-samples (requires rl settings).
GreedyTrace approx_greedy(const AcquisitionContext& ctx, const SequenceSpace& space,
                          int batch_size, ProposalMethod method, int total_budget, Rng& rng,
                          const RlProposalConfig* rl = nullptr);

// Draws one candidate given the batch selected so far.
using BatchSampler = std::function<Candidate(std::span<const Candidate>, Rng&)>;

// Sequential best-of-l selection: each of batch_size steps draws
// samples_per_step candidates from the sampler and adds the one with the
// largest marginal gain. If the best of the draws is already a member the
// best non-member is taken instead; if every draw is a member the step
// stalls and the batch stays as it is (the result may be smaller than
// batch_size).
GreedyTrace greedy_sample(const AcquisitionContext& ctx, const BatchSampler& sampler,
                          int batch_size, int samples_per_step, Rng& rng);

// Policy-guided form: candidates are sampled from the set-conditioned policy
// given the features of the batch so far.
GreedyTrace greedy_sample(const AcquisitionContext& ctx, const Policy& policy,
                          const PolicyParams& params, int batch_size, int samples_per_step,
                          Rng& rng);

struct TrainConfig {
  int updates = 1000;       // gradient updates
  int snapshot_every = 10;  // refresh the behavior snapshot this often
  int episodes = 64;        // trajectories per update
  double lr = 0.01;         // plain SGD step size
  int cond_sizes = 4;       // conditioning batch size drawn from {0..cond_sizes-1}
  int eval_every = 0;       // 0 disables periodic evaluation
  int eval_batch = 4;       // batch size used when evaluating
  int eval_samples = 16;    // trajectories per greedy step when evaluating
  double eval_p_rand = 0.0; // exploration rate of the evaluation policy
  double norm_eps = 1e-8;   // return-normalization stabilizer
};

struct TrainLogRow {
  int update = 0;
  double mean_return = 0.0;  // raw (unnormalized) mean episode return
  double best_value = 0.0;   // best evaluated batch value so far
};

struct TrainResult {
  PolicyParams params;       // parameters after the last update
  PolicyParams best_params;  // parameters of the best evaluation so far
  double best_value = 0.0;   // value of the best evaluated batch
  bool evaluated = false;    // whether any evaluation ran
  std::vector<double> eval_values;
  std::vector<TrainLogRow> log;
  std::int64_t queries = 0;  // surrogate queries consumed by the call
  int updates_done = 0;
};

// REINFORCE on the set-conditioned policy. Every snapshot_every updates the
// current parameters become the behavior snapshot; each update draws a
// conditioning batch of random size from the snapshot via greedy sampling,
// rolls out episodes, scores them by marginal gain, normalizes the returns
// and takes one ascent step. All returns equal leaves the parameters
// unchanged for that update. Throws NumericalError on non-finite values.
TrainResult train_policy(const AcquisitionContext& ctx, const Policy& policy,
                         const TrainConfig& cfg, std::uint64_t seed);

struct PreferenceTrainConfig {
  int updates = 500;
  int episodes = 64;
  double lr = 0.01;
  Scalarization scalarization = Scalarization::kWeighted;
  double norm_eps = 1e-8;
};

// REINFORCE on the preference-conditioned policy: each update draws a flat
// Dirichlet weight vector and rewards episodes by their scalarized images.
TrainResult train_preference_policy(const AcquisitionContext& ctx, const Policy& policy,
                                    const PreferenceTrainConfig& cfg, std::uint64_t seed);

// Builds a batch from a preference-conditioned policy: draws batch_size flat
// Dirichlet weight vectors, keeps the top of samples_per_pref conditioned
// samples by scalarized image for each, then deduplicates, so the result has
// at most batch_size members.
std::vector<Candidate> preference_batch(const AcquisitionContext& ctx, const Policy& policy,
                                        const PolicyParams& params, int batch_size,
                                        int samples_per_pref, Scalarization scalarization,
                                        Rng& rng);

}  // namespace moco

#endif  // MOCO_SELECTION_HPP_
