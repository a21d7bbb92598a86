#ifndef MOCO_POLICY_HPP_
#define MOCO_POLICY_HPP_

#include <Eigen/Core>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "moco/pareto.hpp"
#include "moco/rng.hpp"
#include "moco/sequence.hpp"

namespace moco {

enum class ConditioningKind { kNone, kSet, kPreference };

struct PolicyDims {
  int embed = 16;        // token/position embedding width
  int state_hidden = 32; // state encoder output width
  int cond_hidden = 64;  // conditioning encoder width (set or preference)
  int dec_hidden = 64;   // decoder hidden width
};

struct PolicyConfig {
  SequenceSpace space;
  int feat_dim = 2;      // conditioning feature dimension
  ConditioningKind kind = ConditioningKind::kSet;
  PolicyDims dims;
  double p_rand = 0.0;   // uniform-over-legal exploration mixture weight
};

// Flat parameter vector. Copying a PolicyParams is a full snapshot.
struct PolicyParams {
  Eigen::VectorXd flat;
};

struct NoCondition {};

// Multiset of objective-space features describing the already-chosen batch.
struct SetCondition {
  std::vector<ObjectiveVector> features;
};

// Point on the probability simplex (validated within 1e-9).
class PreferenceCondition {
 public:
  explicit PreferenceCondition(std::vector<double> weights);
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> weights_;
};

using Condition = std::variant<NoCondition, SetCondition, PreferenceCondition>;

struct ActionDistribution {
  std::vector<double> probs;  // over V tokens + terminate, illegal actions 0
};

// Actions determine every state in the appending process, so storing states
// is redundant but convenient for inspection and replay.
struct Trajectory {
  std::vector<MdpState> states;  // length T+1, last one terminal
  std::vector<int> actions;      // length T
  double log_prob = 0.0;         // network log-probability, mixture excluded
  Candidate result;
};

enum class Scalarization { kWeighted, kChebyshev };

// Weighted sum or weighted min (maximization form). Weights must lie on the
// simplex within 1e-9.
double scalarize(std::span<const double> weights, const ObjectiveVector& y, Scalarization kind);

// Conditioned sequence policy: logits = Dec(CondEnc(condition) ++ StateEnc(prefix)).
//  - StateEnc: token+position embeddings, per-position tanh layer, mean pool,
//    concatenated with a last-token one-hot and a length fraction, tanh layer.
//  - CondEnc (set): 3 permutation-equivariant max-pool tanh layers, max pool,
//    2-layer head. The empty set is a zero feature row with its flag channel 1.
//  - CondEnc (preference): 2-layer tanh network on the weight vector.
//  - Dec: tanh hidden layer, linear logits over V+1 actions, masked softmax.
// Exploration mixes the softmax with uniform-over-legal at rate p_rand;
// log-probabilities and gradients always follow the raw softmax.
class Policy {
 public:
  explicit Policy(PolicyConfig config);

  const PolicyConfig& config() const { return config_; }
  int param_count() const;

  // Encoders and the decoder hidden layer get uniform(-0.01, 0.01) noise; the
  // final decoder layer starts at zero, so the initial policy is uniform over
  // legal actions.
  PolicyParams init_params(Rng& rng) const;

  ActionDistribution action_distribution(const PolicyParams& params, const Condition& cond,
                                         const MdpState& state) const;

  Trajectory sample_trajectory(const PolicyParams& params, const Condition& cond,
                               Rng& rng) const;

  double log_prob(const PolicyParams& params, const Condition& cond,
                  const Trajectory& traj) const;

  // Returns log pi(traj) and writes d log pi / d params into grad.
  double log_prob_and_grad(const PolicyParams& params, const Condition& cond,
                           const Trajectory& traj, Eigen::VectorXd& grad) const;

  // Accumulates grad = sum_j coeffs[j] * d log pi(trajs[j]) / d params with the
  // conditioning encoder evaluated once. Returns sum_j coeffs[j] * log pi_j.
  double weighted_logprob_grad(const PolicyParams& params, const Condition& cond,
                               std::span<const Trajectory> trajs,
                               std::span<const double> coeffs, Eigen::VectorXd& grad) const;

  struct Impl;

 private:
  PolicyConfig config_;
  std::shared_ptr<const Impl> impl_;
};

}  // namespace moco

#endif  // MOCO_POLICY_HPP_
