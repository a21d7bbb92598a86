#ifndef MOCO_ACTIVE_LEARNING_HPP_
#define MOCO_ACTIVE_LEARNING_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "moco/acquisition.hpp"
#include "moco/sequence.hpp"
#include "moco/surrogate.hpp"

namespace moco {

// Ground-truth objective; every call is one oracle query.
using Oracle = std::function<ObjectiveVector(const Candidate&)>;

// Oracle-labeled pairs in query order with round boundaries. Round 0 is the
// initial dataset; each later round appends one evaluated proposal batch. A
// candidate can be appended at most once across the whole run.
class Dataset {
 public:
  void append(const Candidate& x, const ObjectiveVector& y);
  void close_round();

  bool contains(const Candidate& x) const { return members_.count(x) > 0; }
  std::size_t size() const { return pairs_.size(); }
  int rounds() const { return static_cast<int>(round_end_.size()); }
  // Number of pairs known once round r closed.
  std::size_t round_end(int r) const;
  std::span<const std::pair<Candidate, ObjectiveVector>> pairs() const { return pairs_; }

 private:
  std::vector<std::pair<Candidate, ObjectiveVector>> pairs_;
  std::vector<std::size_t> round_end_;
  std::set<Candidate> members_;
};

// Labels every candidate and closes round 0. The list must be duplicate-free.
Dataset initial_dataset(const Oracle& oracle, std::span<const Candidate> xs);

struct RoundMetrics {
  int round = 0;
  std::int64_t queries = 0;            // cumulative oracle queries after initialization
  std::int64_t queries_with_init = 0;  // same, counting the initial dataset
  double hypervolume = 0.0;            // HV of the non-dominated dataset images
  double relative_hypervolume = 0.0;   // vs round 0; absolute when flagged
  bool absolute_fallback = false;      // round-0 hypervolume was zero
  double wall_seconds = 0.0;           // timing only; excluded from reproducibility
};

enum class SurrogateKind {
  kOracleDirect,  // the oracle doubles as a deterministic surrogate; no fitting
  kEnsemble,      // bootstrap ensemble refit from scratch every round
};

struct ActiveLearningConfig {
  int rounds = 5;      // proposal rounds after the initial dataset
  int batch_size = 4;  // cardinality offered to the strategy each round
  SurrogateKind surrogate = SurrogateKind::kEnsemble;
  EnsembleConfig ensemble;
  double beta = 0.0;       // optimism in acquisition images
  double beta_feat = 0.1;  // optimism in policy conditioning features
  double lambda = 0.0;     // in-batch diversity weight; selects the guide mode when > 0
  ReferencePoint ref;
};

// Everything a proposal strategy sees for one round. The acquisition context
// wraps this round's surrogate and the archive of already evaluated images.
struct ProposalRequest {
  const AcquisitionContext& acquisition;
  const SequenceSpace& space;
  int batch_size = 0;
  int round = 0;            // index of the round being proposed
  std::uint64_t seed = 0;   // derived from (master seed, round)
  const Dataset& dataset;
};

// Returns at most batch_size candidates; duplicates are skipped with a warning.
using ProposalStrategy = std::function<std::vector<Candidate>(const ProposalRequest&)>;

struct ActiveLearningResult {
  Dataset dataset;
  std::vector<RoundMetrics> metrics;  // one row per closed round, index = round
  std::vector<std::pair<Candidate, ObjectiveVector>> pareto;  // final non-dominated subset
  std::vector<std::string> warnings;  // skipped-duplicate reports
};

// Multi-round loop: per round, (re)fit the surrogate on the dataset, hand the
// strategy an acquisition context, evaluate its deduplicated proposals on the
// oracle, extend the dataset and record metrics. `start` may be a fresh
// initial dataset or a partially completed run (its closed rounds are kept and
// their metrics recomputed), so interrupted runs resume deterministically:
// every per-round seed derives from (master_seed, round).
ActiveLearningResult run_active_learning(const Oracle& oracle, const SequenceSpace& space,
                                         const ProposalStrategy& strategy,
                                         const ActiveLearningConfig& cfg, Dataset start,
                                         std::uint64_t master_seed);

struct RelativeCurve {
  std::vector<double> values;
  bool absolute_fallback = false;  // baseline was zero; values are absolute
};

// Per-round hypervolume normalized by the baseline round's hypervolume.
RelativeCurve relative_hypervolume(std::span<const RoundMetrics> metrics,
                                   int baseline_round = 0);

// Cumulative queries at the first round whose hypervolume reaches the target;
// nullopt when the run never gets there. count_initial selects the convention
// that charges the initial dataset as queries.
std::optional<std::int64_t> queries_to_target(std::span<const RoundMetrics> metrics,
                                              double target_hypervolume,
                                              bool count_initial = false);

// Linear-interpolation percentile over the sorted values; p in [0, 100].
double percentile(std::vector<double> values, double p);

// One JSON record per oracle query: {"round": r, "candidate": s, "objective": [...]}.
void write_dataset_jsonl(const Dataset& dataset, const SequenceSpace& space,
                         std::ostream& out);

// Rebuilds a dataset from its log. Rounds that contributed no queries leave no
// records, so the caller may pass the known total round count to restore
// trailing empty rounds; -1 keeps exactly the rounds present in the log.
Dataset read_dataset_jsonl(const SequenceSpace& space, std::istream& in,
                           int total_rounds = -1);

}  // namespace moco

#endif  // MOCO_ACTIVE_LEARNING_HPP_
