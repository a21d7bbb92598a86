#ifndef MOCO_ACQUISITION_HPP_
#define MOCO_ACQUISITION_HPP_

#include <memory>
#include <set>
#include <span>
#include <vector>

#include "moco/pareto.hpp"
#include "moco/sequence.hpp"
#include "moco/surrogate.hpp"

namespace moco {

// Sum of pairwise Hamming distances over the distinct elements of batch.
double sum_dispersion(std::span<const Candidate> batch);

enum class AcqMode {
  kPlain,                  // improvement value s(B) only
  kDiversifiedObjective,   // s(B) + lambda * dispersion terms
  kDiversifiedGuide,       // s(B)/2 + lambda * dispersion terms (selection guide)
};

// Everything needed to score a proposal batch: the surrogate, the image-space
// archive of already evaluated points, the reference point, optimism
// coefficients and the diversity setup. Batches are treated as sets.
class AcquisitionContext {
 public:
  std::shared_ptr<const Surrogate> surrogate;
  FrontSet archive;        // images of previously evaluated candidates
  ReferencePoint ref;
  double beta = 0.0;       // optimism for batch images
  double beta_feat = 0.1;  // optimism for policy conditioning features
  double lambda = 0.0;     // diversity weight
  std::vector<Candidate> prev_batch;
  AcqMode mode = AcqMode::kPlain;

  void validate() const;

  // Image used inside the improvement value: mean + beta * stddev.
  ObjectiveVector image(const Candidate& x) const;
  // Conditioning feature for set-conditioned policies: mean + beta_feat * stddev.
  ObjectiveVector feature(const Candidate& x) const;

  // Batch value under the configured mode. The dispersion part is
  // dispersion(prev_batch united with batch) - dispersion(prev_batch), so
  // already-proposed points earn no diversity credit twice.
  double value(std::span<const Candidate> batch) const;

  // Convenience one-off marginal gain value(batch + {x}) - value(batch).
  double marginal(const Candidate& x, std::span<const Candidate> batch) const;
};

// Incremental view of a growing batch for greedy engines: caches images and
// the running value so each marginal-gain probe costs one surrogate query and
// one hypervolume evaluation.
class BatchCursor {
 public:
  struct Probe {
    double gain = 0.0;
    bool member = false;
    ObjectiveVector image;  // empty when member
  };

  explicit BatchCursor(const AcquisitionContext& ctx,
                       std::span<const Candidate> batch = {});

  double value() const { return value_; }
  const std::vector<Candidate>& batch() const { return batch_; }
  bool contains(const Candidate& x) const { return members_.count(x) > 0; }

  Probe probe(const Candidate& x) const;
  void push(const Candidate& x, const Probe& probe);
  void push(const Candidate& x) { push(x, probe(x)); }

 private:
  double improvement_of(const ObjectiveVector& img) const;

  const AcquisitionContext* ctx_;
  std::set<Candidate> members_;
  std::vector<Candidate> batch_;
  std::vector<ObjectiveVector> merged_images_;  // batch images + archive points
  double base_hv_ = 0.0;                        // HV(merged_images_)
  double archive_hv_ = 0.0;
  double s_value_ = 0.0;     // improvement part of value()
  double div_part_ = 0.0;    // dispersion(prev + batch) - dispersion(prev)
  double value_ = 0.0;
};

}  // namespace moco

#endif  // MOCO_ACQUISITION_HPP_
