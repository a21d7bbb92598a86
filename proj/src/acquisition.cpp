#include "moco/acquisition.hpp"

#include <algorithm>

namespace moco {
namespace {

double combine(AcqMode mode, double improvement, double div_part, double lambda) {
  switch (mode) {
    case AcqMode::kPlain:
      return improvement;
    case AcqMode::kDiversifiedObjective:
      return improvement + lambda * div_part;
    case AcqMode::kDiversifiedGuide:
      return improvement / 2.0 + lambda * div_part;
  }
  throw ContractViolation("combine: bad acquisition mode");
}

}  // namespace

double sum_dispersion(std::span<const Candidate> batch) {
  std::vector<Candidate> uniq(batch.begin(), batch.end());
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  double total = 0.0;
  for (size_t i = 0; i < uniq.size(); ++i)
    for (size_t j = i + 1; j < uniq.size(); ++j)
      total += static_cast<double>(hamming(uniq[i], uniq[j]));
  return total;
}

void AcquisitionContext::validate() const {
  if (!surrogate) throw ContractViolation("AcquisitionContext: missing surrogate");
  if (ref.dim() != surrogate->num_objectives())
    throw ContractViolation("AcquisitionContext: reference dimension mismatch");
  if (!archive.empty() && archive.dim() != ref.dim())
    throw ContractViolation("AcquisitionContext: archive dimension mismatch");
  if (beta < 0.0 || beta_feat < 0.0)
    throw ContractViolation("AcquisitionContext: beta must be >= 0");
  if (lambda < 0.0) throw ContractViolation("AcquisitionContext: lambda must be >= 0");
  if (mode == AcqMode::kPlain && lambda != 0.0)
    throw ContractViolation("AcquisitionContext: lambda has no effect in plain mode");
}

ObjectiveVector AcquisitionContext::image(const Candidate& x) const {
  return ucb_vector(*surrogate, x, beta);
}

ObjectiveVector AcquisitionContext::feature(const Candidate& x) const {
  return ucb_vector(*surrogate, x, beta_feat);
}

double AcquisitionContext::value(std::span<const Candidate> batch) const {
  return BatchCursor(*this, batch).value();
}

double AcquisitionContext::marginal(const Candidate& x, std::span<const Candidate> batch) const {
  return BatchCursor(*this, batch).probe(x).gain;
}

BatchCursor::BatchCursor(const AcquisitionContext& ctx, std::span<const Candidate> batch)
    : ctx_(&ctx) {
  ctx.validate();
  archive_hv_ = hypervolume(ctx.archive.points(), ctx.ref);
  merged_images_.assign(ctx.archive.points().begin(), ctx.archive.points().end());
  base_hv_ = archive_hv_;
  const std::set<Candidate> prev(ctx.prev_batch.begin(), ctx.prev_batch.end());
  double prev_disp = sum_dispersion(ctx.prev_batch);
  for (const auto& x : batch) {
    if (!members_.insert(x).second) continue;
    batch_.push_back(x);
    merged_images_.push_back(ctx.image(x));
  }
  base_hv_ = hypervolume(merged_images_, ctx.ref);
  s_value_ = std::max(0.0, base_hv_ - archive_hv_);
  std::vector<Candidate> with_prev(ctx.prev_batch.begin(), ctx.prev_batch.end());
  with_prev.insert(with_prev.end(), batch_.begin(), batch_.end());
  div_part_ = sum_dispersion(with_prev) - prev_disp;
  value_ = combine(ctx.mode, s_value_, div_part_, ctx.lambda);
}

double BatchCursor::improvement_of(const ObjectiveVector& img) const {
  std::vector<ObjectiveVector> extended = merged_images_;
  extended.push_back(img);
  return hypervolume(extended, ctx_->ref);
}

BatchCursor::Probe BatchCursor::probe(const Candidate& x) const {
  Probe p;
  if (members_.count(x) > 0) {
    p.member = true;
    return p;
  }
  p.image = ctx_->image(x);
  const double extended_hv = improvement_of(p.image);
  const double new_s = std::max(0.0, extended_hv - archive_hv_);
  double delta_div = 0.0;
  const std::set<Candidate> prev(ctx_->prev_batch.begin(), ctx_->prev_batch.end());
  if (prev.count(x) == 0) {
    for (const auto& y : prev) delta_div += static_cast<double>(hamming(x, y));
    for (const auto& y : members_) {
      if (prev.count(y) == 0) delta_div += static_cast<double>(hamming(x, y));
    }
  }
  p.gain = combine(ctx_->mode, new_s, div_part_ + delta_div, ctx_->lambda) - value_;
  return p;
}

void BatchCursor::push(const Candidate& x, const Probe& probe) {
  if (probe.member || members_.count(x) > 0) return;
  members_.insert(x);
  batch_.push_back(x);
  merged_images_.push_back(probe.image);
  base_hv_ = hypervolume(merged_images_, ctx_->ref);
  s_value_ = std::max(0.0, base_hv_ - archive_hv_);
  double delta_div = 0.0;
  const std::set<Candidate> prev(ctx_->prev_batch.begin(), ctx_->prev_batch.end());
  if (prev.count(x) == 0) {
    for (const auto& y : prev) delta_div += static_cast<double>(hamming(x, y));
    for (const auto& y : members_) {
      if (y == x || prev.count(y) > 0) continue;
      delta_div += static_cast<double>(hamming(x, y));
    }
  }
  div_part_ += delta_div;
  value_ = combine(ctx_->mode, s_value_, div_part_, ctx_->lambda);
}

}  // namespace moco
