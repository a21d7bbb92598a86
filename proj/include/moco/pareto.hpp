#ifndef MOCO_PARETO_HPP_
#define MOCO_PARETO_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "moco/errors.hpp"

namespace moco {

// Objective values are maximized componentwise throughout.
class ObjectiveVector {
 public:
  ObjectiveVector() = default;
  explicit ObjectiveVector(std::vector<double> values);

  int dim() const { return static_cast<int>(values_.size()); }
  double operator[](int i) const { return values_[static_cast<size_t>(i)]; }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const ObjectiveVector& other) const = default;
  // Lexicographic over coordinates; canonical ordering for deterministic output.
  bool operator<(const ObjectiveVector& other) const { return values_ < other.values_; }

 private:
  std::vector<double> values_;
};

class ReferencePoint {
 public:
  ReferencePoint() = default;
  explicit ReferencePoint(std::vector<double> values) : point_(std::move(values)) {}
  explicit ReferencePoint(ObjectiveVector point) : point_(std::move(point)) {}

  int dim() const { return point_.dim(); }
  double operator[](int i) const { return point_[i]; }
  const ObjectiveVector& point() const { return point_; }

 private:
  ObjectiveVector point_;
};

// True iff a is componentwise >= b and a != b.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

// Mutually non-dominated, deduplicated point set. Construction enforces the
// invariant by dropping duplicates and dominated points.
class FrontSet {
 public:
  FrontSet() = default;
  static FrontSet of(std::vector<ObjectiveVector> points);

  const std::vector<ObjectiveVector>& points() const { return points_; }
  bool empty() const { return points_.empty(); }
  size_t size() const { return points_.size(); }
  int dim() const { return points_.empty() ? 0 : points_.front().dim(); }

 private:
  std::vector<ObjectiveVector> points_;
};

// Partitions points into fronts of indices: front 0 is the non-dominated set,
// front k+1 is the non-dominated set once fronts 0..k are removed. Indices
// within a front are ascending.
std::vector<std::vector<int>> non_dominated_sort(std::span<const ObjectiveVector> points);

// Exact hypervolume of the union of boxes [ref, p] over p in points,
// supported for 1 <= dim <= 4. Points that do not strictly dominate the
// reference in every coordinate contribute zero volume. Deduplication and
// dominated-point removal happen internally, so the result is bit-identical
// under permutation, duplication, or removal of dominated points.
double hypervolume(std::span<const ObjectiveVector> points, const ReferencePoint& ref);

// Hypervolume improvement of a batch of objective vectors over an archive:
// HV(batch united with archive) - HV(archive). Never negative.
double hvi(std::span<const ObjectiveVector> batch, const FrontSet& archive,
           const ReferencePoint& ref);

// Marginal improvement of adding x to batch, both measured against archive:
// hvi(batch + {x}) - hvi(batch). Never negative.
double marginal_hvi(const ObjectiveVector& x, std::span<const ObjectiveVector> batch,
                    const FrontSet& archive, const ReferencePoint& ref);

}  // namespace moco

#endif  // MOCO_PARETO_HPP_
