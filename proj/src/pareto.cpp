#include "moco/pareto.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace moco {
namespace {

constexpr int kMaxDim = 4;
using Point = std::array<double, kMaxDim>;

bool point_dominates(const Point& a, const Point& b, int m) {
  bool strict = false;
  for (int i = 0; i < m; ++i) {
    if (a[i] < b[i]) return false;
    if (a[i] > b[i]) strict = true;
  }
  return strict;
}

bool point_equal(const Point& a, const Point& b, int m) {
  for (int i = 0; i < m; ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

// Keeps the maximal points of pts (already deduplicated), preserving order.
std::vector<Point> maximal_points(const std::vector<Point>& pts, int m) {
  std::vector<Point> kept;
  kept.reserve(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (size_t j = 0; j < pts.size() && !dominated; ++j) {
      if (j != i && point_dominates(pts[j], pts[i], m)) dominated = true;
    }
    if (!dominated) kept.push_back(pts[i]);
  }
  return kept;
}

void sort_dedupe(std::vector<Point>& pts, int m) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [m](const Point& a, const Point& b) { return point_equal(a, b, m); }),
            pts.end());
}

// Canonical form: strictly above ref in all coordinates, deduplicated,
// mutually non-dominated, lexicographically sorted.
std::vector<Point> canonicalize(std::span<const ObjectiveVector> points,
                                const ReferencePoint& ref, int m) {
  std::vector<Point> pts;
  pts.reserve(points.size());
  for (const auto& p : points) {
    if (p.dim() != m) throw ContractViolation("hypervolume: point dimension mismatch");
    Point q{};
    bool keep = true;
    for (int i = 0; i < m; ++i) {
      q[static_cast<size_t>(i)] = p[i];
      if (p[i] <= ref[i]) keep = false;
    }
    if (keep) pts.push_back(q);
  }
  sort_dedupe(pts, m);
  return maximal_points(pts, m);
}

// pts: canonical form. Dimension sweep over the last coordinate with exact
// base cases for one and two dimensions.
double hv_recurse(const std::vector<Point>& pts, int m, const Point& ref) {
  if (pts.empty()) return 0.0;
  if (m == 1) {
    double best = 0.0;
    for (const auto& p : pts) best = std::max(best, p[0] - ref[0]);
    return best;
  }
  if (m == 2) {
    // Non-dominated and deduplicated: x strictly decreasing, y strictly
    // increasing once sorted by x descending.
    std::vector<Point> sorted = pts;
    std::sort(sorted.begin(), sorted.end(),
              [](const Point& a, const Point& b) { return a[0] > b[0]; });
    double area = 0.0;
    double prev_y = ref[1];
    for (const auto& p : sorted) {
      area += (p[0] - ref[0]) * (p[1] - prev_y);
      prev_y = p[1];
    }
    return area;
  }

  const int last = m - 1;
  std::vector<Point> sorted = pts;
  std::sort(sorted.begin(), sorted.end(), [last](const Point& a, const Point& b) {
    if (a[static_cast<size_t>(last)] != b[static_cast<size_t>(last)])
      return a[static_cast<size_t>(last)] > b[static_cast<size_t>(last)];
    return a < b;
  });

  double volume = 0.0;
  std::vector<Point> active;
  size_t i = 0;
  while (i < sorted.size()) {
    const double level = sorted[i][static_cast<size_t>(last)];
    while (i < sorted.size() && sorted[i][static_cast<size_t>(last)] == level) {
      Point proj = sorted[i];
      proj[static_cast<size_t>(last)] = 0.0;
      active.push_back(proj);
      ++i;
    }
    const double next_level = (i < sorted.size()) ? sorted[i][static_cast<size_t>(last)]
                                                  : ref[static_cast<size_t>(last)];
    std::vector<Point> slab = active;
    sort_dedupe(slab, last);
    slab = maximal_points(slab, last);
    volume += (level - next_level) * hv_recurse(slab, last, ref);
  }
  return volume;
}

Point ref_as_point(const ReferencePoint& ref, int m) {
  Point r{};
  for (int i = 0; i < m; ++i) r[static_cast<size_t>(i)] = ref[i];
  return r;
}

int checked_dim(const ReferencePoint& ref) {
  const int m = ref.dim();
  if (m < 1) throw ContractViolation("hypervolume: reference point must have dimension >= 1");
  if (m > kMaxDim) {
    throw UnsupportedDimension("hypervolume: exact computation supports dimension <= " +
                               std::to_string(kMaxDim) + ", got " + std::to_string(m));
  }
  return m;
}

}  // namespace

ObjectiveVector::ObjectiveVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ContractViolation("ObjectiveVector: dimension must be >= 1");
  for (double v : values_) {
    if (!std::isfinite(v)) throw ContractViolation("ObjectiveVector: entries must be finite");
  }
}

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  if (a.dim() != b.dim()) throw ContractViolation("dominates: dimension mismatch");
  bool strict = false;
  for (int i = 0; i < a.dim(); ++i) {
    if (a[i] < b[i]) return false;
    if (a[i] > b[i]) strict = true;
  }
  return strict;
}

FrontSet FrontSet::of(std::vector<ObjectiveVector> points) {
  FrontSet front;
  if (points.empty()) return front;
  const int m = points.front().dim();
  for (const auto& p : points) {
    if (p.dim() != m) throw ContractViolation("FrontSet: dimension mismatch");
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  for (size_t i = 0; i < points.size(); ++i) {
    bool dominated = false;
    for (size_t j = 0; j < points.size() && !dominated; ++j) {
      if (j != i && dominates(points[j], points[i])) dominated = true;
    }
    if (!dominated) front.points_.push_back(points[i]);
  }
  return front;
}

std::vector<std::vector<int>> non_dominated_sort(std::span<const ObjectiveVector> points) {
  const int n = static_cast<int>(points.size());
  std::vector<std::vector<int>> fronts;
  if (n == 0) return fronts;
  for (const auto& p : points) {
    if (p.dim() != points.front().dim())
      throw ContractViolation("non_dominated_sort: dimension mismatch");
  }
  std::vector<int> dominated_by(static_cast<size_t>(n), 0);
  std::vector<std::vector<int>> dominating(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && dominates(points[static_cast<size_t>(i)], points[static_cast<size_t>(j)])) {
        dominating[static_cast<size_t>(i)].push_back(j);
        ++dominated_by[static_cast<size_t>(j)];
      }
    }
  }
  std::vector<int> current;
  for (int i = 0; i < n; ++i) {
    if (dominated_by[static_cast<size_t>(i)] == 0) current.push_back(i);
  }
  while (!current.empty()) {
    fronts.push_back(current);
    std::vector<int> next;
    for (int i : current) {
      for (int j : dominating[static_cast<size_t>(i)]) {
        if (--dominated_by[static_cast<size_t>(j)] == 0) next.push_back(j);
      }
    }
    std::sort(next.begin(), next.end());
    current = std::move(next);
  }
  return fronts;
}

double hypervolume(std::span<const ObjectiveVector> points, const ReferencePoint& ref) {
  const int m = checked_dim(ref);
  const std::vector<Point> pts = canonicalize(points, ref, m);
  return hv_recurse(pts, m, ref_as_point(ref, m));
}

double hvi(std::span<const ObjectiveVector> batch, const FrontSet& archive,
           const ReferencePoint& ref) {
  std::vector<ObjectiveVector> merged(batch.begin(), batch.end());
  merged.insert(merged.end(), archive.points().begin(), archive.points().end());
  const double combined = hypervolume(merged, ref);
  const double base = hypervolume(archive.points(), ref);
  return std::max(0.0, combined - base);
}

double marginal_hvi(const ObjectiveVector& x, std::span<const ObjectiveVector> batch,
                    const FrontSet& archive, const ReferencePoint& ref) {
  std::vector<ObjectiveVector> merged(batch.begin(), batch.end());
  merged.insert(merged.end(), archive.points().begin(), archive.points().end());
  const double base = hypervolume(merged, ref);
  merged.push_back(x);
  const double extended = hypervolume(merged, ref);
  return std::max(0.0, extended - base);
}

}  // namespace moco
