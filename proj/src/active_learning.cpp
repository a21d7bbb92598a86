#include "moco/active_learning.hpp"

#include <algorithm>
#include <chrono>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "moco/errors.hpp"
#include "moco/rng.hpp"

namespace moco {

namespace {

std::vector<ObjectiveVector> images_of(const Dataset& dataset, std::size_t end) {
  std::vector<ObjectiveVector> images;
  images.reserve(end);
  auto pairs = dataset.pairs();
  for (std::size_t i = 0; i < end; ++i) images.push_back(pairs[i].second);
  return images;
}

RoundMetrics metrics_row(const Dataset& dataset, int round, const ReferencePoint& ref) {
  RoundMetrics row;
  row.round = round;
  const std::size_t end = dataset.round_end(round);
  row.queries_with_init = static_cast<std::int64_t>(end);
  row.queries = static_cast<std::int64_t>(end - dataset.round_end(0));
  const auto images = images_of(dataset, end);
  row.hypervolume = hypervolume(images, ref);
  return row;
}

void fill_relative(std::vector<RoundMetrics>& metrics) {
  if (metrics.empty()) return;
  const double base = metrics.front().hypervolume;
  for (auto& row : metrics) {
    row.absolute_fallback = !(base > 0.0);
    row.relative_hypervolume = row.absolute_fallback ? row.hypervolume : row.hypervolume / base;
  }
}

}  // namespace

void Dataset::append(const Candidate& x, const ObjectiveVector& y) {
  if (contains(x)) throw ContractViolation("Dataset: candidate already evaluated");
  if (!pairs_.empty() && y.dim() != pairs_.front().second.dim())
    throw ContractViolation("Dataset: objective dimension changed");
  pairs_.emplace_back(x, y);
  members_.insert(x);
}

void Dataset::close_round() { round_end_.push_back(pairs_.size()); }

std::size_t Dataset::round_end(int r) const {
  if (r < 0 || r >= rounds()) throw ContractViolation("Dataset: round out of range");
  return round_end_[static_cast<std::size_t>(r)];
}

Dataset initial_dataset(const Oracle& oracle, std::span<const Candidate> xs) {
  if (!oracle) throw ContractViolation("initial_dataset: missing oracle");
  Dataset dataset;
  for (const Candidate& x : xs) {
    if (dataset.contains(x)) throw ContractViolation("initial_dataset: duplicate candidate");
    dataset.append(x, oracle(x));
  }
  dataset.close_round();
  return dataset;
}

ActiveLearningResult run_active_learning(const Oracle& oracle, const SequenceSpace& space,
                                         const ProposalStrategy& strategy,
                                         const ActiveLearningConfig& cfg, Dataset start,
                                         std::uint64_t master_seed) {
  if (!oracle) throw ContractViolation("run_active_learning: missing oracle");
  if (!strategy) throw ContractViolation("run_active_learning: missing strategy");
  if (cfg.rounds < 1) throw ConfigError("run_active_learning: rounds must be positive");
  if (cfg.batch_size < 1) throw ConfigError("run_active_learning: batch_size must be positive");
  const int m = cfg.ref.dim();
  if (m < 1) throw ConfigError("run_active_learning: reference point is empty");

  if (start.rounds() == 0) {
    if (start.size() > 0)
      throw ContractViolation("run_active_learning: initial pairs must be in a closed round");
    start.close_round();
  }
  const int total_rounds = cfg.rounds + 1;  // the initial round plus the proposal rounds
  if (start.rounds() > total_rounds)
    throw ConfigError("run_active_learning: dataset already has more rounds than configured");
  if (cfg.surrogate == SurrogateKind::kEnsemble && start.size() == 0)
    throw ConfigError("run_active_learning: ensemble surrogate needs a nonempty initial dataset");

  ActiveLearningResult result;
  result.dataset = std::move(start);
  Dataset& dataset = result.dataset;
  for (int r = 0; r < dataset.rounds(); ++r)
    result.metrics.push_back(metrics_row(dataset, r, cfg.ref));

  for (int r = dataset.rounds(); r < total_rounds; ++r) {
    const auto t0 = std::chrono::steady_clock::now();

    std::shared_ptr<const Surrogate> surrogate;
    if (cfg.surrogate == SurrogateKind::kEnsemble) {
      surrogate = std::make_shared<EnsembleSurrogate>(
          EnsembleSurrogate::fit(space, dataset.pairs(), cfg.ensemble,
                                 derive_seed(master_seed, static_cast<std::uint64_t>(r), "al-fit")));
    } else {
      surrogate = std::make_shared<DeterministicSurrogate>(oracle, m);
    }

    AcquisitionContext ctx;
    ctx.surrogate = surrogate;
    ctx.archive = FrontSet::of(images_of(dataset, dataset.size()));
    ctx.ref = cfg.ref;
    ctx.beta = cfg.beta;
    ctx.beta_feat = cfg.beta_feat;
    ctx.lambda = cfg.lambda;
    ctx.mode = cfg.lambda > 0.0 ? AcqMode::kDiversifiedGuide : AcqMode::kPlain;
    ctx.validate();

    const ProposalRequest req{ctx,
                              space,
                              cfg.batch_size,
                              r,
                              derive_seed(master_seed, static_cast<std::uint64_t>(r), "al-propose"),
                              dataset};
    const std::vector<Candidate> batch = strategy(req);
    if (static_cast<int>(batch.size()) > cfg.batch_size)
      throw ContractViolation("run_active_learning: strategy exceeded the batch size");

    std::vector<Candidate> kept;
    for (const Candidate& x : batch) {
      if (dataset.contains(x)) {
        result.warnings.push_back("round " + std::to_string(r) + ": '" +
                                  candidate_to_string(space, x) + "' already evaluated; skipped");
        continue;
      }
      if (std::find(kept.begin(), kept.end(), x) != kept.end()) {
        result.warnings.push_back("round " + std::to_string(r) + ": '" +
                                  candidate_to_string(space, x) +
                                  "' repeated within the batch; skipped");
        continue;
      }
      kept.push_back(x);
    }
    for (const Candidate& x : kept) {
      ObjectiveVector y = oracle(x);
      if (y.dim() != m) throw ContractViolation("run_active_learning: oracle dimension mismatch");
      dataset.append(x, y);
    }
    dataset.close_round();

    RoundMetrics row = metrics_row(dataset, r, cfg.ref);
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.metrics.push_back(row);
  }
  fill_relative(result.metrics);

  const auto images = images_of(dataset, dataset.size());
  const auto fronts = non_dominated_sort(images);
  if (!fronts.empty()) {
    auto pairs = dataset.pairs();
    for (int i : fronts.front()) result.pareto.push_back(pairs[static_cast<std::size_t>(i)]);
  }
  return result;
}

RelativeCurve relative_hypervolume(std::span<const RoundMetrics> metrics, int baseline_round) {
  if (metrics.empty()) throw ContractViolation("relative_hypervolume: no rounds");
  if (baseline_round < 0 || baseline_round >= static_cast<int>(metrics.size()))
    throw ContractViolation("relative_hypervolume: baseline round out of range");
  const double base = metrics[static_cast<std::size_t>(baseline_round)].hypervolume;
  RelativeCurve curve;
  curve.absolute_fallback = !(base > 0.0);
  curve.values.reserve(metrics.size());
  for (const auto& row : metrics)
    curve.values.push_back(curve.absolute_fallback ? row.hypervolume : row.hypervolume / base);
  return curve;
}

std::optional<std::int64_t> queries_to_target(std::span<const RoundMetrics> metrics,
                                              double target_hypervolume, bool count_initial) {
  for (const auto& row : metrics)
    if (row.hypervolume >= target_hypervolume)
      return count_initial ? row.queries_with_init : row.queries;
  return std::nullopt;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw ContractViolation("percentile: empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw ContractViolation("percentile: p out of range");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p / 100.0;
  const auto lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

void write_dataset_jsonl(const Dataset& dataset, const SequenceSpace& space, std::ostream& out) {
  auto pairs = dataset.pairs();
  std::size_t begin = 0;
  for (int r = 0; r < dataset.rounds(); ++r) {
    const std::size_t end = dataset.round_end(r);
    for (std::size_t i = begin; i < end; ++i) {
      const nlohmann::json rec = {{"round", r},
                                  {"candidate", candidate_to_string(space, pairs[i].first)},
                                  {"objective", pairs[i].second.values()}};
      out << rec.dump() << '\n';
    }
    begin = end;
  }
}

Dataset read_dataset_jsonl(const SequenceSpace& space, std::istream& in, int total_rounds) {
  Dataset dataset;
  int current_round = 0;
  int line_no = 0;
  bool any = false;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const nlohmann::json rec = nlohmann::json::parse(line);
      const int r = rec.at("round").get<int>();
      if (r < current_round || r < 0)
        throw ConfigError("dataset log: rounds out of order");
      while (current_round < r) {
        dataset.close_round();
        ++current_round;
      }
      const Candidate x = candidate_from_string(space, rec.at("candidate").get<std::string>());
      if (dataset.contains(x)) throw ConfigError("dataset log: duplicate candidate");
      dataset.append(x, ObjectiveVector(rec.at("objective").get<std::vector<double>>()));
      any = true;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("dataset log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (any) dataset.close_round();
  if (total_rounds >= 0) {
    if (dataset.rounds() > total_rounds)
      throw ConfigError("dataset log: more rounds than expected");
    while (dataset.rounds() < total_rounds) dataset.close_round();
  }
  return dataset;
}

}  // namespace moco
