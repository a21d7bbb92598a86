#ifndef MOCO_SURROGATE_HPP_
#define MOCO_SURROGATE_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "moco/pareto.hpp"
#include "moco/rng.hpp"
#include "moco/sequence.hpp"

namespace moco {

struct Prediction {
  ObjectiveVector mean;
  ObjectiveVector stddev;
};

// Candidate-to-objective predictor. Every predict() call counts one query;
// budget accounting across selection strategies reads query_count().
class Surrogate {
 public:
  virtual ~Surrogate() = default;

  Prediction predict(const Candidate& x) const {
    ++queries_;
    return do_predict(x);
  }

  virtual int num_objectives() const = 0;
  virtual bool is_deterministic() const = 0;

  int64_t query_count() const { return queries_; }
  void reset_query_count() const { queries_ = 0; }

 protected:
  virtual Prediction do_predict(const Candidate& x) const = 0;

 private:
  mutable int64_t queries_ = 0;
};

// Componentwise optimistic value: mean + beta * stddev.
ObjectiveVector ucb_vector(const Surrogate& surrogate, const Candidate& x, double beta);

// Wraps an exact objective; stddev is identically zero.
class DeterministicSurrogate : public Surrogate {
 public:
  DeterministicSurrogate(std::function<ObjectiveVector(const Candidate&)> fn, int num_objectives)
      : fn_(std::move(fn)), m_(num_objectives) {
    if (m_ < 1) throw ContractViolation("DeterministicSurrogate: bad dimension");
  }

  int num_objectives() const override { return m_; }
  bool is_deterministic() const override { return true; }

 protected:
  Prediction do_predict(const Candidate& x) const override;

 private:
  std::function<ObjectiveVector(const Candidate&)> fn_;
  int m_;
};

// Unigram and bigram counts, concatenated and scaled by 1 / max_len.
class KmerFeaturizer {
 public:
  explicit KmerFeaturizer(const SequenceSpace& space);

  int dim() const { return dim_; }
  Eigen::VectorXd features(const Candidate& x) const;

 private:
  int vocab_size_;
  int max_len_;
  int dim_;
};

// Single-hidden-layer tanh network trained with Adam on mean squared error.
class Mlp {
 public:
  Mlp(int in, int hidden, int out);

  void init(Rng& rng);
  Eigen::VectorXd predict(const Eigen::VectorXd& x) const;
  double mse(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys) const;
  // xs: in x n, ys: out x n.
  void train(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys, int epochs, double lr,
             int minibatch, Rng& rng);

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

 private:
  Eigen::MatrixXd w1_, w2_;
  Eigen::VectorXd b1_, b2_;
};

struct EnsembleConfig {
  int members = 5;
  int hidden = 32;
  int epochs = 200;
  double lr = 0.01;
  int minibatch = 32;
};

// Bootstrap ensemble of Mlp regressors over k-mer count features. The mean
// and the population standard deviation across members form the prediction.
class EnsembleSurrogate : public Surrogate {
 public:
  // Fitting is deterministic in (data order, cfg, seed): member k draws its
  // bootstrap resample, init and minibatch order from seed fanned out by k.
  static EnsembleSurrogate fit(const SequenceSpace& space,
                               std::span<const std::pair<Candidate, ObjectiveVector>> data,
                               const EnsembleConfig& cfg, uint64_t seed);

  int num_objectives() const override { return m_; }
  bool is_deterministic() const override { return false; }

  // Bootstrap-set MSE per member, recorded at init and after training.
  const std::vector<double>& initial_losses() const { return initial_losses_; }
  const std::vector<double>& final_losses() const { return final_losses_; }

  int num_members() const { return static_cast<int>(members_.size()); }
  // Raw per-member outputs; debugging aid, not counted as a query.
  std::vector<ObjectiveVector> member_means(const Candidate& x) const;

  nlohmann::json to_json() const;
  static EnsembleSurrogate from_json(const nlohmann::json& j);

 protected:
  Prediction do_predict(const Candidate& x) const override;

 private:
  EnsembleSurrogate(SequenceSpace space, int m);

  SequenceSpace space_;
  KmerFeaturizer featurizer_;
  int m_;
  std::vector<Mlp> members_;
  std::vector<double> initial_losses_;
  std::vector<double> final_losses_;
};

}  // namespace moco

#endif  // MOCO_SURROGATE_HPP_
