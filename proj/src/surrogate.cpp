#include "moco/surrogate.hpp"

#include <algorithm>
#include <cmath>

namespace moco {
namespace {

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<int>(data.size()) != rows * cols)
    throw ConfigError("matrix_from_json: size mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = data[static_cast<size_t>(r * cols + c)];
  return m;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

}  // namespace

ObjectiveVector ucb_vector(const Surrogate& surrogate, const Candidate& x, double beta) {
  if (beta < 0.0) throw ContractViolation("ucb_vector: beta must be >= 0");
  const Prediction p = surrogate.predict(x);
  std::vector<double> v(static_cast<size_t>(p.mean.dim()));
  for (int i = 0; i < p.mean.dim(); ++i) v[static_cast<size_t>(i)] = p.mean[i] + beta * p.stddev[i];
  return ObjectiveVector(std::move(v));
}

Prediction DeterministicSurrogate::do_predict(const Candidate& x) const {
  ObjectiveVector mean = fn_(x);
  if (mean.dim() != m_) throw ContractViolation("DeterministicSurrogate: dimension mismatch");
  return {mean, ObjectiveVector(std::vector<double>(static_cast<size_t>(m_), 0.0))};
}

KmerFeaturizer::KmerFeaturizer(const SequenceSpace& space)
    : vocab_size_(space.vocab_size()),
      max_len_(space.max_len()),
      dim_(space.vocab_size() + space.vocab_size() * space.vocab_size()) {}

Eigen::VectorXd KmerFeaturizer::features(const Candidate& x) const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(dim_);
  const double scale = 1.0 / static_cast<double>(max_len_);
  for (size_t i = 0; i < x.tokens.size(); ++i) {
    f[x.tokens[i]] += scale;
    if (i + 1 < x.tokens.size())
      f[vocab_size_ + x.tokens[i] * vocab_size_ + x.tokens[i + 1]] += scale;
  }
  return f;
}

Mlp::Mlp(int in, int hidden, int out)
    : w1_(Eigen::MatrixXd::Zero(hidden, in)),
      w2_(Eigen::MatrixXd::Zero(out, hidden)),
      b1_(Eigen::VectorXd::Zero(hidden)),
      b2_(Eigen::VectorXd::Zero(out)) {
  if (in < 1 || hidden < 1 || out < 1) throw ContractViolation("Mlp: bad shape");
}

void Mlp::init(Rng& rng) {
  auto xavier = [&rng](Eigen::MatrixXd& w) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
  };
  xavier(w1_);
  xavier(w2_);
  b1_.setZero();
  b2_.setZero();
}

Eigen::VectorXd Mlp::predict(const Eigen::VectorXd& x) const {
  return w2_ * (w1_ * x + b1_).array().tanh().matrix() + b2_;
}

double Mlp::mse(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys) const {
  const Eigen::MatrixXd h = ((w1_ * xs).colwise() + b1_).array().tanh();
  const Eigen::MatrixXd pred = (w2_ * h).colwise() + b2_;
  return (pred - ys).squaredNorm() / static_cast<double>(ys.size());
}

void Mlp::train(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys, int epochs, double lr,
                int minibatch, Rng& rng) {
  const int n = static_cast<int>(xs.cols());
  if (n == 0 || epochs <= 0) return;
  minibatch = std::max(1, std::min(minibatch, n));

  Eigen::MatrixXd mw1 = Eigen::MatrixXd::Zero(w1_.rows(), w1_.cols());
  Eigen::MatrixXd vw1 = mw1, mw2 = Eigen::MatrixXd::Zero(w2_.rows(), w2_.cols()), vw2 = mw2;
  Eigen::VectorXd mb1 = Eigen::VectorXd::Zero(b1_.size()), vb1 = mb1;
  Eigen::VectorXd mb2 = Eigen::VectorXd::Zero(b2_.size()), vb2 = mb2;
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int64_t step = 0;

  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_index(i)]);
    for (int start = 0; start < n; start += minibatch) {
      const int b = std::min(minibatch, n - start);
      Eigen::MatrixXd xb(xs.rows(), b), yb(ys.rows(), b);
      for (int k = 0; k < b; ++k) {
        xb.col(k) = xs.col(order[static_cast<size_t>(start + k)]);
        yb.col(k) = ys.col(order[static_cast<size_t>(start + k)]);
      }
      const Eigen::MatrixXd h = ((w1_ * xb).colwise() + b1_).array().tanh();
      const Eigen::MatrixXd pred = (w2_ * h).colwise() + b2_;
      const Eigen::MatrixXd dout =
          2.0 * (pred - yb) / static_cast<double>(yb.size());
      const Eigen::MatrixXd dw2 = dout * h.transpose();
      const Eigen::VectorXd db2 = dout.rowwise().sum();
      const Eigen::MatrixXd dh =
          (w2_.transpose() * dout).array() * (1.0 - h.array().square());
      const Eigen::MatrixXd dw1 = dh * xb.transpose();
      const Eigen::VectorXd db1 = dh.rowwise().sum();

      ++step;
      const double corr =
          std::sqrt(1.0 - std::pow(beta2, static_cast<double>(step))) /
          (1.0 - std::pow(beta1, static_cast<double>(step)));
      auto adam = [&](auto& w, auto& mom, auto& vel, const auto& grad) {
        mom = beta1 * mom + (1.0 - beta1) * grad;
        vel = beta2 * vel + (1.0 - beta2) * grad.cwiseProduct(grad);
        w -= lr * corr * mom.cwiseQuotient((vel.cwiseSqrt().array() + eps).matrix());
      };
      adam(w1_, mw1, vw1, dw1);
      adam(w2_, mw2, vw2, dw2);
      adam(b1_, mb1, vb1, db1);
      adam(b2_, mb2, vb2, db2);
    }
  }
}

nlohmann::json Mlp::to_json() const {
  return {{"w1", matrix_to_json(w1_)},
          {"w2", matrix_to_json(w2_)},
          {"b1", matrix_to_json(b1_)},
          {"b2", matrix_to_json(b2_)}};
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  Eigen::MatrixXd w1 = matrix_from_json(j.at("w1"));
  Eigen::MatrixXd w2 = matrix_from_json(j.at("w2"));
  Mlp mlp(static_cast<int>(w1.cols()), static_cast<int>(w1.rows()),
          static_cast<int>(w2.rows()));
  mlp.w1_ = std::move(w1);
  mlp.w2_ = std::move(w2);
  mlp.b1_ = matrix_from_json(j.at("b1"));
  mlp.b2_ = matrix_from_json(j.at("b2"));
  return mlp;
}

EnsembleSurrogate::EnsembleSurrogate(SequenceSpace space, int m)
    : space_(std::move(space)), featurizer_(space_), m_(m) {}

EnsembleSurrogate EnsembleSurrogate::fit(
    const SequenceSpace& space, std::span<const std::pair<Candidate, ObjectiveVector>> data,
    const EnsembleConfig& cfg, uint64_t seed) {
  if (cfg.members < 2) throw ContractViolation("EnsembleSurrogate: need at least 2 members");
  if (data.empty()) throw ContractViolation("EnsembleSurrogate: empty training set");
  const int m = data.front().second.dim();
  for (const auto& [x, y] : data) {
    if (y.dim() != m) throw ContractViolation("EnsembleSurrogate: dimension mismatch");
  }

  EnsembleSurrogate ensemble(space, m);
  const int n = static_cast<int>(data.size());
  Eigen::MatrixXd feats(ensemble.featurizer_.dim(), n);
  Eigen::MatrixXd targets(m, n);
  for (int i = 0; i < n; ++i) {
    feats.col(i) = ensemble.featurizer_.features(data[static_cast<size_t>(i)].first);
    for (int d = 0; d < m; ++d) targets(d, i) = data[static_cast<size_t>(i)].second[d];
  }

  for (int k = 0; k < cfg.members; ++k) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(k), "ensemble-member"));
    Eigen::MatrixXd xb(feats.rows(), n), yb(m, n);
    for (int i = 0; i < n; ++i) {
      const auto j = rng.uniform_index(static_cast<uint64_t>(n));
      xb.col(i) = feats.col(static_cast<Eigen::Index>(j));
      yb.col(i) = targets.col(static_cast<Eigen::Index>(j));
    }
    Mlp member(ensemble.featurizer_.dim(), cfg.hidden, m);
    member.init(rng);
    ensemble.initial_losses_.push_back(member.mse(xb, yb));
    member.train(xb, yb, cfg.epochs, cfg.lr, cfg.minibatch, rng);
    ensemble.final_losses_.push_back(member.mse(xb, yb));
    ensemble.members_.push_back(std::move(member));
  }
  return ensemble;
}

std::vector<ObjectiveVector> EnsembleSurrogate::member_means(const Candidate& x) const {
  const Eigen::VectorXd f = featurizer_.features(x);
  std::vector<ObjectiveVector> out;
  for (const auto& member : members_) {
    const Eigen::VectorXd y = member.predict(f);
    out.emplace_back(std::vector<double>(y.data(), y.data() + y.size()));
  }
  return out;
}

Prediction EnsembleSurrogate::do_predict(const Candidate& x) const {
  const Eigen::VectorXd f = featurizer_.features(x);
  Eigen::MatrixXd outs(m_, static_cast<Eigen::Index>(members_.size()));
  for (size_t k = 0; k < members_.size(); ++k)
    outs.col(static_cast<Eigen::Index>(k)) = members_[k].predict(f);
  const Eigen::VectorXd mean = outs.rowwise().mean();
  std::vector<double> mean_v(static_cast<size_t>(m_)), std_v(static_cast<size_t>(m_));
  for (int d = 0; d < m_; ++d) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < outs.cols(); ++k) {
      const double diff = outs(d, k) - mean[d];
      acc += diff * diff;
    }
    mean_v[static_cast<size_t>(d)] = mean[d];
    std_v[static_cast<size_t>(d)] = std::sqrt(acc / static_cast<double>(outs.cols()));
  }
  return {ObjectiveVector(std::move(mean_v)), ObjectiveVector(std::move(std_v))};
}

nlohmann::json EnsembleSurrogate::to_json() const {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : members_) members.push_back(m.to_json());
  return {{"version", 1},
          {"kind", "ensemble"},
          {"vocab", space_.vocab()},
          {"min_len", space_.min_len()},
          {"max_len", space_.max_len()},
          {"objectives", m_},
          {"initial_losses", initial_losses_},
          {"final_losses", final_losses_},
          {"members", members}};
}

EnsembleSurrogate EnsembleSurrogate::from_json(const nlohmann::json& j) {
  if (j.at("version").get<int>() != 1 || j.at("kind").get<std::string>() != "ensemble")
    throw ConfigError("EnsembleSurrogate: unsupported checkpoint format");
  SequenceSpace space(j.at("vocab").get<std::string>(), j.at("min_len").get<int>(),
                      j.at("max_len").get<int>());
  EnsembleSurrogate ensemble(space, j.at("objectives").get<int>());
  for (const auto& mj : j.at("members")) ensemble.members_.push_back(Mlp::from_json(mj));
  if (ensemble.members_.size() < 2) throw ConfigError("EnsembleSurrogate: too few members");
  ensemble.initial_losses_ = j.at("initial_losses").get<std::vector<double>>();
  ensemble.final_losses_ = j.at("final_losses").get<std::vector<double>>();
  return ensemble;
}

}  // namespace moco
