#include "moco/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "moco/errors.hpp"

namespace moco {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Slot {
  int offset = 0;
  int rows = 0;
  int cols = 0;
  bool zero_init = false;
};

Eigen::Map<const MatrixXd> cview(const VectorXd& flat, const Slot& s) {
  return Eigen::Map<const MatrixXd>(flat.data() + s.offset, s.rows, s.cols);
}

Eigen::Map<MatrixXd> mview(VectorXd& flat, const Slot& s) {
  return Eigen::Map<MatrixXd>(flat.data() + s.offset, s.rows, s.cols);
}

std::vector<bool> legality(const SequenceSpace& space, int length) {
  std::vector<bool> mask(static_cast<size_t>(space.vocab_size()) + 1, false);
  if (length < space.max_len()) {
    for (int t = 0; t < space.vocab_size(); ++t) mask[static_cast<size_t>(t)] = true;
  }
  if (length >= space.min_len()) mask[static_cast<size_t>(space.vocab_size())] = true;
  return mask;
}

// Log-softmax restricted to legal actions; illegal entries get -inf.
VectorXd masked_log_softmax(const VectorXd& logits, const std::vector<bool>& mask) {
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < logits.size(); ++a) {
    if (mask[static_cast<size_t>(a)]) best = std::max(best, logits[a]);
  }
  if (!std::isfinite(best)) throw ContractViolation("masked softmax: no legal action");
  double z = 0.0;
  for (int a = 0; a < logits.size(); ++a) {
    if (mask[static_cast<size_t>(a)]) z += std::exp(logits[a] - best);
  }
  const double lse = best + std::log(z);
  VectorXd out = VectorXd::Constant(logits.size(), -std::numeric_limits<double>::infinity());
  for (int a = 0; a < logits.size(); ++a) {
    if (mask[static_cast<size_t>(a)]) out[a] = logits[a] - lse;
  }
  return out;
}

}  // namespace

PreferenceCondition::PreferenceCondition(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) throw ContractViolation("PreferenceCondition: empty weights");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw ContractViolation("PreferenceCondition: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ContractViolation("PreferenceCondition: weights must sum to 1 within 1e-9");
}

double scalarize(std::span<const double> weights, const ObjectiveVector& y, Scalarization kind) {
  if (static_cast<int>(weights.size()) != y.dim())
    throw ContractViolation("scalarize: dimension mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ContractViolation("scalarize: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ContractViolation("scalarize: weights must sum to 1 within 1e-9");
  if (kind == Scalarization::kWeighted) {
    double acc = 0.0;
    for (int i = 0; i < y.dim(); ++i) acc += weights[static_cast<size_t>(i)] * y[i];
    return acc;
  }
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < y.dim(); ++i)
    worst = std::min(worst, weights[static_cast<size_t>(i)] * y[i]);
  return worst;
}

struct Policy::Impl {
  int V, A, E, Hs, Hc, Hd, m, q, Lmax, cond_dim, total;
  ConditioningKind kind;

  Slot etok, epos, w1s, b1s, w2s, b2s;     // state encoder
  Slot wa1, wb1, bb1, wa2, wb2, bb2, wa3, wb3, bb3, wh1, bh1, wh2, bh2;  // set encoder
  Slot wp1, bp1, wp2, bp2;                 // preference encoder
  Slot wd1, bd1, wd2, bd2;                 // decoder

  struct CondFwd {
    MatrixXd x0, y1, y2, y3;               // set path activations (cols = elements)
    std::vector<int> arg0, arg1, arg2, arg3;
    VectorXd xm0, xm1, xm2, g, th;
    VectorXd hc;                           // empty when cond_dim == 0
  };
  struct StateFwd {
    MatrixXd u, z;
    VectorXd in2, hs;
    int length = 0;
  };
  struct DecFwd {
    VectorXd in, hd, logits;
  };

  explicit Impl(const PolicyConfig& cfg) {
    V = cfg.space.vocab_size();
    A = V + 1;
    E = cfg.dims.embed;
    Hs = cfg.dims.state_hidden;
    Hc = cfg.dims.cond_hidden;
    Hd = cfg.dims.dec_hidden;
    m = cfg.feat_dim;
    q = m + 1;
    Lmax = cfg.space.max_len();
    kind = cfg.kind;
    cond_dim = (kind == ConditioningKind::kNone) ? 0 : Hc;
    if (E < 1 || Hs < 1 || Hc < 1 || Hd < 1 || m < 1)
      throw ContractViolation("Policy: bad dimensions");
    if (cfg.p_rand < 0.0 || cfg.p_rand >= 1.0)
      throw ContractViolation("Policy: p_rand must be in [0, 1)");

    total = 0;
    auto reg = [this](int rows, int cols, bool zero = false) {
      Slot s{total, rows, cols, zero};
      total += rows * cols;
      return s;
    };
    etok = reg(E, V);
    epos = reg(E, Lmax);
    w1s = reg(Hs, E);
    b1s = reg(Hs, 1);
    w2s = reg(Hs, Hs + V + 2);  // pooled features + last-token one-hot + length fraction
    b2s = reg(Hs, 1);
    if (kind == ConditioningKind::kSet) {
      wa1 = reg(Hc, q);
      wb1 = reg(Hc, q);
      bb1 = reg(Hc, 1);
      wa2 = reg(Hc, Hc);
      wb2 = reg(Hc, Hc);
      bb2 = reg(Hc, 1);
      wa3 = reg(Hc, Hc);
      wb3 = reg(Hc, Hc);
      bb3 = reg(Hc, 1);
      wh1 = reg(Hc, Hc);
      bh1 = reg(Hc, 1);
      wh2 = reg(Hc, Hc);
      bh2 = reg(Hc, 1);
    } else if (kind == ConditioningKind::kPreference) {
      wp1 = reg(Hc, m);
      bp1 = reg(Hc, 1);
      wp2 = reg(Hc, Hc);
      bp2 = reg(Hc, 1);
    }
    wd1 = reg(Hd, cond_dim + Hs);
    bd1 = reg(Hd, 1);
    wd2 = reg(A, Hd, true);
    bd2 = reg(A, 1, true);
  }

  void check_params(const PolicyParams& p) const {
    if (p.flat.size() != total) throw ContractViolation("Policy: parameter size mismatch");
  }

  static VectorXd rowwise_max(const MatrixXd& x, std::vector<int>& arg) {
    VectorXd out(x.rows());
    arg.resize(static_cast<size_t>(x.rows()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      Eigen::Index best = 0;
      double v = x(r, 0);
      for (Eigen::Index c = 1; c < x.cols(); ++c) {
        if (x(r, c) > v) {
          v = x(r, c);
          best = c;
        }
      }
      out[r] = v;
      arg[static_cast<size_t>(r)] = static_cast<int>(best);
    }
    return out;
  }

  MatrixXd cond_input(const SetCondition& cond) const {
    for (const auto& f : cond.features) {
      if (f.dim() != m) throw ContractViolation("SetCondition: feature dimension mismatch");
    }
    if (cond.features.empty()) {
      MatrixXd x = MatrixXd::Zero(q, 1);
      x(q - 1, 0) = 1.0;  // emptiness flag channel
      return x;
    }
    MatrixXd x = MatrixXd::Zero(q, static_cast<Eigen::Index>(cond.features.size()));
    for (size_t i = 0; i < cond.features.size(); ++i) {
      for (int d = 0; d < m; ++d) x(d, static_cast<Eigen::Index>(i)) = cond.features[i][d];
    }
    return x;
  }

  CondFwd cond_forward(const PolicyParams& p, const Condition& cond) const {
    CondFwd f;
    if (kind == ConditioningKind::kNone) {
      if (!std::holds_alternative<NoCondition>(cond))
        throw ContractViolation("Policy: expected NoCondition");
      return f;
    }
    if (kind == ConditioningKind::kSet) {
      const auto* sc = std::get_if<SetCondition>(&cond);
      if (!sc) throw ContractViolation("Policy: expected SetCondition");
      f.x0 = cond_input(*sc);
      f.xm0 = rowwise_max(f.x0, f.arg0);
      f.y1 = (((cview(p.flat, wa1) * f.x0).colwise() +
               (cview(p.flat, wb1) * f.xm0 + cview(p.flat, bb1).col(0)))
                  .array()
                  .tanh())
                 .matrix();
      f.xm1 = rowwise_max(f.y1, f.arg1);
      f.y2 = (((cview(p.flat, wa2) * f.y1).colwise() +
               (cview(p.flat, wb2) * f.xm1 + cview(p.flat, bb2).col(0)))
                  .array()
                  .tanh())
                 .matrix();
      f.xm2 = rowwise_max(f.y2, f.arg2);
      f.y3 = (((cview(p.flat, wa3) * f.y2).colwise() +
               (cview(p.flat, wb3) * f.xm2 + cview(p.flat, bb3).col(0)))
                  .array()
                  .tanh())
                 .matrix();
      f.g = rowwise_max(f.y3, f.arg3);
      f.th = (cview(p.flat, wh1) * f.g + cview(p.flat, bh1).col(0)).array().tanh();
      f.hc = cview(p.flat, wh2) * f.th + cview(p.flat, bh2).col(0);
      return f;
    }
    const auto* pc = std::get_if<PreferenceCondition>(&cond);
    if (!pc) throw ContractViolation("Policy: expected PreferenceCondition");
    if (static_cast<int>(pc->weights().size()) != m)
      throw ContractViolation("PreferenceCondition: dimension mismatch");
    VectorXd w(m);
    for (int i = 0; i < m; ++i) w[i] = pc->weights()[static_cast<size_t>(i)];
    f.g = w;
    f.th = (cview(p.flat, wp1) * w + cview(p.flat, bp1).col(0)).array().tanh();
    f.hc = cview(p.flat, wp2) * f.th + cview(p.flat, bp2).col(0);
    return f;
  }

  void cond_backward(const PolicyParams& p, const CondFwd& f, const VectorXd& d_hc,
                     VectorXd& grad) const {
    if (kind == ConditioningKind::kNone) return;
    if (kind == ConditioningKind::kPreference) {
      mview(grad, wp2) += d_hc * f.th.transpose();
      mview(grad, bp2).col(0) += d_hc;
      VectorXd dth = cview(p.flat, wp2).transpose() * d_hc;
      VectorXd dpre = dth.array() * (1.0 - f.th.array().square());
      mview(grad, wp1) += dpre * f.g.transpose();
      mview(grad, bp1).col(0) += dpre;
      return;
    }
    mview(grad, wh2) += d_hc * f.th.transpose();
    mview(grad, bh2).col(0) += d_hc;
    VectorXd dth = cview(p.flat, wh2).transpose() * d_hc;
    VectorXd dpre_h = dth.array() * (1.0 - f.th.array().square());
    mview(grad, wh1) += dpre_h * f.g.transpose();
    mview(grad, bh1).col(0) += dpre_h;
    VectorXd dg = cview(p.flat, wh1).transpose() * dpre_h;

    MatrixXd dy3 = MatrixXd::Zero(f.y3.rows(), f.y3.cols());
    for (Eigen::Index r = 0; r < dy3.rows(); ++r)
      dy3(r, f.arg3[static_cast<size_t>(r)]) += dg[r];

    auto layer_back = [&](const Slot& wa, const Slot& wb, const Slot& bb, const MatrixXd& x,
                          const VectorXd& xm, const std::vector<int>& argin, const MatrixXd& y,
                          const MatrixXd& dy) {
      MatrixXd dpre = dy.array() * (1.0 - y.array().square());
      mview(grad, wa) += dpre * x.transpose();
      const VectorXd dsum = dpre.rowwise().sum();
      mview(grad, wb) += dsum * xm.transpose();
      mview(grad, bb).col(0) += dsum;
      MatrixXd dx = cview(p.flat, wa).transpose() * dpre;
      const VectorXd dxm = cview(p.flat, wb).transpose() * dsum;
      for (Eigen::Index r = 0; r < dx.rows(); ++r)
        dx(r, argin[static_cast<size_t>(r)]) += dxm[r];
      return dx;
    };
    const MatrixXd dy2 = layer_back(wa3, wb3, bb3, f.y2, f.xm2, f.arg2, f.y3, dy3);
    const MatrixXd dy1 = layer_back(wa2, wb2, bb2, f.y1, f.xm1, f.arg1, f.y2, dy2);
    (void)layer_back(wa1, wb1, bb1, f.x0, f.xm0, f.arg0, f.y1, dy1);
  }

  StateFwd state_forward(const PolicyParams& p, const std::vector<uint8_t>& prefix) const {
    StateFwd f;
    f.length = static_cast<int>(prefix.size());
    const auto tok = cview(p.flat, etok);
    const auto pos = cview(p.flat, epos);
    VectorXd pool = VectorXd::Zero(Hs);
    if (f.length > 0) {
      f.u.resize(E, f.length);
      for (int j = 0; j < f.length; ++j) f.u.col(j) = tok.col(prefix[static_cast<size_t>(j)]) + pos.col(j);
      f.z = (((cview(p.flat, w1s) * f.u).colwise() + cview(p.flat, b1s).col(0)).array().tanh())
                .matrix();
      pool = f.z.rowwise().mean();
    }
    f.in2 = VectorXd::Zero(Hs + V + 2);
    f.in2.head(Hs) = pool;
    const int last = f.length > 0 ? static_cast<int>(prefix.back()) : V;
    f.in2[Hs + last] = 1.0;
    f.in2[Hs + V + 1] = static_cast<double>(f.length) / static_cast<double>(Lmax);
    f.hs = (cview(p.flat, w2s) * f.in2 + cview(p.flat, b2s).col(0)).array().tanh();
    return f;
  }

  void state_backward(const PolicyParams& p, const std::vector<uint8_t>& prefix,
                      const StateFwd& f, const VectorXd& d_hs, VectorXd& grad) const {
    VectorXd dpre2 = d_hs.array() * (1.0 - f.hs.array().square());
    mview(grad, w2s) += dpre2 * f.in2.transpose();
    mview(grad, b2s).col(0) += dpre2;
    if (f.length == 0) return;
    VectorXd d_pool = (cview(p.flat, w2s).transpose() * dpre2).head(Hs) /
                      static_cast<double>(f.length);
    MatrixXd dpre = (d_pool.replicate(1, f.length).array() * (1.0 - f.z.array().square()))
                        .matrix();
    mview(grad, w1s) += dpre * f.u.transpose();
    mview(grad, b1s).col(0) += dpre.rowwise().sum();
    const MatrixXd du = cview(p.flat, w1s).transpose() * dpre;
    auto g_tok = mview(grad, etok);
    auto g_pos = mview(grad, epos);
    for (int j = 0; j < f.length; ++j) {
      g_tok.col(prefix[static_cast<size_t>(j)]) += du.col(j);
      g_pos.col(j) += du.col(j);
    }
  }

  DecFwd dec_forward(const PolicyParams& p, const CondFwd& cf, const StateFwd& sf) const {
    DecFwd f;
    f.in = VectorXd::Zero(cond_dim + Hs);
    if (cond_dim > 0) f.in.head(cond_dim) = cf.hc;
    f.in.tail(Hs) = sf.hs;
    f.hd = (cview(p.flat, wd1) * f.in + cview(p.flat, bd1).col(0)).array().tanh();
    f.logits = cview(p.flat, wd2) * f.hd + cview(p.flat, bd2).col(0);
    return f;
  }

  // Returns d_in so the caller can split conditioning and state parts.
  VectorXd dec_backward(const PolicyParams& p, const DecFwd& f, const VectorXd& dlogits,
                        VectorXd& grad) const {
    mview(grad, wd2) += dlogits * f.hd.transpose();
    mview(grad, bd2).col(0) += dlogits;
    VectorXd dhd = cview(p.flat, wd2).transpose() * dlogits;
    VectorXd dpre = dhd.array() * (1.0 - f.hd.array().square());
    mview(grad, wd1) += dpre * f.in.transpose();
    mview(grad, bd1).col(0) += dpre;
    return cview(p.flat, wd1).transpose() * dpre;
  }
};

Policy::Policy(PolicyConfig config)
    : config_(std::move(config)), impl_(std::make_shared<Impl>(config_)) {}

int Policy::param_count() const { return impl_->total; }

PolicyParams Policy::init_params(Rng& rng) const {
  PolicyParams p;
  p.flat = VectorXd::Zero(impl_->total);
  const Slot* slots[] = {&impl_->etok, &impl_->epos, &impl_->w1s, &impl_->b1s, &impl_->w2s,
                         &impl_->b2s,  &impl_->wa1,  &impl_->wb1, &impl_->bb1, &impl_->wa2,
                         &impl_->wb2,  &impl_->bb2,  &impl_->wa3, &impl_->wb3, &impl_->bb3,
                         &impl_->wh1,  &impl_->bh1,  &impl_->wh2, &impl_->bh2, &impl_->wp1,
                         &impl_->bp1,  &impl_->wp2,  &impl_->bp2, &impl_->wd1, &impl_->bd1,
                         &impl_->wd2,  &impl_->bd2};
  for (const Slot* s : slots) {
    if (s->rows == 0 || s->zero_init) continue;
    for (int i = 0; i < s->rows * s->cols; ++i)
      p.flat[s->offset + i] = rng.uniform(-0.01, 0.01);
  }
  return p;
}

ActionDistribution Policy::action_distribution(const PolicyParams& params, const Condition& cond,
                                               const MdpState& state) const {
  impl_->check_params(params);
  if (state.terminal) throw ContractViolation("action_distribution: terminal state");
  const auto cf = impl_->cond_forward(params, cond);
  const auto sf = impl_->state_forward(params, state.prefix);
  const auto df = impl_->dec_forward(params, cf, sf);
  const auto mask = legality(config_.space, state.length());
  const VectorXd lsm = masked_log_softmax(df.logits, mask);

  int legal_count = 0;
  for (bool b : mask) legal_count += b ? 1 : 0;
  ActionDistribution dist;
  dist.probs.assign(static_cast<size_t>(impl_->A), 0.0);
  const double p_rand = config_.p_rand;
  for (int a = 0; a < impl_->A; ++a) {
    if (!mask[static_cast<size_t>(a)]) continue;
    dist.probs[static_cast<size_t>(a)] =
        (1.0 - p_rand) * std::exp(lsm[a]) + p_rand / static_cast<double>(legal_count);
  }
  return dist;
}

Trajectory Policy::sample_trajectory(const PolicyParams& params, const Condition& cond,
                                     Rng& rng) const {
  impl_->check_params(params);
  const auto cf = impl_->cond_forward(params, cond);
  Trajectory traj;
  MdpState state = mdp_initial_state();
  traj.states.push_back(state);
  while (!state.terminal) {
    const auto sf = impl_->state_forward(params, state.prefix);
    const auto df = impl_->dec_forward(params, cf, sf);
    const auto mask = legality(config_.space, state.length());
    const VectorXd lsm = masked_log_softmax(df.logits, mask);
    int legal_count = 0;
    for (bool b : mask) legal_count += b ? 1 : 0;
    std::vector<double> probs(static_cast<size_t>(impl_->A), 0.0);
    for (int a = 0; a < impl_->A; ++a) {
      if (!mask[static_cast<size_t>(a)]) continue;
      probs[static_cast<size_t>(a)] = (1.0 - config_.p_rand) * std::exp(lsm[a]) +
                                      config_.p_rand / static_cast<double>(legal_count);
    }
    const int action = rng.categorical(probs);
    traj.actions.push_back(action);
    traj.log_prob += lsm[action];
    state = mdp_step(config_.space, state, action);
    traj.states.push_back(state);
  }
  traj.result = candidate_of(state);
  return traj;
}

double Policy::log_prob(const PolicyParams& params, const Condition& cond,
                        const Trajectory& traj) const {
  impl_->check_params(params);
  const auto cf = impl_->cond_forward(params, cond);
  double lp = 0.0;
  MdpState state = mdp_initial_state();
  for (int action : traj.actions) {
    const auto sf = impl_->state_forward(params, state.prefix);
    const auto df = impl_->dec_forward(params, cf, sf);
    const auto mask = legality(config_.space, state.length());
    if (action < 0 || action >= impl_->A || !mask[static_cast<size_t>(action)])
      throw ContractViolation("log_prob: illegal action in trajectory");
    lp += masked_log_softmax(df.logits, mask)[action];
    state = mdp_step(config_.space, state, action);
  }
  if (!state.terminal) throw ContractViolation("log_prob: trajectory does not terminate");
  return lp;
}

double Policy::log_prob_and_grad(const PolicyParams& params, const Condition& cond,
                                 const Trajectory& traj, Eigen::VectorXd& grad) const {
  const Trajectory* trajs = &traj;
  const double one = 1.0;
  return weighted_logprob_grad(params, cond, std::span<const Trajectory>(trajs, 1),
                               std::span<const double>(&one, 1), grad);
}

double Policy::weighted_logprob_grad(const PolicyParams& params, const Condition& cond,
                                     std::span<const Trajectory> trajs,
                                     std::span<const double> coeffs,
                                     Eigen::VectorXd& grad) const {
  impl_->check_params(params);
  if (trajs.size() != coeffs.size())
    throw ContractViolation("weighted_logprob_grad: size mismatch");
  grad = VectorXd::Zero(impl_->total);
  const auto cf = impl_->cond_forward(params, cond);
  VectorXd d_hc_total = VectorXd::Zero(impl_->cond_dim);
  double total_lp = 0.0;

  for (size_t j = 0; j < trajs.size(); ++j) {
    const double coeff = coeffs[j];
    double lp = 0.0;
    MdpState state = mdp_initial_state();
    for (int action : trajs[j].actions) {
      const auto sf = impl_->state_forward(params, state.prefix);
      const auto df = impl_->dec_forward(params, cf, sf);
      const auto mask = legality(config_.space, state.length());
      if (action < 0 || action >= impl_->A || !mask[static_cast<size_t>(action)])
        throw ContractViolation("weighted_logprob_grad: illegal action in trajectory");
      const VectorXd lsm = masked_log_softmax(df.logits, mask);
      lp += lsm[action];

      VectorXd dlogits = VectorXd::Zero(impl_->A);
      for (int a = 0; a < impl_->A; ++a) {
        if (mask[static_cast<size_t>(a)]) dlogits[a] = -std::exp(lsm[a]);
      }
      dlogits[action] += 1.0;
      dlogits *= coeff;
      const VectorXd d_in = impl_->dec_backward(params, df, dlogits, grad);
      if (impl_->cond_dim > 0) d_hc_total += d_in.head(impl_->cond_dim);
      impl_->state_backward(params, state.prefix, sf, d_in.tail(impl_->Hs), grad);
      state = mdp_step(config_.space, state, action);
    }
    if (!state.terminal)
      throw ContractViolation("weighted_logprob_grad: trajectory does not terminate");
    total_lp += coeff * lp;
  }
  if (impl_->cond_dim > 0) impl_->cond_backward(params, cf, d_hc_total, grad);
  return total_lp;
}

}  // namespace moco
