#include "moco/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace moco {

SequenceSpace::SequenceSpace(std::string vocab, int min_len, int max_len)
    : vocab_(std::move(vocab)), min_len_(min_len), max_len_(max_len) {
  if (vocab_.empty()) throw ContractViolation("SequenceSpace: empty vocabulary");
  if (std::set<char>(vocab_.begin(), vocab_.end()).size() != vocab_.size())
    throw ContractViolation("SequenceSpace: duplicate letters in vocabulary");
  if (min_len_ < 1 || max_len_ < min_len_)
    throw ContractViolation("SequenceSpace: need 1 <= min_len <= max_len");
  if (vocab_.size() > 255) throw ContractViolation("SequenceSpace: vocabulary too large");
}

int SequenceSpace::token_of(char c) const {
  const auto pos = vocab_.find(c);
  if (pos == std::string::npos)
    throw ContractViolation(std::string("SequenceSpace: letter '") + c + "' not in vocabulary");
  return static_cast<int>(pos);
}

double SequenceSpace::size() const {
  double total = 0.0;
  for (int len = min_len_; len <= max_len_; ++len)
    total += std::pow(static_cast<double>(vocab_size()), len);
  return total;
}

std::string candidate_to_string(const SequenceSpace& space, const Candidate& x) {
  std::string s;
  s.reserve(x.tokens.size());
  for (uint8_t t : x.tokens) {
    if (t >= space.vocab_size()) throw ContractViolation("candidate_to_string: bad token");
    s.push_back(space.letter(t));
  }
  return s;
}

Candidate candidate_from_string(const SequenceSpace& space, const std::string& s) {
  Candidate x;
  x.tokens.reserve(s.size());
  for (char c : s) x.tokens.push_back(static_cast<uint8_t>(space.token_of(c)));
  return x;
}

int hamming(const Candidate& a, const Candidate& b) {
  const size_t shorter = std::min(a.tokens.size(), b.tokens.size());
  const size_t longer = std::max(a.tokens.size(), b.tokens.size());
  int distance = static_cast<int>(longer - shorter);
  for (size_t i = 0; i < shorter; ++i) {
    if (a.tokens[i] != b.tokens[i]) ++distance;
  }
  return distance;
}

BigramTask::BigramTask(SequenceSpace space, std::vector<std::string> targets)
    : space_(std::move(space)), target_strings_(std::move(targets)) {
  if (target_strings_.empty() || target_strings_.size() > 4)
    throw ContractViolation("BigramTask: need between 1 and 4 targets");
  if (space_.max_len() < 2) throw ContractViolation("BigramTask: max_len must be >= 2");
  std::set<std::string> seen;
  for (const auto& t : target_strings_) {
    if (t.size() != 2) throw ContractViolation("BigramTask: targets must have length 2");
    if (!seen.insert(t).second) throw ContractViolation("BigramTask: duplicate target");
    targets_.emplace_back(static_cast<uint8_t>(space_.token_of(t[0])),
                          static_cast<uint8_t>(space_.token_of(t[1])));
  }
}

ObjectiveVector BigramTask::objective(const Candidate& x) const {
  const double denom = static_cast<double>(space_.max_len() / 2);
  std::vector<double> vals(targets_.size(), 0.0);
  for (size_t k = 0; k < targets_.size(); ++k) {
    int count = 0;
    for (size_t j = 0; j + 1 < x.tokens.size(); ++j) {
      if (x.tokens[j] == targets_[k].first && x.tokens[j + 1] == targets_[k].second) ++count;
    }
    vals[k] = static_cast<double>(count) / denom;
  }
  return ObjectiveVector(std::move(vals));
}

MdpState mdp_initial_state() { return MdpState{}; }

std::vector<bool> legal_actions(const SequenceSpace& space, const MdpState& state) {
  if (state.terminal) throw ContractViolation("legal_actions: state is terminal");
  std::vector<bool> mask(static_cast<size_t>(num_actions(space)), false);
  if (state.length() < space.max_len()) {
    for (int t = 0; t < space.vocab_size(); ++t) mask[static_cast<size_t>(t)] = true;
  }
  if (state.length() >= space.min_len())
    mask[static_cast<size_t>(terminate_action(space))] = true;
  return mask;
}

MdpState mdp_step(const SequenceSpace& space, const MdpState& state, int action) {
  if (state.terminal) throw ContractViolation("mdp_step: state is terminal");
  if (action < 0 || action >= num_actions(space))
    throw ContractViolation("mdp_step: action out of range");
  MdpState next = state;
  if (action == terminate_action(space)) {
    if (state.length() < space.min_len())
      throw ContractViolation("mdp_step: terminate is masked below min_len");
    next.terminal = true;
    return next;
  }
  if (state.length() >= space.max_len())
    throw ContractViolation("mdp_step: cannot append at max_len");
  next.prefix.push_back(static_cast<uint8_t>(action));
  if (next.length() == space.max_len()) next.terminal = true;
  return next;
}

Candidate candidate_of(const MdpState& state) {
  if (!state.terminal) throw ContractViolation("candidate_of: state is not terminal");
  return Candidate{state.prefix};
}

void for_each_candidate(const SequenceSpace& space, int64_t cap,
                        const std::function<bool(const Candidate&)>& fn) {
  const double total = space.size();
  if (total > static_cast<double>(cap)) {
    throw ResourceCapExceeded("for_each_candidate: space has " + std::to_string(total) +
                              " sequences, cap is " + std::to_string(cap));
  }
  Candidate x;
  for (int len = space.min_len(); len <= space.max_len(); ++len) {
    x.tokens.assign(static_cast<size_t>(len), 0);
    for (;;) {
      if (!fn(x)) return;
      // Odometer increment, most significant position first.
      int pos = len - 1;
      while (pos >= 0) {
        if (x.tokens[static_cast<size_t>(pos)] + 1 < space.vocab_size()) {
          ++x.tokens[static_cast<size_t>(pos)];
          break;
        }
        x.tokens[static_cast<size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
  }
}

std::vector<Candidate> enumerate_space(const SequenceSpace& space, int64_t cap) {
  std::vector<Candidate> out;
  out.reserve(static_cast<size_t>(std::min(space.size(), static_cast<double>(cap))));
  for_each_candidate(space, cap, [&](const Candidate& x) {
    out.push_back(x);
    return true;
  });
  return out;
}

Candidate uniform_candidate(const SequenceSpace& space, Rng& rng) {
  std::vector<double> weights;
  for (int len = space.min_len(); len <= space.max_len(); ++len)
    weights.push_back(std::pow(static_cast<double>(space.vocab_size()), len));
  const int len = space.min_len() + rng.categorical(weights);
  Candidate x;
  x.tokens.resize(static_cast<size_t>(len));
  for (auto& t : x.tokens)
    t = static_cast<uint8_t>(rng.uniform_index(static_cast<uint64_t>(space.vocab_size())));
  return x;
}

}  // namespace moco
