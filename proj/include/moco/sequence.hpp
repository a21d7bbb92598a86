#ifndef MOCO_SEQUENCE_HPP_
#define MOCO_SEQUENCE_HPP_

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "moco/pareto.hpp"
#include "moco/rng.hpp"

namespace moco {

// Token sequences over a finite alphabet with bounded length.
class SequenceSpace {
 public:
  SequenceSpace(std::string vocab, int min_len, int max_len);

  int vocab_size() const { return static_cast<int>(vocab_.size()); }
  int min_len() const { return min_len_; }
  int max_len() const { return max_len_; }
  const std::string& vocab() const { return vocab_; }
  char letter(int token) const { return vocab_[static_cast<size_t>(token)]; }
  int token_of(char c) const;

  // Number of sequences; exact as long as it fits a double mantissa.
  double size() const;

 private:
  std::string vocab_;
  int min_len_ = 0;
  int max_len_ = 0;
};

struct Candidate {
  std::vector<uint8_t> tokens;

  int length() const { return static_cast<int>(tokens.size()); }
  bool operator==(const Candidate&) const = default;
  // Length-major lexicographic: matches enumeration order.
  bool operator<(const Candidate& o) const {
    if (tokens.size() != o.tokens.size()) return tokens.size() < o.tokens.size();
    return tokens < o.tokens;
  }
};

std::string candidate_to_string(const SequenceSpace& space, const Candidate& x);
Candidate candidate_from_string(const SequenceSpace& space, const std::string& s);

// Hamming distance; the shorter sequence is right-padded with a symbol
// outside the alphabet, so every overhang position counts as a mismatch.
int hamming(const Candidate& a, const Candidate& b);

// Multi-objective sequence scoring: component i counts sliding-window
// occurrences of the i-th two-token target, normalized by floor(max_len / 2).
class BigramTask {
 public:
  BigramTask(SequenceSpace space, std::vector<std::string> targets);

  const SequenceSpace& space() const { return space_; }
  int num_objectives() const { return static_cast<int>(targets_.size()); }
  const std::vector<std::string>& target_strings() const { return target_strings_; }

  ObjectiveVector objective(const Candidate& x) const;

 private:
  SequenceSpace space_;
  std::vector<std::pair<uint8_t, uint8_t>> targets_;
  std::vector<std::string> target_strings_;
};

// Appending MDP over a sequence space. Actions 0..V-1 append a token; action
// V terminates. Termination is masked below min_len; reaching max_len
// terminates automatically.
struct MdpState {
  std::vector<uint8_t> prefix;
  bool terminal = false;

  int length() const { return static_cast<int>(prefix.size()); }
};

inline int terminate_action(const SequenceSpace& space) { return space.vocab_size(); }
inline int num_actions(const SequenceSpace& space) { return space.vocab_size() + 1; }

MdpState mdp_initial_state();

// Legality mask over the V+1 actions for a non-terminal state.
std::vector<bool> legal_actions(const SequenceSpace& space, const MdpState& state);

// Applies one action. Stepping a terminal state or taking a masked action is
// a contract violation.
MdpState mdp_step(const SequenceSpace& space, const MdpState& state, int action);

Candidate candidate_of(const MdpState& state);

// Visits every sequence in deterministic order (shorter lengths first,
// lexicographic within a length). Refuses spaces larger than cap. The visitor
// returns false to stop early.
void for_each_candidate(const SequenceSpace& space, int64_t cap,
                        const std::function<bool(const Candidate&)>& fn);

std::vector<Candidate> enumerate_space(const SequenceSpace& space, int64_t cap = 10000000);

// Uniform draw over the whole space (lengths weighted by their counts).
Candidate uniform_candidate(const SequenceSpace& space, Rng& rng);

}  // namespace moco

#endif  // MOCO_SEQUENCE_HPP_
