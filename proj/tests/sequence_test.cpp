#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>
#include <string>
#include <vector>

#include "moco/sequence.hpp"

using moco::BigramTask;
using moco::Candidate;
using moco::MdpState;
using moco::Rng;
using moco::SequenceSpace;

namespace {

// Oracle: count occurrences of a two-letter pattern in the rendered string.
int count_occurrences(const std::string& s, const std::string& pat) {
  int count = 0;
  for (size_t i = 0; i + pat.size() <= s.size(); ++i) {
    if (s.compare(i, pat.size(), pat) == 0) ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("space validation") {
  CHECK_THROWS_AS(SequenceSpace("", 1, 2), moco::ContractViolation);
  CHECK_THROWS_AS(SequenceSpace("AAB", 1, 2), moco::ContractViolation);
  CHECK_THROWS_AS(SequenceSpace("AB", 0, 2), moco::ContractViolation);
  CHECK_THROWS_AS(SequenceSpace("AB", 3, 2), moco::ContractViolation);
  SequenceSpace space("ABCD", 2, 5);
  CHECK(space.vocab_size() == 4);
  CHECK(space.token_of('C') == 2);
  CHECK_THROWS_AS(space.token_of('Z'), moco::ContractViolation);
}

TEST_CASE("round trip through strings") {
  SequenceSpace space("AVCW", 2, 6);
  auto x = moco::candidate_from_string(space, "AVVC");
  CHECK(x.tokens == std::vector<uint8_t>{0, 1, 1, 2});
  CHECK(moco::candidate_to_string(space, x) == "AVVC");
}

TEST_CASE("hamming distance pads the shorter sequence") {
  SequenceSpace space("ABC", 1, 4);
  auto d = [&](const std::string& a, const std::string& b) {
    return moco::hamming(moco::candidate_from_string(space, a),
                         moco::candidate_from_string(space, b));
  };
  CHECK(d("AB", "AB") == 0);
  CHECK(d("AB", "ABC") == 1);
  CHECK(d("ABC", "AB") == 1);
  CHECK(d("ABC", "ABA") == 1);
  CHECK(d("A", "BCA") == 3);
  CHECK(d("AAAA", "AAAA") == 0);
}

TEST_CASE("bigram objective matches the string-count oracle") {
  SequenceSpace space("ABCD", 2, 4);
  BigramTask task(space, {"AB", "BC"});
  auto x = moco::candidate_from_string(space, "ABCA");
  auto y = task.objective(x);
  CHECK(y[0] == 0.5);
  CHECK(y[1] == 0.5);

  Rng rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    auto c = moco::uniform_candidate(space, rng);
    auto obj = task.objective(c);
    const std::string s = moco::candidate_to_string(space, c);
    CHECK(obj[0] == doctest::Approx(count_occurrences(s, "AB") / 2.0));
    CHECK(obj[1] == doctest::Approx(count_occurrences(s, "BC") / 2.0));
  }
}

TEST_CASE("overlapping matches count individually") {
  SequenceSpace space("AV", 6, 6);
  BigramTask task(space, {"AV", "VA"});
  auto x = moco::candidate_from_string(space, "AVAVAV");
  auto y = task.objective(x);
  CHECK(y[0] == doctest::Approx(3.0 / 3.0));
  CHECK(y[1] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("bigram task validation") {
  SequenceSpace space("ABCD", 2, 4);
  CHECK_THROWS_AS(BigramTask(space, {}), moco::ContractViolation);
  CHECK_THROWS_AS(BigramTask(space, {"ABC"}), moco::ContractViolation);
  CHECK_THROWS_AS(BigramTask(space, {"AB", "AB"}), moco::ContractViolation);
  CHECK_THROWS_AS(BigramTask(space, {"AZ"}), moco::ContractViolation);
  CHECK_THROWS_AS(BigramTask(space, {"AB", "BC", "CD", "DA", "AC"}), moco::ContractViolation);
}

TEST_CASE("appending mdp transitions") {
  SequenceSpace space("AB", 2, 3);
  auto s0 = moco::mdp_initial_state();
  CHECK(s0.length() == 0);
  CHECK_FALSE(s0.terminal);

  auto mask0 = moco::legal_actions(space, s0);
  CHECK(mask0 == std::vector<bool>{true, true, false});  // terminate masked below min_len

  auto s1 = moco::mdp_step(space, s0, 0);
  auto s2 = moco::mdp_step(space, s1, 1);
  CHECK(s2.length() == 2);
  CHECK_FALSE(s2.terminal);
  auto mask2 = moco::legal_actions(space, s2);
  CHECK(mask2 == std::vector<bool>{true, true, true});

  SUBCASE("explicit terminate") {
    auto t = moco::mdp_step(space, s2, moco::terminate_action(space));
    CHECK(t.terminal);
    CHECK(moco::candidate_of(t).tokens == std::vector<uint8_t>{0, 1});
    CHECK_THROWS_AS(moco::mdp_step(space, t, 0), moco::ContractViolation);
    CHECK_THROWS_AS(moco::legal_actions(space, t), moco::ContractViolation);
  }
  SUBCASE("reaching max_len terminates automatically") {
    auto t = moco::mdp_step(space, s2, 0);
    CHECK(t.length() == 3);
    CHECK(t.terminal);
    CHECK_THROWS_AS(moco::mdp_step(space, t, moco::terminate_action(space)),
                    moco::ContractViolation);
  }
  SUBCASE("masked terminate throws") {
    CHECK_THROWS_AS(moco::mdp_step(space, s1, moco::terminate_action(space)),
                    moco::ContractViolation);
  }
  CHECK_THROWS_AS(moco::candidate_of(s2), moco::ContractViolation);
}

TEST_CASE("every rollout terminates within max_len + 1 steps with a valid length") {
  SequenceSpace space("ABC", 2, 5);
  Rng rng(13);
  for (int rep = 0; rep < 300; ++rep) {
    auto s = moco::mdp_initial_state();
    int steps = 0;
    while (!s.terminal) {
      auto mask = moco::legal_actions(space, s);
      std::vector<int> legal;
      for (int a = 0; a < moco::num_actions(space); ++a) {
        if (mask[static_cast<size_t>(a)]) legal.push_back(a);
      }
      REQUIRE(!legal.empty());
      s = moco::mdp_step(space, s, legal[rng.uniform_index(legal.size())]);
      ++steps;
      REQUIRE(steps <= space.max_len() + 1);
    }
    auto x = moco::candidate_of(s);
    CHECK(x.length() >= space.min_len());
    CHECK(x.length() <= space.max_len());
  }
}

TEST_CASE("enumeration is exhaustive, ordered, duplicate free") {
  SequenceSpace space("AB", 1, 2);
  auto all = moco::enumerate_space(space);
  REQUIRE(all.size() == 6);
  std::vector<std::string> rendered;
  for (const auto& x : all) rendered.push_back(moco::candidate_to_string(space, x));
  CHECK(rendered == std::vector<std::string>{"A", "B", "AA", "AB", "BA", "BB"});

  SequenceSpace space3("ABC", 3, 3);
  auto all3 = moco::enumerate_space(space3);
  CHECK(all3.size() == 27);
  std::set<Candidate> uniq(all3.begin(), all3.end());
  CHECK(uniq.size() == 27);
  for (size_t i = 1; i < all3.size(); ++i) CHECK(all3[i - 1] < all3[i]);
}

TEST_CASE("enumeration refuses spaces beyond the cap with a size estimate") {
  SequenceSpace space("ABCDEFGHIJKLMNOPQRST", 32, 36);
  CHECK(space.size() > 1e40);
  CHECK_THROWS_AS(moco::enumerate_space(space), moco::ResourceCapExceeded);
  try {
    moco::enumerate_space(space);
  } catch (const moco::ResourceCapExceeded& e) {
    CHECK(std::string(e.what()).find("cap") != std::string::npos);
  }
}

TEST_CASE("uniform_candidate covers the space uniformly") {
  SequenceSpace space("AB", 1, 2);
  Rng rng(17);
  std::map<std::string, int> freq;
  const int n = 60000;
  for (int i = 0; i < n; ++i)
    ++freq[moco::candidate_to_string(space, moco::uniform_candidate(space, rng))];
  CHECK(freq.size() == 6);
  for (const auto& [s, count] : freq) {
    const double p = static_cast<double>(count) / n;
    CHECK(p == doctest::Approx(1.0 / 6.0).epsilon(0.08));
  }
}
