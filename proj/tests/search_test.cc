// Copyright 2026 The AVSR Kit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "avsr/objectives/losses.h"
#include "avsr/search/beam_search.h"
#include "test_util.h"

using namespace avsr;
using avsr::testing::Rand;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

Tensor LogNormalizeRows(const Tensor& x) {
  Tape tape(false);
  return ops::LogSoftmax(tape.Constant(x), 1).value();
}

double CtcFull(const Tensor& lp, const std::vector<int>& target) {
  Tape tape(false);
  return CtcLogLikelihood(tape.Constant(lp), target).value().item();
}

// Deterministic pseudo-decoder: a log-distribution over all ids seeded by
// the prefix contents.
AttentionScorer RandomAttention(const Vocabulary& vocab, uint64_t seed, double spread = 2.0) {
  return [&vocab, seed, spread](const std::vector<int>& prefix) {
    uint64_t h = seed;
    for (int id : prefix) h = h * 1000003u + static_cast<uint64_t>(id) + 1;
    Rng rng(h);
    std::uniform_real_distribution<double> d(-spread, spread);
    std::vector<double> z(static_cast<size_t>(vocab.size()));
    double mx = kNegInf;
    for (double& v : z) {
      v = d(rng);
      mx = std::max(mx, v);
    }
    double s = 0.0;
    for (double v : z) s += std::exp(v - mx);
    for (double& v : z) v -= mx + std::log(s);
    return z;
  };
}

// A bigram-style LM with random but fixed next-token tables.
class RandomLM : public LanguageModel {
 public:
  RandomLM(const Vocabulary& v, uint64_t seed) : LanguageModel(v), seed_(seed) {}
  std::vector<double> NextLogProbs(const LmState& state) const override {
    const int prev = state.empty() ? 0 : state.back();
    Rng rng(seed_ * 31 + static_cast<uint64_t>(prev));
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    std::vector<double> lp(static_cast<size_t>(vocab().size()), kNegInf);
    double s = 0.0;
    for (int id = 1; id <= vocab().eos(); ++id) {
      if (id == vocab().sos()) continue;
      lp[id] = d(rng);
      s += std::exp(lp[id]);
    }
    for (double& v : lp) v -= std::log(s);
    return lp;
  }

 private:
  uint64_t seed_;
};

}  // namespace

// ---------------------------------------------------------------------------
// CTC prefix scoring

TEST(CtcPrefixTest, AllBlankLatticeStops) {
  Tensor lp({4, 3}, {0, -1e9, -1e9, 0, -1e9, -1e9, 0, -1e9, -1e9, 0, -1e9, -1e9});
  CtcPrefixScorer scorer(lp);
  CtcPrefixState empty = scorer.Initial();
  EXPECT_NEAR(std::exp(scorer.Stop(empty)), 1.0, 1e-12);
  for (int c = 1; c <= 2; ++c) EXPECT_LT(std::exp(scorer.Extend(empty, c).score), 1e-8);
}

TEST(CtcPrefixTest, ProbabilityIsConservedAcrossChildren) {
  for (int trial = 0; trial < 20; ++trial) {
    Tensor lp = LogNormalizeRows(Rand({3, 4}, 10 + trial, -2, 2));
    CtcPrefixScorer scorer(lp);
    std::vector<std::pair<CtcPrefixState, int>> frontier = {{scorer.Initial(), 0}};
    while (!frontier.empty()) {
      auto [g, depth] = frontier.back();
      frontier.pop_back();
      double sum = scorer.Stop(g);
      for (int c = 1; c < 4; ++c) {
        CtcPrefixState h = scorer.Extend(g, c);
        sum = LogAdd(sum, h.score);
        EXPECT_LE(h.score, g.score + 1e-12);
        if (depth < 3) frontier.push_back({h, depth + 1});
      }
      if (g.score > -1e300) {
        EXPECT_NEAR(std::exp(sum), std::exp(g.score), 1e-9);
      }
    }
  }
}

TEST(CtcPrefixTest, StopMatchesSequenceLikelihood) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const int64_t T = 2 + rng() % 6;
    Tensor lp = LogNormalizeRows(Rand({T, 4}, 50 + trial, -2, 2));
    CtcPrefixScorer scorer(lp);
    std::vector<int> seq;
    CtcPrefixState st = scorer.Initial();
    const int L = static_cast<int>(rng() % 4);
    for (int i = 0; i < L; ++i) {
      seq.push_back(1 + static_cast<int>(rng() % 3));
      st = scorer.Extend(st, seq.back());
    }
    const double full = CtcFull(lp, seq);
    if (std::isinf(full)) {
      EXPECT_TRUE(std::isinf(scorer.Stop(st)));
    } else {
      EXPECT_NEAR(scorer.Stop(st), full, 1e-10);
    }
  }
}

// ---------------------------------------------------------------------------
// Language models

TEST(LanguageModelTest, UniformScores) {
  Vocabulary v("abc");
  UniformLM lm(v);
  LmState next;
  EXPECT_NEAR(lm.Score({}, 1, &next), std::log(1.0 / 4.0), 1e-15);
  EXPECT_EQ(next, (LmState{1}));
  EXPECT_NEAR(lm.Score({1, 2}, v.eos(), nullptr), std::log(0.25), 1e-15);
  EXPECT_THROW(lm.Score({}, v.blank(), nullptr), ContractError);
  EXPECT_THROW(lm.Score({}, v.sos(), nullptr), ContractError);
  EXPECT_THROW(lm.Score({1, v.eos()}, 1, nullptr), ContractError);
}

TEST(LanguageModelTest, TinyLmNormalizesAndIsPure) {
  Vocabulary v("abcd");
  Rng rng(4);
  TinyTransformerLM lm(v, TinyLmConfig{}, rng);
  for (const LmState& st : {LmState{}, LmState{1, 3}, LmState{2, 2, 4}}) {
    std::vector<double> lp = lm.NextLogProbs(st);
    double s = 0.0;
    for (double x : lp) s += std::exp(x);
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_EQ(lp[v.blank()], kNegInf);
    EXPECT_EQ(lp[v.pad()], kNegInf);
    EXPECT_EQ(lm.NextLogProbs(st), lp);
  }
}

// ---------------------------------------------------------------------------
// Beam search

class BeamSearchTest : public ::testing::Test {
 protected:
  BeamSearchTest() : vocab_("abc") {}
  Tensor Lattice(int64_t T, uint64_t seed) const {
    return LogNormalizeRows(Rand({T, vocab_.num_chars() + 1}, seed, -3, 3));
  }
  Vocabulary vocab_;
};

TEST_F(BeamSearchTest, ScoreDecompositionHolds) {
  Tensor lp = Lattice(6, 1);
  RandomLM lm(vocab_, 2);
  DecodeConfig cfg;
  cfg.beam = 4;
  DecodeResult r = BeamSearch(RandomAttention(vocab_, 3), lp, 6, cfg, vocab_, &lm);
  ASSERT_FALSE(r.nbest.empty());
  EXPECT_FALSE(r.unterminated);
  std::set<std::vector<int>> seen;
  for (const BeamHypothesis& h : r.nbest) {
    EXPECT_NEAR(h.total, 0.1 * h.ctc_score + 0.9 * h.att_score + 0.6 * h.lm_score, 1e-9);
    EXPECT_EQ(h.tokens.front(), vocab_.sos());
    EXPECT_EQ(h.tokens.back(), vocab_.eos());
    EXPECT_NEAR(h.ctc_score, CtcFull(lp, h.Characters(vocab_)), 1e-9);
    EXPECT_TRUE(seen.insert(h.tokens).second);
  }
}

TEST_F(BeamSearchTest, BeamOneEqualsGreedy) {
  RandomLM lm(vocab_, 5);
  DecodeConfig cfg;
  cfg.beam = 1;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Tensor lp = Lattice(7, 100 + seed);
    AttentionScorer att = RandomAttention(vocab_, 200 + seed);
    DecodeResult b = BeamSearch(att, lp, 7, cfg, vocab_, &lm);
    DecodeResult g = GreedySearch(att, lp, 7, cfg, vocab_, &lm);
    ASSERT_EQ(b.nbest.size(), 1u);
    EXPECT_EQ(b.nbest[0].tokens, g.nbest[0].tokens);
    EXPECT_EQ(b.nbest[0].total, g.nbest[0].total);
  }
}

TEST_F(BeamSearchTest, NoCtcNoLmMatchesAttentionOnlySearch) {
  DecodeConfig cfg;
  cfg.ctc_weight = 0.0;
  cfg.lm_weight = 0.0;
  for (int beam : {1, 3, 10}) {
    cfg.beam = beam;
    for (uint64_t seed = 0; seed < 8; ++seed) {
      AttentionScorer att = RandomAttention(vocab_, 300 + seed, 1.0);
      DecodeResult fused = BeamSearch(att, Tensor(), 5, cfg, vocab_, nullptr);
      DecodeResult plain = AttentionBeamSearch(att, 5, cfg, vocab_);
      EXPECT_EQ(fused.nbest[0].tokens, plain.nbest[0].tokens);
      EXPECT_NEAR(fused.nbest[0].final_score, plain.nbest[0].final_score, 1e-12);
    }
  }
}

TEST_F(BeamSearchTest, ZeroLmWeightIgnoresTheLm) {
  DecodeConfig cfg;
  cfg.lm_weight = 0.0;
  Tensor lp = Lattice(6, 7);
  AttentionScorer att = RandomAttention(vocab_, 8);
  RandomLM lm1(vocab_, 1), lm2(vocab_, 99);
  UniformLM lm3(vocab_);
  const auto a = BeamSearch(att, lp, 6, cfg, vocab_, &lm1);
  const auto b = BeamSearch(att, lp, 6, cfg, vocab_, &lm2);
  const auto c = BeamSearch(att, lp, 6, cfg, vocab_, &lm3);
  const auto d = BeamSearch(att, lp, 6, cfg, vocab_, nullptr);
  EXPECT_EQ(FormatNbest(a, cfg, vocab_), FormatNbest(b, cfg, vocab_));
  EXPECT_EQ(FormatNbest(a, cfg, vocab_), FormatNbest(c, cfg, vocab_));
  EXPECT_EQ(FormatNbest(a, cfg, vocab_), FormatNbest(d, cfg, vocab_));
}

TEST_F(BeamSearchTest, ExhaustiveEquivalence) {
  const Vocabulary small("ab");
  for (uint64_t seed = 0; seed < 12; ++seed) {
    const int64_t T = 4;
    Tensor lp = LogNormalizeRows(Rand({T, 3}, 400 + seed, -2, 2));
    AttentionScorer att = RandomAttention(small, 500 + seed);
    RandomLM lm(small, 600 + seed);
    DecodeConfig cfg;
    cfg.beam = 1000;
    cfg.max_len_ratio = 1.0;  // max length 4
    // Score every terminated sequence of length 0..4 directly.
    double best = kNegInf;
    std::vector<int> best_seq;
    std::function<void(std::vector<int>&)> visit = [&](std::vector<int>& seq) {
      std::vector<int> prefix = {small.sos()};
      double a = 0.0, l = 0.0;
      LmState st;
      for (int id : seq) {
        a += att(prefix)[id];
        l += lm.Score(st, id, &st);
        prefix.push_back(id);
      }
      a += att(prefix)[small.eos()];
      l += lm.Score(st, small.eos(), nullptr);
      const double c = CtcFull(lp, seq);
      const double total = 0.1 * c + 0.9 * a + 0.6 * l;
      const double score = total / static_cast<double>(seq.size() + 1);
      if (std::isfinite(score) && (score > best || (score == best && seq < best_seq))) {
        best = score;
        best_seq = seq;
      }
      if (seq.size() < 4) {
        for (int id = 1; id <= 2; ++id) {
          seq.push_back(id);
          visit(seq);
          seq.pop_back();
        }
      }
    };
    std::vector<int> seq;
    visit(seq);
    DecodeResult r = BeamSearch(att, lp, T, cfg, small, &lm);
    EXPECT_EQ(r.nbest[0].Characters(small), best_seq) << seed;
    EXPECT_NEAR(r.nbest[0].final_score, best, 1e-9) << seed;
  }
}

TEST_F(BeamSearchTest, WiderBeamNeverLowersTopScore) {
  RandomLM lm(vocab_, 11);
  for (uint64_t seed = 0; seed < 6; ++seed) {
    Tensor lp = Lattice(6, 700 + seed);
    AttentionScorer att = RandomAttention(vocab_, 800 + seed);
    double prev = kNegInf;
    for (int beam : {1, 2, 4, 8, 64}) {
      DecodeConfig cfg;
      cfg.beam = beam;
      cfg.length_normalize = false;
      const double top = BeamSearch(att, lp, 6, cfg, vocab_, &lm).nbest[0].final_score;
      if (beam == 64) EXPECT_GE(top, prev - 1e-12);
      prev = std::max(prev, top);
    }
  }
}

TEST_F(BeamSearchTest, DeterministicAndFormatted) {
  Tensor lp = Lattice(6, 900);
  AttentionScorer att = RandomAttention(vocab_, 901);
  UniformLM lm(vocab_);
  DecodeConfig cfg;
  cfg.nbest = 3;
  const std::string a = FormatNbest(BeamSearch(att, lp, 6, cfg, vocab_, &lm), cfg, vocab_);
  const std::string b = FormatNbest(BeamSearch(att, lp, 6, cfg, vocab_, &lm), cfg, vocab_);
  EXPECT_EQ(a, b);
  std::istringstream is(a);
  std::string line;
  int rank = 0;
  while (std::getline(is, line)) {
    ++rank;
    int tabs = 0;
    for (char c : line) tabs += c == '\t';
    EXPECT_EQ(tabs, 4);
    EXPECT_EQ(line.substr(0, line.find('\t')), std::to_string(rank));
    EXPECT_NE(line.find("\t0.1\t0.6\t"), std::string::npos);
  }
  EXPECT_EQ(rank, 3);
}

TEST_F(BeamSearchTest, ContractsAndUnterminatedResult) {
  DecodeConfig cfg;
  cfg.lm_weight = 0.0;
  EXPECT_THROW(BeamSearch(RandomAttention(vocab_, 1), Lattice(3, 1), 0, cfg, vocab_, nullptr),
               ContractError);
  cfg.beam = 0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = DecodeConfig();
  EXPECT_THROW(BeamSearch(RandomAttention(vocab_, 1), Lattice(3, 1), 3, cfg, vocab_, nullptr),
               ConfigError);
  // A lattice that forbids ending: eos never gets a finite CTC score since
  // the only path emits more labels than max length allows.
  cfg.lm_weight = 0.0;
  cfg.ctc_weight = 0.5;
  cfg.max_len_ratio = 0.25;  // max length 1
  Tensor lp = Tensor::Full({4, 4}, kNegInf);
  for (int t = 0; t < 4; ++t) lp[t * 4 + 1 + t % 3] = 0.0;  // forces "abca"
  DecodeResult r = BeamSearch(RandomAttention(vocab_, 2), lp, 4, cfg, vocab_, nullptr);
  EXPECT_TRUE(r.unterminated);
}
