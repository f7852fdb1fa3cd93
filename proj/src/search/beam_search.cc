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

#include "avsr/search/beam_search.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace avsr {
namespace {

bool Better(const BeamHypothesis& a, const BeamHypothesis& b, bool by_final) {
  const double sa = by_final ? a.final_score : a.total;
  const double sb = by_final ? b.final_score : b.total;
  if (sa != sb) return sa > sb;
  return a.tokens < b.tokens;
}

void SortHyps(std::vector<BeamHypothesis>& hyps, bool by_final) {
  std::sort(hyps.begin(), hyps.end(),
            [by_final](const BeamHypothesis& a, const BeamHypothesis& b) {
              return Better(a, b, by_final);
            });
}

double FinalScore(double total, int64_t num_chars, bool normalize) {
  return normalize ? total / static_cast<double>(num_chars + 1) : total;
}

class FusedScorer {
 public:
  FusedScorer(const AttentionScorer& attention, const Tensor& ctc_log_probs,
              const DecodeConfig& cfg, const Vocabulary& vocab, const LanguageModel* lm)
      : attention_(attention), cfg_(cfg), vocab_(vocab), lm_(lm) {
    cfg.Validate();
    use_ctc_ = cfg.ctc_weight > 0.0;
    use_lm_ = cfg.lm_weight > 0.0;
    if (use_ctc_) {
      if (ctc_log_probs.size() == 0) {
        throw ContractError("CTC weight is positive but no CTC lattice was given");
      }
      if (ctc_log_probs.dim(1) != vocab.num_chars() + 1) {
        throw ShapeError(StrCat("CTC lattice ", ShapeString(ctc_log_probs.shape()),
                                " does not match ", vocab.num_chars(), " characters"));
      }
      ctc_.emplace(ctc_log_probs);
    }
    if (use_lm_ && lm == nullptr) {
      throw ConfigError("LM weight is positive but no language model was given");
    }
  }

  BeamHypothesis Initial() const {
    BeamHypothesis h;
    h.tokens = {vocab_.sos()};
    if (use_ctc_) h.ctc_state = std::make_shared<CtcPrefixState>(ctc_->Initial());
    return h;
  }

  // Every finite-scored one-token extension of h.
  std::vector<BeamHypothesis> Expand(const BeamHypothesis& h, bool eos_only) const {
    const std::vector<double> att = attention_(h.tokens);
    if (static_cast<int>(att.size()) != vocab_.size()) {
      throw ShapeError(StrCat("attention scorer returned ", att.size(),
                              " scores for ", vocab_.size(), " ids"));
    }
    std::vector<double> lm_lp;
    if (use_lm_) lm_lp = lm_->NextLogProbs(h.lm_state);
    const int64_t num_chars = h.NumCharacters(vocab_);
    std::vector<BeamHypothesis> out;
    auto add = [&](int token) {
      const bool eos = token == vocab_.eos();
      BeamHypothesis c;
      c.tokens = h.tokens;
      c.tokens.push_back(token);
      c.att_score = h.att_score + att[static_cast<size_t>(token)];
      if (use_ctc_) {
        if (eos) {
          c.ctc_state = h.ctc_state;
          c.ctc_score = ctc_->Stop(*h.ctc_state);
        } else {
          auto st = std::make_shared<CtcPrefixState>(ctc_->Extend(*h.ctc_state, token));
          c.ctc_score = st->score;
          c.ctc_state = std::move(st);
        }
      }
      if (use_lm_) {
        c.lm_score = h.lm_score + lm_lp[static_cast<size_t>(token)];
        c.lm_state = h.lm_state;
        c.lm_state.push_back(token);
      }
      c.total = Total(c);
      if (!std::isfinite(c.total)) return;
      c.finished = eos;
      c.final_score = FinalScore(c.total, num_chars + (eos ? 0 : 1), cfg_.length_normalize);
      out.push_back(std::move(c));
    };
    if (!eos_only) {
      for (int id = 1; id <= vocab_.num_chars(); ++id) add(id);
    }
    add(vocab_.eos());
    return out;
  }

  double Total(const BeamHypothesis& h) const {
    double t = (1.0 - cfg_.ctc_weight) * h.att_score;
    if (use_ctc_) t += cfg_.ctc_weight * h.ctc_score;
    if (use_lm_) t += cfg_.lm_weight * h.lm_score;
    return t;
  }

 private:
  const AttentionScorer& attention_;
  const DecodeConfig& cfg_;
  const Vocabulary& vocab_;
  const LanguageModel* lm_;
  bool use_ctc_ = false;
  bool use_lm_ = false;
  std::optional<CtcPrefixScorer> ctc_;
};

DecodeResult Finish(std::vector<BeamHypothesis> ended, std::vector<BeamHypothesis> live,
                    const DecodeConfig& cfg, const Vocabulary& vocab) {
  DecodeResult r;
  if (ended.empty()) {
    r.unterminated = true;
    for (auto& h : live) {
      h.final_score = FinalScore(h.total, h.NumCharacters(vocab), cfg.length_normalize);
    }
    ended = std::move(live);
  }
  SortHyps(ended, /*by_final=*/true);
  if (cfg.nbest > 0 && static_cast<int>(ended.size()) > cfg.nbest) ended.resize(cfg.nbest);
  r.nbest = std::move(ended);
  return r;
}

}  // namespace

void DecodeConfig::Validate() const {
  if (!(ctc_weight >= 0.0 && ctc_weight <= 1.0)) {
    throw ConfigError(StrCat("decode CTC weight ", ctc_weight, " outside [0, 1]"));
  }
  if (!(lm_weight >= 0.0)) throw ConfigError(StrCat("LM weight ", lm_weight, " < 0"));
  if (beam < 1) throw ConfigError(StrCat("beam width ", beam, " < 1"));
  if (!(max_len_ratio > 0.0)) throw ConfigError("max length ratio must be positive");
  if (nbest < 0) throw ConfigError("nbest must be >= 0");
}

std::vector<int> BeamHypothesis::Characters(const Vocabulary& vocab) const {
  std::vector<int> ids;
  for (int id : tokens) {
    if (vocab.IsChar(id)) ids.push_back(id);
  }
  return ids;
}

int64_t BeamHypothesis::NumCharacters(const Vocabulary& vocab) const {
  return static_cast<int64_t>(Characters(vocab).size());
}

int64_t MaxOutputLength(const DecodeConfig& cfg, int64_t num_frames) {
  if (num_frames < 1) throw ContractError("decoding needs a non-empty encoder memory");
  const auto n = static_cast<int64_t>(std::floor(cfg.max_len_ratio * static_cast<double>(num_frames)));
  return std::max<int64_t>(1, n);
}

DecodeResult BeamSearch(const AttentionScorer& attention, const Tensor& ctc_log_probs,
                        int64_t num_frames, const DecodeConfig& cfg,
                        const Vocabulary& vocab, const LanguageModel* lm) {
  FusedScorer scorer(attention, ctc_log_probs, cfg, vocab, lm);
  const int64_t max_len = MaxOutputLength(cfg, num_frames);
  std::vector<BeamHypothesis> live = {scorer.Initial()};
  std::vector<BeamHypothesis> ended;
  for (int64_t step = 0; step <= max_len && !live.empty(); ++step) {
    std::vector<BeamHypothesis> cands;
    for (const BeamHypothesis& h : live) {
      for (BeamHypothesis& c : scorer.Expand(h, step == max_len)) cands.push_back(std::move(c));
    }
    SortHyps(cands, /*by_final=*/false);
    if (static_cast<int>(cands.size()) > cfg.beam) cands.resize(cfg.beam);
    std::vector<BeamHypothesis> next;
    for (BeamHypothesis& c : cands) (c.finished ? ended : next).push_back(std::move(c));
    if (next.empty()) {
      live.clear();
      break;
    }
    live = std::move(next);
    if (!ended.empty()) {
      // Scores only decrease as hypotheses grow, so no live hypothesis can
      // beat the best finished one once its most optimistic final score
      // falls below it.
      double best = ended.front().final_score;
      for (const auto& e : ended) best = std::max(best, e.final_score);
      bool hopeless = true;
      for (const auto& h : live) {
        if (FinalScore(h.total, max_len, cfg.length_normalize) >= best) hopeless = false;
      }
      if (hopeless) break;
    }
  }
  return Finish(std::move(ended), std::move(live), cfg, vocab);
}

DecodeResult GreedySearch(const AttentionScorer& attention, const Tensor& ctc_log_probs,
                          int64_t num_frames, const DecodeConfig& cfg,
                          const Vocabulary& vocab, const LanguageModel* lm) {
  FusedScorer scorer(attention, ctc_log_probs, cfg, vocab, lm);
  const int64_t max_len = MaxOutputLength(cfg, num_frames);
  BeamHypothesis h = scorer.Initial();
  for (int64_t step = 0; step <= max_len; ++step) {
    std::vector<BeamHypothesis> cands = scorer.Expand(h, step == max_len);
    if (cands.empty()) break;
    auto best = std::min_element(cands.begin(), cands.end(),
                                 [](const BeamHypothesis& a, const BeamHypothesis& b) {
                                   return Better(a, b, false);
                                 });
    h = std::move(*best);
    if (h.finished) return Finish({h}, {}, cfg, vocab);
  }
  return Finish({}, {h}, cfg, vocab);
}

DecodeResult AttentionBeamSearch(const AttentionScorer& attention, int64_t num_frames,
                                 const DecodeConfig& cfg, const Vocabulary& vocab) {
  const int64_t max_len = MaxOutputLength(cfg, num_frames);
  BeamHypothesis init;
  init.tokens = {vocab.sos()};
  std::vector<BeamHypothesis> live = {init}, ended;
  for (int64_t step = 0; step <= max_len && !live.empty(); ++step) {
    std::vector<BeamHypothesis> cands;
    for (const BeamHypothesis& h : live) {
      const std::vector<double> att = attention(h.tokens);
      for (int id = 1; id <= vocab.eos(); ++id) {
        if (id == vocab.sos() || (step == max_len && id != vocab.eos())) continue;
        BeamHypothesis c;
        c.tokens = h.tokens;
        c.tokens.push_back(id);
        c.att_score = h.att_score + att[static_cast<size_t>(id)];
        c.total = c.att_score;
        c.finished = id == vocab.eos();
        c.final_score = FinalScore(c.total, step + (c.finished ? 0 : 1), cfg.length_normalize);
        if (std::isfinite(c.total)) cands.push_back(std::move(c));
      }
    }
    SortHyps(cands, false);
    if (static_cast<int>(cands.size()) > cfg.beam) cands.resize(cfg.beam);
    live.clear();
    for (BeamHypothesis& c : cands) (c.finished ? ended : live).push_back(std::move(c));
  }
  return Finish(std::move(ended), std::move(live), cfg, vocab);
}

std::string FormatNbest(const DecodeResult& result, const DecodeConfig& cfg,
                        const Vocabulary& vocab) {
  std::ostringstream os;
  for (size_t i = 0; i < result.nbest.size(); ++i) {
    const BeamHypothesis& h = result.nbest[i];
    std::ostringstream score;
    score.precision(6);
    score << std::fixed << h.final_score;
    os << (i + 1) << '\t' << score.str() << '\t' << cfg.ctc_weight << '\t'
       << cfg.lm_weight << '\t' << vocab.Decode(h.tokens) << '\n';
  }
  return os.str();
}

}  // namespace avsr
