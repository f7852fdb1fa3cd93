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
#include "avsr/harness/lm_file.h"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include "avsr/common/keyvalue.h"
#include "avsr/common/seed.h"
#include "binary_io.h"

namespace avsr {
namespace {

constexpr char kMagic[8] = {'A', 'V', 'S', 'R', 'L', 'M', '0', '1'};

std::string ConfigText(const std::string& alphabet, const TinyLmConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "alphabet=" << alphabet << "\nblocks=" << c.num_blocks << "\nd_model=" << c.d_model
     << "\nheads=" << c.n_head << "\nd_ff=" << c.d_ff << "\ndropout=" << c.dropout << "\n";
  return os.str();
}

}  // namespace

double TrainLanguageModel(TinyTransformerLM& lm, const std::vector<std::string>& texts,
                          const LmTrainConfig& cfg) {
  if (texts.empty()) throw ContractError("language-model training needs at least one text");
  if (cfg.steps <= 0 || cfg.batch_size <= 0) {
    throw ConfigError("language-model steps and batch size must be positive");
  }
  std::vector<std::vector<int>> data;
  for (const auto& t : texts) data.push_back(lm.vocab().Encode(t));
  ParamList list;
  lm.Register(list, "lm");
  Adam adam(list, AdamConfig{});
  Rng rng(DeriveSeed(cfg.seed, "lm/order"));
  Rng dropout(DeriveSeed(cfg.seed, "lm/dropout"));
  std::uniform_int_distribution<size_t> pick(0, data.size() - 1);
  std::deque<double> recent;
  double sum = 0.0;
  for (int64_t step = 1; step <= cfg.steps; ++step) {
    std::vector<Tensor> grads;
    for (const auto& [name, p] : list.params) grads.emplace_back(p->value.shape());
    double loss = 0.0;
    for (int64_t b = 0; b < cfg.batch_size; ++b) {
      Tape tape;
      ForwardContext ctx{tape, true, &dropout};
      Var l = lm.Loss(ctx, data[pick(rng)]);
      loss += l.value().item();
      tape.Backward(l);
      for (size_t i = 0; i < list.params.size(); ++i) {
        const Parameter& p = *list.params[i].second;
        if (!tape.ParamUsed(p)) continue;
        const Tensor g = tape.ParamGrad(p);
        for (int64_t j = 0; j < g.size(); ++j) grads[i][j] += g[j];
      }
    }
    const double inv = 1.0 / static_cast<double>(cfg.batch_size);
    for (Tensor& g : grads)
      for (double& v : g.data()) v *= inv;
    adam.Step(grads, NoamLr(step, cfg.warmup_steps, cfg.peak_lr));
    recent.push_back(loss / static_cast<double>(cfg.batch_size));
    sum += recent.back();
    if (recent.size() > 50) {
      sum -= recent.front();
      recent.pop_front();
    }
  }
  return sum / static_cast<double>(recent.size());
}

void SaveLanguageModel(const std::string& path, TinyTransformerLM& lm,
                       const TinyLmConfig& cfg) {
  Writer w;
  w.Raw(kMagic, 8);
  w.Str(ConfigText(lm.vocab().alphabet(), cfg));
  ParamList list;
  lm.Register(list, "lm");
  w.U64(list.params.size());
  for (const auto& [name, p] : list.params) w.Array(name, p->value);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(StrCat("cannot open '", path, "' for writing"));
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw IoError(StrCat("write to '", path, "' failed"));
}

std::unique_ptr<TinyTransformerLM> LoadLanguageModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(StrCat("cannot open language model '", path, "'"));
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}), path);
  if (r.Raw(8) != std::string(kMagic, 8)) r.Fail("not a language-model file (bad magic)");
  KeyValueConfig kv = KeyValueConfig::Parse(r.Str(), path);
  const std::string alphabet = kv.GetString("alphabet", "");
  TinyLmConfig cfg;
  cfg.num_blocks = kv.GetInt("blocks", cfg.num_blocks);
  cfg.d_model = kv.GetInt("d_model", cfg.d_model);
  cfg.n_head = kv.GetInt("heads", cfg.n_head);
  cfg.d_ff = kv.GetInt("d_ff", cfg.d_ff);
  cfg.dropout = kv.GetDouble("dropout", cfg.dropout);
  kv.CheckAllConsumed();
  Rng rng(0);
  auto lm = std::make_unique<TinyTransformerLM>(Vocabulary(alphabet), cfg, rng);
  ParamList list;
  lm->Register(list, "lm");
  if (r.U64() != list.params.size()) r.Fail("parameter count differs from the configuration");
  for (auto& [name, p] : list.params) r.Array(name, p->value);
  if (!r.done()) r.Fail("trailing bytes after the last array");
  return lm;
}

}  // namespace avsr
