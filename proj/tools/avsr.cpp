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
// Command-line driver: corpus synthesis, training, decoding, scoring,
// gradient checks and augmentation previews.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "avsr/common/keyvalue.h"
#include "avsr/dataflow/augment.h"
#include "avsr/dataflow/manifest.h"
#include "avsr/dataflow/media.h"
#include "avsr/dataflow/synth.h"
#include "avsr/harness/checkpoint.h"
#include "avsr/harness/data.h"
#include "avsr/harness/gradcheck_suite.h"
#include "avsr/harness/lm_file.h"
#include "avsr/harness/recognizer.h"
#include "avsr/harness/train.h"
#include "avsr/harness/wer.h"

namespace fs = std::filesystem;

namespace avsr {
namespace {

ErrorUnit ParseUnit(const std::string& s) {
  if (s == "word") return ErrorUnit::kWord;
  if (s == "char") return ErrorUnit::kCharacter;
  throw ConfigError(StrCat("unknown error unit '", s, "' (word or char)"));
}

// --- synth-data -----------------------------------------------------------

struct SynthArgs {
  std::string out;
  SynthSpec spec;
};

int RunSynth(const SynthArgs& a) {
  const SynthCorpus c = WriteSynthCorpus(a.spec, a.out);
  std::cout << "wrote " << c.train.records.size() << " train, " << c.val.records.size()
            << " val and " << c.test.records.size() << " test utterances to " << a.out << "\n"
            << "  " << c.train_path << "\n  " << c.val_path << "\n  " << c.test_path << "\n  "
            << c.babble_path << "\n";
  return 0;
}

// --- train ----------------------------------------------------------------

struct TrainArgs {
  std::string manifest, val, config, modality, out, noise;
};

int RunTrain(const TrainArgs& a) {
  KeyValueConfig kv;
  if (!a.config.empty()) kv = KeyValueConfig::Load(a.config);
  if (!a.modality.empty()) kv.Set("modality", a.modality);
  RunConfig run = RunConfig::FromConfig(kv);
  const Manifest train_manifest = ReadManifest(a.manifest);

  DataOptions opts;
  opts.modality = run.model.modality;
  opts.policy = run.augment;
  opts.augment = run.train.augment;
  opts.max_frames = run.train.max_frames;
  if (!a.noise.empty()) opts.noise = ReadWav(a.noise);
  if (opts.augment && opts.policy.use_noise && opts.modality != Modality::kVisual &&
      opts.noise.size() == 0) {
    throw ConfigError("noise augmentation is enabled but no --noise recording was given");
  }
  if (run.model.uses_video()) opts.frame_stats = ComputeFrameStats(train_manifest);

  const Vocabulary vocab(run.model.alphabet);
  const Dataset train(train_manifest, vocab, opts);
  std::unique_ptr<Dataset> val;
  if (!a.val.empty()) {
    DataOptions vopts = opts;
    vopts.augment = false;
    val = std::make_unique<Dataset>(ReadManifest(a.val), vocab, vopts);
  }
  fs::create_directories(a.out);
  {
    std::ofstream cfg_out(fs::path(a.out) / "model.cfg");
    cfg_out << run.model.Fingerprint();
  }
  std::ofstream log(fs::path(a.out) / "metrics.log");
  if (!log) throw IoError(StrCat("cannot write metrics log under '", a.out, "'"));

  AvsrModel model(run.model);
  std::cout << "training " << ModalityName(run.model.modality) << " model on "
            << train.size() << " utterances (" << train.excluded() << " excluded)\n";
  Trainer trainer(model, run.train, train, val.get());
  const TrainSummary s = trainer.Run(&log, a.out);
  std::cout << "steps=" << s.steps << " skipped=" << s.skipped << " last_loss=" << s.last_loss
            << " best_val_wer=" << s.best_val_wer << " best_step=" << s.best_step
            << " cpu_seconds=" << s.cpu_seconds << "\n";
  return 0;
}

// --- decode ---------------------------------------------------------------

struct DecodeArgs {
  std::string checkpoint, manifest, lm, noise, hyp_out;
  DecodeConfig cfg;
  double snr_db = std::numeric_limits<double>::infinity();
  bool greedy = false;
  std::string unit = "word";
};

int RunDecode(const DecodeArgs& a) {
  const CheckpointMeta meta = PeekCheckpoint(a.checkpoint);
  KeyValueConfig kv = KeyValueConfig::Parse(meta.model_config, a.checkpoint);
  const ModelConfig mc = ModelConfig::FromConfig(kv);
  AvsrModel model(mc);
  LoadCheckpoint(a.checkpoint, model);

  DataOptions opts;
  opts.modality = mc.modality;
  opts.policy.crop = 32;
  ApplyDataFingerprint(meta.data_config, opts);
  opts.max_frames = std::numeric_limits<int64_t>::max();
  opts.test_snr_db = a.snr_db;
  if (std::isfinite(a.snr_db)) {
    if (a.noise.empty()) throw ConfigError("--snr needs a --noise recording");
    opts.noise = ReadWav(a.noise);
  }
  const Dataset data(ReadManifest(a.manifest), model.vocab(), opts);

  std::unique_ptr<LanguageModel> lm;
  DecodeConfig cfg = a.cfg;
  if (!a.lm.empty()) {
    lm = LoadLanguageModel(a.lm);
    if (lm->vocab().alphabet() != mc.alphabet) {
      throw ConfigError("language model and checkpoint use different alphabets");
    }
  } else if (cfg.lm_weight != 0.0) {
    std::cerr << "note: no --lm given, using beta=0\n";
    cfg.lm_weight = 0.0;
  }
  cfg.Validate();

  std::ofstream hyp_file;
  if (!a.hyp_out.empty()) {
    hyp_file.open(a.hyp_out);
    if (!hyp_file) throw IoError(StrCat("cannot write '", a.hyp_out, "'"));
  }
  std::vector<std::string> hyps, refs;
  for (size_t i = 0; i < data.size(); ++i) {
    const Sample s = data.Load(i, false, 0);
    const DecodeResult r = Recognize(model, s, cfg, lm.get(),
                                     a.greedy ? SearchKind::kGreedy : SearchKind::kBeam);
    const std::string best = BestTranscript(r, model.vocab());
    std::cout << "# " << s.id << (r.unterminated ? " (unterminated)" : "") << "\n"
              << FormatNbest(r, cfg, model.vocab());
    if (hyp_file.is_open()) hyp_file << s.id << '\t' << best << '\n';
    hyps.push_back(best);
    refs.push_back(data.record(i).transcript);
  }
  const WerResult w = EvaluateWer(hyps, refs, ParseUnit(a.unit));
  std::cerr << "utterances=" << data.size() << " excluded=" << data.excluded()
            << " error_rate=" << w.rate() << " (" << w.counts.errors() << "/"
            << w.reference_tokens << ")\n";
  return 0;
}

// --- eval-wer -------------------------------------------------------------

// Accepts manifests (id, wav, frames, transcript), "id<TAB>text" lists and
// plain one-transcript-per-line files.
std::vector<std::pair<std::string, std::string>> ReadTranscripts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(StrCat("cannot open '", path, "'"));
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == '#') continue;
    std::vector<std::string> fields;
    size_t start = 0;
    for (size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      fields.push_back(line.substr(start, tab - start));
    }
    fields.push_back(line.substr(start));
    if (fields.size() == 4) {
      out.emplace_back(fields[0], fields[3]);
    } else if (fields.size() == 2) {
      out.emplace_back(fields[0], fields[1]);
    } else if (fields.size() == 1) {
      out.emplace_back("", fields[0]);
    } else {
      throw IoError(StrCat(path, ": cannot interpret line with ", fields.size(), " fields"));
    }
  }
  return out;
}

struct WerArgs {
  std::string hyp, ref, unit = "word";
};

int RunEvalWer(const WerArgs& a) {
  const auto hyp = ReadTranscripts(a.hyp);
  const auto ref = ReadTranscripts(a.ref);
  std::vector<std::string> hyps, refs;
  const bool keyed = !ref.empty() && !ref[0].first.empty() && !hyp.empty() &&
                     !hyp[0].first.empty();
  if (keyed) {
    std::map<std::string, std::string> by_id;
    for (const auto& [id, text] : hyp) by_id[id] = text;
    for (const auto& [id, text] : ref) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw ContractError(StrCat("no hypothesis for utterance '", id, "'"));
      hyps.push_back(it->second);
      refs.push_back(text);
    }
  } else {
    for (const auto& p : hyp) hyps.push_back(p.second);
    for (const auto& p : ref) refs.push_back(p.second);
  }
  const WerResult w = EvaluateWer(hyps, refs, ParseUnit(a.unit));
  std::cout << "error_rate=" << w.rate() << " errors=" << w.counts.errors()
            << " substitutions=" << w.counts.substitutions << " deletions=" << w.counts.deletions
            << " insertions=" << w.counts.insertions << " reference_tokens=" << w.reference_tokens
            << " excluded=" << w.excluded << "\n";
  return 0;
}

// --- gradcheck ------------------------------------------------------------

int RunGradCheckCmd(const std::string& module, uint64_t seed) {
  std::vector<std::string> modules =
      module == "all" ? GradCheckModules() : std::vector<std::string>{module};
  std::vector<std::string> failed;
  for (const auto& m : modules) {
    const GradCheckReport r = RunGradCheck(m, seed);
    std::cout << (r.passed ? "ok   " : "FAIL ") << m << " max_rel_error=" << r.max_rel_error
              << " tolerance=" << r.tolerance << "\n";
    for (const auto& e : r.entries) {
      if (e.entries == 0 || !(e.max_rel_error <= r.tolerance)) {
        std::cout << "     " << e.name << " rel=" << e.max_rel_error << " abs=" << e.max_abs_error
                  << " entries=" << e.entries
                  << (e.kinked > 0 ? StrCat(" kinked=", e.kinked) : std::string()) << "\n";
      }
    }
    if (!r.passed) failed.push_back(m);
  }
  if (!failed.empty()) {
    std::cerr << "gradient check failed for:";
    for (const auto& m : failed) std::cerr << ' ' << m;
    std::cerr << "\n";
    return 1;
  }
  return 0;
}

// --- augment --------------------------------------------------------------

struct AugmentArgs {
  std::string in, policy, out, noise;
  uint64_t seed = 0;
  bool eval = false;
};

int RunAugment(const AugmentArgs& a) {
  AugmentPolicy policy;
  if (!a.policy.empty()) {
    KeyValueConfig kv = KeyValueConfig::Load(a.policy);
    policy = AugmentPolicy::FromConfig(kv);
    kv.CheckAllConsumed();
  }
  const std::string ext = fs::path(a.in).extension().string();
  if (ext == ".wav") {
    AudioClip noise;
    if (!a.noise.empty()) {
      noise = ReadWav(a.noise);
    } else if (policy.use_noise) {
      std::cerr << "note: no --noise given, noise mixing disabled\n";
      policy.use_noise = false;
    }
    AudioAugmentInfo info;
    const AudioClip out = AugmentAudio(ReadWav(a.in), noise, policy, a.seed, &info);
    WriteWav(a.out, out);
    std::cout << "snr_db=" << info.snr_db << " masks=" << info.masks.spans.size()
              << " bands=" << info.bands.size() << " speed=" << info.speed << "\n";
  } else {
    VideoAugmentInfo info;
    const VideoClip out = AugmentVideo(ReadFrames(a.in), policy, a.seed, !a.eval, &info);
    WriteFrames(a.out, out);
    std::cout << "crop_y=" << info.offset_y << " crop_x=" << info.offset_x
              << " flipped=" << (info.flipped ? 1 : 0) << "\n";
  }
  return 0;
}

// --- train-lm -------------------------------------------------------------

struct LmArgs {
  std::string manifest, out, alphabet;
  LmTrainConfig cfg;
};

int RunTrainLm(const LmArgs& a) {
  const Manifest m = ReadManifest(a.manifest);
  std::vector<std::string> texts;
  for (const auto& r : m.records) texts.push_back(r.transcript);
  Rng rng(a.cfg.seed);
  TinyTransformerLM lm(Vocabulary(a.alphabet), a.cfg.model, rng);
  const double loss = TrainLanguageModel(lm, texts, a.cfg);
  SaveLanguageModel(a.out, lm, a.cfg.model);
  std::cout << "final_loss=" << loss << " texts=" << texts.size() << " -> " << a.out << "\n";
  return 0;
}

}  // namespace
}  // namespace avsr

int main(int argc, char** argv) {
  using namespace avsr;
  CLI::App app{"Audio-visual speech recognition toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth-data", "Render a synthetic audio-visual corpus");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--alphabet", synth.spec.alphabet_size, "Number of symbols (2-10)");
  c_synth->add_option("--utts", synth.spec.num_train, "Training utterances");
  c_synth->add_option("--val", synth.spec.num_val, "Validation utterances");
  c_synth->add_option("--test", synth.spec.num_test, "Test utterances");
  c_synth->add_option("--min-len", synth.spec.min_length, "Shortest transcript");
  c_synth->add_option("--max-len", synth.spec.max_length, "Longest transcript");
  c_synth->add_option("--seed", synth.spec.seed, "Random seed");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train a recognizer");
  c_train->add_option("--manifest", train.manifest, "Training manifest")->required();
  c_train->add_option("--val", train.val, "Validation manifest");
  c_train->add_option("--config", train.config, "key=value run configuration");
  c_train->add_option("--modality", train.modality, "a, v or av")
      ->check(CLI::IsMember({"a", "v", "av"}));
  c_train->add_option("--noise", train.noise, "Noise recording for augmentation");
  c_train->add_option("--out", train.out, "Output directory")->required();

  DecodeArgs dec;
  auto* c_dec = app.add_subcommand("decode", "Decode a manifest with a trained checkpoint");
  c_dec->add_option("--checkpoint", dec.checkpoint)->required();
  c_dec->add_option("--manifest", dec.manifest)->required();
  c_dec->add_option("--beam", dec.cfg.beam, "Beam width");
  c_dec->add_option("--lambda", dec.cfg.ctc_weight, "CTC weight");
  c_dec->add_option("--beta", dec.cfg.lm_weight, "Language-model weight");
  c_dec->add_option("--lm", dec.lm, "Language-model file from train-lm");
  c_dec->add_option("--nbest", dec.cfg.nbest, "Hypotheses printed per utterance (0: all)");
  c_dec->add_option("--snr", dec.snr_db, "Mix test noise at this SNR (dB)");
  c_dec->add_option("--noise", dec.noise, "Noise recording for --snr");
  c_dec->add_option("--hyp-out", dec.hyp_out, "Write id<TAB>best transcript lines");
  c_dec->add_option("--unit", dec.unit, "Error unit of the summary: word or char");
  c_dec->add_flag("--greedy", dec.greedy, "Greedy search instead of beam search");

  WerArgs wer;
  auto* c_wer = app.add_subcommand("eval-wer", "Score hypotheses against references");
  c_wer->add_option("--hyp", wer.hyp)->required();
  c_wer->add_option("--ref", wer.ref)->required();
  c_wer->add_option("--unit", wer.unit, "word or char");

  std::string gc_module = "all";
  uint64_t gc_seed = 0;
  auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  c_gc->add_option("--module", gc_module, "Module name or 'all'");
  c_gc->add_option("--seed", gc_seed);

  AugmentArgs aug;
  auto* c_aug = app.add_subcommand("augment", "Apply the augmentation policy to one clip");
  c_aug->add_option("--in", aug.in, ".wav or frame file")->required();
  c_aug->add_option("--policy", aug.policy, "key=value augmentation policy");
  c_aug->add_option("--seed", aug.seed);
  c_aug->add_option("--noise", aug.noise, "Noise recording");
  c_aug->add_option("--out", aug.out)->required();
  c_aug->add_flag("--eval", aug.eval, "Evaluation-mode video transform (centre crop)");

  LmArgs lma;
  auto* c_lm = app.add_subcommand("train-lm", "Train the character language model");
  c_lm->add_option("--manifest", lma.manifest, "Transcripts to learn from")->required();
  c_lm->add_option("--alphabet", lma.alphabet, "Character set")->required();
  c_lm->add_option("--out", lma.out)->required();
  c_lm->add_option("--steps", lma.cfg.steps);
  c_lm->add_option("--seed", lma.cfg.seed);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*c_synth) return RunSynth(synth);
    if (*c_train) return RunTrain(train);
    if (*c_dec) return RunDecode(dec);
    if (*c_wer) return RunEvalWer(wer);
    if (*c_gc) return RunGradCheckCmd(gc_module, gc_seed);
    if (*c_aug) return RunAugment(aug);
    if (*c_lm) return RunTrainLm(lma);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
