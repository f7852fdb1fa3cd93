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
#include "avsr/harness/checkpoint.h"

#include <fstream>

#include "binary_io.h"

namespace avsr {
namespace {

constexpr char kMagic[8] = {'A', 'V', 'S', 'R', 'C', 'K', 'P', 'T'};

Reader Open(const std::string& path, CheckpointMeta& meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(StrCat("cannot open checkpoint '", path, "'"));
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}), path);
  if (r.Raw(8) != std::string(kMagic, 8)) r.Fail("not a checkpoint (bad magic)");
  const uint64_t version = r.U64();
  if (version != kCheckpointVersion) {
    r.Fail(StrCat("unsupported checkpoint version ", version));
  }
  meta.model_config = r.Str();
  meta.step = static_cast<int64_t>(r.U64());
  meta.rng_state = r.Str();
  meta.data_config = r.Str();
  return r;
}

}  // namespace

void SaveCheckpoint(const std::string& path, AvsrModel& model, const CheckpointMeta& meta,
                    Adam* optimizer) {
  Writer w;
  w.Raw(kMagic, 8);
  w.U64(kCheckpointVersion);
  w.Str(model.config().Fingerprint());
  w.U64(static_cast<uint64_t>(meta.step));
  w.Str(meta.rng_state);
  w.Str(meta.data_config);
  const ParamList& list = model.params();
  w.U64(list.params.size());
  for (const auto& [name, p] : list.params) w.Array(name, p->value);
  w.U64(list.buffers.size());
  for (const auto& [name, t] : list.buffers) w.Array(name, *t);
  w.U64(optimizer ? 1 : 0);
  if (optimizer) {
    w.U64(static_cast<uint64_t>(optimizer->step()));
    for (size_t i = 0; i < list.params.size(); ++i) {
      w.Array(list.params[i].first + "/m", optimizer->first_moments()[i]);
      w.Array(list.params[i].first + "/v", optimizer->second_moments()[i]);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(StrCat("cannot open checkpoint '", path, "' for writing"));
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw IoError(StrCat("write to '", path, "' failed"));
}

CheckpointMeta PeekCheckpoint(const std::string& path) {
  CheckpointMeta meta;
  Open(path, meta);
  return meta;
}

CheckpointMeta LoadCheckpoint(const std::string& path, AvsrModel& model, Adam* optimizer) {
  CheckpointMeta meta;
  Reader r = Open(path, meta);
  if (meta.model_config != model.config().Fingerprint()) {
    throw ConfigError(StrCat("checkpoint '", path, "' was written for a different model "
                             "configuration:\n", meta.model_config, "model has:\n",
                             model.config().Fingerprint()));
  }
  ParamList& list = model.params();
  if (r.U64() != list.params.size()) r.Fail("parameter count differs from the model");
  for (auto& [name, p] : list.params) r.Array(name, p->value);
  if (r.U64() != list.buffers.size()) r.Fail("buffer count differs from the model");
  for (auto& [name, t] : list.buffers) r.Array(name, *t);
  if (r.U64() == 1) {
    const int64_t step = static_cast<int64_t>(r.U64());
    Tensor m, v;
    for (size_t i = 0; i < list.params.size(); ++i) {
      if (optimizer) {
        r.Array(list.params[i].first + "/m", optimizer->first_moments()[i]);
        r.Array(list.params[i].first + "/v", optimizer->second_moments()[i]);
      } else {
        m = Tensor(list.params[i].second->value.shape());
        v = m;
        r.Array(list.params[i].first + "/m", m);
        r.Array(list.params[i].first + "/v", v);
      }
    }
    if (optimizer) optimizer->set_step(step);
  }
  if (!r.done()) r.Fail("trailing bytes after the last array");
  return meta;
}

}  // namespace avsr
