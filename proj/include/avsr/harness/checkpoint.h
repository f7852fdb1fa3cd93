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
// Binary checkpoints: magic "AVSRCKPT", format version, the model
// configuration text, step counter, RNG states, every named parameter and
// buffer, and optionally the Adam moments. Integers are little-endian;
// values are stored as IEEE doubles, so a save/load/save cycle is
// byte-identical.

#ifndef AVSR_HARNESS_CHECKPOINT_H_
#define AVSR_HARNESS_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "avsr/harness/model.h"
#include "avsr/harness/optim.h"

namespace avsr {

inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  int64_t step = 0;
  std::string rng_state;  // opaque text
  std::string model_config;
  std::string data_config;  // preprocessing fixed at training time
};

void SaveCheckpoint(const std::string& path, AvsrModel& model, const CheckpointMeta& meta,
                    Adam* optimizer = nullptr);

// Reads only the header; used to build a matching model before loading.
CheckpointMeta PeekCheckpoint(const std::string& path);

// Copies the stored arrays into model (and optimizer when given and stored).
// ConfigError when the stored configuration differs from the model's;
// IoError for a damaged file.
CheckpointMeta LoadCheckpoint(const std::string& path, AvsrModel& model,
                              Adam* optimizer = nullptr);

}  // namespace avsr

#endif  // AVSR_HARNESS_CHECKPOINT_H_
