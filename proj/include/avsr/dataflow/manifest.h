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
// Tab-separated utterance lists: id, waveform path, frame-stack path,
// transcript. Lines starting with '#' are comments; "# split: NAME" sets the
// split tag. Relative paths resolve against the manifest's directory.

#ifndef AVSR_DATAFLOW_MANIFEST_H_
#define AVSR_DATAFLOW_MANIFEST_H_

#include <string>
#include <vector>

namespace avsr {

class Vocabulary;

struct ManifestRecord {
  std::string id;
  std::string wav_path;
  std::string frames_path;
  std::string transcript;
};

struct Manifest {
  std::string split;
  std::vector<ManifestRecord> records;

  // Throws ContractError for an empty transcript or one with characters
  // outside vocab, and IoError for a referenced file that does not exist.
  void Validate(const Vocabulary& vocab) const;
};

Manifest ReadManifest(const std::string& path);
// Paths are written as given.
void WriteManifest(const std::string& path, const Manifest& manifest);

}  // namespace avsr

#endif  // AVSR_DATAFLOW_MANIFEST_H_
