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
#include "avsr/dataflow/manifest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "avsr/model/fusion_decoder.h"

namespace avsr {
namespace fs = std::filesystem;

void Manifest::Validate(const Vocabulary& vocab) const {
  for (const ManifestRecord& r : records) {
    if (r.transcript.empty()) {
      throw ContractError(StrCat("utterance '", r.id, "' has an empty transcript"));
    }
    for (char c : r.transcript) {
      if (vocab.alphabet().find(c) == std::string::npos) {
        throw ContractError(StrCat("utterance '", r.id, "': character '", c,
                                   "' is not in the alphabet \"", vocab.alphabet(), "\""));
      }
    }
    for (const std::string& p : {r.wav_path, r.frames_path}) {
      if (!p.empty() && !fs::exists(p)) {
        throw IoError(StrCat("utterance '", r.id, "': missing file '", p, "'"));
      }
    }
  }
}

Manifest ReadManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(StrCat("cannot open manifest '", path, "'"));
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    if (p.empty() || p == "-" || fs::path(p).is_absolute()) return p == "-" ? std::string() : p;
    return (base / p).lexically_normal().string();
  };
  Manifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string key = "# split:";
      if (line.compare(0, key.size(), key) == 0) {
        std::istringstream is(line.substr(key.size()));
        is >> m.split;
      }
      continue;
    }
    std::vector<std::string> f;
    for (size_t start = 0;;) {
      const size_t tab = line.find('\t', start);
      f.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (f.size() != 4) {
      throw IoError(StrCat(path, ":", lineno, ": expected 4 tab-separated fields, found ",
                           f.size()));
    }
    m.records.push_back({f[0], resolve(f[1]), resolve(f[2]), f[3]});
  }
  return m;
}

void WriteManifest(const std::string& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(StrCat("cannot open manifest '", path, "' for writing"));
  out << "# id\twav\tframes\ttranscript\n";
  if (!manifest.split.empty()) out << "# split: " << manifest.split << "\n";
  for (const ManifestRecord& r : manifest.records) {
    out << r.id << '\t' << (r.wav_path.empty() ? "-" : r.wav_path) << '\t'
        << (r.frames_path.empty() ? "-" : r.frames_path) << '\t' << r.transcript << '\n';
  }
  if (!out) throw IoError(StrCat("write to '", path, "' failed"));
}

}  // namespace avsr
