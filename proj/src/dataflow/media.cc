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
#include "avsr/dataflow/media.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace avsr {
namespace {

void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void PutU16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}
uint32_t GetU32(const std::string& s, size_t at) {
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[at + i]);
  return v;
}
uint16_t GetU16(const std::string& s, size_t at) {
  return static_cast<uint16_t>(static_cast<unsigned char>(s[at]) |
                               (static_cast<unsigned char>(s[at + 1]) << 8));
}

std::string ReadAll(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(StrCat("cannot open '", path, "' for reading"));
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void WriteAll(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(StrCat("cannot open '", path, "' for writing"));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(StrCat("write to '", path, "' failed"));
}

}  // namespace

Tensor AudioClip::ToTensor() const { return Tensor({size()}, samples); }

Tensor VideoClip::ToTensor() const {
  return Tensor({num_frames, height, width}, pixels);
}

void WriteWav(const std::string& path, const AudioClip& clip) {
  const uint32_t data_bytes = static_cast<uint32_t>(clip.samples.size() * 2);
  std::string out = "RIFF";
  PutU32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, 1);  // PCM
  PutU16(out, 1);  // mono
  PutU32(out, static_cast<uint32_t>(clip.sample_rate));
  PutU32(out, static_cast<uint32_t>(clip.sample_rate * 2));
  PutU16(out, 2);
  PutU16(out, 16);
  out += "data";
  PutU32(out, data_bytes);
  for (double s : clip.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    PutU16(out, static_cast<uint16_t>(static_cast<int16_t>(std::lround(c * 32767.0))));
  }
  WriteAll(path, out);
}

AudioClip ReadWav(const std::string& path) {
  const std::string s = ReadAll(path);
  if (s.size() < 12 || s.compare(0, 4, "RIFF") != 0 || s.compare(8, 4, "WAVE") != 0) {
    throw IoError(StrCat("'", path, "' is not a RIFF/WAVE file"));
  }
  AudioClip clip;
  bool have_fmt = false;
  size_t at = 12;
  while (at + 8 <= s.size()) {
    const std::string id = s.substr(at, 4);
    const uint32_t len = GetU32(s, at + 4);
    const size_t body = at + 8;
    if (body + len > s.size()) throw IoError(StrCat("'", path, "': truncated chunk ", id));
    if (id == "fmt ") {
      if (len < 16) throw IoError(StrCat("'", path, "': short fmt chunk"));
      const uint16_t format = GetU16(s, body), channels = GetU16(s, body + 2),
                     bits = GetU16(s, body + 14);
      if (format != 1 || channels != 1 || bits != 16) {
        throw IoError(StrCat("'", path, "': need mono 16-bit PCM, got format ", format,
                             ", ", channels, " channels, ", bits, " bits"));
      }
      clip.sample_rate = static_cast<int>(GetU32(s, body + 4));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw IoError(StrCat("'", path, "': data chunk before fmt"));
      clip.samples.resize(len / 2);
      for (size_t i = 0; i < clip.samples.size(); ++i) {
        clip.samples[i] = static_cast<int16_t>(GetU16(s, body + 2 * i)) / 32767.0;
      }
      return clip;
    }
    at = body + len + (len & 1);
  }
  throw IoError(StrCat("'", path, "': no data chunk"));
}

void WriteFrames(const std::string& path, const VideoClip& clip) {
  std::string out = "AVF1";
  PutU32(out, static_cast<uint32_t>(clip.num_frames));
  PutU32(out, static_cast<uint32_t>(clip.height));
  PutU32(out, static_cast<uint32_t>(clip.width));
  out.reserve(out.size() + clip.pixels.size());
  for (double v : clip.pixels) {
    out.push_back(static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  WriteAll(path, out);
}

VideoClip ReadFrames(const std::string& path) {
  const std::string s = ReadAll(path);
  if (s.size() < 16 || s.compare(0, 4, "AVF1") != 0) {
    throw IoError(StrCat("'", path, "' is not an AVF1 frame stack"));
  }
  VideoClip clip(GetU32(s, 4), GetU32(s, 8), GetU32(s, 12));
  if (s.size() != 16 + clip.pixels.size()) {
    throw IoError(StrCat("'", path, "': expected ", clip.pixels.size(),
                         " pixel bytes, found ", s.size() - 16));
  }
  for (size_t i = 0; i < clip.pixels.size(); ++i) {
    clip.pixels[i] = static_cast<unsigned char>(s[16 + i]) / 255.0;
  }
  return clip;
}

int64_t ReadFrameCount(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(StrCat("cannot open '", path, "' for reading"));
  std::string head(16, '\0');
  in.read(head.data(), 16);
  if (in.gcount() != 16 || head.compare(0, 4, "AVF1") != 0) {
    throw IoError(StrCat("'", path, "' is not an AVF1 frame stack"));
  }
  return GetU32(head, 4);
}

}  // namespace avsr
