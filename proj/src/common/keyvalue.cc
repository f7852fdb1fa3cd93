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
#include "avsr/common/keyvalue.h"

#include <fstream>
#include <sstream>

#include "avsr/common/errors.h"

namespace avsr {
namespace {

std::string Trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::Parse(const std::string& text, const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(StrCat(origin, ":", lineno, ": expected key = value"));
    }
    const std::string key = Trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(StrCat(origin, ":", lineno, ": empty key"));
    if (cfg.values_.count(key)) {
      throw ConfigError(StrCat(origin, ":", lineno, ": duplicate key '", key, "'"));
    }
    cfg.values_[key] = Trim(line.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(StrCat("cannot open config '", path, "'"));
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str(), path);
}

const std::string* KeyValueConfig::Find(const std::string& key) {
  auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  consumed_.insert(key);
  return &it->second;
}

std::string KeyValueConfig::GetString(const std::string& key, const std::string& fallback) {
  const std::string* v = Find(key);
  return v ? *v : fallback;
}

double KeyValueConfig::GetDouble(const std::string& key, double fallback) {
  const std::string* v = Find(key);
  if (!v) return fallback;
  try {
    size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used == v->size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(StrCat(origin_, ": key '", key, "' expects a number, got '", *v, "'"));
}

int64_t KeyValueConfig::GetInt(const std::string& key, int64_t fallback) {
  const std::string* v = Find(key);
  if (!v) return fallback;
  try {
    size_t used = 0;
    const long long i = std::stoll(*v, &used);
    if (used == v->size()) return i;
  } catch (const std::exception&) {
  }
  throw ConfigError(StrCat(origin_, ": key '", key, "' expects an integer, got '", *v, "'"));
}

bool KeyValueConfig::GetBool(const std::string& key, bool fallback) {
  const std::string* v = Find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  throw ConfigError(StrCat(origin_, ": key '", key, "' expects true/false, got '", *v, "'"));
}

std::vector<double> KeyValueConfig::GetDoubleList(const std::string& key,
                                                  const std::vector<double>& fallback) {
  const std::string* v = Find(key);
  if (!v) return fallback;
  std::vector<double> out;
  std::istringstream is(*v);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = Trim(item);
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(StrCat(origin_, ": key '", key, "' expects numbers, got '", item, "'"));
    }
  }
  return out;
}

void KeyValueConfig::CheckAllConsumed() const {
  std::string unknown;
  for (const auto& [k, v] : values_) {
    if (!consumed_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
  }
  if (!unknown.empty()) throw ConfigError(StrCat(origin_, ": unknown key(s): ", unknown));
}

}  // namespace avsr
