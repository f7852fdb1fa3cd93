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
// Plain-text "key = value" configuration with '#' comments. Every getter
// marks its key as consumed; CheckAllConsumed rejects anything left over.

#ifndef AVSR_COMMON_KEYVALUE_H_
#define AVSR_COMMON_KEYVALUE_H_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace avsr {

class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig Parse(const std::string& text, const std::string& origin = "<text>");
  static KeyValueConfig Load(const std::string& path);

  bool Has(const std::string& key) const { return values_.count(key) > 0; }
  void Set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string GetString(const std::string& key, const std::string& fallback);
  double GetDouble(const std::string& key, double fallback);
  int64_t GetInt(const std::string& key, int64_t fallback);
  bool GetBool(const std::string& key, bool fallback);
  // Comma-separated numbers.
  std::vector<double> GetDoubleList(const std::string& key, const std::vector<double>& fallback);

  // ConfigError naming every key no getter asked for.
  void CheckAllConsumed() const;

 private:
  const std::string* Find(const std::string& key);

  std::string origin_ = "<text>";
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

}  // namespace avsr

#endif  // AVSR_COMMON_KEYVALUE_H_
