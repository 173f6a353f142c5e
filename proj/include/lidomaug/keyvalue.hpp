#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace lidomaug {

/// Flat `key = value` text. One pair per line, '#' to end of line is a
/// comment, blank lines ignored. Keys must be unique.
class KeyValueText {
 public:
  static KeyValueText parse(std::string_view text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& raw(const std::string& key) const;

  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::vector<long long> get_int_list(const std::string& key) const;
  std::string get_string(const std::string& key) const { return raw(key); }

  /// Throws on any key not in `allowed`, naming the first offender.
  void check_keys(const std::vector<std::string>& allowed) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
};

double parse_double(std::string_view text, const std::string& context);
long long parse_int(std::string_view text, const std::string& context);
std::string read_text_file(const std::string& path);

}  // namespace lidomaug
