#include "lidomaug/keyvalue.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "lidomaug/error.hpp"

namespace lidomaug {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

double parse_double(std::string_view text, const std::string& context) {
  text = trim(text);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    fail(ErrorKind::kFormat, context + ": expected a number, got '" + std::string(text) + "'");
  }
  return value;
}

long long parse_int(std::string_view text, const std::string& context) {
  text = trim(text);
  long long value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    fail(ErrorKind::kFormat, context + ": expected an integer, got '" + std::string(text) + "'");
  }
  return value;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

KeyValueText KeyValueText::parse(std::string_view text) {
  KeyValueText kv;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::kFormat, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) fail(ErrorKind::kFormat, "line " + std::to_string(line_no) + ": empty key");
    if (kv.values_.count(key)) {
      fail(ErrorKind::kFormat, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    kv.values_[key] = value;
    kv.lines_[key] = line_no;
  }
  return kv;
}

const std::string& KeyValueText::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorKind::kFormat, "missing key '" + key + "'");
  return it->second;
}

double KeyValueText::get_double(const std::string& key) const {
  const std::string& value = raw(key);
  return parse_double(value, "line " + std::to_string(lines_.at(key)) + " (" + key + ")");
}

long long KeyValueText::get_int(const std::string& key) const {
  const std::string& value = raw(key);
  return parse_int(value, "line " + std::to_string(lines_.at(key)) + " (" + key + ")");
}

std::vector<long long> KeyValueText::get_int_list(const std::string& key) const {
  std::vector<long long> out;
  std::string_view rest = raw(key);
  const std::string context = "line " + std::to_string(lines_.at(key)) + " (" + key + ")";
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(parse_int(rest.substr(0, comma), context));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

void KeyValueText::check_keys(const std::vector<std::string>& allowed) const {
  for (const auto& [key, _] : values_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(ErrorKind::kFormat, "line " + std::to_string(lines_.at(key)) + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace lidomaug
