#include "dta/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dta/errors.hpp"

namespace dta {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  std::istringstream in(t);
  double v = 0.0;
  if (!(in >> v)) return std::nullopt;
  in >> std::ws;
  if (!in.eof()) return std::nullopt;
  return v;
}

}  // namespace

std::optional<std::pair<double, double>> parse_pair(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) return std::nullopt;
  auto x = parse_double(text.substr(0, comma));
  auto y = parse_double(text.substr(comma + 1));
  if (!x || !y) return std::nullopt;
  return std::make_pair(*x, *y);
}

KeyValueFile KeyValueFile::parse(std::istream& in, const std::string& source) {
  KeyValueFile file;
  file.source_ = source;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string text = trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line, "expected 'key = value'");
    Entry e{trim(text.substr(0, eq)), trim(text.substr(eq + 1)), line};
    if (e.key.empty()) throw ConfigError(source, line, "empty key");
    file.entries_.push_back(std::move(e));
  }
  return file;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open file");
  return parse(in, path);
}

bool KeyValueFile::has(const std::string& key) const { return last(key) != nullptr; }

const KeyValueFile::Entry* KeyValueFile::last(const std::string& key) const {
  used_.insert(key);
  const Entry* found = nullptr;
  for (const auto& e : entries_)
    if (e.key == key) found = &e;
  return found;
}

void KeyValueFile::fail(const Entry& entry, const std::string& message) const {
  throw ConfigError(source_, entry.line, "'" + entry.key + "': " + message);
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
  const Entry* e = last(key);
  return e ? e->value : fallback;
}

std::string KeyValueFile::require_string(const std::string& key) const {
  const Entry* e = last(key);
  if (!e) throw ConfigError(source_, 0, "missing required key '" + key + "'");
  return e->value;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  const Entry* e = last(key);
  if (!e) return fallback;
  auto v = parse_double(e->value);
  if (!v) fail(*e, "expected a number, got '" + e->value + "'");
  return *v;
}

int KeyValueFile::get_int(const std::string& key, int fallback) const {
  const Entry* e = last(key);
  if (!e) return fallback;
  int v = 0;
  const auto* begin = e->value.data();
  const auto* end = begin + e->value.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end) fail(*e, "expected an integer, got '" + e->value + "'");
  return v;
}

std::pair<double, double> KeyValueFile::get_pair(const std::string& key,
                                                 std::pair<double, double> fallback) const {
  const Entry* e = last(key);
  if (!e) return fallback;
  auto v = parse_pair(e->value);
  if (!v) fail(*e, "expected 'x,y', got '" + e->value + "'");
  return *v;
}

std::vector<KeyValueFile::Entry> KeyValueFile::all(const std::string& key) const {
  used_.insert(key);
  std::vector<Entry> out;
  for (const auto& e : entries_)
    if (e.key == key) out.push_back(e);
  return out;
}

void KeyValueFile::reject_unused() const {
  for (const auto& e : entries_)
    if (!used_.count(e.key)) fail(e, "unknown key");
}

}  // namespace dta
