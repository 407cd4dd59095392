#pragma once

#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dta {

/// `key = value` lines; `#` starts a comment; keys may repeat (ordered lists).
/// Every accessor marks the key as consumed so that `reject_unused` can flag
/// typos with their line number.
class KeyValueFile {
 public:
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };

  static KeyValueFile parse(std::istream& in, const std::string& source);
  static KeyValueFile load(const std::string& path);

  const std::string& source() const { return source_; }
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  /// Parses "x,y".
  std::pair<double, double> get_pair(const std::string& key,
                                     std::pair<double, double> fallback) const;
  /// All entries with this key, in file order.
  std::vector<Entry> all(const std::string& key) const;

  /// Throws ConfigError naming the first entry no accessor asked for.
  void reject_unused() const;

  [[noreturn]] void fail(const Entry& entry, const std::string& message) const;

 private:
  const Entry* last(const std::string& key) const;

  std::string source_;
  std::vector<Entry> entries_;
  mutable std::set<std::string> used_;
};

/// "x,y" -> pair; nullopt on malformed input.
std::optional<std::pair<double, double>> parse_pair(const std::string& text);

}  // namespace dta
