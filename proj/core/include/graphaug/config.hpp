#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace graphaug {

/// Flat "key = value" text with "[section]" headers. Keys before the first
/// header belong to the unnamed section "". '#' and ';' start comment lines.
/// Section and key order is preserved on write.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig load(const std::string& path);
  void write(std::ostream& out) const;

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  void set(const std::string& section, const std::string& key, std::string value);
  bool has_section(const std::string& section) const;

  std::vector<std::string> sections() const;
  std::vector<std::string> keys(const std::string& section) const;

  friend bool operator==(const KeyValueConfig&, const KeyValueConfig&) = default;

 private:
  struct Entry {
    std::string key;
    std::string value;
    friend bool operator==(const Entry&, const Entry&) = default;
  };
  struct Section {
    std::string name;
    std::vector<Entry> entries;
    friend bool operator==(const Section&, const Section&) = default;
  };
  Section& section(const std::string& name);
  const Section* find(const std::string& name) const;

  std::vector<Section> sections_;
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);
std::vector<std::string> split_list(const std::string& text);

}  // namespace graphaug
