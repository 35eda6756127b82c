#include "graphaug/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>

#include "graphaug/errors.hpp"

namespace graphaug {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig cfg;
  std::string current;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ParseError("unterminated section header", lineno);
      current = trim(t.substr(1, t.size() - 2));
      if (current.empty()) throw ParseError("empty section name", lineno);
      cfg.section(current);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", lineno);
    cfg.set(current, key, trim(t.substr(eq + 1)));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  return parse(in);
}

void KeyValueConfig::write(std::ostream& out) const {
  bool first = true;
  for (const Section& s : sections_) {
    if (!s.name.empty()) {
      if (!first) out << '\n';
      out << '[' << s.name << "]\n";
    }
    for (const Entry& e : s.entries) out << e.key << " = " << e.value << '\n';
    first = false;
  }
}

KeyValueConfig::Section& KeyValueConfig::section(const std::string& name) {
  for (Section& s : sections_)
    if (s.name == name) return s;
  sections_.push_back({name, {}});
  return sections_.back();
}

const KeyValueConfig::Section* KeyValueConfig::find(const std::string& name) const {
  for (const Section& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

std::optional<std::string> KeyValueConfig::get(const std::string& sec, const std::string& key) const {
  if (const Section* s = find(sec))
    for (const Entry& e : s->entries)
      if (e.key == key) return e.value;
  return std::nullopt;
}

std::string KeyValueConfig::get_or(const std::string& sec, const std::string& key,
                                   const std::string& fallback) const {
  return get(sec, key).value_or(fallback);
}

void KeyValueConfig::set(const std::string& sec, const std::string& key, std::string value) {
  Section& s = section(sec);
  for (Entry& e : s.entries) {
    if (e.key == key) {
      e.value = std::move(value);
      return;
    }
  }
  s.entries.push_back({key, std::move(value)});
}

bool KeyValueConfig::has_section(const std::string& sec) const { return find(sec) != nullptr; }

std::vector<std::string> KeyValueConfig::sections() const {
  std::vector<std::string> out;
  for (const Section& s : sections_) out.push_back(s.name);
  return out;
}

std::vector<std::string> KeyValueConfig::keys(const std::string& sec) const {
  std::vector<std::string> out;
  if (const Section* s = find(sec))
    for (const Entry& e : s->entries) out.push_back(e.key);
  return out;
}

std::string format_double(double v) {
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

double parse_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0' || !std::isfinite(v))
    throw ConfigError(what + ": '" + text + "' is not a number");
  return v;
}

long long parse_int(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || *end != '\0' || !std::isfinite(v))
    throw ConfigError(what + ": '" + text + "' is not an integer");
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace graphaug
