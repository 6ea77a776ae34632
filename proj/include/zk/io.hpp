#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace zk {

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<double>& values);
  void row_text(const std::vector<std::string>& cells);
  std::string str() const { return out_; }

private:
  std::size_t columns_;
  std::string out_;
};

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

std::uint64_t fnv1a64(const std::string& data);
std::string hex64(std::uint64_t v);

// Provenance record written next to every run's outputs.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> input_hashes;
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;

  // Serializes with the FNV-1a hash of each listed output file.
  std::string to_json() const;
};

// "key = value" lines; '#' starts a comment. Keys must belong to the allowed set.
class KeyValueConfig {
public:
  KeyValueConfig(std::set<std::string> allowed, std::map<std::string, std::string> defaults);

  void parse(const std::string& text, const std::string& origin = "config");
  void load(const std::string& path);
  // Applies one "key=value" override.
  void set(const std::string& assignment);

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

private:
  void assign(const std::string& key, const std::string& value, const std::string& where);
  std::set<std::string> allowed_;
  std::map<std::string, std::string> values_;
};

std::vector<double> parse_double_list(const std::string& csv);

}  // namespace zk
