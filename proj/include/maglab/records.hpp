#pragma once

// Persistence helpers: JSONL records (one canonical JSON object per line) and
// CSV extracts for plotting.  Canonical records carry no wall-clock data so
// repeated runs with the same seed are byte-identical; timings go to a
// sidecar file instead.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "maglab/util.hpp"

namespace maglab {

using json = nlohmann::ordered_json;

inline json to_json(const vec_t& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail("records.io", "cannot create directory '" + dir + "': " + ec.message());
}

class RecordWriter {
 public:
  explicit RecordWriter(const std::string& path) : path_(path) {
    out_.open(path, std::ios::trunc);
    if (!out_) fail("records.io", "cannot open '" + path + "' for writing");
  }
  void append(const json& record) {
    out_ << record.dump() << "\n";
    if (!out_) fail("records.io", "write failed on '" + path_ + "'");
  }
  void flush() { out_.flush(); }

 private:
  std::string path_;
  std::ofstream out_;
};

inline std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("records.io", "cannot open '" + path + "'");
  std::vector<json> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      fail("records.parse", path + ":" + std::to_string(n) + ": invalid JSON record");
    out.push_back(std::move(j));
  }
  return out;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail("records.io", "cannot open '" + path + "' for writing");
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << "\n";
  out.precision(17);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  if (!out) fail("records.io", "write failed on '" + path + "'");
}

}  // namespace maglab
