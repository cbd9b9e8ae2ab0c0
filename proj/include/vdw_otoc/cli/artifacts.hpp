#ifndef VDW_OTOC_CLI_ARTIFACTS_HPP
#define VDW_OTOC_CLI_ARTIFACTS_HPP

// On-disk artifacts: CSV tables with a mandatory header row and JSON
// documents.  Doubles are printed in shortest round-trip form so that a
// later stage reads back exactly the values an in-process run would use.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "vdw_otoc/errors.hpp"

namespace vdw_otoc::cli {

// A prerequisite artifact is missing or unreadable.
class ArtifactError : public Error {
 public:
  using Error::Error;
};

inline constexpr const char* spectrum_file = "spectrum.csv";
inline constexpr const char* position_file = "position_matrix.csv";
inline constexpr const char* otoc_file = "otoc.csv";
inline constexpr const char* sensitivity_file = "sensitivity.json";
inline constexpr const char* manifest_file = "manifest.json";

inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

// Write through a sibling temporary and rename into place.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::filesystem::filesystem_error("cannot write", tmp, std::make_error_code(std::errc::io_error));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::filesystem::filesystem_error("write failed", tmp, std::make_error_code(std::errc::io_error));
  }
  std::filesystem::rename(tmp, path);
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  write_atomic(path, doc.dump(2) + "\n");
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("missing " + path.filename().string() + " in " + path.parent_path().string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  }
}

class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<std::string_view> header) {
    bool first = true;
    for (auto h : header) {
      if (!first) out_ << ',';
      out_ << h;
      first = false;
    }
    out_ << "\r\n";
  }

  CsvWriter& cell(double x) { return raw(format_double(x)); }
  CsvWriter& cell(int x) { return raw(std::to_string(x)); }
  CsvWriter& end_row() {
    out_ << "\r\n";
    filled_ = 0;
    return *this;
  }

  std::string str() const { return out_.str(); }

 private:
  CsvWriter& raw(const std::string& s) {
    if (filled_++ > 0) out_ << ',';
    out_ << s;
    return *this;
  }

  std::ostringstream out_;
  std::size_t filled_ = 0;
};

// Numeric CSV reader; the header must match `expected` exactly.
inline std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path,
                                                         const std::vector<std::string>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("missing " + path.filename().string() + " in " + path.parent_path().string());
  auto trim_cr = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };
  std::string line;
  if (!std::getline(in, line)) throw ArtifactError(path.string() + ": empty file");
  trim_cr(line);
  std::string want;
  for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
  if (line != want) throw ArtifactError(path.string() + ": unexpected header \"" + line + "\"");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    trim_cr(line);
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = p + line.size();
    while (true) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) {
        throw ArtifactError(path.string() + ":" + std::to_string(line_no) + ": bad number");
      }
      row.push_back(v);
      p = res.ptr;
      if (p == end) break;
      if (*p != ',') throw ArtifactError(path.string() + ":" + std::to_string(line_no) + ": bad separator");
      ++p;
    }
    if (row.size() != expected.size()) {
      throw ArtifactError(path.string() + ":" + std::to_string(line_no) + ": wrong column count");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace vdw_otoc::cli

#endif  // VDW_OTOC_CLI_ARTIFACTS_HPP
