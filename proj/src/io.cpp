#include "snfseg/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "snfseg/error.hpp"

namespace snfseg {

using nlohmann::json;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Input, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::Input, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    require(static_cast<bool>(out), ErrorCode::Input, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorCode::Input, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string format_matrix_csv(const Matrix& m) {
  std::string out;
  char buf[32];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) { write_file_atomic(path, format_matrix_csv(m)); }

Matrix parse_matrix_csv(std::string_view text, const std::string& origin) {
  std::vector<std::vector<double>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    const char* p = line.c_str();
    int field = 0;
    while (true) {
      ++field;
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(p, &end);
      require(end != p && errno != ERANGE, ErrorCode::Input,
              origin + ":" + std::to_string(line_no) + ": field " + std::to_string(field) + " is not a number");
      row.push_back(v);
      while (*end == ' ' || *end == '\t') ++end;
      if (*end == '\0') break;
      require(*end == ',', ErrorCode::Input,
              origin + ":" + std::to_string(line_no) + ": unexpected character after field " + std::to_string(field));
      p = end + 1;
    }
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Index>(rows.size());
  require(n > 0, ErrorCode::Input, origin + ": empty matrix");
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    require(static_cast<Index>(rows[i].size()) == n, ErrorCode::Input,
            origin + ":" + std::to_string(i + 1) + ": expected " + std::to_string(n) + " columns (square matrix), got " +
                std::to_string(rows[i].size()));
    for (Index j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  require(m.allFinite(), ErrorCode::Input, origin + ": non-finite entries");
  return m;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  return parse_matrix_csv(read_text_file(path), path.string());
}

FeatureMatrix parse_feature_json(std::string_view text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Input, origin + ": " + e.what());
  }
  require(doc.is_object(), ErrorCode::Input, origin + ": top-level value must be an object");
  require(doc.contains("framerate_hz") && doc["framerate_hz"].is_number(), ErrorCode::Input,
          origin + ": missing numeric field 'framerate_hz'");
  require(doc.contains("kind") && doc["kind"].is_string(), ErrorCode::Input, origin + ": missing string field 'kind'");
  require(doc.contains("data") && doc["data"].is_array(), ErrorCode::Input, origin + ": missing array field 'data'");

  const double rate = doc["framerate_hz"].get<double>();
  require(rate > 0.0, ErrorCode::Input, origin + ": framerate_hz must be positive");
  FeatureKind kind;
  try {
    kind = parse_feature_kind(doc["kind"].get<std::string>());
  } catch (const Error& e) {
    fail(ErrorCode::Input, origin + ": " + e.what());
  }

  const auto& rows = doc["data"];
  require(!rows.empty(), ErrorCode::Input, origin + ": 'data' has no frames");
  const auto n = static_cast<Index>(rows.size());
  require(rows[0].is_array() && !rows[0].empty(), ErrorCode::Input, origin + ": data[0] must be a non-empty array");
  const auto d = static_cast<Index>(rows[0].size());
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    require(row.is_array() && static_cast<Index>(row.size()) == d, ErrorCode::Input,
            origin + ": data[" + std::to_string(i) + "] must have " + std::to_string(d) + " values");
    for (Index j = 0; j < d; ++j) {
      const auto& v = row[static_cast<std::size_t>(j)];
      require(v.is_number(), ErrorCode::Input,
              origin + ": data[" + std::to_string(i) + "][" + std::to_string(j) + "] is not a number");
      m(i, j) = v.get<double>();
    }
  }
  try {
    return FeatureMatrix(std::move(m), rate, kind);
  } catch (const Error& e) {
    fail(ErrorCode::Input, origin + ": " + e.what());
  }
}

std::string format_feature_json(const FeatureMatrix& f) {
  json doc;
  doc["framerate_hz"] = f.framerate;
  doc["kind"] = std::string(to_string(f.kind));
  json rows = json::array();
  for (Index i = 0; i < f.frames(); ++i) {
    json row = json::array();
    for (Index j = 0; j < f.dims(); ++j) row.push_back(f.data(i, j));
    rows.push_back(std::move(row));
  }
  doc["data"] = std::move(rows);
  return doc.dump() + "\n";
}

}  // namespace snfseg
