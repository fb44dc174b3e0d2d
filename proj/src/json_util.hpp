#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssg/errors.hpp"
#include "ssg/game.hpp"

namespace ssg::detail {

using Json = nlohmann::json;

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

inline Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError("", line_of(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline const Json& require(const Json& object, const char* key, const std::string& where) {
  if (!object.is_object()) throw ParseError(where, 0, "expected an object");
  auto it = object.find(key);
  if (it == object.end()) throw ParseError(where + "." + key, 0, "missing field");
  return *it;
}

inline double as_double(const Json& value, const std::string& where) {
  if (!value.is_number()) throw ParseError(where, 0, "expected a number");
  return value.get<double>();
}

inline Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Vector vector_from_json(const Json& value, const std::string& where) {
  if (!value.is_array()) throw ParseError(where, 0, "expected an array");
  Vector v(static_cast<Eigen::Index>(value.size()));
  for (std::size_t i = 0; i < value.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = as_double(value[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

// Row-major nested arrays.
inline Json matrix_to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_to_json(m.row(r).transpose()));
  return out;
}

inline Matrix matrix_from_json(const Json& value, const std::string& where,
                               Eigen::Index expected_cols = -1) {
  if (!value.is_array()) throw ParseError(where, 0, "expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(value.size());
  Eigen::Index cols = expected_cols;
  if (cols < 0) cols = rows > 0 && value[0].is_array() ? static_cast<Eigen::Index>(value[0].size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::string row_where = where + "[" + std::to_string(r) + "]";
    Vector row = vector_from_json(value[static_cast<std::size_t>(r)], row_where);
    if (row.size() != cols) {
      throw ParseError(row_where, 0,
                       "expected " + std::to_string(cols) + " columns, got " +
                           std::to_string(row.size()));
    }
    m.row(r) = row.transpose();
  }
  return m;
}

}  // namespace ssg::detail
