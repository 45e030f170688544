#pragma once

// Shared helpers for the line-oriented file formats: a JSON header line
// followed by whitespace-separated decimal rows.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "lordnet/errors.hpp"

namespace lordnet::text_io {

using json = nlohmann::json;

/// 17 significant digits: parses back to the identical double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& token, const std::string& field) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size() || errno == ERANGE)
    throw ParseError("cannot parse '" + token + "' as a number in " + field);
  return v;
}

inline std::vector<std::string> split_tokens(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

inline std::ifstream open_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_write(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  return out;
}

inline json read_header(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": missing JSON header line");
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(path + ": malformed JSON header: " + e.what());
  }
}

template <class T>
T header_field(const json& header, const char* key, const std::string& path) {
  if (!header.contains(key)) throw ParseError(path + ": header is missing field '" + key + "'");
  try {
    return header.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(path + ": header field '" + key + "' has the wrong type");
  }
}

/// Reads the next non-empty line, or returns false at end of file.
inline bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  return false;
}

}  // namespace lordnet::text_io
