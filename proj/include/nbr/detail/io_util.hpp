#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace nbr::ioutil {

std::string read_text_file(const std::string& path);
std::vector<std::string> read_lines(const std::string& path);

// Writes via a temp file in the same directory, then renames into place.
void write_text_file_atomic(const std::string& path, const std::string& content);

void ensure_directory(const std::string& dir);

// Parses one JSON line; throws FormatError mentioning `context` on failure.
nlohmann::json parse_json_line(const std::string& line, const std::string& context);

}  // namespace nbr::ioutil
