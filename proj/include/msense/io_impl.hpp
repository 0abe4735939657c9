#pragma once

#include <fstream>

#include "msense/error.hpp"

namespace msense {

template <typename Fn>
void for_each_json_line(const fs::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInput, path.string() + ": cannot open");
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
    try {
      fn(nlohmann::json::parse(line), lineno);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInput, where + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
  }
}

}  // namespace msense
