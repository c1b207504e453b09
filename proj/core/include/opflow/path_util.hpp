#pragma once

#include <string>
#include <vector>

namespace opflow {

// Lexical path handling over the virtual analyzed tree ('/' separators, no
// filesystem access).

inline std::string path_normalize(const std::string& path) {
  std::vector<std::string> parts;
  bool absolute = !path.empty() && path[0] == '/';
  std::string cur;
  for (std::size_t i = 0; i <= path.size(); ++i) {
    char c = i < path.size() ? path[i] : '/';
    if (c != '/') {
      cur += c;
      continue;
    }
    if (cur == "..") {
      if (!parts.empty() && parts.back() != "..") parts.pop_back();
      else if (!absolute) parts.push_back("..");
    } else if (!cur.empty() && cur != ".") {
      parts.push_back(cur);
    }
    cur.clear();
  }
  std::string out = absolute ? "/" : "";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += '/';
    out += parts[i];
  }
  return out;
}

inline std::string path_join(const std::string& base, const std::string& rel) {
  if (rel.empty()) return path_normalize(base);
  if (rel[0] == '/') return path_normalize(rel);
  if (base.empty()) return path_normalize(rel);
  return path_normalize(base + "/" + rel);
}

inline std::string path_dirname(const std::string& path) {
  std::string norm = path_normalize(path);
  std::size_t pos = norm.find_last_of('/');
  if (pos == std::string::npos) return "";
  if (pos == 0) return "/";
  return norm.substr(0, pos);
}

}  // namespace opflow
