#include "commlfm/config.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "commlfm/csv.hpp"
#include "commlfm/error.hpp"

namespace commlfm {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Drops a trailing comment that is not inside quotes.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

nlohmann::json parse_scalar(std::string_view text, std::size_t line_no) {
  text = trim(text);
  if (text.empty()) throw InputError("config line " + std::to_string(line_no) + ": missing value");
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') {
      throw InputError("config line " + std::to_string(line_no) + ": unterminated string");
    }
    return std::string(text.substr(1, text.size() - 2));
  }
  if (text == "true") return true;
  if (text == "false") return false;
  const bool integral = text.find_first_of(".eE") == std::string_view::npos;
  if (integral) {
    try {
      std::size_t used = 0;
      const std::string s(text);
      if (s.front() == '-') {
        const long long v = std::stoll(s, &used);
        if (used == s.size()) return v;
      } else {
        const unsigned long long v = std::stoull(s, &used);
        if (used == s.size()) return v;
      }
    } catch (const std::exception&) {
    }
  }
  if (const auto v = parse_cell(text)) return *v;
  return std::string(text);
}

}  // namespace

nlohmann::json parse_key_value_config(std::string_view text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* section = &root;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw InputError("config line " + std::to_string(line_no) + ": bad section header");
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (name.empty()) throw InputError("config line " + std::to_string(line_no) + ": empty section name");
      root[name] = nlohmann::json::object();
      section = &root[name];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw InputError("config line " + std::to_string(line_no) + ": empty key");
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']') throw InputError("config line " + std::to_string(line_no) + ": unterminated array");
      nlohmann::json array = nlohmann::json::array();
      std::string_view body = trim(value.substr(1, value.size() - 2));
      while (!body.empty()) {
        const auto comma = body.find(',');
        array.push_back(parse_scalar(body.substr(0, comma), line_no));
        if (comma == std::string_view::npos) break;
        body = trim(body.substr(comma + 1));
      }
      (*section)[key] = std::move(array);
    } else {
      (*section)[key] = parse_scalar(value, line_no);
    }
  }
  return root;
}

nlohmann::json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".json") {
    try {
      return nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(path.string() + ": " + e.what());
    }
  }
  return parse_key_value_config(buf.str());
}

}  // namespace commlfm
