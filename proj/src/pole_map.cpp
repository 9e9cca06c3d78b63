#include "poleloc/pole_map.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "poleloc/textio.hpp"

namespace poleloc {

namespace {

double parse_double(std::string_view token, const char* what) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    throw FormatError(std::string("bad ") + what + " value: '" +
                      std::string(token) + "'");
  return value;
}

std::int64_t parse_count(std::string_view token) {
  std::int64_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    throw FormatError("bad count value: '" + std::string(token) + "'");
  return value;
}

}  // namespace

std::string serialize_pole_map(const PoleMap& map) {
  std::ostringstream out;
  for (const auto& [key, value] : map.metadata)
    out << "# " << key << ' ' << value << '\n';
  for (const MapPole& p : map.poles)
    out << format_g9(p.x) << ' ' << format_g9(p.y) << ' '
        << format_g9(p.radius) << ' ' << p.count << '\n';
  return out.str();
}

PoleMap parse_pole_map(const std::string& text) {
  PoleMap map;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view stripped = trim(line);
    if (stripped.empty()) continue;
    if (stripped.front() == '#') {
      const auto tokens = split_ws(stripped.substr(1));
      if (tokens.size() >= 2) {
        std::string value(tokens[1]);
        for (std::size_t i = 2; i < tokens.size(); ++i)
          value += ' ' + std::string(tokens[i]);
        map.metadata[std::string(tokens[0])] = value;
      }
      continue;
    }
    const auto tokens = split_ws(stripped);
    if (tokens.size() != 4)
      throw FormatError("pole map line " + std::to_string(line_no) +
                        ": expected 'x y radius count', got '" + line + "'");
    MapPole p;
    p.x = parse_double(tokens[0], "x");
    p.y = parse_double(tokens[1], "y");
    p.radius = parse_double(tokens[2], "radius");
    p.count = parse_count(tokens[3]);
    map.poles.push_back(p);
  }
  return map;
}

void save_pole_map(const PoleMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out << serialize_pole_map(map);
}

PoleMap load_pole_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open pole map: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_pole_map(buf.str());
}

}  // namespace poleloc
