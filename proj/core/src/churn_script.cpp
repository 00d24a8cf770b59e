#include <fstream>
#include <sstream>

#include "fedlay/churn.hpp"

namespace fedlay::sim {

std::string_view to_string(ChurnAction a) {
  switch (a) {
    case ChurnAction::join: return "join";
    case ChurnAction::fail: return "fail";
    case ChurnAction::leave: return "leave";
  }
  return "unknown";
}

namespace {

[[noreturn]] void bad_line(std::size_t line, const std::string& why) {
  throw ConfigError("churn script line " + std::to_string(line) + ": " + why);
}

std::uint64_t parse_u64(const std::string& tok, std::size_t line) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
    bad_line(line, "expected a nonnegative integer, got '" + tok + "'");
  }
  try {
    return std::stoull(tok);
  } catch (const std::out_of_range&) {
    bad_line(line, "integer out of range: " + tok);
  }
}

}  // namespace

ChurnScript parse_churn_script(std::istream& in) {
  ChurnScript out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() < 3) bad_line(line, "expected '<t_ms> <action> <count>'");

    ChurnEntry e;
    e.time = static_cast<SimTime>(parse_u64(tok[0], line));
    if (tok[1] == "join") e.action = ChurnAction::join;
    else if (tok[1] == "fail") e.action = ChurnAction::fail;
    else if (tok[1] == "leave") e.action = ChurnAction::leave;
    else bad_line(line, "unknown action '" + tok[1] + "'");

    if (tok[2] == "id") {
      if (tok.size() != 4 && tok.size() != 6) bad_line(line, "malformed id entry");
      e.id = parse_u64(tok[3], line);
      if (tok.size() == 6) {
        if (tok[4] != "bootstrap" || e.action != ChurnAction::join) {
          bad_line(line, "only joins take 'bootstrap <id>'");
        }
        e.bootstrap = parse_u64(tok[5], line);
      }
    } else {
      if (tok.size() != 3) bad_line(line, "trailing tokens");
      e.count = parse_u64(tok[2], line);
      if (e.count == 0) bad_line(line, "count must be positive");
    }
    out.push_back(e);
  }
  return out;
}

ChurnScript read_churn_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open churn script " + path);
  return parse_churn_script(in);
}

void write_churn_script(std::ostream& out, const ChurnScript& script) {
  for (const auto& e : script) {
    out << e.time << ' ' << to_string(e.action) << ' ';
    if (e.id) {
      out << "id " << *e.id;
      if (e.bootstrap) out << " bootstrap " << *e.bootstrap;
    } else {
      out << e.count;
    }
    out << '\n';
  }
}

}  // namespace fedlay::sim
