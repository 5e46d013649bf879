#include "spalift/io.hpp"

#include <cstdio>
#include <sstream>

#include "spalift/parser.hpp"

namespace spalift {

std::string export_flat(const FlatTS& flat) {
  std::ostringstream out;
  out << "STATES " << flat.states.size() << "\n";
  out << "TRANSITIONS " << flat.transitions.size() << "\n";
  char buf[64];
  for (const FlatTransition& t : flat.transitions) {
    std::snprintf(buf, sizeof(buf), "%.17g", t.rate);
    out << format_key(t.key()) << " : " << buf << "\n";
  }
  return out.str();
}

ImportedFlat import_flat(const std::string& text) {
  ImportedFlat out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::size_t expected_transitions = 0;
  bool have_states = false, have_transitions = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto comment = line.find("//");
    if (comment != std::string::npos) line.erase(comment);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    if (!have_states) {
      std::string kw;
      ls >> kw >> out.state_count;
      if (kw != "STATES" || ls.fail())
        throw ParseError(lineno, 1, "expected 'STATES <count>'");
      have_states = true;
      continue;
    }
    if (!have_transitions) {
      std::string kw;
      ls >> kw >> expected_transitions;
      if (kw != "TRANSITIONS" || ls.fail())
        throw ParseError(lineno, 1, "expected 'TRANSITIONS <count>'");
      have_transitions = true;
      continue;
    }
    auto colon = line.rfind(':');
    if (colon == std::string::npos)
      throw ParseError(lineno, 1, "expected '<key> : <rate>'");
    ImportedFlat::Transition t;
    try {
      t.key = parse_transition_key(line.substr(0, colon));
    } catch (const ParseError& e) {
      throw ParseError(lineno, e.column, e.what());
    }
    char* end = nullptr;
    std::string rate_part = line.substr(colon + 1);
    t.rate = std::strtod(rate_part.c_str(), &end);
    if (end == rate_part.c_str() || !(t.rate > 0.0))
      throw ParseError(lineno, static_cast<int>(colon) + 1, "bad rate");
    out.transitions.push_back(std::move(t));
  }
  if (!have_states || !have_transitions)
    throw ParseError(lineno, 1, "missing STATES/TRANSITIONS header");
  if (out.transitions.size() != expected_transitions)
    throw ParseError(lineno, 1, "transition count mismatch: header says " +
                                    std::to_string(expected_transitions) + ", found " +
                                    std::to_string(out.transitions.size()));
  return out;
}

}  // namespace spalift
