#pragma once

#include <map>
#include <string>

#include "spalift/model.hpp"
#include "spalift/semantics.hpp"

namespace spalift {

struct ParseError : std::runtime_error {
  ParseError(int line, int column, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + msg),
        line(line),
        column(column) {}
  int line;
  int column;
};

/// Parses the textual model format:
///
///   process Name {
///     initial s0 ;
///     s0 -( act , 1.5 )-> s1 ;
///   }
///   system : ( Name ||{ act } Other ) ;
///
/// `//` starts a comment. States are declared by mention (initial line first,
/// then transition endpoints in order). Composition chains inside parentheses
/// may have more than two operands; they normalise to right-nested binary
/// nodes, each keeping its own sync set.
SpaSystem parse_system(const std::string& text);

/// Inverse of parse_system up to state-mention order; emits one process block
/// per leaf followed by the fully parenthesised system line.
std::string serialize_system(const SpaSystem& sys);

/// Requested rate modifications on flat transitions, as factors on the
/// original rates. Absent transitions have factor 1.
class ModificationMap {
 public:
  void set(const TransitionKey& k, double factor);
  double factor(const TransitionKey& k) const;
  bool contains(const TransitionKey& k) const { return entries_.count(k) > 0; }
  const std::map<TransitionKey, double>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::map<TransitionKey, double> entries_;
};

/// Parses factor lines of the form
///   (s1,s2,s3) -act-> (s1',s2,s3) : 2.5
/// validating every key against `flat` (the transition must exist and must
/// not be a global selfloop) and rejecting non-positive factors and
/// duplicate keys.
ModificationMap parse_factors(const std::string& text, const FlatTS& flat);

/// Parses a single transition key "(..) -act-> (..)" (no factor part).
TransitionKey parse_transition_key(const std::string& text);

}  // namespace spalift
