#pragma once

#include <string>

#include "spalift/semantics.hpp"

namespace spalift {

/// Text form of a flat transition system:
///
///   STATES 4
///   TRANSITIONS 3
///   (s1,s2) -a-> (s1p,s2) : 16.000000000000000
///
/// States and transitions keep their deterministic order; rates print with
/// 17 significant digits so that export → import → export is bit-exact.
std::string export_flat(const FlatTS& flat);

/// Transitions as re-imported from text (derivations are not serialised).
struct ImportedFlat {
  std::size_t state_count = 0;
  struct Transition {
    TransitionKey key;
    double rate = 0.0;
  };
  std::vector<Transition> transitions;
};

ImportedFlat import_flat(const std::string& text);

}  // namespace spalift
