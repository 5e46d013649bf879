#pragma once

#include "spalift/lifting.hpp"

namespace spalift {

/// Cyclic-server polling system with `n` stations (n >= 2): a server walks
/// station to station, either skipping an empty station or serving a full
/// one, synchronised with single-buffer stations via per-station poll/skip/
/// serve actions; customers arrive at empty stations independently.
/// Rates: service 1, polling 200, arrival 1/n.
SpaSystem make_polling_system(int n);

/// Deterministically planted rate-modification factors for every pollX
/// transition of station 1 ("loop1a"): the factors come from a randomly
/// chosen post-repair rate assignment in which each station's influence
/// depends on its buffer state, so no purely local or purely station-1-level
/// repair can realise them, but a structural repair can.
ModificationMap make_polling_factors(const SpaSystem& sys, const FlatTS& flat,
                                     std::uint64_t seed = 1);

struct PollingStats {
  int n = 0;
  std::size_t states = 0;
  std::size_t transitions = 0;
  std::size_t loop1a_transitions = 0;
  double flatten_seconds = 0.0;
};

PollingStats polling_stats(int n, const FlattenOptions& opts = {});

}  // namespace spalift
