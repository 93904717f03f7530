#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "bosefold/folding.hpp"
#include "bosefold/mode_set.hpp"
#include "bosefold/mps.hpp"

namespace bosefold {

/// Gates whose angle is below this are kept in the sequence but not applied.
inline constexpr double kGatePruneAngle = 1e-14;

/// Called after every applied (non-pruned) unfolding gate.
using UnfoldObserver = std::function<void(const Gate&, const MpsState&)>;

/// Rebuild the mode product as an MPS: start from the residual Fock product
/// and apply the unfolding gates in order.
inline MpsState unfold_to_mps(const GateSequence& seq, MpsOptions options = {}, const UnfoldObserver& observer = {}) {
  const int n = seq.n_sites;
  if (static_cast<int>(seq.residual_occupations.size()) > n) {
    throw DimensionMismatch("unfold_to_mps: more residual occupations than sites");
  }
  std::vector<int> occ(static_cast<std::size_t>(n), 0);
  int total = 0;
  for (std::size_t q = 0; q < seq.residual_occupations.size(); ++q) {
    occ[q] = seq.residual_occupations[q];
    total += occ[q];
  }
  if (total != seq.n_bosons) {
    throw InvalidInput("unfold_to_mps: residual occupations sum to " + std::to_string(total) + ", expected " +
                       std::to_string(seq.n_bosons));
  }
  MpsState state(occ, seq.n_bosons, options);
  std::map<double, TwoSiteGate> rotations;  // plane-wave modes repeat angles
  for (const Gate& g : unfold_gate_order(seq)) {
    if (std::abs(g.angle) < kGatePruneAngle) continue;
    if (g.kind == GateKind::phase) {
      state.apply_single_site(g.position, phase_gate(g.angle, seq.n_bosons));
    } else {
      auto it = rotations.find(g.angle);
      if (it == rotations.end()) it = rotations.emplace(g.angle, rotation_gate(g.angle, seq.n_bosons)).first;
      state.apply_two_site(g.position, it->second);
    }
    if (observer) observer(g, state);
  }
  return state;
}

inline MpsState unfold_to_mps(const GateSequence& seq, std::size_t chi_cap) {
  MpsOptions options;
  options.chi_cap = chi_cap;
  return unfold_to_mps(seq, options);
}

/// fold followed by unfold_to_mps.
inline MpsState modes_to_mps(const ModeSet& modes, MpsOptions options = {}) { return unfold_to_mps(fold(modes), options); }

}  // namespace bosefold
