#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bosefold/errors.hpp"
#include "bosefold/linalg.hpp"
#include "bosefold/mode_set.hpp"

namespace bosefold {

enum class GateKind { phase, rotation };

/// One elementary gate. `position` is a site label (phase) or the bond label
/// j of the pair (j, j+1) (rotation), both 1-based. `mode` is the 1-based mode
/// whose folding produced the gate.
struct Gate {
  GateKind kind = GateKind::phase;
  int position = 1;
  double angle = 0.0;
  int mode = 1;

  friend bool operator==(const Gate&, const Gate&) = default;
};

struct GateSequence {
  int n_sites = 0;
  int n_bosons = 0;
  std::vector<int> residual_occupations;  // bosons left on sites 1..N' after folding
  std::vector<Gate> gates;                // folding order

  friend bool operator==(const GateSequence&, const GateSequence&) = default;
};

/// Called after every elementary folding step with the gate just recorded and
/// the working coefficient matrix it produced.
using FoldObserver = std::function<void(const Gate&, const CMatrix&)>;

namespace detail {

inline double wrap_phase(double phi) { return phi <= -kPi ? phi + 2.0 * kPi : phi; }

// Rotation exp(-i theta J^y_{j+1,j}) on coefficient space, applied to every mode.
inline void fold_rotation(CMatrix& w, Eigen::Index row, double theta) {
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const CVector lower = w.row(row).transpose();      // site j
  const CVector upper = w.row(row + 1).transpose();  // site j+1
  w.row(row + 1) = (c * upper - s * lower).transpose();
  w.row(row) = (s * upper + c * lower).transpose();
}

}  // namespace detail

/// Reduce a mode product to a product Fock state.
///
/// Mode k (in the given order) first has the phases of its coefficients on
/// sites k..N stripped, then is swept onto site k by rotations on bonds
/// N-1 down to k with tan(theta/2) = |c_{j+1}| / |c_j|. Every gate acts on all
/// columns, so orthonormality makes the already-folded sites vanish from the
/// remaining modes.
inline GateSequence fold(const ModeSet& modes, const FoldObserver& observer = {}) {
  const double err = modes.orthonormality_error();
  if (err > ModeSet::kOrthonormalityTolerance) {
    throw NonOrthonormalModes("fold: modes are not orthonormal (max deviation " + std::to_string(err) + ")");
  }
  const int n = modes.num_sites();
  const int n_modes = modes.num_modes();
  CMatrix w = modes.coefficients();

  GateSequence seq;
  seq.n_sites = n;
  seq.n_bosons = modes.num_bosons();
  seq.residual_occupations = modes.occupations();

  for (int k = 0; k < n_modes; ++k) {
    for (int l = k; l < n; ++l) {
      const cplx c = w(l, k);
      const double phi = c == cplx{0.0, 0.0} ? 0.0 : detail::wrap_phase(std::arg(c));
      w.row(l) *= std::polar(1.0, -phi);
      seq.gates.push_back(Gate{GateKind::phase, l + 1, phi, k + 1});
      if (observer) observer(seq.gates.back(), w);
    }
    for (int row = n - 2; row >= k; --row) {
      const double theta = 2.0 * std::atan2(std::abs(w(row + 1, k)), std::abs(w(row, k)));
      detail::fold_rotation(w, row, theta);
      seq.gates.push_back(Gate{GateKind::rotation, row + 1, theta, k + 1});
      if (observer) observer(seq.gates.back(), w);
    }
  }
  return seq;
}

/// Order in which gates act on the residual Fock state to rebuild the mode
/// product: modes from last to first; per mode, rotations on ascending bonds
/// followed by its phase gates. Angles keep their recorded sign; the unfolding
/// gates are exp(+i theta J^y) and exp(+i phi n).
inline std::vector<Gate> unfold_gate_order(const GateSequence& seq) {
  int max_mode = 0;
  for (const Gate& g : seq.gates) max_mode = std::max(max_mode, g.mode);
  std::vector<Gate> out;
  out.reserve(seq.gates.size());
  for (int k = max_mode; k >= 1; --k) {
    std::vector<Gate> rotations;
    std::vector<Gate> phases;
    for (const Gate& g : seq.gates) {
      if (g.mode != k) continue;
      (g.kind == GateKind::rotation ? rotations : phases).push_back(g);
    }
    std::stable_sort(rotations.begin(), rotations.end(),
                     [](const Gate& a, const Gate& b) { return a.position < b.position; });
    out.insert(out.end(), rotations.begin(), rotations.end());
    out.insert(out.end(), phases.begin(), phases.end());
  }
  return out;
}

/// Replay folding on a coefficient matrix (test and audit helper).
inline CMatrix apply_folding(const GateSequence& seq, CMatrix w) {
  for (const Gate& g : seq.gates) {
    if (g.kind == GateKind::phase) {
      w.row(g.position - 1) *= std::polar(1.0, -g.angle);
    } else {
      detail::fold_rotation(w, g.position - 1, g.angle);
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// JSON: {"n_sites", "n_bosons", "residual_occupations": [...],
//        "gates": [{"kind": "phase"|"rotation", "site"|"bond": int, "angle", "mode"}]}
// Angles are written with 17 significant digits.

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string to_json(const GateSequence& seq) {
  std::ostringstream os;
  os << "{\n  \"n_sites\": " << seq.n_sites << ",\n  \"n_bosons\": " << seq.n_bosons
     << ",\n  \"residual_occupations\": [";
  for (std::size_t i = 0; i < seq.residual_occupations.size(); ++i) {
    os << (i ? ", " : "") << seq.residual_occupations[i];
  }
  os << "],\n  \"gates\": [";
  for (std::size_t i = 0; i < seq.gates.size(); ++i) {
    const Gate& g = seq.gates[i];
    const bool phase = g.kind == GateKind::phase;
    os << (i ? ",\n" : "\n") << "    {\"kind\": \"" << (phase ? "phase" : "rotation") << "\", \""
       << (phase ? "site" : "bond") << "\": " << g.position << ", \"angle\": " << format_double(g.angle)
       << ", \"mode\": " << g.mode << "}";
  }
  os << (seq.gates.empty() ? "]\n}\n" : "\n  ]\n}\n");
  return os.str();
}

inline GateSequence gate_sequence_from_json(const std::string& text) {
  GateSequence seq;
  try {
    const auto doc = nlohmann::json::parse(text);
    seq.n_sites = doc.at("n_sites").get<int>();
    seq.n_bosons = doc.at("n_bosons").get<int>();
    seq.residual_occupations = doc.at("residual_occupations").get<std::vector<int>>();
    for (const auto& item : doc.at("gates")) {
      Gate g;
      const auto kind = item.at("kind").get<std::string>();
      if (kind == "phase") {
        g.kind = GateKind::phase;
        g.position = item.at("site").get<int>();
      } else if (kind == "rotation") {
        g.kind = GateKind::rotation;
        g.position = item.at("bond").get<int>();
      } else {
        throw InvalidInput("gate sequence: unknown gate kind '" + kind + "'");
      }
      g.angle = item.at("angle").get<double>();
      g.mode = item.at("mode").get<int>();
      seq.gates.push_back(g);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("gate sequence: malformed JSON: ") + e.what());
  }
  return seq;
}

}  // namespace bosefold
