#pragma once

// Drivers for the ring-model experiments: quench (fold/unfold at every time
// point checked against exact evolution), energy eigenstates built from
// plane-wave modes, a bond-capped quench on a larger ring, and a randomized
// fold/unfold round-trip check.

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bosefold/errors.hpp"
#include "bosefold/fock.hpp"
#include "bosefold/folding.hpp"
#include "bosefold/mps.hpp"
#include "bosefold/sb_dynamics.hpp"
#include "bosefold/unfold.hpp"

namespace bosefold {

struct ExperimentConfig {
  int n_sites = 8;
  int n_bosons = 8;
  double t_max = 10.0;
  double dt = 0.25;
  std::size_t chi_cap = kUnboundedChi;
  std::uint64_t seed = 1;
  int cases = 100;
  std::uint64_t budget = kDefaultBasisBudget;
  std::string out_dir = ".";

  void validate() const {
    if (n_sites < 2) throw InvalidInput("config: N must be >= 2");
    if (n_bosons < 1) throw InvalidInput("config: M must be >= 1");
    if (!(t_max >= 0.0)) throw InvalidInput("config: t_max must be >= 0");
    if (!(dt > 0.0)) throw InvalidInput("config: dt must be > 0");
    if (cases < 0) throw InvalidInput("config: cases must be >= 0");
  }

  std::vector<double> times() const {
    std::vector<double> t;
    const auto steps = static_cast<long>(std::floor(t_max / dt + 1e-9));
    for (long k = 0; k <= steps; ++k) t.push_back(static_cast<double>(k) * dt);
    return t;
  }
};

// ---------------------------------------------------------------------------
// CSV helpers: header row, '.' decimal separator, 17 significant digits.

inline std::string csv_number(double x) { return format_double(x); }
inline std::string csv_number(const std::optional<double>& x) { return x ? format_double(*x) : std::string{}; }

// ---------------------------------------------------------------------------
// Quench from one boson per site.

struct QuenchRow {
  double t = 0.0;
  double entropy = 0.0;                  // bond 1, from the MPS
  std::optional<double> delta;           // 1 - |<mps|exact>|^2
  std::optional<double> oracle_entropy;  // site-1 entropy of the exact state
  std::size_t chi_max = 0;
  double step_discarded = 0.0;    // discarded weight of this time point's unfolding
  double discarded_weight = 0.0;  // running sum over the time grid
  double max_norm_deviation = 0.0;
  std::vector<double> spectrum;  // squared Schmidt values of bond 1
};

struct QuenchOptions {
  bool with_oracle = true;
  std::ostream* log = nullptr;
};

inline std::vector<QuenchRow> run_quench(const ExperimentConfig& config, QuenchOptions opts = {}) {
  config.validate();
  if (config.n_bosons != config.n_sites) {
    throw InvalidInput("quench: one boson per site needs M = N (got N=" + std::to_string(config.n_sites) +
                       ", M=" + std::to_string(config.n_bosons) + ")");
  }
  const int n = config.n_sites;
  const HermitianMatrix h = ring_hamiltonian(n);
  const EigenSystem es = hermitian_eigendecompose(h);
  const ModeSet start = one_boson_per_site(n);

  std::optional<Propagator> exact;
  std::optional<DenseState> initial;
  if (opts.with_oracle) {
    try {
      auto basis = enumerate_basis(n, config.n_bosons, config.budget);
      exact.emplace(build_hamiltonian(h, *basis));
      initial = basis_state(basis, std::vector<int>(static_cast<std::size_t>(n), 1));
    } catch (const BudgetExceeded& e) {
      if (opts.log) *opts.log << "warning: " << e.what() << "; running without the exact reference\n";
    }
  }

  MpsOptions mps_options;
  mps_options.chi_cap = config.chi_cap;
  std::vector<QuenchRow> rows;
  double running = 0.0;
  for (double t : config.times()) {
    const ModeSet modes = propagate_modes(es, t, start);
    const GateSequence gates = fold(modes);
    QuenchRow row;
    row.t = t;
    const MpsState psi = unfold_to_mps(gates, mps_options, [&](const Gate& g, const MpsState& state) {
      if (g.kind == GateKind::rotation) {
        row.max_norm_deviation = std::max(row.max_norm_deviation, state.last_norm_deviation());
      }
    });
    row.entropy = entropy(psi, 1);
    row.spectrum = schmidt_spectrum(psi, 1);
    row.chi_max = psi.max_bond_dimension();
    row.step_discarded = psi.discarded_weight();
    running += row.step_discarded;
    row.discarded_weight = running;
    if (exact) {
      const DenseState reference = exact->evolve(*initial, t);
      const DenseState mps_dense = to_dense(psi, reference.basis);
      row.delta = 1.0 - std::norm(overlap(mps_dense, reference));
      row.oracle_entropy = von_neumann_entropy(single_site_rdm(reference, 1));
    }
    if (opts.log) {
      *opts.log << "t=" << t << " S=" << row.entropy << " chi=" << row.chi_max;
      if (row.delta) *opts.log << " delta=" << *row.delta;
      *opts.log << '\n';
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_quench_csv(std::ostream& os, const std::vector<QuenchRow>& rows) {
  os << "t,S,delta,chi_max,discarded_weight\n";
  for (const auto& r : rows) {
    os << csv_number(r.t) << ',' << csv_number(r.entropy) << ',' << csv_number(r.delta) << ',' << r.chi_max << ','
       << csv_number(r.discarded_weight) << '\n';
  }
}

inline void write_truncated_csv(std::ostream& os, const std::vector<QuenchRow>& rows) {
  os << "t,S,discarded_weight\n";
  for (const auto& r : rows) os << csv_number(r.t) << ',' << csv_number(r.entropy) << ',' << csv_number(r.discarded_weight) << '\n';
}

/// Grid indices at which the bond-1 spectrum is dumped: about t_max/8, t_max/4,
/// t_max/2 and t_max.
inline std::vector<std::size_t> spectrum_snapshot_indices(std::size_t n_rows) {
  std::vector<std::size_t> idx;
  if (n_rows == 0) return idx;
  for (double frac : {0.125, 0.25, 0.5, 1.0}) {
    const auto k = static_cast<std::size_t>(std::lround(frac * static_cast<double>(n_rows - 1)));
    if (idx.empty() || idx.back() != k) idx.push_back(k);
  }
  return idx;
}

inline void write_spectrum_csv(std::ostream& os, const std::vector<QuenchRow>& rows) {
  os << "t,index,eigenvalue\n";
  for (std::size_t k : spectrum_snapshot_indices(rows.size())) {
    const auto& r = rows[k];
    for (std::size_t i = 0; i < r.spectrum.size(); ++i) {
      os << csv_number(r.t) << ',' << i + 1 << ',' << csv_number(r.spectrum[i]) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Energy eigenstates from products of plane-wave modes.

/// Partitions of m into at most max_parts parts, descending parts, largest
/// first part first: (8), (7,1), (6,2), (6,1,1), ...
inline std::vector<std::vector<int>> partitions(int m, int max_parts) {
  std::vector<std::vector<int>> out;
  std::vector<int> current;
  auto rec = [&](auto&& self, int remaining, int cap) -> void {
    if (remaining == 0) {
      out.push_back(current);
      return;
    }
    if (static_cast<int>(current.size()) == max_parts) return;
    for (int part = std::min(remaining, cap); part >= 1; --part) {
      current.push_back(part);
      self(self, remaining - part, part);
      current.pop_back();
    }
  };
  rec(rec, m, m);
  return out;
}

/// "17"-style label: parts concatenated in ascending order when all are single
/// digits, comma-separated otherwise.
inline std::string partition_label(std::vector<int> parts) {
  std::sort(parts.begin(), parts.end());
  const bool digits = std::all_of(parts.begin(), parts.end(), [](int p) { return p <= 9; });
  std::string label;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!digits && i) label += ',';
    label += std::to_string(parts[i]);
  }
  return label;
}

struct EigenstateRow {
  std::string label;
  std::vector<int> parts;  // descending; part q sits in plane-wave mode l = q + 1
  double entropy = 0.0;
  std::optional<double> energy;
  double expected_energy = 0.0;
  std::optional<double> energy_error;
};

inline std::vector<EigenstateRow> run_eigenstates(const ExperimentConfig& config, std::ostream* log = nullptr) {
  config.validate();
  const int n = config.n_sites;
  const int m = config.n_bosons;
  const EigenSystem ref = reference_ring_eigensystem(n);

  BasisPtr basis;
  std::optional<SparseOperator> hamiltonian;
  try {
    basis = enumerate_basis(n, m, config.budget);
    hamiltonian = build_hamiltonian(ring_hamiltonian(n), *basis);
  } catch (const BudgetExceeded& e) {
    if (log) *log << "warning: " << e.what() << "; energies not checked\n";
  }

  MpsOptions mps_options;
  mps_options.chi_cap = config.chi_cap;
  std::vector<EigenstateRow> rows;
  for (const auto& parts : partitions(m, n)) {
    const auto k = static_cast<Eigen::Index>(parts.size());
    EigenstateRow row;
    row.parts = parts;
    row.label = partition_label(parts);
    for (Eigen::Index q = 0; q < k; ++q) row.expected_energy += parts[static_cast<std::size_t>(q)] * ref.values[q];
    const ModeSet modes(ref.vectors.leftCols(k), parts);
    const MpsState psi = modes_to_mps(modes, mps_options);
    row.entropy = entropy(psi, 1);
    if (hamiltonian) {
      row.energy = energy_expectation(to_dense(psi, basis), *hamiltonian);
      row.energy_error = std::abs(*row.energy - row.expected_energy);
    }
    if (log) *log << row.label << " S=" << row.entropy << '\n';
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_eigenstates_csv(std::ostream& os, const std::vector<EigenstateRow>& rows) {
  os << "label,S,dE\n";
  for (const auto& r : rows) os << r.label << ',' << csv_number(r.entropy) << ',' << csv_number(r.energy_error) << '\n';
}

// ---------------------------------------------------------------------------
// Randomized fold/unfold round trip against the dense construction.

/// Orthonormal columns from a Householder QR of a complex Gaussian matrix.
inline CMatrix random_orthonormal_columns(int n_rows, int n_cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  CMatrix a(n_rows, n_cols);
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = cplx{gauss(rng), gauss(rng)};
  Eigen::HouseholderQR<CMatrix> qr(a);
  return qr.householderQ() * CMatrix::Identity(n_rows, n_cols);
}

/// Random composition of m into k positive parts.
inline std::vector<int> random_composition(int m, int k, std::mt19937_64& rng) {
  std::vector<int> parts(static_cast<std::size_t>(k), 1);
  std::uniform_int_distribution<int> pick(0, k - 1);
  for (int extra = m - k; extra > 0; --extra) ++parts[static_cast<std::size_t>(pick(rng))];
  return parts;
}

struct RoundtripRow {
  std::uint64_t seed = 0;
  int n_sites = 0;
  int n_bosons = 0;
  int n_modes = 0;
  double delta = 0.0;
};

inline constexpr double kRoundtripFailure = 1e-8;

inline RoundtripRow roundtrip_case(std::uint64_t seed, int max_sites = 6, int max_bosons = 4) {
  std::mt19937_64 rng(seed);
  RoundtripRow row;
  row.seed = seed;
  row.n_sites = std::uniform_int_distribution<int>(2, max_sites)(rng);
  row.n_bosons = std::uniform_int_distribution<int>(1, max_bosons)(rng);
  row.n_modes = std::uniform_int_distribution<int>(1, std::min(row.n_sites, row.n_bosons))(rng);
  const ModeSet modes(random_orthonormal_columns(row.n_sites, row.n_modes, rng),
                      random_composition(row.n_bosons, row.n_modes, rng));
  const DenseState exact = apply_mode_polynomial(modes, enumerate_basis(row.n_sites, row.n_bosons));
  const MpsState psi = modes_to_mps(modes);
  row.delta = 1.0 - std::norm(overlap(to_dense(psi, exact.basis), exact));
  return row;
}

inline std::vector<RoundtripRow> run_roundtrip(const ExperimentConfig& config) {
  if (config.cases < 0) throw InvalidInput("config: cases must be >= 0");
  std::vector<RoundtripRow> rows;
  for (int c = 0; c < config.cases; ++c) rows.push_back(roundtrip_case(config.seed + static_cast<std::uint64_t>(c)));
  return rows;
}

inline void write_roundtrip_csv(std::ostream& os, const std::vector<RoundtripRow>& rows) {
  os << "seed,N,M,Nprime,delta\n";
  for (const auto& r : rows) {
    os << r.seed << ',' << r.n_sites << ',' << r.n_bosons << ',' << r.n_modes << ',' << csv_number(r.delta) << '\n';
  }
}

}  // namespace bosefold
