#include <gtest/gtest.h>

#include "bosefold/mps.hpp"
#include "bosefold/snapshot.hpp"
#include "test_support.hpp"

using namespace bosefold;
using bosefold::testing::dense_phase;
using bosefold::testing::dense_rotation;
using bosefold::testing::rotation_block_reference;

namespace {

struct Step {
  bool rotation;
  int position;
  double angle;
};

std::vector<Step> random_circuit(int n, int length, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_int_distribution<int> site(1, n);
  std::uniform_int_distribution<int> bond(1, std::max(1, n - 1));
  std::bernoulli_distribution coin(0.6);
  std::vector<Step> steps;
  for (int i = 0; i < length; ++i) {
    const bool rot = n > 1 && coin(rng);
    steps.push_back({rot, rot ? bond(rng) : site(rng), angle(rng)});
  }
  return steps;
}

void run(MpsState& psi, const std::vector<Step>& steps) {
  for (const Step& s : steps) {
    if (s.rotation) psi.apply_two_site(s.position, rotation_gate(s.angle, psi.num_bosons()));
    else psi.apply_single_site(s.position, phase_gate(s.angle, psi.num_bosons()));
  }
}

DenseState run(DenseState psi, const std::vector<Step>& steps) {
  for (const Step& s : steps) psi = s.rotation ? dense_rotation(psi, s.position, s.angle) : dense_phase(psi, s.position, s.angle);
  return psi;
}

std::vector<int> spread(int n, int m) {
  std::vector<int> occ(static_cast<std::size_t>(n), 0);
  for (int k = 0; k < m; ++k) occ[static_cast<std::size_t>(k % n)] += 1;
  return occ;
}

}  // namespace

TEST(MpsFromFock, UnitBasisVector) {
  const auto basis = enumerate_basis(2, 3);
  const auto psi = mps_from_fock({0, 3}, 3);
  EXPECT_NEAR(std::abs(overlap(to_dense(psi, basis), basis_state(basis, {0, 3}))), 1.0, 1e-15);
  const auto chain = mps_from_fock({1, 0, 2, 1}, 4);
  const auto dense = to_dense(chain);
  EXPECT_EQ(dense.amplitudes[static_cast<Eigen::Index>(dense.basis->index_of({1, 0, 2, 1}))], cplx(1.0));
  EXPECT_NEAR(dense.norm(), 1.0, 0.0);
  EXPECT_EQ(chain.max_bond_dimension(), 1u);
  EXPECT_EQ(chain.bond_charges(0), std::vector<int>{0});
  EXPECT_EQ(chain.bond_charges(2), std::vector<int>{1});
  EXPECT_EQ(chain.bond_charges(4), std::vector<int>{4});
}

TEST(MpsFromFock, RejectsBadOccupations) {
  EXPECT_THROW(mps_from_fock({1, 1}, 3), InvalidInput);
  EXPECT_THROW(mps_from_fock({-1, 2}, 1), InvalidInput);
  EXPECT_THROW(mps_from_fock({}, 0), InvalidDimension);
}

TEST(PhaseGate, Entries) {
  const auto g = phase_gate(kPi / 2, 3);
  ASSERT_EQ(g.diagonal.size(), 4);
  EXPECT_LE(std::abs(g.diagonal[0] - 1.0), 1e-15);
  EXPECT_LE(std::abs(g.diagonal[1] - cplx(0.0, 1.0)), 1e-15);
  EXPECT_LE(std::abs(g.diagonal[2] + 1.0), 1e-15);
  EXPECT_LE(std::abs(g.diagonal[3] - cplx(0.0, -1.0)), 1e-15);
}

TEST(PhaseGate, MultipliesModeCoefficient) {
  // one boson in a c_1 a_1^dag + c_2 a_2^dag; exp(i pi/2 n_1) turns c_1 into i c_1
  const auto basis = enumerate_basis(2, 1);
  MpsState psi = mps_from_fock({1, 0}, 1);
  psi.apply_two_site(1, rotation_gate(1.1, 1));
  const auto before = to_dense(psi, basis);
  psi.apply_single_site(1, phase_gate(kPi / 2, 1));
  const auto after = to_dense(psi, basis);
  const auto i1 = static_cast<Eigen::Index>(basis->index_of({1, 0}));
  const auto i2 = static_cast<Eigen::Index>(basis->index_of({0, 1}));
  EXPECT_LE(std::abs(after.amplitudes[i1] - cplx(0.0, 1.0) * before.amplitudes[i1]), 1e-15);
  EXPECT_LE(std::abs(after.amplitudes[i2] - before.amplitudes[i2]), 1e-15);
}

TEST(RotationGate, MatchesBinomialExpansion) {
  for (double theta : {0.0, 0.3, kPi / 2, 2.0, kPi, -1.2}) {
    const auto g = rotation_gate(theta, 6);
    for (int n = 0; n <= 6; ++n) {
      const CMatrix& block = g.blocks[static_cast<std::size_t>(n)];
      EXPECT_LE((block.real() - rotation_block_reference(theta, n)).cwiseAbs().maxCoeff(), 1e-12)
          << "theta=" << theta << " n=" << n;
      EXPECT_EQ(block.imag().cwiseAbs().maxCoeff(), 0.0);
    }
  }
}

TEST(RotationGate, BlocksAreSpecialOrthogonal) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = rotation_gate(angle(rng), 10);
    for (const CMatrix& b : g.blocks) {
      const CMatrix id = CMatrix::Identity(b.rows(), b.cols());
      EXPECT_LE(max_abs_diff(CMatrix(b.transpose() * b), id), 1e-12);
      EXPECT_NEAR(b.real().determinant(), 1.0, 1e-10);
    }
    // unitary on pair states with p_j + p_{j+1} <= M, zero elsewhere
    const CMatrix full = g.dense();
    CMatrix projector = CMatrix::Zero(full.rows(), full.cols());
    for (int p = 0; p <= 10; ++p)
      for (int q = 0; p + q <= 10; ++q) projector(p * 11 + q, p * 11 + q) = 1.0;
    EXPECT_LE(max_abs_diff(CMatrix(full.adjoint() * full), projector), 1e-12);
  }
}

TEST(RotationGate, Examples) {
  const auto id = rotation_gate(0.0, 3);
  for (const CMatrix& b : id.blocks) EXPECT_LE(max_abs_diff(b, CMatrix::Identity(b.rows(), b.cols())), 1e-15);
  // quarter turn of a spin 1
  const CMatrix& b2 = rotation_gate(kPi / 2, 2).blocks[2];
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(b2(0, 2).real()), 0.5, 1e-14);
  EXPECT_NEAR(std::abs(b2(1, 2).real()), r, 1e-14);
  EXPECT_NEAR(std::abs(b2(2, 2).real()), 0.5, 1e-14);
  // theta = pi moves a boson from site j to site j+1 with a plus sign
  const CMatrix& b1 = rotation_gate(kPi, 1).blocks[1];
  EXPECT_NEAR(b1(0, 1).real(), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(b1(1, 1)), 0.0, 1e-15);
}

TEST(RotationGate, GeneratorIsHermitian) {
  for (int n = 0; n <= 5; ++n) {
    const CMatrix j = rotation_generator_block(n);
    EXPECT_LE(max_abs_diff(j, CMatrix(j.adjoint())), 0.0);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(j);
    for (int k = 0; k <= n; ++k) EXPECT_NEAR(es.eigenvalues()[k], -0.5 * n + k, 1e-12);
  }
}

TEST(SingleSite, LeavesSchmidtValuesAlone) {
  std::mt19937_64 rng(8);
  MpsState psi = mps_from_fock({1, 1, 1, 1}, 4);
  run(psi, random_circuit(4, 12, rng));
  std::vector<RVector> before;
  for (int b = 0; b <= 4; ++b) before.push_back(psi.schmidt_values(b));
  SingleSiteGate g{CVector(5)};
  for (int p = 0; p < 5; ++p) g.diagonal[p] = std::polar(1.0, 0.37 * p * p);
  for (int site = 1; site <= 4; ++site) psi.apply_single_site(site, g);
  for (int b = 0; b <= 4; ++b) EXPECT_TRUE(psi.schmidt_values(b) == before[static_cast<std::size_t>(b)]);
}

TEST(SingleSite, IdentityAndGlobalPhase) {
  std::mt19937_64 rng(3);
  MpsState psi = mps_from_fock({2, 0, 1}, 3);
  run(psi, random_circuit(3, 6, rng));
  const auto before = to_dense(psi);
  psi.apply_single_site(2, phase_gate(0.0, 3));
  EXPECT_TRUE(to_dense(psi).amplitudes == before.amplitudes);
  // on a product state a phase gate is a global phase exp(i phi n)
  MpsState prod = mps_from_fock({2, 0, 1}, 3);
  prod.apply_single_site(1, phase_gate(0.4, 3));
  EXPECT_LE(std::abs(to_dense(prod).amplitudes.sum() - std::polar(1.0, 0.8)), 1e-15);
}

TEST(SingleSite, Errors) {
  MpsState psi = mps_from_fock({1, 0}, 1);
  EXPECT_THROW(psi.apply_single_site(0, phase_gate(0.1, 1)), OutOfRange);
  EXPECT_THROW(psi.apply_single_site(3, phase_gate(0.1, 1)), OutOfRange);
  EXPECT_THROW(psi.apply_single_site(1, phase_gate(0.1, 2)), DimensionMismatch);
}

TEST(TwoSite, QuarterTurnMakesBellPair) {
  const auto basis = enumerate_basis(2, 1);
  MpsState psi = mps_from_fock({1, 0}, 1);
  psi.apply_two_site(1, rotation_gate(kPi / 2, 1));
  const RVector& s = psi.schmidt_values(1);
  ASSERT_EQ(s.size(), 2);
  EXPECT_NEAR(s[0], 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(s[1], 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(entropy(psi, 1), std::log(2.0), 1e-14);
  const auto dense = to_dense(psi, basis);
  EXPECT_NEAR(von_neumann_entropy(single_site_rdm(dense, 1)), std::log(2.0), 1e-14);
  const auto ref = dense_rotation(basis_state(basis, {1, 0}), 1, kPi / 2);
  EXPECT_LE((dense.amplitudes - ref.amplitudes).norm(), 1e-15);
}

TEST(TwoSite, HalfTurnHopsTheBoson) {
  MpsState psi = mps_from_fock({1, 0, 0}, 1);
  psi.apply_two_site(1, rotation_gate(kPi, 1));
  const auto dense = to_dense(psi);
  EXPECT_NEAR(dense.amplitudes[static_cast<Eigen::Index>(dense.basis->index_of({0, 1, 0}))].real(), 1.0, 1e-15);
  EXPECT_EQ(psi.max_bond_dimension(), 1u);
}

TEST(TwoSite, IdentityGateKeepsSpectrum) {
  std::mt19937_64 rng(14);
  MpsState psi = mps_from_fock({1, 2, 0, 1}, 4);
  run(psi, random_circuit(4, 15, rng));
  const auto before = to_dense(psi);
  const auto spec = schmidt_spectrum(psi, 2);
  psi.apply_two_site(2, rotation_gate(0.0, 4));
  const auto after = schmidt_spectrum(psi, 2);
  ASSERT_EQ(after.size(), spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) EXPECT_NEAR(after[k], spec[k], 1e-13);
  EXPECT_LE((to_dense(psi).amplitudes - before.amplitudes).norm(), 1e-12);
}

TEST(TwoSite, Errors) {
  MpsState psi = mps_from_fock({1, 0, 0}, 1);
  EXPECT_THROW(psi.apply_two_site(0, rotation_gate(0.1, 1)), OutOfRange);
  EXPECT_THROW(psi.apply_two_site(3, rotation_gate(0.1, 1)), OutOfRange);
  EXPECT_THROW(psi.apply_two_site(1, rotation_gate(0.1, 2)), DimensionMismatch);
  EXPECT_THROW(psi.schmidt_values(4), OutOfRange);
}

TEST(Circuit, MatchesDenseReplay) {
  std::mt19937_64 rng(23);
  for (auto [n, m] : std::vector<std::pair<int, int>>{{3, 2}, {4, 3}, {5, 4}, {2, 5}, {6, 2}}) {
    SCOPED_TRACE(std::to_string(n) + "," + std::to_string(m));
    const auto occ = spread(n, m);
    const auto steps = random_circuit(n, 30, rng);
    MpsState psi = mps_from_fock(occ, m);
    run(psi, steps);
    const auto basis = enumerate_basis(n, m);
    const auto ref = run(basis_state(basis, occ), steps);
    EXPECT_LE((to_dense(psi, basis).amplitudes - ref.amplitudes).norm(), 1e-10);
    EXPECT_NEAR(std::abs(overlap(psi, ref)), 1.0, 1e-10);
    EXPECT_NEAR(std::abs(overlap(ref, psi)), 1.0, 1e-10);
    for (int bond = 1; bond < n; ++bond) {
      // entanglement of site 1 against the oracle reduced density matrix
      if (bond == 1) EXPECT_NEAR(entropy(psi, 1), von_neumann_entropy(single_site_rdm(ref, 1)), 1e-10);
    }
  }
}

TEST(Circuit, BlockSparseAgreesWithDense) {
  std::mt19937_64 rng(37);
  MpsOptions dense_opts;
  dense_opts.block_sparse = false;
  for (auto [n, m] : std::vector<std::pair<int, int>>{{4, 4}, {5, 3}}) {
    const auto steps = random_circuit(n, 40, rng);
    MpsState a = mps_from_fock(spread(n, m), m);
    MpsState b = mps_from_fock(spread(n, m), m, dense_opts);
    run(a, steps);
    run(b, steps);
    EXPECT_LE((to_dense(a).amplitudes - to_dense(b).amplitudes).norm(), 1e-10);
    for (int bond = 0; bond <= n; ++bond) {
      const auto sa = schmidt_spectrum(a, bond);
      const auto sb = schmidt_spectrum(b, bond);
      ASSERT_EQ(sa.size(), sb.size());
      for (std::size_t k = 0; k < sa.size(); ++k) EXPECT_NEAR(sa[k], sb[k], 1e-10);
    }
    EXPECT_TRUE(b.bond_charges(2).empty() || b.bond_charges(2).size() == b.bond_dimension(2));
  }
}

// Invariants after every update: normalized and sorted Schmidt values,
// conserved particle number, no amplitude outside the charge sectors.
TEST(Circuit, InvariantsAfterEveryGate) {
  std::mt19937_64 rng(52);
  const int n = 5;
  const int m = 4;
  MpsState psi = mps_from_fock(spread(n, m), m);
  for (const Step& s : random_circuit(n, 60, rng)) {
    if (s.rotation) psi.apply_two_site(s.position, rotation_gate(s.angle, m));
    else psi.apply_single_site(s.position, phase_gate(s.angle, m));
    double total = 0.0;
    for (int site = 1; site <= n; ++site) total += local_occupation(psi, site);
    EXPECT_NEAR(total, m, 1e-10);
    EXPECT_LE(psi.last_charge_leak(), 1e-12);
    EXPECT_LE(psi.last_norm_deviation(), 1e-12);
    for (int bond = 0; bond <= n; ++bond) {
      const RVector& lam = psi.schmidt_values(bond);
      EXPECT_NEAR(lam.squaredNorm(), 1.0, 1e-12);
      for (Eigen::Index k = 1; k < lam.size(); ++k) EXPECT_GE(lam[k - 1], lam[k]);
      const auto& q = psi.bond_charges(bond);
      ASSERT_EQ(q.size(), static_cast<std::size_t>(lam.size()));
      for (int c : q) {
        EXPECT_GE(c, 0);
        EXPECT_LE(c, m);
      }
    }
  }
  EXPECT_LE(psi.discarded_weight(), 1e-20 * 60);
}

TEST(Truncation, OverlapBoundedByDiscardedWeight) {
  std::mt19937_64 rng(61);
  for (std::size_t cap : {2u, 3u, 5u}) {
    const auto steps = random_circuit(5, 40, rng);
    MpsOptions opts;
    opts.chi_cap = cap;
    MpsState exact = mps_from_fock({1, 1, 1, 1, 0}, 4);
    MpsState capped = mps_from_fock({1, 1, 1, 1, 0}, 4, opts);
    run(exact, steps);
    run(capped, steps);
    EXPECT_LE(capped.max_bond_dimension(), cap);
    EXPECT_GT(capped.discarded_weight(), 0.0);
    EXPECT_GE(std::abs(overlap(exact, capped)), 1.0 - capped.discarded_weight() - 1e-8) << "cap " << cap;
    // truncation spoils the orthonormality of neighbouring bonds, so the norm
    // drifts, but only by the discarded amount
    EXPECT_NEAR(std::abs(overlap(capped, capped)), 1.0, capped.discarded_weight());
  }
}

TEST(Entropy, Examples) {
  const auto prod = mps_from_fock({3}, 3);
  EXPECT_EQ(entropy(prod, 0), 0.0);
  EXPECT_EQ(entropy(prod, 1), 0.0);
  EXPECT_EQ(schmidt_spectrum(prod, 1), std::vector<double>{1.0});
  EXPECT_NEAR(local_occupation(prod, 1), 3.0, 0.0);
}

TEST(Overlap, ProductStates) {
  const auto a = mps_from_fock({1, 0, 2}, 3);
  const auto b = mps_from_fock({0, 1, 2}, 3);
  EXPECT_EQ(overlap(a, b), cplx(0.0));
  EXPECT_EQ(overlap(a, a), cplx(1.0));
  EXPECT_THROW(overlap(a, mps_from_fock({1, 2}, 3)), DimensionMismatch);
}

TEST(ToDense, Budget) {
  const auto psi = mps_from_fock(std::vector<int>(16, 1), 16);
  EXPECT_THROW(to_dense(psi), BudgetExceeded);
  EXPECT_THROW(to_dense(psi, enumerate_basis(16, 2)), DimensionMismatch);
}

TEST(Snapshot, RoundTrip) {
  std::mt19937_64 rng(70);
  MpsState psi = mps_from_fock({1, 1, 1, 1}, 4);
  run(psi, random_circuit(4, 25, rng));
  const auto doc = mps_snapshot(psi);
  EXPECT_EQ(doc.at("format"), "bosefold-mps-1");
  EXPECT_EQ(doc.at("chi").size(), 5u);
  EXPECT_EQ(doc.at("bonds")[0].at("bond"), 4);
  EXPECT_EQ(doc.at("sites")[0].at("site"), 4);
  const auto back = mps_from_snapshot(nlohmann::json::parse(doc.dump()));
  EXPECT_LE((to_dense(back).amplitudes - to_dense(psi).amplitudes).norm(), 1e-12);
  for (int b = 0; b <= 4; ++b) EXPECT_TRUE(back.schmidt_values(b) == psi.schmidt_values(b));
  // the restored state still accepts gates
  MpsState more = back;
  more.apply_two_site(2, rotation_gate(0.7, 4));
  EXPECT_NEAR(std::abs(overlap(more, more)), 1.0, 1e-12);
}

TEST(Snapshot, GammaTimesLambdaGivesStoredTensor) {
  MpsState psi = mps_from_fock({1, 0}, 1);
  psi.apply_two_site(1, rotation_gate(kPi / 2, 1));
  const auto doc = mps_snapshot(psi);
  // site 1 (storage index 1) has right bond 0 with lambda = 1, so Gamma = B
  const auto& site1 = doc.at("sites")[1];
  EXPECT_EQ(site1.at("site"), 1);
  EXPECT_EQ(site1.at("shape"), (std::vector<int>{2, 2, 1}));
}

TEST(Snapshot, Malformed) {
  EXPECT_THROW(mps_from_snapshot(nlohmann::json::parse(R"({"format": "other"})")), InvalidInput);
  EXPECT_THROW(mps_from_snapshot(nlohmann::json::parse(R"({"format": "bosefold-mps-1"})")), InvalidInput);
}
