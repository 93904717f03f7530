#pragma once

// JSON snapshot of an MPS in Vidal form.
//
//   {
//     "format": "bosefold-mps-1",
//     "site_order": "site 1 is the right end; arrays run from site N down to site 1",
//     "n_sites": N, "n_bosons": M, "discarded_weight": w,
//     "chi": [chi of bond N, ..., chi of bond 0],
//     "bonds": [{"bond": n, "lambda": [...], "charges": [...]}, ...],   // n = N..0
//     "sites": [{"site": n, "shape": [chi_left, d, chi_right],
//                "gamma_re": [...], "gamma_im": [...]}, ...]            // n = N..1
//   }
//
// chi_left is the bond towards site n+1, chi_right the bond towards site n-1.
// Gamma is flattened row-major over (left, p, right). Gamma = B / lambda_right
// with Schmidt values below 1e-12 treated as zero (pseudo-inverse).

#include <nlohmann/json.hpp>

#include <string>

#include "bosefold/mps.hpp"

namespace bosefold {

inline constexpr double kPseudoInverseCutoff = 1e-12;

inline nlohmann::json mps_snapshot(const MpsState& state) {
  using nlohmann::json;
  const int n = state.num_sites();
  const int d = state.local_dim();
  json doc;
  doc["format"] = "bosefold-mps-1";
  doc["site_order"] = "site 1 is the right end; arrays run from site N down to site 1";
  doc["n_sites"] = n;
  doc["n_bosons"] = state.num_bosons();
  doc["discarded_weight"] = state.discarded_weight();
  json chi = json::array();
  json bonds = json::array();
  for (int b = 0; b <= n; ++b) {
    const RVector& lam = state.storage_lambda(b);
    chi.push_back(lam.size());
    json entry;
    entry["bond"] = n - b;
    entry["lambda"] = std::vector<double>(lam.data(), lam.data() + lam.size());
    entry["charges"] = state.storage_charges(b);
    bonds.push_back(entry);
  }
  doc["chi"] = chi;
  doc["bonds"] = bonds;
  json sites = json::array();
  for (int i = 0; i < n; ++i) {
    const auto& t = state.storage_tensor(i);
    const RVector& right = state.storage_lambda(i + 1);
    const Eigen::Index cl = t.front().rows();
    const Eigen::Index cr = t.front().cols();
    std::vector<double> re;
    std::vector<double> im;
    re.reserve(static_cast<std::size_t>(cl * d * cr));
    im.reserve(re.capacity());
    for (Eigen::Index a = 0; a < cl; ++a) {
      for (int p = 0; p < d; ++p) {
        for (Eigen::Index b = 0; b < cr; ++b) {
          const double inv = right[b] > kPseudoInverseCutoff ? 1.0 / right[b] : 0.0;
          const cplx g = t[static_cast<std::size_t>(p)](a, b) * inv;
          re.push_back(g.real());
          im.push_back(g.imag());
        }
      }
    }
    json entry;
    entry["site"] = n - i;
    entry["shape"] = {cl, d, cr};
    entry["gamma_re"] = std::move(re);
    entry["gamma_im"] = std::move(im);
    sites.push_back(std::move(entry));
  }
  doc["sites"] = std::move(sites);
  return doc;
}

/// Rebuild an MPS from a snapshot (B = Gamma * lambda_right).
inline MpsState mps_from_snapshot(const nlohmann::json& doc, MpsOptions options = {}) {
  try {
    if (doc.at("format").get<std::string>() != "bosefold-mps-1") throw InvalidInput("mps snapshot: unknown format");
    const int n = doc.at("n_sites").get<int>();
    const int m = doc.at("n_bosons").get<int>();
    const int d = m + 1;
    MpsState::RawData raw;
    raw.discarded_weight = doc.at("discarded_weight").get<double>();
    const auto& bonds = doc.at("bonds");
    if (static_cast<int>(bonds.size()) != n + 1) throw InvalidInput("mps snapshot: wrong number of bonds");
    for (const auto& b : bonds) {
      const auto lam = b.at("lambda").get<std::vector<double>>();
      raw.lambda.push_back(Eigen::Map<const RVector>(lam.data(), static_cast<Eigen::Index>(lam.size())));
      raw.charges.push_back(b.at("charges").get<std::vector<int>>());
    }
    const auto& sites = doc.at("sites");
    if (static_cast<int>(sites.size()) != n) throw InvalidInput("mps snapshot: wrong number of sites");
    for (int i = 0; i < n; ++i) {
      const auto& s = sites[static_cast<std::size_t>(i)];
      const auto shape = s.at("shape").get<std::vector<Eigen::Index>>();
      const auto re = s.at("gamma_re").get<std::vector<double>>();
      const auto im = s.at("gamma_im").get<std::vector<double>>();
      if (shape.size() != 3 || shape[1] != d || re.size() != static_cast<std::size_t>(shape[0] * d * shape[2]) ||
          im.size() != re.size()) {
        throw InvalidInput("mps snapshot: inconsistent tensor shape at storage index " + std::to_string(i));
      }
      const RVector& right = raw.lambda[static_cast<std::size_t>(i + 1)];
      std::vector<CMatrix> t(static_cast<std::size_t>(d), CMatrix::Zero(shape[0], shape[2]));
      std::size_t k = 0;
      for (Eigen::Index a = 0; a < shape[0]; ++a)
        for (int p = 0; p < d; ++p)
          for (Eigen::Index b = 0; b < shape[2]; ++b, ++k) t[static_cast<std::size_t>(p)](a, b) = cplx{re[k], im[k]} * right[b];
      raw.tensors.push_back(std::move(t));
    }
    return MpsState(n, m, options, std::move(raw));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("mps snapshot: malformed JSON: ") + e.what());
  }
}

}  // namespace bosefold
