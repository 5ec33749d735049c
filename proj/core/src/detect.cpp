#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "blinddf/detect.hpp"

namespace blinddf::detect {

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::Linear: return "Linear";
    case TopologyKind::SDF: return "S-DF";
    case TopologyKind::PDF: return "P-DF";
    case TopologyKind::SPADF: return "SPA-DF";
    case TopologyKind::ISPAS: return "ISPAS-DF";
    case TopologyKind::ISPAP: return "ISPAP-DF";
  }
  return "?";
}

TopologyKind parse_topology(std::string_view text) {
  std::string key;
  for (char c : text) {
    if (c == '-' || c == '_' || std::isspace(static_cast<unsigned char>(c))) continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (key.size() > 2 && key.ends_with("df") && key != "sdf" && key != "pdf") {
    key.resize(key.size() - 2);
  }
  if (key == "linear" || key == "l") return TopologyKind::Linear;
  if (key == "sdf" || key == "s") return TopologyKind::SDF;
  if (key == "pdf" || key == "p") return TopologyKind::PDF;
  if (key == "spa") return TopologyKind::SPADF;
  if (key == "ispas") return TopologyKind::ISPAS;
  if (key == "ispap") return TopologyKind::ISPAP;
  throw ConfigError("unknown topology '" + std::string(text) + "'");
}

bool is_iterative(TopologyKind kind) {
  return kind == TopologyKind::ISPAS || kind == TopologyKind::ISPAP;
}

Order order_users_by_power(std::span<const double> energies) {
  Order order(energies.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return energies[a] > energies[b]; });
  return order;
}

std::vector<Order> build_arbitration_orders(int K, int L) {
  if (K < 1) throw ConfigError("build_arbitration_orders: K must be positive");
  std::vector<int> offsets;
  switch (L) {
    case 1: offsets = {0}; break;
    case 2: offsets = {0}; break;
    case 4: offsets = {0, K / 4, K / 2}; break;
    case 8:
      for (int j = 0; j < 7; ++j) offsets.push_back(j * K / 8);
      break;
    default:
      throw ConfigError("unsupported branch count L = " + std::to_string(L) +
                        " (expected 1, 2, 4 or 8)");
  }
  std::vector<Order> seqs;
  for (int off : offsets) {
    Order s(K);
    for (int p = 0; p < K; ++p) s[p] = (p + off) % K;
    seqs.push_back(std::move(s));
  }
  if (L > 1) {
    Order rev(K);
    for (int p = 0; p < K; ++p) rev[p] = K - 1 - p;
    seqs.push_back(std::move(rev));
  }
  return seqs;
}

std::vector<RMat> build_arbitration_perms(int K, int L) {
  std::vector<RMat> perms;
  for (const auto& s : build_arbitration_orders(K, L)) {
    RMat m = RMat::Zero(K, K);
    for (int p = 0; p < K; ++p) m(p, s[p]) = 1.0;
    perms.push_back(std::move(m));
  }
  return perms;
}

Mask sdf_mask(const Order& order) {
  const int K = static_cast<int>(order.size());
  Mask m = Mask::Constant(K, K, false);
  for (int p = 0; p < K; ++p) {
    for (int q = 0; q < p; ++q) m(order[p], order[q]) = true;
  }
  return m;
}

Mask pdf_mask(int K) {
  Mask m = Mask::Constant(K, K, true);
  for (int k = 0; k < K; ++k) m(k, k) = false;
  return m;
}

Mask zero_mask(int K) { return Mask::Constant(K, K, false); }

DetectorTopology make_topology(TopologyKind kind, std::span<const double> powers, int branches,
                               int stages) {
  const int K = static_cast<int>(powers.size());
  if (K < 1) throw ConfigError("make_topology: at least one user required");
  if (stages != 1 && stages != 2) throw ConfigError("make_topology: stages must be 1 or 2");
  DetectorTopology t;
  t.kind = kind;
  t.K = K;
  t.order = order_users_by_power(powers);
  const bool spa = kind == TopologyKind::SPADF || is_iterative(kind);
  t.branches = spa ? branches : 1;
  t.stages = is_iterative(kind) ? stages : 1;
  t.branch_orders = build_arbitration_orders(K, t.branches);
  switch (kind) {
    case TopologyKind::Linear: t.feedback_mask = zero_mask(K); break;
    case TopologyKind::PDF: t.feedback_mask = pdf_mask(K); break;
    default: t.feedback_mask = sdf_mask(t.order); break;
  }
  t.stage2_mask = is_iterative(kind) ? pdf_mask(K) : zero_mask(K);
  return t;
}

namespace {

cplx feedback_term(const CMat& F, const Mask& mask, int k, const RVec& b) {
  cplx acc = 0.0;
  for (int j = 0; j < static_cast<int>(b.size()); ++j) {
    if (mask(k, j)) acc += std::conj(F(j, k)) * b[j];
  }
  return acc;
}

}  // namespace

DecisionRecord detect(const DetectorTopology& topo, const CMat& W, const CMat& F, const CVec& r,
                      const CMat* W2, const CMat* F2) {
  const int K = topo.K;
  if (W.cols() != K || W.rows() != r.size() || F.rows() != K || F.cols() != K) {
    throw ConfigError("detect: dimension mismatch (W " + std::to_string(W.rows()) + "x" +
                      std::to_string(W.cols()) + ", F " + std::to_string(F.rows()) + "x" +
                      std::to_string(F.cols()) + ", r " + std::to_string(r.size()) +
                      ", K " + std::to_string(K) + ")");
  }
  DecisionRecord rec;
  const CVec lin = W.adjoint() * r;
  rec.initial.resize(K);
  for (int k = 0; k < K; ++k) rec.initial[k] = hard_decision(lin[k].real());

  switch (topo.kind) {
    case TopologyKind::Linear: {
      rec.branch_soft = {lin};
      rec.branch_decisions = {rec.initial};
      rec.winner.assign(K, 0);
      rec.arbitrated = rec.initial;
      break;
    }
    case TopologyKind::PDF: {
      CVec z(K);
      RVec b(K);
      for (int k = 0; k < K; ++k) {
        z[k] = lin[k] - feedback_term(F, topo.feedback_mask, k, rec.initial);
        b[k] = hard_decision(z[k].real());
      }
      rec.branch_soft = {z};
      rec.branch_decisions = {b};
      rec.winner.assign(K, 0);
      rec.arbitrated = b;
      break;
    }
    default: {
      for (const auto& seq : topo.branch_orders) {
        RVec b = rec.initial;
        CVec z(K);
        for (int p : seq) {
          const int k = topo.order[p];
          z[k] = lin[k] - feedback_term(F, topo.feedback_mask, k, b);
          b[k] = hard_decision(z[k].real());
        }
        rec.branch_soft.push_back(std::move(z));
        rec.branch_decisions.push_back(std::move(b));
      }
      rec.winner.assign(K, 0);
      rec.arbitrated.resize(K);
      for (int k = 0; k < K; ++k) {
        int best = 0;
        for (int l = 1; l < static_cast<int>(rec.branch_soft.size()); ++l) {
          if (std::abs(rec.branch_soft[l][k].real()) > std::abs(rec.branch_soft[best][k].real())) {
            best = l;
          }
        }
        rec.winner[k] = best;
        rec.arbitrated[k] = rec.branch_decisions[best][k];
      }
      break;
    }
  }

  rec.stage_decisions.push_back(rec.arbitrated);
  rec.final_soft.resize(K);
  for (int k = 0; k < K; ++k) rec.final_soft[k] = rec.branch_soft[rec.winner[k]][k];

  if (is_iterative(topo.kind) && topo.stages >= 2) {
    if (W2 == nullptr || F2 == nullptr || W2->cols() != K || W2->rows() != r.size() ||
        F2->rows() != K || F2->cols() != K) {
      throw ConfigError("detect: iterative topology requires a second filter set of matching size");
    }
    const CVec lin2 = W2->adjoint() * r;
    RVec b = rec.arbitrated;
    if (topo.kind == TopologyKind::ISPAS) {
      for (auto it = topo.order.rbegin(); it != topo.order.rend(); ++it) {
        const int k = *it;
        rec.final_soft[k] = lin2[k] - feedback_term(*F2, topo.stage2_mask, k, b);
        b[k] = hard_decision(rec.final_soft[k].real());
      }
    } else {
      for (int k = 0; k < K; ++k) {
        rec.final_soft[k] = lin2[k] - feedback_term(*F2, topo.stage2_mask, k, rec.arbitrated);
        b[k] = hard_decision(rec.final_soft[k].real());
      }
    }
    rec.stage_decisions.push_back(b);
  }
  rec.final_decisions = rec.stage_decisions.back();
  return rec;
}

}  // namespace blinddf::detect
