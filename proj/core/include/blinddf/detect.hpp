#pragma once

// Cancellation topologies and symbol decisions. Filters are supplied as
// W (M x K, column k = w_k) and F (K x K, column k = f_k), so that
// z_k = w_k^H r - f_k^H b. Feedback masks are K x K with entry (k, j) true
// when user k may cancel user j.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blinddf/types.hpp"

namespace blinddf::detect {

enum class TopologyKind { Linear, SDF, PDF, SPADF, ISPAS, ISPAP };

std::string_view to_string(TopologyKind kind);
/// Accepts the canonical tags ("Linear", "S-DF", ...) case-insensitively,
/// with or without the dash and "-DF" suffix.
TopologyKind parse_topology(std::string_view text);

/// True for ISPAS/ISPAP, which carry a second filter set for stage two.
bool is_iterative(TopologyKind kind);

using Order = std::vector<int>;

/// Descending energies, ties broken by ascending index.
Order order_users_by_power(std::span<const double> energies);

/// Position sequences of the L arbitration branches over a K-long detection
/// order: branch l visits positions seq[l][0], seq[l][1], ...
/// L = 1: identity. L = 2: identity and reverse. L = 4: start offsets 0,
/// K/4, K/2 and reverse. L = 8: offsets jK/8 for j = 0..6 and reverse.
/// Offsets are rounded down.
std::vector<Order> build_arbitration_orders(int K, int L);

/// The same branches as permutation matrices: (M_l x)[p] = x[seq_l[p]].
std::vector<RMat> build_arbitration_perms(int K, int L);

/// Strictly lower triangular in detection order: user order[p] may cancel
/// users order[0..p-1].
Mask sdf_mask(const Order& order);
/// All off-diagonal entries allowed.
Mask pdf_mask(int K);
Mask zero_mask(int K);

struct DetectorTopology {
  TopologyKind kind = TopologyKind::Linear;
  int K = 0;
  int branches = 1;
  int stages = 1;
  Order order;                       ///< detection order (user indices)
  std::vector<Order> branch_orders;  ///< position sequences, see build_arbitration_orders
  Mask feedback_mask;                ///< mask of the first filter set
  Mask stage2_mask;                  ///< mask of the second filter set (iterative kinds)
};

/// `powers` are the known received powers used for the successive order.
/// `branches` applies to SPA-DF and the iterative kinds (L in {1,2,4,8});
/// `stages` to the iterative kinds (1 or 2).
DetectorTopology make_topology(TopologyKind kind, std::span<const double> powers,
                               int branches = 4, int stages = 2);

struct DecisionRecord {
  RVec initial;                       ///< linear decisions sgn(Re(W^H r))
  std::vector<CVec> branch_soft;      ///< per branch: soft outputs indexed by user
  std::vector<RVec> branch_decisions;
  std::vector<int> winner;            ///< per user: arbitration winner branch
  RVec arbitrated;                    ///< first-stage result
  std::vector<RVec> stage_decisions;  ///< one entry per stage
  CVec final_soft;
  RVec final_decisions;
};

/// Runs the topology. W2/F2 are the second filter set used by stage two of
/// ISPAS/ISPAP and are ignored otherwise. Feedback entries outside the masks
/// are never read.
DecisionRecord detect(const DetectorTopology& topo, const CMat& W, const CMat& F, const CVec& r,
                      const CMat* W2 = nullptr, const CMat* F2 = nullptr);

}  // namespace blinddf::detect
