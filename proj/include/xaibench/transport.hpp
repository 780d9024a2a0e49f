#pragma once

#include <span>
#include <vector>

namespace xaibench {

struct TransportFlow {
  int supply = 0;
  int demand = 0;
  double amount = 0.0;
};

struct TransportSolution {
  double cost = 0.0;
  /// Basic cells of the optimal spanning-tree basis (some may carry zero flow).
  std::vector<TransportFlow> flows;
  long pivots = 0;
};

/// Exact minimum-cost transportation by the network simplex method on the
/// complete bipartite supply/demand graph.
///
/// `cost` is row-major with supply.size() rows and demand.size() columns.
/// Supply and demand totals must agree to 1e-9 relative; all masses must be
/// nonnegative and finite.
TransportSolution solve_transport(std::span<const double> supply, std::span<const double> demand,
                                  std::span<const double> cost);

}  // namespace xaibench
