#include "xaibench/transport.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "xaibench/error.hpp"

namespace xaibench {

namespace {

class TransportSimplex {
 public:
  TransportSimplex(std::span<const double> supply, std::span<const double> demand,
                   std::span<const double> cost)
      : m_(static_cast<int>(supply.size())),
        n_(static_cast<int>(demand.size())),
        supply_(supply),
        demand_(demand),
        cost_(cost),
        adj_(static_cast<std::size_t>(m_ + n_)),
        pot_(static_cast<std::size_t>(m_ + n_), 0.0),
        parent_cell_(static_cast<std::size_t>(m_ + n_), -1),
        parent_node_(static_cast<std::size_t>(m_ + n_), -1),
        depth_(static_cast<std::size_t>(m_ + n_), 0),
        seen_(static_cast<std::size_t>(m_ + n_), 0) {
    double max_cost = 0.0;
    for (double c : cost_) max_cost = std::max(max_cost, std::abs(c));
    tol_ = 1e-11 * std::max(1.0, max_cost);
    const double cells = static_cast<double>(m_) * n_;
    block_ = std::max<long>(16, static_cast<long>(std::ceil(std::sqrt(cells))));
  }

  TransportSolution run() {
    northwest_corner();
    const long max_pivots = 200L * (m_ + n_) * (m_ + n_) + 10000;
    long degenerate_run = 0;
    bool bland = false;
    TransportSolution out;
    for (;;) {
      compute_tree();
      const long entering = bland ? price_bland() : price_block();
      if (entering < 0) break;
      if (++out.pivots > max_pivots) throw Error("transport simplex exceeded its pivot budget");
      const bool degenerate = pivot(static_cast<int>(entering / n_), static_cast<int>(entering % n_), bland);
      degenerate_run = degenerate ? degenerate_run + 1 : 0;
      bland = degenerate_run > m_ + n_;
    }
    for (const Cell& c : basis_) {
      out.cost += c.flow * cost_[key(c.i, c.j)];
      out.flows.push_back({c.i, c.j, c.flow});
    }
    return out;
  }

 private:
  struct Cell {
    int i;
    int j;
    double flow;
  };

  std::size_t key(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }
  int demand_node(int j) const { return m_ + j; }

  void add_cell(int i, int j, double flow) {
    const int idx = static_cast<int>(basis_.size());
    basis_.push_back({i, j, std::max(0.0, flow)});
    adj_[i].push_back(idx);
    adj_[demand_node(j)].push_back(idx);
  }

  // Staircase start: m + n - 1 cells forming a spanning tree.
  void northwest_corner() {
    basis_.reserve(static_cast<std::size_t>(m_ + n_ - 1));
    int i = 0;
    int j = 0;
    double a = supply_[0];
    double b = demand_[0];
    for (;;) {
      if (i == m_ - 1 && j == n_ - 1) {
        add_cell(i, j, a);
        return;
      }
      if (i == m_ - 1 || (j < n_ - 1 && b <= a)) {
        add_cell(i, j, b);
        a -= b;
        b = demand_[++j];
      } else {
        add_cell(i, j, a);
        b -= a;
        a = supply_[++i];
      }
    }
  }

  // Potentials, parents and depths by BFS from supply node 0.
  void compute_tree() {
    ++stamp_;
    queue_.clear();
    queue_.push_back(0);
    seen_[0] = stamp_;
    pot_[0] = 0.0;
    depth_[0] = 0;
    parent_cell_[0] = -1;
    parent_node_[0] = -1;
    for (std::size_t head = 0; head < queue_.size(); ++head) {
      const int u = queue_[head];
      for (int ci : adj_[u]) {
        const Cell& c = basis_[ci];
        const int v = u < m_ ? demand_node(c.j) : c.i;
        if (seen_[v] == stamp_) continue;
        seen_[v] = stamp_;
        pot_[v] = cost_[key(c.i, c.j)] - pot_[u];
        depth_[v] = depth_[u] + 1;
        parent_cell_[v] = ci;
        parent_node_[v] = u;
        queue_.push_back(v);
      }
    }
  }

  double reduced_cost(int i, int j) const { return cost_[key(i, j)] - pot_[i] - pot_[demand_node(j)]; }

  long price_block() {
    const long total = static_cast<long>(m_) * n_;
    double best = -tol_;
    long best_key = -1;
    long scanned_in_block = 0;
    for (long scanned = 0; scanned < total; ++scanned) {
      const long k = cursor_;
      cursor_ = cursor_ + 1 == total ? 0 : cursor_ + 1;
      const double rc = reduced_cost(static_cast<int>(k / n_), static_cast<int>(k % n_));
      if (rc < best) {
        best = rc;
        best_key = k;
      }
      if (++scanned_in_block == block_) {
        if (best_key >= 0) return best_key;
        scanned_in_block = 0;
      }
    }
    return best_key;
  }

  long price_bland() const {
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) {
        if (reduced_cost(i, j) < -tol_) return static_cast<long>(key(i, j));
      }
    }
    return -1;
  }

  // Pushes flow around the cycle closed by cell (i, j); returns whether the
  // pivot was degenerate.
  bool pivot(int i, int j, bool bland) {
    // Tree path from the demand node back to the supply node.
    path_a_.clear();
    path_b_.clear();
    int x = demand_node(j);
    int y = i;
    while (depth_[x] > depth_[y]) {
      path_b_.push_back(parent_cell_[x]);
      x = parent_node_[x];
    }
    while (depth_[y] > depth_[x]) {
      path_a_.push_back(parent_cell_[y]);
      y = parent_node_[y];
    }
    while (x != y) {
      path_b_.push_back(parent_cell_[x]);
      x = parent_node_[x];
      path_a_.push_back(parent_cell_[y]);
      y = parent_node_[y];
    }
    cycle_.assign(path_b_.begin(), path_b_.end());
    cycle_.insert(cycle_.end(), path_a_.rbegin(), path_a_.rend());

    // Edges at even positions lose flow, odd positions gain it.
    double theta = 0.0;
    int leaving = -1;
    for (std::size_t p = 0; p < cycle_.size(); p += 2) {
      const Cell& c = basis_[cycle_[p]];
      const bool better =
          leaving < 0 || c.flow < theta ||
          (bland && c.flow == theta && key(c.i, c.j) < key(basis_[leaving].i, basis_[leaving].j));
      if (better) {
        theta = c.flow;
        leaving = cycle_[p];
      }
    }
    for (std::size_t p = 0; p < cycle_.size(); ++p) {
      Cell& c = basis_[cycle_[p]];
      c.flow = p % 2 == 0 ? c.flow - theta : c.flow + theta;
    }
    basis_[leaving].flow = 0.0;

    // Swap the leaving cell for the entering one in place.
    Cell& old = basis_[leaving];
    auto detach = [&](int node) {
      auto& list = adj_[node];
      list.erase(std::find(list.begin(), list.end(), leaving));
    };
    detach(old.i);
    detach(demand_node(old.j));
    old = {i, j, theta};
    adj_[i].push_back(leaving);
    adj_[demand_node(j)].push_back(leaving);
    return theta == 0.0;
  }

  int m_;
  int n_;
  std::span<const double> supply_;
  std::span<const double> demand_;
  std::span<const double> cost_;
  std::vector<Cell> basis_;
  std::vector<std::vector<int>> adj_;
  std::vector<double> pot_;
  std::vector<int> parent_cell_;
  std::vector<int> parent_node_;
  std::vector<int> depth_;
  std::vector<unsigned> seen_;
  unsigned stamp_ = 0;
  std::vector<int> queue_;
  std::vector<int> path_a_;
  std::vector<int> path_b_;
  std::vector<int> cycle_;
  double tol_ = 1e-11;
  long block_ = 16;
  long cursor_ = 0;
};

void check_masses(std::span<const double> masses, const char* side) {
  if (masses.empty()) throw InvalidArgument(std::string("transport: empty ") + side);
  for (double v : masses) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument(std::string("transport: ") + side + " masses must be finite and nonnegative");
    }
  }
}

}  // namespace

TransportSolution solve_transport(std::span<const double> supply, std::span<const double> demand,
                                  std::span<const double> cost) {
  check_masses(supply, "supply");
  check_masses(demand, "demand");
  if (cost.size() != supply.size() * demand.size()) {
    throw InvalidArgument("transport: cost matrix has " + std::to_string(cost.size()) + " entries, expected " +
                          std::to_string(supply.size() * demand.size()));
  }
  double total_s = 0.0;
  double total_d = 0.0;
  for (double v : supply) total_s += v;
  for (double v : demand) total_d += v;
  if (std::abs(total_s - total_d) > 1e-9 * std::max(1.0, std::max(total_s, total_d))) {
    throw InvalidArgument("transport: supply total " + std::to_string(total_s) +
                          " differs from demand total " + std::to_string(total_d));
  }
  for (double c : cost) {
    if (!std::isfinite(c)) throw InvalidArgument("transport: non-finite cost");
  }
  return TransportSimplex(supply, demand, cost).run();
}

}  // namespace xaibench
