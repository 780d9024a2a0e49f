#pragma once

// Reference computations shared by the unit and acceptance tests. They are
// written for clarity, not speed, and share no code with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

// Minimum transportation cost by enumerating every basis of the polytope.
// A basis is a spanning tree of the bipartite supply/demand graph; its flows
// are forced, and it is a vertex when they are all nonnegative. The optimum
// of a linear program is attained at a vertex.
class BasisEnumeration {
 public:
  BasisEnumeration(std::vector<double> supply, std::vector<double> demand, std::vector<double> cost)
      : s_(std::move(supply)), d_(std::move(demand)), c_(std::move(cost)) {
    m_ = static_cast<int>(s_.size());
    n_ = static_cast<int>(d_.size());
  }

  double solve() {
    best_ = std::numeric_limits<double>::infinity();
    std::vector<int> chosen;
    std::array<int, 16> parent{};
    for (int v = 0; v < m_ + n_; ++v) parent[static_cast<std::size_t>(v)] = v;
    extend(0, chosen, parent);
    return best_;
  }

  long trees_visited() const { return trees_; }

 private:
  static int find(std::array<int, 16>& p, int v) {
    while (p[static_cast<std::size_t>(v)] != v) v = p[static_cast<std::size_t>(v)];
    return v;
  }

  void extend(int next, std::vector<int>& chosen, std::array<int, 16> parent) {
    const int need = m_ + n_ - 1 - static_cast<int>(chosen.size());
    if (need == 0) {
      evaluate(chosen);
      return;
    }
    const int cells = m_ * n_;
    for (int e = next; e <= cells - need; ++e) {
      const int a = find(parent, e / n_);
      const int b = find(parent, m_ + e % n_);
      if (a == b) continue;
      auto joined = parent;
      joined[static_cast<std::size_t>(a)] = b;
      chosen.push_back(e);
      extend(e + 1, chosen, joined);
      chosen.pop_back();
    }
  }

  // Tree flows by peeling leaves.
  void evaluate(const std::vector<int>& edges) {
    ++trees_;
    std::vector<double> residual(s_.begin(), s_.end());
    residual.insert(residual.end(), d_.begin(), d_.end());
    std::vector<int> degree(static_cast<std::size_t>(m_ + n_), 0);
    for (int e : edges) {
      ++degree[static_cast<std::size_t>(e / n_)];
      ++degree[static_cast<std::size_t>(m_ + e % n_)];
    }
    std::vector<bool> used(edges.size(), false);
    double cost = 0.0;
    for (std::size_t round = 0; round < edges.size(); ++round) {
      for (std::size_t k = 0; k < edges.size(); ++k) {
        if (used[k]) continue;
        const int u = edges[k] / n_;
        const int v = m_ + edges[k] % n_;
        int leaf = -1;
        int other = -1;
        if (degree[static_cast<std::size_t>(u)] == 1) {
          leaf = u;
          other = v;
        } else if (degree[static_cast<std::size_t>(v)] == 1) {
          leaf = v;
          other = u;
        } else {
          continue;
        }
        const double f = residual[static_cast<std::size_t>(leaf)];
        if (f < -1e-12) return;
        residual[static_cast<std::size_t>(other)] -= f;
        residual[static_cast<std::size_t>(leaf)] = 0.0;
        --degree[static_cast<std::size_t>(u)];
        --degree[static_cast<std::size_t>(v)];
        used[k] = true;
        cost += f * c_[static_cast<std::size_t>(edges[k])];
        break;
      }
    }
    best_ = std::min(best_, cost);
  }

  std::vector<double> s_;
  std::vector<double> d_;
  std::vector<double> c_;
  int m_ = 0;
  int n_ = 0;
  double best_ = 0.0;
  long trees_ = 0;
};

inline double transport_by_enumeration(std::vector<double> supply, std::vector<double> demand,
                                       std::vector<double> cost) {
  return BasisEnumeration(std::move(supply), std::move(demand), std::move(cost)).solve();
}

// Two supplies, two demands: one free parameter t = flow(0,0). Cost is linear
// in t over [max(0, d0 - s1), min(s0, d0)]; scanning a fine grid including
// both ends finds the minimum.
inline double transport_2x2(const std::array<double, 2>& s, const std::array<double, 2>& d,
                            const std::array<double, 4>& c) {
  const double lo = std::max(0.0, d[0] - s[1]);
  const double hi = std::min(s[0], d[0]);
  double best = std::numeric_limits<double>::infinity();
  const int steps = 1000;
  for (int k = 0; k <= steps; ++k) {
    const double t = lo + (hi - lo) * k / steps;
    const double cost = t * c[0] + (s[0] - t) * c[1] + (d[0] - t) * c[2] + (s[1] - d[0] + t) * c[3];
    best = std::min(best, cost);
  }
  return best;
}

// Eq.-as-printed KL written out directly.
inline double kl_reference(const std::vector<double>& p, const std::vector<double>& q, double eps) {
  double out = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) out += p[i] * std::log(p[i] / (q[i] + eps) + eps);
  }
  return out;
}

}  // namespace oracle
