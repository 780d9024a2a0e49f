#include "xaibench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>

#include "xaibench/transport.hpp"

namespace xaibench {

SaliencyMap normalize(const SaliencyMap& map) {
  check_saliency_values(map);
  if (map.size() == 0) throw InvalidArgument("normalize: empty map");
  SaliencyMap out = map;
  const double total = map.total();
  if (total == 0.0) {
    const double u = 1.0 / static_cast<double>(map.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = u;
    return out;
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = map[i] / total;
  return out;
}

bool is_all_zero(const SaliencyMap& map) {
  const auto v = map.values();
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

Signature::Signature(std::vector<SignaturePoint> points, double distance_scale)
    : points_(std::move(points)), distance_scale_(distance_scale) {
  if (points_.empty()) throw InvalidArgument("signature: no points");
  if (!(distance_scale_ > 0.0) || !std::isfinite(distance_scale_)) {
    throw InvalidArgument("signature: distance scale must be positive");
  }
  std::set<std::pair<double, double>> locations;
  for (const auto& p : points_) {
    if (!std::isfinite(p.row) || !std::isfinite(p.col)) throw InvalidArgument("signature: non-finite location");
    if (!(p.mass > 0.0) || !std::isfinite(p.mass)) throw InvalidArgument("signature: masses must be positive");
    if (!locations.emplace(p.row, p.col).second) throw InvalidArgument("signature: duplicate location");
    total_mass_ += p.mass;
  }
}

double image_diagonal(int width, int height) {
  return std::hypot(static_cast<double>(width - 1), static_cast<double>(height - 1));
}

namespace {

// Pixels [lo, hi] of bin b when `length` pixels are split into `bins` bins.
std::pair<int, int> bin_span(int b, int bins, int length) {
  auto first = [&](int k) {
    return static_cast<int>((static_cast<long>(k) * length + bins - 1) / bins);
  };
  return {first(b), first(b + 1) - 1};
}

double distance(const SignaturePoint& a, const SignaturePoint& b, double scale) {
  return std::hypot(a.row - b.row, a.col - b.col) / scale;
}

std::vector<double> masses(const Signature& s) {
  std::vector<double> out;
  out.reserve(s.size());
  for (const auto& p : s.points()) out.push_back(p.mass);
  return out;
}

void check_pair(const Signature& p, const Signature& q) {
  if (p.distance_scale() != q.distance_scale()) {
    throw InvalidArgument("emd: signatures use different distance scales");
  }
}

}  // namespace

Signature to_signature(const SaliencyMap& map, int bin_grid) {
  if (bin_grid < 1) throw InvalidArgument("to_signature: bin_grid must be >= 1");
  if (bin_grid > map.width() || bin_grid > map.height()) {
    throw InvalidArgument("to_signature: bin_grid " + std::to_string(bin_grid) + " exceeds the " +
                          std::to_string(map.width()) + "x" + std::to_string(map.height()) + " map");
  }
  check_saliency_values(map);
  std::vector<int> row_bin(static_cast<std::size_t>(map.height()));
  std::vector<int> col_bin(static_cast<std::size_t>(map.width()));
  for (int r = 0; r < map.height(); ++r) row_bin[r] = static_cast<int>(static_cast<long>(r) * bin_grid / map.height());
  for (int c = 0; c < map.width(); ++c) col_bin[c] = static_cast<int>(static_cast<long>(c) * bin_grid / map.width());

  std::vector<double> bins(static_cast<std::size_t>(bin_grid) * bin_grid, 0.0);
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      bins[static_cast<std::size_t>(row_bin[r]) * bin_grid + col_bin[c]] += map.at(r, c);
    }
  }
  std::vector<SignaturePoint> points;
  for (int br = 0; br < bin_grid; ++br) {
    const auto [r0, r1] = bin_span(br, bin_grid, map.height());
    for (int bc = 0; bc < bin_grid; ++bc) {
      const double mass = bins[static_cast<std::size_t>(br) * bin_grid + bc];
      if (mass <= 0.0) continue;
      const auto [c0, c1] = bin_span(bc, bin_grid, map.width());
      points.push_back({(r0 + r1) / 2.0, (c0 + c1) / 2.0, mass});
    }
  }
  const double diag = image_diagonal(map.width(), map.height());
  return Signature(std::move(points), diag > 0.0 ? diag : 1.0);
}

double emd(const Signature& p, const Signature& q) {
  check_pair(p, q);
  if (std::abs(p.total_mass() - q.total_mass()) > 1e-9) {
    throw MassMismatchError("emd: total masses differ (" + std::to_string(p.total_mass()) + " vs " +
                            std::to_string(q.total_mass()) + ")");
  }
  // Mass both signatures hold at the same location stays in place: under a
  // metric ground distance some optimal plan leaves it unmoved.
  std::map<std::pair<double, double>, std::size_t> where;
  for (std::size_t j = 0; j < q.size(); ++j) where.emplace(std::make_pair(q.points()[j].row, q.points()[j].col), j);
  auto supply_all = masses(p);
  auto demand_all = masses(q);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto it = where.find({p.points()[i].row, p.points()[i].col});
    if (it == where.end()) continue;
    const double shared = std::min(supply_all[i], demand_all[it->second]);
    supply_all[i] -= shared;
    demand_all[it->second] -= shared;
  }
  const double floor = 1e-15 * std::max(1.0, p.total_mass());
  std::vector<SignaturePoint> ps;
  std::vector<SignaturePoint> qs;
  std::vector<double> supply;
  std::vector<double> demand;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (supply_all[i] > floor) {
      ps.push_back(p.points()[i]);
      supply.push_back(supply_all[i]);
    }
  }
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (demand_all[j] > floor) {
      qs.push_back(q.points()[j]);
      demand.push_back(demand_all[j]);
    }
  }
  if (ps.empty() || qs.empty()) return 0.0;
  std::vector<double> cost(ps.size() * qs.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = 0; j < qs.size(); ++j) cost[i * qs.size() + j] = distance(ps[i], qs[j], p.distance_scale());
  }
  // Absorb the sub-tolerance rounding difference so the transport is balanced.
  double total_s = 0.0;
  double total_d = 0.0;
  for (double v : supply) total_s += v;
  for (double v : demand) total_d += v;
  demand.back() = std::max(0.0, demand.back() + (total_s - total_d));
  return solve_transport(supply, demand, cost).cost;
}

double emd_partial(const Signature& p, const Signature& q) {
  check_pair(p, q);
  const auto& ps = p.points();
  const auto& qs = q.points();
  const double excess = p.total_mass() - q.total_mass();
  // A zero-cost dummy node on the lighter side takes the unmatched mass.
  const std::size_t rows = ps.size() + (excess < 0.0 ? 1 : 0);
  const std::size_t cols = qs.size() + (excess > 0.0 ? 1 : 0);
  std::vector<double> cost(rows * cols, 0.0);
  double max_distance = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = 0; j < qs.size(); ++j) {
      const double d = distance(ps[i], qs[j], p.distance_scale());
      cost[i * cols + j] = d;
      max_distance = std::max(max_distance, d);
    }
  }
  auto supply = masses(p);
  auto demand = masses(q);
  if (excess < 0.0) supply.push_back(-excess);
  if (excess > 0.0) demand.push_back(excess);
  return solve_transport(supply, demand, cost).cost + std::abs(excess) * max_distance;
}

double kl_div(const SaliencyMap& p, const SaliencyMap& q, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("kl_div: eps must be positive");
  if (p.width() != q.width() || p.height() != q.height()) {
    throw InvalidArgument("kl_div: map dimensions differ");
  }
  check_saliency_values(p);
  check_saliency_values(q);
  double out = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (p[x] == 0.0) continue;
    out += p[x] * std::log(p[x] / (q[x] + eps) + eps);
  }
  return out;
}

}  // namespace xaibench
