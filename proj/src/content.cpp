#include "limsup/content.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "limsup/simplex.hpp"

namespace limsup {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double box_min_dist2(const Box& b, const Vec& x) {
  double acc = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double t = std::max({b.lo[j] - x[j], 0.0, x[j] - b.hi[j]});
    acc += t * t;
  }
  return acc;
}

double box_max_dist2(const Box& b, const Vec& x) {
  double acc = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double t = std::max(std::abs(x[j] - b.lo[j]), std::abs(b.hi[j] - x[j]));
    acc += t * t;
  }
  return acc;
}

// Small kd-tree over the cells of a piecewise-uniform measure.
class MassIndex {
 public:
  explicit MassIndex(const SmoothedShape& m) : m_(m) {
    order_.resize(m.support.cubes.size());
    std::iota(order_.begin(), order_.end(), 0);
    if (!order_.empty()) build(0, order_.size());
  }

  double query(const Vec& x, double r) const {
    if (nodes_.empty()) return 0.0;
    return query_node(0, x, r);
  }

 private:
  struct Node {
    Box box;
    double mass = 0.0;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t left = 0;
    std::size_t right = 0;
    bool leaf = true;
  };

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t d = m_.support.dim();
    Node node;
    node.begin = begin;
    node.end = end;
    node.box.lo.assign(d, kInf);
    node.box.hi.assign(d, -kInf);
    for (std::size_t i = begin; i < end; ++i) {
      const AxisCube& c = m_.support.cubes[order_[i]];
      node.mass += m_.measure.atoms[order_[i]].weight;
      for (std::size_t j = 0; j < d; ++j) {
        node.box.lo[j] = std::min(node.box.lo[j], c.corner[j]);
        node.box.hi[j] = std::max(node.box.hi[j], c.corner[j] + c.side);
      }
    }
    const std::size_t id = nodes_.size();
    nodes_.push_back(node);
    if (end - begin <= 8) return id;
    std::size_t axis = 0;
    for (std::size_t j = 1; j < d; ++j) {
      if (node.box.hi[j] - node.box.lo[j] > node.box.hi[axis] - node.box.lo[axis]) axis = j;
    }
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                       const auto& ca = m_.support.cubes[a];
                       const auto& cb = m_.support.cubes[b];
                       return ca.corner[axis] + 0.5 * ca.side < cb.corner[axis] + 0.5 * cb.side;
                     });
    const std::size_t l = build(begin, mid);
    const std::size_t r = build(mid, end);
    nodes_[id].leaf = false;
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  double query_node(std::size_t id, const Vec& x, double r) const {
    const Node& n = nodes_[id];
    const double r2 = r * r;
    if (n.mass <= 0.0 || box_min_dist2(n.box, x) >= r2) return 0.0;
    if (box_max_dist2(n.box, x) <= r2) return n.mass;
    if (!n.leaf) return query_node(n.left, x, r) + query_node(n.right, x, r);
    double acc = 0.0;
    for (std::size_t i = n.begin; i < n.end; ++i) {
      const std::size_t k = order_[i];
      const double w = m_.measure.atoms[k].weight;
      if (w <= 0.0) continue;
      const AxisCube& c = m_.support.cubes[k];
      acc += w * ball_cube_overlap(x, r, c) / volume(c);
    }
    return acc;
  }

  const SmoothedShape& m_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

double max_density(const SmoothedShape& m) {
  double dens = 0.0;
  for (std::size_t i = 0; i < m.support.cubes.size(); ++i) {
    dens = std::max(dens, m.measure.atoms[i].weight / volume(m.support.cubes[i]));
  }
  return dens;
}

// Exact infimum in d = 1. The CDF is piecewise linear, so on every cell of the
// arrangement {x = k, x + r = k, x - r = k} the ratio r^s / mu is quasiconcave
// (s <= 1) and its minimum sits on a vertex.
double certified_phi_1d(const SmoothedShape& m, double s) {
  const auto& cubes = m.support.cubes;
  std::vector<double> knots;
  for (const auto& c : cubes) {
    knots.push_back(c.corner[0]);
    knots.push_back(c.corner[0] + c.side);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  const std::size_t K = knots.size();
  std::vector<double> rho(K, 0.0);  // density on [knots[k], knots[k+1]]
  std::vector<bool> covered(K, false);
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    const double a = cubes[i].corner[0];
    const double b = a + cubes[i].side;
    auto k = static_cast<std::size_t>(std::lower_bound(knots.begin(), knots.end(), a) - knots.begin());
    for (; k + 1 < K && knots[k] < b; ++k) {
      rho[k] += m.measure.atoms[i].weight / cubes[i].side;
      covered[k] = true;
    }
  }
  std::vector<double> cum(K, 0.0);
  for (std::size_t k = 0; k + 1 < K; ++k) cum[k + 1] = cum[k] + rho[k] * (knots[k + 1] - knots[k]);
  const double total = cum[K - 1];
  require(total > 0.0, "measure has no mass");
  auto G = [&](double t) {
    if (t <= knots.front()) return 0.0;
    if (t >= knots.back()) return total;
    const auto k = static_cast<std::size_t>(std::upper_bound(knots.begin(), knots.end(), t) - knots.begin()) - 1;
    return cum[k] + rho[k] * (t - knots[k]);
  };
  auto in_support = [&](double x) {
    auto it = std::lower_bound(knots.begin(), knots.end(), x);
    if (it != knots.end() && *it == x) return true;
    if (it == knots.begin() || it == knots.end()) return false;
    return static_cast<bool>(covered[static_cast<std::size_t>(it - knots.begin()) - 1]);
  };
  double best = kInf;
  auto consider = [&](double x, double r) {
    if (r <= 0.0) return;
    const double mass = (G(x + r) - G(x - r)) / total;
    if (mass <= 0.0) return;
    best = std::min(best, std::pow(r, s) / mass);
  };
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = i + 1; j < K; ++j) {
      const double x = 0.5 * (knots[i] + knots[j]);
      if (in_support(x)) consider(x, 0.5 * (knots[j] - knots[i]));
      consider(knots[i], knots[j] - knots[i]);
      consider(knots[j], knots[j] - knots[i]);
    }
  }
  if (K == 2) consider(knots[0], knots[1] - knots[0]);
  if (s >= 1.0 - 1e-15) {
    const double rho_max = *std::max_element(rho.begin(), rho.end()) / total;
    best = std::min(best, 1.0 / (2.0 * rho_max));
  }
  return best;
}

// Net bound in d >= 2: x ranges over a grid of pitch-p points (every support
// point is within delta of one), r over a geometric ladder.
double certified_phi_net(const SmoothedShape& m, double s, const CertOptions& opt) {
  const std::size_t d = m.support.dim();
  const double dd = static_cast<double>(d);
  const double vol = volume(m.support);
  double pitch = std::pow(vol / static_cast<double>(std::max<std::size_t>(opt.max_eval_points, 1)), 1.0 / dd);
  std::vector<Vec> evals;
  double delta = 0.0;
  for (const auto& c : m.support.cubes) {
    const auto q = static_cast<std::size_t>(std::max(1.0, std::ceil(c.side / pitch - 1e-9)));
    const double step = c.side / static_cast<double>(q);
    delta = std::max(delta, 0.5 * step * std::sqrt(dd));
    for (const auto& sub : subdivide(c, step * std::sqrt(dd))) evals.push_back(sub.center());
  }
  MassIndex index(m);
  const double dens = max_density(m);
  const double ball_unit = unit_ball_volume(d);
  const Box bb = bounding_box(Shape(m.support));
  double diam = 0.0;
  for (std::size_t j = 0; j < d; ++j) diam += (bb.hi[j] - bb.lo[j]) * (bb.hi[j] - bb.lo[j]);
  diam = std::sqrt(diam);

  const double t0 = 16.0 * delta;
  double best = std::pow(t0, s - dd) / (dens * ball_unit);
  double t = t0;
  while (t < diam + delta) {
    const double next = t * opt.ladder_ratio;
    double mass = 0.0;
    for (const auto& x : evals) mass = std::max(mass, index.query(x, next + delta));
    const double a = mass > 0.0 ? std::pow(t, s) / std::min(mass, 1.0) : kInf;
    const double b = std::pow(next, s - dd) / (dens * ball_unit);
    best = std::min(best, std::max(a, b));
    t = next;
  }
  best = std::min(best, std::max(std::pow(t, s), std::pow(t, s - dd) / (dens * ball_unit)));
  return best;
}

}  // namespace

double DiscreteMeasure::total() const {
  double acc = 0.0;
  for (const auto& a : atoms) acc += a.weight;
  return acc;
}

void DiscreteMeasure::normalize() {
  const double t = total();
  require(t > 0.0, "cannot normalize a zero measure");
  for (auto& a : atoms) a.weight /= t;
}

SmoothedShape cell_measure(const CubeUnion& cells, const std::vector<double>& mass) {
  require(cells.cubes.size() == mass.size(), "one mass per cell required");
  SmoothedShape out;
  out.support = cells;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    require(mass[i] >= 0.0, "cell masses must be nonnegative");
    out.measure.atoms.push_back(Atom{cells.cubes[i].center(), mass[i]});
  }
  out.measure.normalize();
  out.density_bound = max_density(out);
  return out;
}

SmoothedShape uniform_on(const CubeUnion& support) {
  std::vector<double> mass;
  for (const auto& c : support.cubes) mass.push_back(volume(c));
  return cell_measure(support, mass);
}

double ball_mass(const SmoothedShape& m, const Vec& x, double r) {
  double acc = 0.0;
  for (std::size_t i = 0; i < m.support.cubes.size(); ++i) {
    const double w = m.measure.atoms[i].weight;
    if (w <= 0.0) continue;
    const AxisCube& c = m.support.cubes[i];
    acc += w * ball_cube_overlap(x, r, c) / volume(c);
  }
  return acc;
}

double certified_phi(const SmoothedShape& m, double s, const CertOptions& opt) {
  require(!m.support.empty(), "measure support is empty");
  const std::size_t d = m.support.dim();
  require(s >= 0.0 && s <= static_cast<double>(d) + 1e-12, "s must lie in [0, d]");
  if (d == 1) return certified_phi_1d(m, s);
  return certified_phi_net(m, s, opt);
}

AnisotropyVector::AnisotropyVector(Vec values) : a(std::move(values)) {
  require(!a.empty(), "anisotropy vector is empty");
  require(a.front() >= 1.0, "a_1 must be at least 1");
  for (std::size_t j = 1; j < a.size(); ++j) require(a[j] >= a[j - 1], "a must be nondecreasing");
}

double falconer_svf(const Ellipsoid& e, double s) {
  const std::size_t d = e.dim();
  require(s >= 0.0 && s <= static_cast<double>(d) + 1e-12, "s must lie in [0, d]");
  const auto m = static_cast<std::size_t>(std::floor(s + 1e-12));
  double out = 1.0;
  for (std::size_t j = 0; j < std::min(m, d); ++j) out *= e.semiaxes[j];
  if (m < d) out *= std::pow(e.semiaxes[m], std::max(0.0, s - static_cast<double>(m)));
  return out;
}

double wwx_bound(std::size_t d, const AnisotropyVector& a) {
  require(a.a.size() == d, "anisotropy vector length must equal d");
  double best = kInf;
  for (std::size_t j = 0; j < d; ++j) {
    // j a_j - sum_{i<=j} a_i, summed as differences so equal entries cancel exactly.
    double excess = 0.0;
    for (std::size_t i = 0; i < j; ++i) excess += a.a[j] - a.a[i];
    best = std::min(best, (static_cast<double>(d) + excess) / a.a[j]);
  }
  return best;
}

namespace {

std::vector<AxisCube> grid_cells(const AxisCube& c, std::size_t k) {
  const double step = c.side / static_cast<double>(k);
  return subdivide(c, step * std::sqrt(static_cast<double>(c.dim())));
}

std::vector<Vec> cube_corners(const AxisCube& c) {
  const std::size_t d = c.dim();
  std::vector<Vec> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    Vec p = c.corner;
    for (std::size_t j = 0; j < d; ++j) {
      if (mask & (std::size_t{1} << j)) p[j] += c.side;
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

PhiLpResult phi_lower_lp(const CubeUnion& e, double s, std::size_t resolution) {
  require(resolution >= 1, "resolution must be positive");
  if (e.empty() || volume(e) <= 0.0) throw Error(ErrorCode::Degenerate, "set has zero volume");
  const std::size_t d = e.dim();
  require(s >= 0.0 && s <= static_cast<double>(d) + 1e-12, "s must lie in [0, d]");

  PhiLpResult res;
  std::vector<AxisCube> cells;
  for (const auto& c : e.cubes) {
    auto part = grid_cells(c, resolution);
    cells.insert(cells.end(), part.begin(), part.end());
  }
  res.cells = CubeUnion(cells);
  const std::size_t n = cells.size();
  double min_side = kInf;
  double h = 0.0;
  for (const auto& c : cells) {
    min_side = std::min(min_side, c.side);
    h = std::max(h, c.diameter());
  }
  const double diam = diameter(e);

  std::set<Vec> points;
  for (const auto& c : cells) points.insert(c.center());
  for (const auto& c : e.cubes) {
    for (auto& p : cube_corners(c)) points.insert(std::move(p));
  }
  std::vector<double> radii;
  for (double r = 0.5 * min_side;; r *= 2.0) {
    radii.push_back(r);
    if (r >= diam) break;
  }

  std::vector<std::vector<double>> rows;
  std::vector<double> row_r;
  double full_r = kInf;
  for (double r : radii) {
    for (const auto& x : points) {
      std::vector<double> row(n);
      bool full = true;
      for (std::size_t j = 0; j < n; ++j) {
        double a = ball_cube_overlap(x, r, cells[j]) / volume(cells[j]);
        if (a > 1.0 - 1e-12) a = 1.0;
        row[j] = std::clamp(a, 0.0, 1.0);
        full = full && row[j] == 1.0;
      }
      if (full) {
        full_r = std::min(full_r, r);
        continue;
      }
      rows.push_back(std::move(row));
      row_r.push_back(r);
    }
  }
  require(std::isfinite(full_r), "radius ladder never covers the set");
  rows.emplace_back(n, 1.0);
  row_r.push_back(full_r);

  const std::size_t m = rows.size();
  Matrix A(m, n);
  std::vector<double> b(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) A(i, j) = rows[i][j];
    b[i] = std::pow(row_r[i], s);
  }
  const LpSolution lp = solve_lp_max(A, b, std::vector<double>(n, 1.0));
  res.lp_objective = lp.value;
  res.constraints = m;
  res.variables = n;

  const double mass = std::accumulate(lp.primal.begin(), lp.primal.end(), 0.0);
  if (mass <= 0.0) throw Error(ErrorCode::Degenerate, "LP returned the zero measure");
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = lp.primal[j] / mass;

  // Re-check the witness against every generated constraint.
  double worst = 0.0;
  double zmax = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += A(i, j) * w[j];
    const double cap = b[i] / lp.value;
    worst = std::max(worst, (mu - cap) / cap);
    zmax = std::max(zmax, mu / b[i]);
  }
  res.max_violation = std::max(0.0, worst);
  res.witness_feasible = worst <= 1e-9;
  res.net_value = 1.0 / zmax;

  // Dual bound: rescale y so that A^T y >= 1 holds exactly, then every
  // probability measure on e satisfies phi <= sum_i y_i (r_i + h)^s.
  double min_cover = kInf;
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += A(i, j) * lp.dual[i];
    min_cover = std::min(min_cover, acc);
  }
  double upper = std::pow(diam, s);
  if (min_cover > 0.0) {
    double dual_bound = 0.0;
    for (std::size_t i = 0; i < m; ++i) dual_bound += lp.dual[i] * std::pow(row_r[i] + h, s);
    upper = std::min(upper, dual_bound / min_cover);
  }
  res.upper = upper;

  res.witness.atoms.reserve(n);
  for (std::size_t j = 0; j < n; ++j) res.witness.atoms.push_back(Atom{cells[j].center(), w[j]});
  res.witness_value = certified_phi(cell_measure(res.cells, w), s);
  res.uniform_value = certified_phi(uniform_on(e), s);
  res.value = std::max(res.witness_value, res.uniform_value);
  return res;
}

ContentResult content_dp(const CubeUnion& e, double s, std::size_t max_depth) {
  require(max_depth >= 1 && max_depth <= 40, "max_depth must lie in [1, 40]");
  require(s >= 0.0, "s must be nonnegative");
  ContentResult res;
  res.max_depth = max_depth;
  if (e.empty()) return res;
  const std::size_t d = e.dim();
  const double dd = static_cast<double>(d);
  res.comparability = std::pow(dd, 0.5 * s);
  for (const auto& c : e.cubes) {
    for (std::size_t j = 0; j < d; ++j) {
      require(c.corner[j] >= -1e-12 && c.corner[j] + c.side <= 1.0 + 1e-12, "set must lie in [0,1]^d");
    }
  }
  std::vector<double> diam_s(max_depth + 1);
  for (std::size_t l = 0; l <= max_depth; ++l) diam_s[l] = std::pow(std::sqrt(dd) * std::ldexp(1.0, -static_cast<int>(l)), s);
  // Cost of a dyadic cube lying inside e, by level.
  std::vector<double> full(max_depth + 1);
  full[max_depth] = diam_s[max_depth];
  for (std::size_t l = max_depth; l-- > 0;) full[l] = std::min(diam_s[l], std::ldexp(full[l + 1], static_cast<int>(d)));

  std::function<double(const AxisCube&, std::size_t, const std::vector<std::size_t>&)> rec =
      [&](const AxisCube& q, std::size_t level, const std::vector<std::size_t>& cand) -> double {
    std::vector<std::size_t> meet;
    for (std::size_t i : cand) {
      if (!interiors_meet(q, e.cubes[i])) continue;
      if (contains(e.cubes[i], q)) return full[level];
      meet.push_back(i);
    }
    if (meet.empty()) return 0.0;
    if (level == max_depth) return diam_s[level];
    double children = 0.0;
    const double half = 0.5 * q.side;
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
      Vec corner = q.corner;
      for (std::size_t j = 0; j < d; ++j) {
        if (mask & (std::size_t{1} << j)) corner[j] += half;
      }
      children += rec(AxisCube(std::move(corner), half), level + 1, meet);
      if (children >= diam_s[level]) break;
    }
    return std::min(diam_s[level], children);
  };
  std::vector<std::size_t> all(e.cubes.size());
  std::iota(all.begin(), all.end(), 0);
  res.value = rec(AxisCube(Vec(d, 0.0), 1.0), 0, all);
  return res;
}

SandwichReport sandwich_check(const CubeUnion& e, double s, std::size_t resolution, std::size_t max_depth) {
  require(!e.empty(), "set is empty");
  SandwichReport rep;
  rep.s = s;
  const PhiLpResult lp = phi_lower_lp(e, s, resolution);
  const ContentResult c = content_dp(e, s, max_depth);
  rep.lower = lp.value;
  rep.phi_upper = lp.upper;
  rep.content = c.value;
  rep.comparability = c.comparability;
  rep.lower_ok = rep.lower <= rep.content * rep.comparability * rep.slack;
  rep.upper_ok = rep.content <= std::pow(6.0, s) * rep.phi_upper * rep.slack;
  return rep;
}

double kappa1_budget(double s, double eps) {
  require(eps > 0.0 && eps < 1.0, "eps must lie in (0,1)");
  return std::pow(2.0, s) / ((1.0 - eps) * (1.0 - eps));
}

SmoothedShape smooth_to_cubes(const DiscreteMeasure& mu, const CubeUnion& e_open, double delta, double eps) {
  require(delta > 0.0, "delta must be positive");
  require(eps > 0.0 && eps < 1.0, "eps must lie in (0,1)");
  require(!e_open.empty() && !mu.atoms.empty(), "empty input");
  const std::size_t d = e_open.dim();
  const double total = mu.total();
  require(total > 0.0, "measure has no mass");

  std::vector<AxisCube> grid;
  for (const auto& c : e_open.cubes) {
    const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(c.side / (0.25 * delta) - 1e-9)));
    auto part = grid_cells(c, k);
    grid.insert(grid.end(), part.begin(), part.end());
  }
  const double ball_vol = unit_ball_volume(d) * std::pow(delta, static_cast<double>(d));
  const double tol = d <= 2 ? 1e-9 : 1e-4;
  std::vector<double> mass(grid.size(), 0.0);
  for (const auto& atom : mu.atoms) {
    if (atom.weight <= 0.0) continue;
    double covered = 0.0;
    std::vector<std::pair<std::size_t, double>> parts;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (min_dist2(grid[i], atom.point) >= delta * delta) continue;
      const double ov = ball_cube_overlap(atom.point, delta, grid[i]);
      if (ov <= 0.0) continue;
      covered += ov;
      parts.emplace_back(i, ov);
    }
    if (covered < (1.0 - tol) * ball_vol) {
      throw Error(ErrorCode::PreViolation, "delta exceeds the boundary margin of the open set");
    }
    for (const auto& [i, ov] : parts) mass[i] += atom.weight / total * ov / covered;
  }
  std::vector<AxisCube> cells;
  std::vector<double> cell_mass;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (mass[i] > 0.0) {
      cells.push_back(grid[i]);
      cell_mass.push_back(mass[i]);
    }
  }
  if (cells.empty()) throw Error(ErrorCode::RasterEmpty, "smoothed measure has no support");
  SmoothedShape out = cell_measure(CubeUnion(std::move(cells)), cell_mass);
  require(out.density_bound <= (1.0 + 1e-9) / (ball_vol * (1.0 - eps)), "density bound exceeded");
  return out;
}

double phi_of_shape(const Shape& shape, double s, std::size_t resolution) {
  return std::visit(
      [&](const auto& sh) -> double {
        using T = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return falconer_svf(Ellipsoid(sh.center, Vec(sh.dim(), sh.radius)), s);
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          return falconer_svf(sh, s);
        } else if constexpr (std::is_same_v<T, AxisCube>) {
          return phi_lower_lp(CubeUnion({sh}), s, resolution).value;
        } else {
          return phi_lower_lp(sh, s, resolution).value;
        }
      },
      shape);
}

}  // namespace limsup
