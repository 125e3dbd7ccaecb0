#include "limsup/dimest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <thread>
#include <unordered_set>

#include "limsup/content.hpp"

namespace limsup {

namespace {

// Runs body(i) for i in [0, n) on up to `threads` workers; results must be
// written by index so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (t == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(t);
  for (unsigned w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += t) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::mt19937_64 sample_rng(std::uint64_t seed, std::size_t i) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(static_cast<std::uint64_t>(i) >> 32)};
  return std::mt19937_64(seq);
}

Vec uniform_in(const AxisCube& c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec x(c.dim());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = c.corner[k] + c.side * u(rng);
  return x;
}

double log_uniform(double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

double lsq_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const auto n = static_cast<double>(xs.size());
  if (xs.size() < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

double log_log_slope(const std::vector<LocalDimSample>& samples) {
  std::vector<double> xs, ys;
  for (const auto& s : samples) {
    if (s.mu > 0.0) {
      xs.push_back(std::log(s.r));
      ys.push_back(std::log(s.mu));
    }
  }
  return lsq_slope(xs, ys);
}

bool in_support(const PairNode& p, const Vec& x) {
  return std::any_of(p.support.cubes.begin(), p.support.cubes.end(), [&](const AxisCube& c) { return point_in(c, x); });
}

}  // namespace

double target_dimension(const ShapeRule& rule, std::size_t d) {
  rule.validate(d);
  switch (rule.kind) {
    case ShapeRule::Kind::ConcentricBall:
      return static_cast<double>(d) / rule.a;
    case ShapeRule::Kind::Ellipsoid:
      return wwx_bound(d, AnisotropyVector(rule.avec));
    case ShapeRule::Kind::Dust:
      return rule.s_target;
    case ShapeRule::Kind::Cusp:
      break;
  }
  throw Error(ErrorCode::Unsupported, "cusp shapes have no closed-form target dimension");
}

Branch find_branch(const ConstructionTree& tree, const Vec& x) {
  require(x.size() == tree.d, "point dimension mismatch");
  Branch br;
  std::function<bool(std::size_t)> descend = [&](std::size_t cid) -> bool {
    const CubeNode& n = tree.cubes[cid];
    if (!point_in(n.cube, x)) return false;
    br.cubes.push_back(cid);
    if (n.generation == tree.depth) return true;
    for (std::size_t pid : n.pairs) {
      const PairNode& p = tree.pairs[pid];
      if (!in_support(p, x)) continue;
      br.pairs.push_back(pid);
      for (std::size_t c : p.cubes) {
        if (descend(c)) return true;
      }
      br.pairs.pop_back();
    }
    br.cubes.pop_back();
    return false;
  };
  if (!descend(0)) throw Error(ErrorCode::PreViolation, "point does not lie in the deepest generation");
  return br;
}

CaseSplit case_split(const ConstructionTree& tree, const Vec& x, double r) {
  require(r > 0.0, "radius must be positive");
  CaseSplit cs;
  cs.branch = find_branch(tree, x);
  if (tree.depth == 0) return cs;
  auto scale = [&](std::size_t g) { return g == 0 ? 1.0 : tree.cubes[cs.branch.cubes[g]].cube.diameter(); };
  if (r <= scale(tree.depth)) {
    throw Error(ErrorCode::UnresolvedScale, "radius is below the finest realized scale of the branch");
  }
  std::size_t n = 1;
  while (n < tree.depth && r <= scale(n)) ++n;
  cs.n = n;
  const double diam = tree.pairs[cs.branch.pairs[n - 1]].ball.diameter();
  cs.which = r >= diam ? 1 : 2;
  return cs;
}

double pair_kappa1(const ConstructionTree& tree, std::size_t pair_id, double s) {
  const PairNode& p = tree.pairs.at(pair_id);
  const double phi = certified_phi(uniform_on(p.support), s);
  require(phi > 0.0, "certified phi of a support must be positive");
  return volume(p.ball) / phi;
}

LocalDimReport verify_case_bounds(const ConstructionTree& tree, const CaseOptions& opt) {
  require(opt.s > 0.0, "the target dimension s must be positive");
  LocalDimReport rep;
  auto fail = [&](const std::string& what) {
    if (rep.failures.size() < 50) rep.failures.push_back(what);
  };

  // Mass bookkeeping: a corrupted node changes mu without changing the constants the bounds use.
  for (std::size_t cid = 0; cid < tree.cubes.size(); ++cid) {
    const CubeNode& n = tree.cubes[cid];
    const double expect = n.c_const * volume(n.cube);
    bool bad = std::abs(n.mass - expect) > opt.tolerance * std::max(n.mass, expect);
    if (!n.pairs.empty()) {
      double sum = 0.0;
      for (std::size_t pid : n.pairs) {
        for (std::size_t c : tree.pairs[pid].cubes) sum += tree.cubes[c].mass;
      }
      bad = bad || std::abs(sum - n.mass) > opt.tolerance * std::max(sum, n.mass);
    }
    if (bad) {
      ++rep.consistency_violations;
      fail("cube " + std::to_string(cid) + " mass is inconsistent with its constant or children");
    }
  }

  const double d = static_cast<double>(tree.d);
  std::vector<double> max_c(tree.depth + 1, 0.0);
  for (const auto& n : tree.cubes) max_c[n.generation] = std::max(max_c[n.generation], n.c_const);
  std::vector<double> kappa1(tree.pairs.size());
  for (std::size_t p = 0; p < tree.pairs.size(); ++p) kappa1[p] = pair_kappa1(tree, p, opt.s);

  const std::vector<std::size_t> leaf = leaves(tree);
  require(!leaf.empty(), "tree has no leaves");
  rep.samples.resize(opt.samples);
  parallel_for(opt.samples, opt.threads, [&](std::size_t i) {
    auto rng = sample_rng(opt.seed, i);
    std::uniform_int_distribution<std::size_t> pick(0, leaf.size() - 1);
    const Vec x = uniform_in(tree.cubes[leaf[pick(rng)]].cube, rng);
    const Branch br = find_branch(tree, x);
    double r = 0.0;
    if (tree.depth == 0) {
      r = log_uniform(1e-3, 1.0, rng);
    } else {
      std::uniform_int_distribution<std::size_t> gen(1, tree.depth);
      const std::size_t n = gen(rng);
      const double up = n == 1 ? 1.0 : tree.cubes[br.cubes[n - 1]].cube.diameter();
      const double diam = tree.pairs[br.pairs[n - 1]].ball.diameter();
      const double down = tree.cubes[br.cubes[n]].cube.diameter();
      const bool want1 = (i % 2 == 0 && diam < up) || !(down < diam);
      r = want1 ? log_uniform(diam, up, rng) : log_uniform(down, diam, rng);
      r = std::max(r, std::nextafter(down, 2.0 * down));
    }
    const CaseSplit cs = case_split(tree, x, r);
    LocalDimSample smp;
    smp.x = x;
    smp.r = r;
    smp.n = cs.n;
    smp.which = cs.which;
    smp.mu = measure_of_ball(tree, x, r);
    if (cs.which == 1) {
      smp.bound = std::pow(20.0, d) / tree.kappa2 * max_c[cs.n - 1] * std::pow(r, d);
    } else {
      const std::size_t pid = cs.branch.pairs[cs.n - 1];
      const double c = tree.cubes[cs.branch.cubes[cs.n - 1]].c_const;
      smp.bound = c / tree.kappa2 * kappa1[pid] * std::pow(2.0 * r, opt.s);
    }
    smp.pass = smp.mu <= smp.bound * (1.0 + opt.tolerance);
    rep.samples[i] = std::move(smp);
  });
  for (const auto& smp : rep.samples) {
    if (!smp.pass) {
      ++rep.violations;
      fail("case " + std::to_string(smp.which) + " bound fails at generation " + std::to_string(smp.n));
    }
  }
  rep.fitted_slope = log_log_slope(rep.samples);
  rep.s_certified = rep.pass() ? opt.s : 0.0;
  return rep;
}

MdpReport mdp_report(const ConstructionTree& tree, const std::vector<double>& s_grid, const MdpOptions& opt) {
  require(!s_grid.empty(), "s grid must not be empty");
  require(opt.samples > 0, "need at least one sample");
  MdpReport rep;
  rep.constant = std::pow(2.0, static_cast<double>(tree.d));
  const std::vector<std::size_t> leaf = leaves(tree);
  require(!leaf.empty(), "tree has no leaves");
  double finest = 0.0;
  std::vector<double> weight;
  for (std::size_t c : leaf) {
    finest = std::max(finest, tree.cubes[c].cube.diameter());
    weight.push_back(tree.cubes[c].mass);
  }
  // Two decades directly above the coarsest leaf, or the top two decades of the unit scale.
  if (finest * 100.0 <= 1.0) {
    rep.r_lo = finest;
    rep.r_hi = finest * 100.0;
  } else {
    rep.r_hi = std::min(finest, 1.0);
    rep.r_lo = rep.r_hi / 100.0;
  }
  std::vector<double> cum(weight.size());
  std::partial_sum(weight.begin(), weight.end(), cum.begin());
  rep.samples.resize(opt.samples);
  parallel_for(opt.samples, opt.threads, [&](std::size_t i) {
    auto rng = sample_rng(opt.seed, i);
    std::uniform_real_distribution<double> u(0.0, cum.back());
    const auto k = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u(rng)) - cum.begin());
    LocalDimSample smp;
    smp.x = uniform_in(tree.cubes[leaf[std::min(k, leaf.size() - 1)]].cube, rng);
    smp.r = log_uniform(rep.r_lo, rep.r_hi, rng);
    smp.mu = measure_of_ball(tree, smp.x, smp.r);
    rep.samples[i] = std::move(smp);
  });
  rep.s_sup = std::numeric_limits<double>::infinity();
  for (const auto& smp : rep.samples) {
    if (smp.mu > 0.0) rep.s_sup = std::min(rep.s_sup, std::log(smp.mu / rep.constant) / std::log(smp.r));
  }
  std::vector<double> grid = s_grid;
  std::sort(grid.begin(), grid.end());
  rep.s = 0.0;
  for (double s : grid) {
    const bool ok = std::all_of(rep.samples.begin(), rep.samples.end(), [&](const LocalDimSample& smp) {
      return smp.mu <= rep.constant * std::pow(smp.r, s) * (1.0 + opt.tolerance);
    });
    if (!ok) break;
    rep.s = s;
  }
  for (auto& smp : rep.samples) {
    smp.bound = rep.constant * std::pow(smp.r, rep.s);
    smp.pass = smp.mu <= smp.bound * (1.0 + opt.tolerance);
  }
  rep.fitted_slope = log_log_slope(rep.samples);
  return rep;
}

double mdp_lower_bound(const ConstructionTree& tree, const std::vector<double>& s_grid, const MdpOptions& opt) {
  return mdp_report(tree, s_grid, opt).s;
}

BoxCount box_counting(const std::vector<Box>& boxes, const std::vector<int>& levels) {
  if (levels.size() < 3) throw Error(ErrorCode::Degenerate, "box counting needs at least three scales");
  require(!boxes.empty(), "box counting needs a nonempty set");
  const std::size_t d = boxes.front().lo.size();
  BoxCount out;
  out.levels = levels;
  std::vector<double> xs, ys;
  for (int k : levels) {
    require(k >= 0 && static_cast<std::size_t>(k) * d <= 62, "dyadic level out of range");
    const double n = std::ldexp(1.0, k);
    const auto top = static_cast<std::int64_t>(n) - 1;
    std::unordered_set<std::uint64_t> occupied;
    for (const Box& b : boxes) {
      require(b.lo.size() == d && b.hi.size() == d, "box dimension mismatch");
      std::vector<std::int64_t> lo(d), hi(d), idx(d);
      for (std::size_t j = 0; j < d; ++j) {
        lo[j] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(b.lo[j] * n)), 0, top);
        hi[j] = b.hi[j] > b.lo[j] ? static_cast<std::int64_t>(std::ceil(b.hi[j] * n)) - 1 : lo[j];
        hi[j] = std::clamp<std::int64_t>(std::max(hi[j], lo[j]), 0, top);
      }
      idx = lo;
      while (true) {
        std::uint64_t key = 0;
        for (std::size_t j = 0; j < d; ++j) key = (key << k) | static_cast<std::uint64_t>(idx[j]);
        occupied.insert(key);
        std::size_t j = 0;
        while (j < d && idx[j] == hi[j]) idx[j] = lo[j], ++j;
        if (j == d) break;
        ++idx[j];
      }
    }
    out.counts.push_back(occupied.size());
    xs.push_back(k * std::log(2.0));
    ys.push_back(std::log(static_cast<double>(occupied.size())));
  }
  out.slope = lsq_slope(xs, ys);
  return out;
}

BoxCount box_counting(const std::vector<CubeUnion>& sets, const std::vector<int>& levels) {
  std::vector<Box> boxes;
  for (const auto& u : sets) {
    for (const auto& c : u.cubes) {
      Box b{c.corner, c.corner};
      for (std::size_t j = 0; j < c.dim(); ++j) b.hi[j] = c.corner[j] + c.side;
      boxes.push_back(std::move(b));
    }
  }
  return box_counting(boxes, levels);
}

BoxCount box_counting(const ConstructionTree& tree, const std::vector<int>& levels) {
  CubeUnion u;
  for (std::size_t c : leaves(tree)) u.cubes.push_back(tree.cubes[c].cube);
  return box_counting(std::vector<CubeUnion>{u}, levels);
}

}  // namespace limsup
