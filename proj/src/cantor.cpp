#include "limsup/cantor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "limsup/cover.hpp"
#include "limsup/geom_io.hpp"

namespace limsup {

double ConstructionParams::eps(std::size_t j) const {
  if (j >= 1 && j <= eps_schedule.size()) return eps_schedule[j - 1];
  return 1.0 / static_cast<double>(j + 1);
}

namespace {

constexpr double kTol = 1e-9;

std::vector<std::size_t> select_in_cube(const Family& family, const AxisCube& cube, std::size_t after,
                                        double kappa2, bool exhaustive, std::vector<Ball>& balls) {
  const double max_diam = cube.side / 3.0;
  double target = 2.0 * volume(cube);
  for (int attempt = 0; attempt < 4; ++attempt, target *= 8.0) {
    const auto cands = family.candidates(cube, after, max_diam, target, 20000);
    std::vector<Ball> pool;
    for (const auto& c : cands) pool.push_back(c.second);
    try {
      CoverParams cp;
      cp.kappa2 = kappa2;
      cp.exhaustive = exhaustive;
      const CoverSelection sel = greedy_vitali(pool, cube, cp);
      std::vector<std::size_t> out;
      balls.clear();
      for (std::size_t i : sel.indices) {
        out.push_back(cands[i].first);
        balls.push_back(cands[i].second);
      }
      return out;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientFamily || attempt == 3) throw;
    }
  }
  return {};
}

}  // namespace

ConstructionTree build(const Family& family, const ConstructionParams& params) {
  const std::size_t d = family.dim();
  require(params.rtilde_floor > 0.0, "rtilde_floor must be positive");
  require(params.max_pieces >= 1, "max_pieces must be positive");
  for (std::size_t j = 1; j < params.eps_schedule.size(); ++j) {
    require(params.eps_schedule[j] < params.eps_schedule[j - 1] && params.eps_schedule[j] > 0.0,
            "eps schedule must be strictly decreasing and positive");
  }
  ConstructionTree tree;
  tree.d = d;
  tree.params = params;
  tree.kappa2 = params.kappa2 > 0.0 ? params.kappa2 : kappa2_default(d, 0.25);
  CubeNode root;
  root.cube = AxisCube(Vec(d, 0.0), 1.0);
  root.mass = 1.0;
  root.c_const = 1.0;
  tree.cubes.push_back(root);
  tree.generations.push_back(GenerationInfo{0, std::sqrt(static_cast<double>(d)), 1.0,
                                            std::sqrt(static_cast<double>(d)), false, 0, 1, 0});

  std::vector<std::size_t> frontier{0};
  double rtilde_prev = 1.0;
  for (std::size_t j = 1; j <= params.max_depth; ++j) {
    const std::size_t after = tree.generations.back().max_index;
    GenerationInfo info;
    info.generation = j;
    std::vector<std::size_t> new_pairs;
    for (std::size_t cid : frontier) {
      const AxisCube cube = tree.cubes[cid].cube;
      std::vector<Ball> balls;
      const auto indices = select_in_cube(family, cube, after, tree.kappa2, params.exhaustive, balls);
      double sel_volume = 0.0;
      for (const auto& b : balls) sel_volume += volume(b);
      for (std::size_t k = 0; k < indices.size(); ++k) {
        const ShapePair* spp = nullptr;
        try {
          spp = &family.pair(indices[k], balls[k]);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::RasterEmpty) throw;
          throw Error(ErrorCode::DepthUnreachable, "generation " + std::to_string(j) + ": " + e.what());
        }
        const ShapePair& sp = *spp;
        PairNode p;
        p.generation = j;
        p.index = indices[k];
        p.ball = balls[k];
        p.support = sp.smoothed.support;
        p.ell = sp.smoothed.density_bound;
        p.nu = tree.cubes[cid].mass * volume(balls[k]) / sel_volume;
        p.parent = cid;
        tree.cubes[cid].pairs.push_back(tree.pairs.size());
        new_pairs.push_back(tree.pairs.size());
        tree.pairs.push_back(std::move(p));
        info.max_index = std::max(info.max_index, indices[k]);
      }
    }

    // The schedule is global; the realized subdivision scale is chosen per
    // pair from its own smallest support component.
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t pid : new_pairs) {
      const PairNode& p = tree.pairs[pid];
      worst = std::min(worst, 1.0 / (p.ell * volume(p.ball)));
    }
    info.schedule = rtilde_prev * std::pow(tree.kappa2 * worst, 1.0 / params.eps(j));
    info.r_min = std::numeric_limits<double>::infinity();
    info.rtilde = std::numeric_limits<double>::infinity();
    for (std::size_t pid : new_pairs) {
      PairNode& p = tree.pairs[pid];
      double r_pair = std::numeric_limits<double>::infinity();
      for (const auto& c : p.support.cubes) r_pair = std::min(r_pair, c.diameter());
      const double raised = std::max({info.schedule, params.rtilde_floor, r_pair / static_cast<double>(params.max_pieces)});
      p.rtilde = std::min(r_pair, raised);
      info.clamped = info.clamped || info.schedule < p.rtilde;
      info.r_min = std::min(info.r_min, r_pair);
      info.rtilde = std::min(info.rtilde, p.rtilde);
    }
    tree.depth_unreachable = tree.depth_unreachable || info.clamped;
    rtilde_prev = info.rtilde;

    std::vector<std::size_t> next;
    for (std::size_t pid : new_pairs) {
      const double support_volume = volume(tree.pairs[pid].support);
      const std::size_t parent = tree.pairs[pid].parent;
      const double factor = volume(tree.pairs[pid].ball) * tree.pairs[pid].ell / tree.kappa2;
      for (const auto& comp : tree.pairs[pid].support.cubes) {
        for (auto& piece : subdivide(comp, tree.pairs[pid].rtilde)) {
          CubeNode node;
          node.generation = j;
          node.mass = tree.pairs[pid].nu * volume(piece) / support_volume;
          node.c_const = node.mass / volume(piece);
          node.cn_bound = tree.cubes[parent].cn_bound * factor;
          node.cube = std::move(piece);
          node.parent = static_cast<long>(pid);
          tree.pairs[pid].cubes.push_back(tree.cubes.size());
          next.push_back(tree.cubes.size());
          tree.cubes.push_back(std::move(node));
          if (tree.cubes.size() > params.max_nodes) {
            throw Error(ErrorCode::DepthUnreachable, "construction exceeds " + std::to_string(params.max_nodes) + " cubes at generation " + std::to_string(j));
          }
        }
      }
    }
    info.cubes = next.size();
    info.pairs = new_pairs.size();
    tree.generations.push_back(info);
    frontier = std::move(next);
    tree.depth = j;
  }
  return tree;
}

ConstructionTree build(const std::vector<ShapePair>& pairs, const ConstructionParams& params) {
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    require(pairs[i].ball.radius <= pairs[i - 1].ball.radius, "pairs must have nonincreasing diameters");
  }
  FamilySpec spec;
  spec.kind = FamilyKind::Explicit;
  return build(Family(spec, pairs), params);
}

double measure_of_ball(const ConstructionTree& tree, const Vec& x, double r, std::optional<std::size_t> generation) {
  require(r > 0.0, "radius must be positive");
  require(x.size() == tree.d, "point dimension mismatch");
  const std::size_t g = generation.value_or(tree.depth);
  require(g <= tree.depth, "generation exceeds the tree depth");
  const double r2 = r * r;
  std::function<double(std::size_t)> cube_mass = [&](std::size_t cid) -> double {
    const CubeNode& n = tree.cubes[cid];
    if (min_dist2(n.cube, x) >= r2) return 0.0;
    if (max_dist2(n.cube, x) <= r2) return n.mass;
    if (n.generation == g || n.pairs.empty()) return n.mass * ball_cube_overlap(x, r, n.cube) / volume(n.cube);
    double acc = 0.0;
    for (std::size_t pid : n.pairs) {
      const PairNode& p = tree.pairs[pid];
      if (distance(p.ball.center, x) >= r + p.ball.radius) continue;
      for (std::size_t c : p.cubes) acc += cube_mass(c);
    }
    return acc;
  };
  return cube_mass(0);
}

std::vector<CRow> c_constants(const ConstructionTree& tree) {
  std::vector<CRow> rows(tree.depth + 1);
  for (std::size_t g = 0; g <= tree.depth; ++g) rows[g].generation = g;
  for (const auto& n : tree.cubes) {
    CRow& row = rows[n.generation];
    row.max_c = std::max(row.max_c, n.c_const);
    row.bound = std::max(row.bound, n.cn_bound);
    row.ok = row.ok && n.c_const <= n.cn_bound * (1.0 + 1e-12);
  }
  return rows;
}

std::vector<std::size_t> leaves(const ConstructionTree& tree) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tree.cubes.size(); ++i) {
    if (tree.cubes[i].generation == tree.depth) out.push_back(i);
  }
  return out;
}

InvariantReport check_invariants(const ConstructionTree& tree) {
  InvariantReport rep;
  auto fail = [&](const std::string& what) {
    if (rep.failures.size() < 50) rep.failures.push_back(what);
  };
  std::vector<double> cube_sum(tree.depth + 1, 0.0);
  std::vector<double> pair_sum(tree.depth + 1, 0.0);
  for (const auto& n : tree.cubes) cube_sum[n.generation] += n.mass;
  for (const auto& p : tree.pairs) pair_sum[p.generation] += p.nu;
  for (std::size_t g = 0; g <= tree.depth; ++g) {
    const double err = std::abs(cube_sum[g] - 1.0);
    rep.max_mass_error = std::max(rep.max_mass_error, err);
    if (g > 0) rep.max_mass_error = std::max(rep.max_mass_error, std::abs(pair_sum[g] - 1.0));
  }
  rep.mass_ok = rep.max_mass_error <= kTol;
  if (!rep.mass_ok) fail("generation mass sums deviate from 1");

  for (std::size_t cid = 0; cid < tree.cubes.size(); ++cid) {
    const CubeNode& n = tree.cubes[cid];
    const double lam = volume(n.cube);
    const double err = std::abs(n.mass - n.c_const * lam) / std::max(n.mass, n.c_const * lam);
    rep.max_muond_error = std::max(rep.max_muond_error, err);
    if (!(n.c_const <= n.cn_bound * (1.0 + 1e-12))) {
      rep.cn_ok = false;
      fail("product bound on C fails at cube " + std::to_string(cid));
    }
    if (!n.pairs.empty()) {
      double sum = 0.0;
      double sel = 0.0;
      for (std::size_t pid : n.pairs) {
        const PairNode& p = tree.pairs[pid];
        sum += p.nu;
        sel += volume(p.ball);
        if (!contains(n.cube, p.ball)) {
          rep.nesting_ok = false;
          fail("ball " + std::to_string(p.index) + " escapes its cube");
        }
        if (p.index <= tree.generations[p.generation - 1].max_index) {
          rep.nesting_ok = false;
          fail("ball " + std::to_string(p.index) + " lies outside the candidate window");
        }
      }
      rep.max_muond_error = std::max(rep.max_muond_error, std::abs(sum - n.mass) / n.mass);
      if (sel < tree.kappa2 * lam * (1.0 - 1e-12)) {
        rep.cn_ok = false;
        fail("selection in cube " + std::to_string(cid) + " is below kappa2");
      }
      for (std::size_t a = 0; a < n.pairs.size(); ++a) {
        for (std::size_t b = a + 1; b < n.pairs.size(); ++b) {
          if (!disjoint(scale_ball(tree.pairs[n.pairs[a]].ball, 3.0), scale_ball(tree.pairs[n.pairs[b]].ball, 3.0))) {
            rep.disjoint_ok = false;
            fail("3-dilations meet in cube " + std::to_string(cid));
          }
        }
      }
    }
  }
  for (const auto& p : tree.pairs) {
    double sum = 0.0;
    for (std::size_t c : p.cubes) {
      sum += tree.cubes[c].mass;
      const bool inside = std::any_of(p.support.cubes.begin(), p.support.cubes.end(),
                                      [&](const AxisCube& s) { return contains(s, tree.cubes[c].cube); });
      if (!inside) {
        rep.nesting_ok = false;
        fail("cube " + std::to_string(c) + " leaves its support");
      }
    }
    if (!p.cubes.empty()) rep.max_muond_error = std::max(rep.max_muond_error, std::abs(sum - p.nu) / p.nu);
    if (!contains(p.ball, p.support)) {
      rep.nesting_ok = false;
      fail("support of ball " + std::to_string(p.index) + " escapes the ball");
    }
  }
  rep.muond_ok = rep.max_muond_error <= kTol;
  if (!rep.muond_ok) fail("mass differs from c_const * lambda or from child sums");

  // mu_n(B_i) must not change after generation n.
  for (const auto& p : tree.pairs) {
    const double at_n = measure_of_ball(tree, p.ball.center, p.ball.radius, p.generation);
    const double at_depth = measure_of_ball(tree, p.ball.center, p.ball.radius);
    const double err = std::abs(at_n - at_depth);
    rep.max_consistency_error = std::max({rep.max_consistency_error, err, std::abs(at_n - p.nu)});
  }
  rep.consistency_ok = rep.max_consistency_error <= kTol;
  if (!rep.consistency_ok) fail("mu_n(B_i) changes across generations");
  return rep;
}

void corrupt_mass(ConstructionTree& tree, std::size_t cube_id, double factor) {
  require(cube_id < tree.cubes.size(), "cube id out of range");
  tree.cubes[cube_id].mass *= factor;
}

namespace {

nlohmann::json node_json(const ConstructionTree& tree, std::size_t cid) {
  const CubeNode& n = tree.cubes[cid];
  nlohmann::json j;
  j["generation"] = n.generation;
  j["cube"] = cube_to_json(n.cube);
  j["mass"] = n.mass;
  j["c_const"] = n.c_const;
  j["cn_bound"] = n.cn_bound;
  nlohmann::json sel = nlohmann::json::array();
  for (std::size_t pid : n.pairs) {
    const PairNode& p = tree.pairs[pid];
    nlohmann::json pj;
    pj["index"] = p.index;
    pj["ball"] = to_json(Shape(p.ball));
    pj["nu"] = p.nu;
    pj["ell"] = p.ell;
    pj["rtilde"] = p.rtilde;
    pj["support"] = to_json(Shape(p.support));
    nlohmann::json kids = nlohmann::json::array();
    for (std::size_t c : p.cubes) kids.push_back(node_json(tree, c));
    pj["children"] = std::move(kids);
    sel.push_back(std::move(pj));
  }
  j["selected"] = std::move(sel);
  return j;
}

}  // namespace

nlohmann::json to_json(const ConstructionTree& tree) {
  nlohmann::json j;
  j["d"] = tree.d;
  j["kappa2"] = tree.kappa2;
  j["depth"] = tree.depth;
  j["depth_unreachable"] = tree.depth_unreachable;
  j["params"] = {{"eps_schedule", tree.params.eps_schedule},
                 {"kappa2", tree.params.kappa2},
                 {"max_depth", tree.params.max_depth},
                 {"rtilde_floor", tree.params.rtilde_floor},
                 {"max_pieces", tree.params.max_pieces},
                 {"max_nodes", tree.params.max_nodes},
                 {"exhaustive", tree.params.exhaustive}};
  nlohmann::json gens = nlohmann::json::array();
  for (const auto& g : tree.generations) {
    gens.push_back({{"generation", g.generation},
                    {"r_min", g.r_min},
                    {"schedule", g.schedule},
                    {"rtilde", g.rtilde},
                    {"clamped", g.clamped},
                    {"max_index", g.max_index},
                    {"cubes", g.cubes},
                    {"pairs", g.pairs}});
  }
  j["generations"] = std::move(gens);
  j["root"] = node_json(tree, 0);
  return j;
}

ConstructionTree tree_from_json(const nlohmann::json& j) {
  try {
    ConstructionTree tree;
    tree.d = j.at("d").get<std::size_t>();
    tree.kappa2 = j.at("kappa2").get<double>();
    tree.depth = j.at("depth").get<std::size_t>();
    tree.depth_unreachable = j.at("depth_unreachable").get<bool>();
    const auto& pj = j.at("params");
    tree.params.eps_schedule = pj.at("eps_schedule").get<std::vector<double>>();
    tree.params.kappa2 = pj.at("kappa2").get<double>();
    tree.params.max_depth = pj.at("max_depth").get<std::size_t>();
    tree.params.rtilde_floor = pj.at("rtilde_floor").get<double>();
    tree.params.max_pieces = pj.at("max_pieces").get<std::size_t>();
    tree.params.max_nodes = pj.at("max_nodes").get<std::size_t>();
    tree.params.exhaustive = pj.value("exhaustive", false);
    for (const auto& g : j.at("generations")) {
      GenerationInfo info;
      info.generation = g.at("generation").get<std::size_t>();
      info.r_min = g.at("r_min").get<double>();
      info.schedule = g.at("schedule").get<double>();
      info.rtilde = g.at("rtilde").get<double>();
      info.clamped = g.at("clamped").get<bool>();
      info.max_index = g.at("max_index").get<std::size_t>();
      info.cubes = g.at("cubes").get<std::size_t>();
      info.pairs = g.at("pairs").get<std::size_t>();
      tree.generations.push_back(info);
    }
    // Breadth-first so ids follow the build order.
    std::vector<std::pair<const nlohmann::json*, long>> queue{{&j.at("root"), -1}};
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const nlohmann::json& nj = *queue[head].first;
      CubeNode n;
      n.generation = nj.at("generation").get<std::size_t>();
      n.cube = cube_from_json(nj.at("cube"));
      n.mass = nj.at("mass").get<double>();
      n.c_const = nj.at("c_const").get<double>();
      n.cn_bound = nj.at("cn_bound").get<double>();
      n.parent = queue[head].second;
      const std::size_t cid = tree.cubes.size();
      if (n.parent >= 0) tree.pairs[static_cast<std::size_t>(n.parent)].cubes.push_back(cid);
      tree.cubes.push_back(n);
      for (const auto& sj : nj.at("selected")) {
        PairNode p;
        p.generation = n.generation + 1;
        p.index = sj.at("index").get<std::size_t>();
        p.ball = std::get<Ball>(shape_from_json(sj.at("ball")));
        p.nu = sj.at("nu").get<double>();
        p.ell = sj.at("ell").get<double>();
        p.rtilde = sj.at("rtilde").get<double>();
        p.support = std::get<CubeUnion>(shape_from_json(sj.at("support")));
        p.parent = cid;
        const std::size_t pid = tree.pairs.size();
        tree.cubes[cid].pairs.push_back(pid);
        tree.pairs.push_back(std::move(p));
        for (const auto& kid : sj.at("children")) queue.emplace_back(&kid, static_cast<long>(pid));
      }
    }
    return tree;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, std::string("malformed tree JSON: ") + e.what());
  } catch (const std::bad_variant_access&) {
    throw Error(ErrorCode::Io, "malformed tree JSON: unexpected shape type");
  }
}

}  // namespace limsup
