// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "limsup/cantor.hpp"
#include "limsup/cex.hpp"
#include "limsup/cli.hpp"
#include "limsup/content.hpp"
#include "limsup/cover.hpp"
#include "limsup/dimest.hpp"
#include "limsup/families.hpp"

using namespace limsup;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

ConstructionTree dirichlet_tree() {
  FamilySpec spec;
  spec.kind = FamilyKind::Dirichlet;
  spec.count = 1000;
  spec.rule = ShapeRule::concentric_ball(2.0);
  ConstructionParams p;
  p.max_depth = 3;
  return build(Family(spec), p);
}

// 1. wwx bound examples.
Outcome wwx_examples() {
  std::size_t bad = 0;
  if (wwx_bound(2, AnisotropyVector({1.0, 2.0})) != 1.5) ++bad;
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> dd(1, 4);
  std::uniform_real_distribution<double> aa(1.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    const std::size_t d = dd(rng);
    const double a = aa(rng);
    if (wwx_bound(d, AnisotropyVector(Vec(d, a))) != static_cast<double>(d) / a) ++bad;
  }
  return {bad == 0, "101 cases, " + std::to_string(bad) + " mismatches"};
}

// 2. log phi^{s0}(ellipsoid(r^{a_j})) / log r = d, as a slope between two radii.
Outcome exponent_identity() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::size_t> dd(1, 4);
  std::uniform_real_distribution<double> aa(1.0, 5.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t d = dd(rng);
    Vec a(d);
    for (auto& v : a) v = aa(rng);
    std::sort(a.begin(), a.end());
    a[0] = 1.0;
    const double s0 = wwx_bound(d, AnisotropyVector(a));
    auto log_phi = [&](double r) {
      Vec axes(d);
      for (std::size_t j = 0; j < d; ++j) axes[j] = std::pow(r, a[j]);
      return std::log(falconer_svf(Ellipsoid(Vec(d, 0.5), axes), s0));
    };
    const double r1 = 1e-2, r2 = 1e-3;
    const double slope = (log_phi(r1) - log_phi(r2)) / (std::log(r1) - std::log(r2));
    worst = std::max(worst, std::abs(slope - static_cast<double>(d)));
  }
  return {worst <= 1e-9, "1000 vectors, max |slope - d| = " + num(worst)};
}

// 3. The phi / content sandwich on a mixed corpus.
Outcome sandwich_corpus() {
  struct Item {
    std::string name;
    CubeUnion set;
  };
  std::vector<Item> corpus;
  auto add = [&](const std::string& name, CubeUnion u) { corpus.push_back({name, std::move(u)}); };
  add("interval 1/4", CubeUnion({AxisCube({0.0}, 0.25)}));
  add("interval 0.6", CubeUnion({AxisCube({0.3}, 0.6)}));
  add("unit interval", CubeUnion({AxisCube({0.0}, 1.0)}));
  add("two intervals", CubeUnion({AxisCube({0.0}, 0.125), AxisCube({0.75}, 0.25)}));
  add("three intervals", CubeUnion({AxisCube({0.1}, 0.05), AxisCube({0.4}, 0.1), AxisCube({0.8}, 0.02)}));
  add("dust 4 @0.5", std::get<CubeUnion>(attach_shape(Ball({0.5}, 0.2), 1, ShapeRule::dust(4, 0.5)).shape));
  add("dust 3 @0.7", std::get<CubeUnion>(attach_shape(Ball({0.5}, 0.3), 1, ShapeRule::dust(3, 0.7)).shape));
  add("cusp 1d", std::get<CubeUnion>(attach_shape(Ball({0.5}, 0.2), 1, ShapeRule::cusp(2.0)).shape));
  add("square 1/4", CubeUnion({AxisCube({0.0, 0.0}, 0.25)}));
  add("square 1/2", CubeUnion({AxisCube({0.25, 0.25}, 0.5)}));
  add("unit square", CubeUnion({AxisCube({0.0, 0.0}, 1.0)}));
  add("two squares", CubeUnion({AxisCube({0.0, 0.0}, 0.25), AxisCube({0.5, 0.5}, 0.25)}));
  add("L shape", CubeUnion({AxisCube({0.0, 0.0}, 0.25), AxisCube({0.25, 0.0}, 0.25), AxisCube({0.0, 0.25}, 0.25)}));
  add("ellipse 0.4x0.2", rasterize(Ellipsoid({0.5, 0.5}, {0.4, 0.2}), 1.0 / 16));
  add("ellipse 0.3x0.1", rasterize(Ellipsoid({0.5, 0.5}, {0.3, 0.1}), 1.0 / 32));
  add("disc", rasterize(Ball({0.5, 0.5}, 0.25), 1.0 / 16));
  add("dust 2x2 @1.2", std::get<CubeUnion>(attach_shape(Ball({0.5, 0.5}, 0.3), 1, ShapeRule::dust(2, 1.2)).shape));
  add("dust 3x3 @1.0", std::get<CubeUnion>(attach_shape(Ball({0.5, 0.5}, 0.3), 1, ShapeRule::dust(3, 1.0)).shape));
  add("cusp gamma 2", std::get<CubeUnion>(attach_shape(Ball({0.5, 0.5}, 0.3), 1, ShapeRule::cusp(2.0)).shape));
  add("cusp gamma 1.5", std::get<CubeUnion>(attach_shape(Ball({0.5, 0.5}, 0.3), 1, ShapeRule::cusp(1.5)).shape));
  add("thin bar", CubeUnion({AxisCube({0.0, 0.5}, 0.125), AxisCube({0.125, 0.5}, 0.125), AxisCube({0.25, 0.5}, 0.125),
                             AxisCube({0.375, 0.5}, 0.125)}));

  std::size_t checks = 0, violations = 0, skipped = 0;
  std::string first;
  for (const auto& item : corpus) {
    const std::size_t d = item.set.dim();
    // Cube-heavy rasters get a coarser LP grid; the bound stays certified.
    const std::size_t res = d == 1 ? 8 : (item.set.cubes.size() > 12 ? 4 : 5);
    for (double s : {0.3, 0.5, 1.0, 1.5}) {
      if (s > static_cast<double>(d)) {
        ++skipped;
        continue;
      }
      const SandwichReport r = sandwich_check(item.set, s, res, 10);
      ++checks;
      if (!r.pass()) {
        ++violations;
        if (first.empty()) first = "; first: " + item.name + " s=" + num(s);
      }
    }
  }
  return {violations == 0 && corpus.size() >= 20,
          std::to_string(corpus.size()) + " shapes, " + std::to_string(checks) + " checks, " +
              std::to_string(violations) + " violations, " + std::to_string(skipped) + " skipped with s > d" + first};
}

// 4. Greedy covering contract on random instances, plus fault injection.
Outcome cover_contract() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t violations = 0, rejected = 0, injected = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t d = 1 + inst % 3;
    const double side = 0.05 + 0.95 * u(rng);
    Vec corner(d);
    for (auto& c : corner) c = (1.0 - side) * u(rng);
    const AxisCube cube(corner, side);
    std::vector<Ball> cands;
    const std::size_t n = 50 + static_cast<std::size_t>(300 * u(rng));
    for (std::size_t i = 0; i < n; ++i) {
      const double r = side * std::pow(10.0, -1.0 - 1.5 * u(rng));
      Vec c(d);
      for (std::size_t j = 0; j < d; ++j) c[j] = corner[j] + r + (side - 2 * r) * u(rng);
      cands.emplace_back(c, r);
    }
    CoverParams params;
    const double k2 = kappa2_default(d, params.epsilon);
    CoverSelection sel;
    try {
      sel = greedy_vitali(cands, cube, params);
    } catch (const Error&) {
      ++violations;
      continue;
    }
    std::vector<Ball> chosen;
    for (auto i : sel.indices) chosen.push_back(cands[i]);
    // Direct re-check, independent of check_cover.
    double vol = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      vol += volume(chosen[i]);
      ok = ok && contains(cube, chosen[i]);
      for (std::size_t j = i + 1; j < chosen.size(); ++j) {
        ok = ok && distance(chosen[i].center, chosen[j].center) > 3.0 * (chosen[i].radius + chosen[j].radius);
      }
    }
    ok = ok && vol >= std::pow(30.0, -static_cast<double>(d)) * volume(cube) && check_cover(chosen, cube, k2).empty();
    if (!ok) ++violations;

    // Fault: a copy of a selected ball nudged so the 3-dilations overlap.
    std::vector<Ball> faulty = chosen;
    Ball extra = chosen.front();
    extra.center[0] += 2.0 * extra.radius * (extra.center[0] > cube.center()[0] ? -1.0 : 1.0);
    faulty.push_back(extra);
    ++injected;
    if (!check_cover(faulty, cube, k2).empty()) ++rejected;
  }
  return {violations == 0 && rejected == injected, "1000 instances, " + std::to_string(violations) + " violations, " +
                                                       std::to_string(rejected) + "/" + std::to_string(injected) +
                                                       " injected faults rejected"};
}

// 5. Construction invariants on the Dirichlet tree.
Outcome construction_invariants(const ConstructionTree& t) {
  double mass_err = 0.0;
  for (std::size_t g = 0; g <= t.depth; ++g) {
    double sum = 0.0;
    for (const auto& c : t.cubes) {
      if (c.generation == g) sum += c.mass;
    }
    mass_err = std::max(mass_err, std::abs(sum - 1.0));
  }
  double cons_err = 0.0;
  for (const auto& p : t.pairs) {
    const double a = measure_of_ball(t, p.ball.center, p.ball.radius, p.generation);
    const double b = measure_of_ball(t, p.ball.center, p.ball.radius);
    cons_err = std::max(cons_err, std::abs(a - b) / std::max(a, b));
  }
  bool cn = true;
  for (const auto& row : c_constants(t)) cn = cn && row.ok && row.max_c <= row.bound;
  const InvariantReport inv = check_invariants(t);
  const bool pass = t.depth == 3 && mass_err <= 1e-9 && cons_err <= 1e-9 && cn && inv.pass();
  return {pass, "depth " + std::to_string(t.depth) + ", " + std::to_string(t.cubes.size()) + " cubes, mass error " +
                    num(mass_err) + ", consistency error " + num(cons_err) + ", Cn bound " + (cn ? "holds" : "fails") +
                    ", invariant report " + (inv.pass() ? "pass" : "fail")};
}

// 6. Case 1 / Case 2 inequalities, plus mass corruption.
Outcome case_inequalities(const ConstructionTree& t) {
  CaseOptions opt;
  opt.s = 0.5;
  opt.samples = 10000;
  opt.seed = 6;
  const LocalDimReport rep = verify_case_bounds(t, opt);
  std::size_t case2 = 0;
  for (const auto& s : rep.samples) case2 += s.which == 2;

  std::size_t detected = 0, trials = 0;
  for (std::size_t id : {leaves(t).front(), t.cubes.size() / 2, std::size_t{1}}) {
    ConstructionTree bad = t;
    corrupt_mass(bad, id, 10.0);
    CaseOptions o = opt;
    o.samples = 1000;
    ++trials;
    if (!verify_case_bounds(bad, o).pass()) ++detected;
  }
  return {rep.pass() && detected == trials,
          std::to_string(rep.samples.size()) + " samples (" + std::to_string(case2) + " Case 2), " +
              std::to_string(rep.violations) + " violations, " + std::to_string(rep.consistency_violations) +
              " inconsistent nodes; corruption detected " + std::to_string(detected) + "/" + std::to_string(trials)};
}

// 7. Dimension lower bounds and box counting of tail unions.
Outcome dimension_bounds(const ConstructionTree& t1) {
  std::vector<double> grid;
  for (int i = 1; i <= 200; ++i) grid.push_back(0.01 * i);
  MdpOptions mo;
  mo.samples = 4000;
  const MdpReport m1 = mdp_report(t1, grid, mo);

  // Ellipsoid family in the plane; depth 2 would need ~10^7 balls, so depth 1.
  FamilySpec sp;
  sp.d = 2;
  sp.count = 20000;
  sp.seed = 7;
  sp.rule = ShapeRule::ellipsoid({1.0, 2.0});
  ConstructionParams cp;
  cp.max_depth = 1;
  const ConstructionTree t2 = build(Family(sp), cp);
  const MdpReport m2 = mdp_report(t2, grid, mo);

  // Tail unions of shapes, counted at scales where the tail is resolved.
  FamilySpec f1;
  f1.d = 1;
  f1.count = 20000;
  f1.seed = 7;
  f1.rule = ShapeRule::concentric_ball(2.0);
  std::vector<CubeUnion> tail1;
  for (const auto& p : attach_shapes(gen_balls(f1), f1.rule)) {
    if (p.index > 2000) tail1.push_back(p.smoothed.support);
  }
  const BoxCount b1 = box_counting(tail1, {2, 3, 4, 5, 6, 7, 8});
  std::vector<CubeUnion> tail2;
  for (const auto& p : attach_shapes(gen_balls(sp), sp.rule)) {
    if (p.index > 2000) tail2.push_back(p.smoothed.support);
  }
  const BoxCount b2 = box_counting(tail2, {1, 2, 3, 4, 5});

  const bool pass = m1.s >= 0.35 && m2.s >= 1.3 && b1.slope >= 0.9 && b2.slope >= 1.9;
  return {pass, "mdp d=1 depth " + std::to_string(t1.depth) + ": s = " + num(m1.s) + " (need 0.35); mdp d=2 depth " +
                    std::to_string(t2.depth) + ": s = " + num(m2.s) + " (need 1.3); box slope d=1 " + num(b1.slope) +
                    " (need 0.9), d=2 " + num(b2.slope) + " (need 1.9)"};
}

// 8. The nested-interval counterexample, exactly.
Outcome counterexample() {
  const CexTree tree = build_cex(24);
  bool measures = true;
  for (std::size_t n = 0; n <= 20; ++n) {
    Rational prod = 1;
    for (std::size_t i = 0; i < n; ++i) prod *= 1 - gap_fraction(i);
    measures = measures && level_measure(tree, n) == prod && level_measure_direct(tree, n) == prod;
  }
  bool partials = true;
  for (std::size_t n : {1u, 10u, 50u, 100u, 200u}) partials = partials && kappa_estimate(n).partial > Rational(35, 100);
  const KappaEstimate k200 = kappa_estimate(200);
  const double gap200 = std::abs(k200.partial.convert_to<double>() - 0.3582);

  // Floating-point oracle for N(1.5) with the closed-form kappa.
  const double x = std::acos(-1.0) / std::sqrt(2.0);
  const double kappa = std::sin(x) / x;
  std::size_t oracle = 0;
  while (!(std::sqrt(kappa * std::ldexp(1.0, -static_cast<int>(oracle))) < 1.0 / (2.0 * std::pow(oracle + 1.0, 2))))
    ++oracle;
  const EmptyLimsupReport rep = verify_empty_limsup(tree, 1.5);
  const bool pass =
      measures && partials && gap200 <= 1e-3 && rep.threshold == 18 && oracle == 18 && rep.pass() && rep.exceptions == 0;
  return {pass, std::string("level measures ") + (measures ? "exact" : "MISMATCH") + " for n <= 20, kappa_200 = " +
                    num(k200.partial.convert_to<double>()) + ", N(1.5) = " + std::to_string(rep.threshold) +
                    " (oracle " + std::to_string(oracle) + "), " + std::to_string(rep.checked) + " intervals checked, " +
                    std::to_string(rep.exceptions) + " exceptions"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 9. Two pipeline runs with the same seed.
Outcome determinism() {
  const fs::path base = fs::temp_directory_path() / "limsup_acceptance";
  fs::remove_all(base);
  std::ostringstream sink;
  int codes = 0;
  for (const char* run : {"a", "b"}) {
    codes += cli::run({"pipeline", "--kind", "dirichlet", "--shape", "concentric:2", "--depth", "3", "--seed", "7",
                       "--out-dir", (base / run).string()},
                      sink, sink);
  }
  const bool tree_same = slurp(base / "a" / "tree.json") == slurp(base / "b" / "tree.json");
  const bool csv_same = slurp(base / "a" / "report.csv") == slurp(base / "b" / "report.csv");
  const bool nonempty = !slurp(base / "a" / "report.csv").empty();
  fs::remove_all(base);
  return {codes == 0 && tree_same && csv_same && nonempty,
          std::string("tree.json ") + (tree_same ? "identical" : "DIFFERS") + ", report.csv " +
              (csv_same ? "identical" : "DIFFERS") + ", exit codes " + (codes == 0 ? "0" : "nonzero")};
}

}  // namespace

int main() {
  int failed = 0;
  auto run = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d %s  %s: %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  };

  run(1, "wwx bound", wwx_examples);
  run(2, "exponent identity", exponent_identity);
  run(3, "phi/content sandwich", sandwich_corpus);
  run(4, "greedy cover contract", cover_contract);
  const ConstructionTree tree = dirichlet_tree();
  run(5, "construction invariants", [&] { return construction_invariants(tree); });
  run(6, "local case inequalities", [&] { return case_inequalities(tree); });
  run(7, "dimension lower bounds", [&] { return dimension_bounds(tree); });
  run(8, "nested-interval counterexample", counterexample);
  run(9, "pipeline determinism", determinism);
  std::printf("%d of 9 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
