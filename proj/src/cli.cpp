#include "limsup/cli.hpp"

#include <boost/version.hpp>

#include <CLI11.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "limsup/cantor.hpp"
#include "limsup/cex.hpp"
#include "limsup/families.hpp"
#include "limsup/geom_io.hpp"

namespace limsup::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

struct Shaped {
  std::string id;
  CubeUnion set;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, path + ": " + e.what());
  }
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used > 0 && used == item.size(), "not a number: '" + item + "'");
    out.push_back(v);
  }
  require(!out.empty(), "empty number list");
  return out;
}

CubeUnion to_cube_union(const Shape& s) {
  if (const auto* c = std::get_if<AxisCube>(&s)) return CubeUnion({*c});
  if (const auto* u = std::get_if<CubeUnion>(&s)) return *u;
  double smallest = 0.0;
  if (const auto* b = std::get_if<Ball>(&s)) smallest = b->radius;
  if (const auto* e = std::get_if<Ellipsoid>(&s)) smallest = e->semiaxes.back();
  return rasterize(s, smallest / 8.0);
}

// JSON lines of geom shapes, or family lines (their supports are used).
std::vector<Shaped> load_shapes(const std::string& path) {
  std::istringstream in(read_text(path));
  std::vector<Shaped> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Io, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (j.contains("spec")) continue;
    Shaped sh;
    if (j.contains("support")) {
      const ShapePair p = shape_pair_from_json(j);
      sh.id = std::to_string(p.index);
      sh.set = p.smoothed.support;
    } else {
      sh.id = j.contains("id") ? j.at("id").dump() : std::to_string(lineno);
      if (sh.id.size() >= 2 && sh.id.front() == '"') sh.id = sh.id.substr(1, sh.id.size() - 2);
      sh.set = to_cube_union(shape_from_json(j));
    }
    out.push_back(std::move(sh));
  }
  if (out.empty()) throw Error(ErrorCode::Io, "no shapes in " + path);
  return out;
}

std::string iso_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_manifest(const std::string& path, const std::string& command, const std::vector<std::string>& args,
                    const nlohmann::json& config, const std::vector<std::string>& outputs, double seconds) {
  nlohmann::json m = {{"command", command},
                      {"args", args},
                      {"config", config},
                      {"outputs", outputs},
                      {"version", kVersion},
                      {"compiler", __VERSION__},
                      {"boost", BOOST_LIB_VERSION},
                      {"started", iso_now()},
                      {"elapsed_seconds", seconds}};
  write_text(path, m.dump(2) + "\n");
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text(path, text);
  }
}

ConstructionParams construction_params(std::size_t depth, const std::string& schedule, double kappa2,
                                       std::size_t max_pieces, bool exhaustive) {
  ConstructionParams cp;
  cp.max_depth = depth;
  cp.kappa2 = kappa2;
  cp.max_pieces = max_pieces;
  cp.exhaustive = exhaustive;
  if (schedule != "harmonic") {
    cp.eps_schedule = parse_list(schedule);
    for (double e : cp.eps_schedule) require(e > 0.0 && e < 1.0, "eps schedule entries must lie in (0, 1)");
  }
  return cp;
}

// Family from a file: a generator header is replayed lazily, otherwise the
// listed pairs form an explicit family.
std::unique_ptr<Family> load_family(const std::string& path) {
  if (auto spec = read_family_header(path); spec && spec->kind != FamilyKind::Explicit) {
    return std::make_unique<Family>(*spec);
  }
  auto pairs = read_family_jsonl(path);
  FamilySpec spec;
  spec.kind = FamilyKind::Explicit;
  spec.path = path;
  if (auto header = read_family_header(path)) spec.rule = header->rule;
  return std::make_unique<Family>(spec, std::move(pairs));
}

nlohmann::json tree_document(const ConstructionTree& tree, const Family& family) {
  nlohmann::json j = to_json(tree);
  j["family"] = to_json(family.spec());
  try {
    j["s"] = target_dimension(family.spec().rule, tree.d);
  } catch (const Error&) {
    j["s"] = nullptr;
  }
  return j;
}

std::string family_text(const FamilySpec& spec, const std::vector<ShapePair>& pairs) {
  std::string text = nlohmann::json{{"spec", to_json(spec)}}.dump() + "\n";
  for (const auto& p : pairs) text += to_json(p).dump() + "\n";
  return text;
}

std::vector<ShapePair> generate_pairs(const FamilySpec& spec) {
  return attach_shapes(gen_balls(spec), spec.rule);
}

std::string invariants_line(const InvariantReport& r) {
  std::ostringstream ss;
  ss << "invariants " << (r.pass() ? "pass" : "FAIL") << " mass_err=" << fmt(r.max_mass_error)
     << " consistency_err=" << fmt(r.max_consistency_error) << " muond_err=" << fmt(r.max_muond_error);
  return ss.str();
}

nlohmann::json invariants_json(const InvariantReport& r) {
  return {{"pass", r.pass()},
          {"max_mass_error", r.max_mass_error},
          {"max_consistency_error", r.max_consistency_error},
          {"max_muond_error", r.max_muond_error},
          {"mass_ok", r.mass_ok},
          {"consistency_ok", r.consistency_ok},
          {"muond_ok", r.muond_ok},
          {"cn_ok", r.cn_ok},
          {"nesting_ok", r.nesting_ok},
          {"disjoint_ok", r.disjoint_ok},
          {"failures", r.failures}};
}

nlohmann::json c_rows_json(const std::vector<CRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"generation", r.generation}, {"max_c", r.max_c}, {"bound", r.bound}, {"ok", r.ok}});
  }
  return out;
}

double tree_s(const nlohmann::json& doc, double flag) {
  if (flag > 0.0) return flag;
  require(doc.contains("s") && doc.at("s").is_number(), "tree has no target dimension; pass --s");
  return doc.at("s").get<double>();
}

std::vector<double> default_s_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 300; ++i) g.push_back(0.01 * i);
  return g;
}

}  // namespace

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string samples_csv(const std::vector<LocalDimSample>& samples, std::size_t d) {
  std::string out;
  for (std::size_t k = 1; k <= d; ++k) out += "x" + std::to_string(k) + ",";
  out += "r,mu,case,bound,pass\n";
  for (const auto& s : samples) {
    for (double x : s.x) out += fmt(x) + ",";
    out += fmt(s.r) + "," + fmt(s.mu) + "," + std::to_string(s.which) + "," + fmt(s.bound) + "," +
           (s.pass ? "1" : "0") + "\n";
  }
  return out;
}

void emit_plot_data(const LocalDimReport& report, const std::string& path) {
  std::string out = "log_r,log_mu,case\n";
  for (const auto& s : report.samples) {
    out += fmt(std::log(s.r)) + "," + fmt(s.mu > 0.0 ? std::log(s.mu) : -INFINITY) + "," + std::to_string(s.which) + "\n";
  }
  write_text(path, out);
}

void emit_plot_data(const std::vector<SandwichReport>& reports, const std::string& path) {
  std::string out = "s,series,value\n";
  for (const auto& r : reports) {
    out += fmt(r.s) + ",lower," + fmt(r.lower) + "\n";
    out += fmt(r.s) + ",content," + fmt(r.content) + "\n";
    out += fmt(r.s) + ",dual_bound," + fmt(std::pow(6.0, r.s) * r.phi_upper) + "\n";
  }
  write_text(path, out);
}

unsigned resolve_threads(int flag) {
  if (flag > 0) return static_cast<unsigned>(flag);
  if (const char* env = std::getenv("LIMSUP_LAB_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  CLI::App app{"Mass transference experiments: shapes, contents, Cantor constructions, dimension checks"};
  app.name("limsup_lab");
  app.require_subcommand(1);

  // gen-family
  auto* gen = app.add_subcommand("gen-family", "Generate a ball family with attached shapes");
  std::string g_kind = "random_cover", g_shape = "concentric:2", g_input, g_out;
  std::size_t g_d = 1, g_count = 1000;
  std::uint64_t g_seed = 0;
  double g_c = 2.0;
  gen->add_option("--kind", g_kind, "random_cover | dirichlet | explicit");
  gen->add_option("--d", g_d, "dimension");
  gen->add_option("--count", g_count, "number of pairs written");
  gen->add_option("--seed", g_seed, "random seed");
  gen->add_option("--shape", g_shape, "concentric:A | ellipsoid:A1,A2,.. | dust:K,S | cusp:G");
  gen->add_option("--c", g_c, "random_cover radius constant");
  gen->add_option("--input", g_input, "ball file for explicit families");
  gen->add_option("--out", g_out, "output JSON-lines file")->required();

  // phi / content / sandwich
  std::string sh_path, sh_out, sh_plot, sh_s = "0.3,0.5,1,1.5";
  std::size_t sh_res = 8, sh_depth = 10;
  auto shape_opts = [&](CLI::App* sub) {
    sub->add_option("--shapes", sh_path, "JSON-lines shapes or family file")->required();
    sub->add_option("--s", sh_s, "comma-separated exponents");
    sub->add_option("--out", sh_out, "CSV output (default stdout)");
  };
  auto* phi = app.add_subcommand("phi", "Certified lower bound and dual upper bound on phi^s");
  shape_opts(phi);
  phi->add_option("--resolution", sh_res, "LP cells per side");
  auto* content = app.add_subcommand("content", "Dyadic Hausdorff content");
  shape_opts(content);
  content->add_option("--max-depth", sh_depth, "dyadic depth");
  auto* sandwich = app.add_subcommand("sandwich", "Check the phi / content sandwich");
  shape_opts(sandwich);
  sandwich->add_option("--resolution", sh_res, "LP cells per side");
  sandwich->add_option("--max-depth", sh_depth, "dyadic depth");
  sandwich->add_option("--plot-out", sh_plot, "plot-data CSV");

  // wwx
  auto* wwx = app.add_subcommand("wwx", "Dimension bound for an anisotropy vector");
  std::size_t w_d = 1;
  std::string w_a;
  wwx->add_option("--d", w_d, "dimension")->required();
  wwx->add_option("--a", w_a, "comma-separated anisotropy vector")->required();

  // construct
  auto* construct = app.add_subcommand("construct", "Build the Cantor construction tree");
  std::string c_family, c_schedule = "harmonic", c_out;
  std::size_t c_depth = 3, c_pieces = 1;
  double c_kappa2 = 0.0;
  bool c_exhaustive = false;
  construct->add_option("--family", c_family, "family file")->required();
  construct->add_option("--depth", c_depth, "generations");
  construct->add_option("--eps-schedule", c_schedule, "harmonic or comma-separated eps_1,eps_2,..");
  construct->add_option("--kappa2", c_kappa2, "selection constant (0: default)");
  construct->add_option("--max-pieces", c_pieces, "pieces per smallest support component");
  construct->add_flag("--exhaustive", c_exhaustive, "full greedy pass per cube");
  construct->add_option("--out", c_out, "tree JSON")->required();

  // dimension
  auto* dimension = app.add_subcommand("dimension", "Local-dimension checks on a tree");
  std::string d_tree, d_mode = "cases", d_out, d_plot, d_levels = "2,3,4,5,6,7,8";
  std::size_t d_samples = 10000;
  std::uint64_t d_seed = 1;
  double d_s = 0.0, d_tol = 1e-9;
  int d_threads = 0;
  dimension->add_option("--tree", d_tree, "tree JSON")->required();
  dimension->add_option("--mode", d_mode, "cases | mdp | box")->check(CLI::IsMember({"cases", "mdp", "box"}));
  dimension->add_option("--samples", d_samples, "number of (x, r) samples");
  dimension->add_option("--seed", d_seed, "sampling seed");
  dimension->add_option("--s", d_s, "target dimension (default: from the tree)");
  dimension->add_option("--tolerance", d_tol, "relative tolerance on the bounds");
  dimension->add_option("--levels", d_levels, "dyadic levels for box counting");
  dimension->add_option("--threads", d_threads, "worker threads");
  dimension->add_option("--out", d_out, "CSV output (default stdout)");
  dimension->add_option("--plot-out", d_plot, "plot-data CSV");

  // counterexample
  auto* cex = app.add_subcommand("counterexample", "Exact check of the nested-interval counterexample");
  std::size_t x_depth = 24;
  double x_a = 1.5;
  std::string x_out;
  cex->add_option("--depth", x_depth, "tree depth");
  cex->add_option("--a", x_a, "shrinking exponent, > 1");
  cex->add_option("--out", x_out, "JSON report (default stdout)");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "gen-family, construct and dimension in one run");
  std::string p_kind = "dirichlet", p_shape = "concentric:2", p_dir = ".";
  std::size_t p_d = 1, p_depth = 3, p_count = 1000, p_samples = 10000;
  std::uint64_t p_seed = 0;
  int p_threads = 0;
  pipeline->add_option("--kind", p_kind, "random_cover | dirichlet");
  pipeline->add_option("--shape", p_shape, "shape rule");
  pipeline->add_option("--d", p_d, "dimension");
  pipeline->add_option("--depth", p_depth, "generations");
  pipeline->add_option("--count", p_count, "family size (pairs written for dirichlet)");
  pipeline->add_option("--seed", p_seed, "random seed");
  pipeline->add_option("--samples", p_samples, "case-check samples");
  pipeline->add_option("--threads", p_threads, "worker threads");
  pipeline->add_option("--out-dir", p_dir, "output directory");

  std::vector<std::string> argv_store{"limsup_lab"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      FamilySpec spec;
      spec.kind = family_kind_from_string(g_kind);
      spec.d = g_d;
      spec.rule = parse_shape_rule(g_shape);
      spec.count = g_count;
      spec.seed = g_seed;
      spec.c = g_c;
      spec.path = g_input;
      std::vector<ShapePair> pairs;
      if (spec.kind == FamilyKind::Explicit) {
        require(!g_input.empty(), "explicit families need --input");
        pairs = read_family_jsonl(g_input, &spec.rule);
        spec.count = pairs.size();
        spec.d = pairs.front().ball.dim();
      } else {
        pairs = generate_pairs(spec);
      }
      write_text(g_out, family_text(spec, pairs));
      write_manifest(g_out + ".manifest.json", "gen-family", args, to_json(spec), {g_out}, elapsed());
      out << "wrote " << pairs.size() << " pairs to " << g_out << "\n";
      return 0;
    }

    if (phi->parsed() || content->parsed() || sandwich->parsed()) {
      const auto shapes = load_shapes(sh_path);
      const auto svals = parse_list(sh_s);
      std::string csv;
      std::vector<SandwichReport> reports;
      std::size_t failures = 0;
      if (phi->parsed()) csv = "shape_id,s,value,upper,witness_feasible\n";
      if (content->parsed()) csv = "shape_id,s,content,comparability\n";
      if (sandwich->parsed()) csv = "shape_id,s,lower,content,phi_upper,comparability,slack,lower_ok,upper_ok\n";
      for (const auto& sh : shapes) {
        for (double s : svals) {
          if (phi->parsed()) {
            const PhiLpResult r = phi_lower_lp(sh.set, s, sh_res);
            csv += sh.id + "," + fmt(s) + "," + fmt(r.value) + "," + fmt(r.upper) + "," +
                   (r.witness_feasible ? "1" : "0") + "\n";
          } else if (content->parsed()) {
            const ContentResult r = content_dp(sh.set, s, sh_depth);
            csv += sh.id + "," + fmt(s) + "," + fmt(r.value) + "," + fmt(r.comparability) + "\n";
          } else {
            const SandwichReport r = sandwich_check(sh.set, s, sh_res, sh_depth);
            failures += r.pass() ? 0 : 1;
            reports.push_back(r);
            csv += sh.id + "," + fmt(s) + "," + fmt(r.lower) + "," + fmt(r.content) + "," + fmt(r.phi_upper) + "," +
                   fmt(r.comparability) + "," + fmt(r.slack) + "," + (r.lower_ok ? "1" : "0") + "," +
                   (r.upper_ok ? "1" : "0") + "\n";
          }
        }
      }
      emit(sh_out, csv, out);
      if (!sh_plot.empty()) emit_plot_data(reports, sh_plot);
      const std::string name = phi->parsed() ? "phi" : content->parsed() ? "content" : "sandwich";
      if (!sh_out.empty() && sh_out != "-") {
        write_manifest(sh_out + ".manifest.json", name, args,
                       {{"shapes", sh_path}, {"s", svals}, {"resolution", sh_res}, {"max_depth", sh_depth}},
                       {sh_out}, elapsed());
      }
      if (sandwich->parsed()) {
        (sh_out.empty() || sh_out == "-" ? err : out)
            << "sandwich: " << reports.size() << " checks, " << failures << " violations\n";
      }
      return 0;
    }

    if (wwx->parsed()) {
      out << fmt(wwx_bound(w_d, AnisotropyVector(parse_list(w_a)))) << "\n";
      return 0;
    }

    if (construct->parsed()) {
      const auto family = load_family(c_family);
      const ConstructionParams cp = construction_params(c_depth, c_schedule, c_kappa2, c_pieces, c_exhaustive);
      const ConstructionTree tree = build(*family, cp);
      const InvariantReport inv = check_invariants(tree);
      write_text(c_out, tree_document(tree, *family).dump() + "\n");
      write_manifest(c_out + ".manifest.json", "construct", args,
                     {{"family", c_family}, {"depth", c_depth}, {"eps_schedule", c_schedule}, {"kappa2", c_kappa2},
                      {"max_pieces", c_pieces}, {"exhaustive", c_exhaustive}},
                     {c_out}, elapsed());
      out << "tree depth " << tree.depth << ": " << tree.cubes.size() << " cubes, " << tree.pairs.size() << " pairs; "
          << invariants_line(inv) << "\n";
      return 0;
    }

    if (dimension->parsed()) {
      const nlohmann::json doc = read_json(d_tree);
      const ConstructionTree tree = tree_from_json(doc);
      const unsigned threads = resolve_threads(d_threads);
      std::string csv;
      std::ostringstream summary;
      if (d_mode == "cases") {
        CaseOptions co;
        co.s = tree_s(doc, d_s);
        co.samples = d_samples;
        co.seed = d_seed;
        co.threads = threads;
        co.tolerance = d_tol;
        const LocalDimReport rep = verify_case_bounds(tree, co);
        csv = samples_csv(rep.samples, tree.d);
        if (!d_plot.empty()) emit_plot_data(rep, d_plot);
        summary << "cases: " << rep.samples.size() << " samples, " << rep.violations << " violations, "
                << rep.consistency_violations << " inconsistent nodes, fitted slope " << fmt(rep.fitted_slope);
      } else if (d_mode == "mdp") {
        MdpOptions mo;
        mo.samples = d_samples;
        mo.seed = d_seed;
        mo.threads = threads;
        MdpReport rep = mdp_report(tree, default_s_grid(), mo);
        for (auto& smp : rep.samples) smp.which = 0;
        csv = samples_csv(rep.samples, tree.d);
        summary << "mdp: certified s " << fmt(rep.s) << " with C " << fmt(rep.constant) << " on r in [" << fmt(rep.r_lo)
                << ", " << fmt(rep.r_hi) << "]";
      } else {
        std::vector<int> levels;
        for (double v : parse_list(d_levels)) levels.push_back(static_cast<int>(v));
        const BoxCount bc = box_counting(tree, levels);
        csv = "level,delta,count\n";
        for (std::size_t i = 0; i < bc.levels.size(); ++i) {
          csv += std::to_string(bc.levels[i]) + "," + fmt(std::ldexp(1.0, -bc.levels[i])) + "," +
                 std::to_string(bc.counts[i]) + "\n";
        }
        summary << "box: slope " << fmt(bc.slope);
      }
      emit(d_out, csv, out);
      if (!d_out.empty() && d_out != "-") {
        write_manifest(d_out + ".manifest.json", "dimension", args,
                       {{"tree", d_tree}, {"mode", d_mode}, {"samples", d_samples}, {"seed", d_seed}, {"threads", threads}},
                       {d_out}, elapsed());
      }
      (d_out.empty() || d_out == "-" ? err : out) << summary.str() << "\n";
      return 0;
    }

    if (cex->parsed()) {
      const CexTree tree = build_cex(x_depth);
      const EmptyLimsupReport rep = verify_empty_limsup(tree, x_a);
      nlohmann::json j = to_json(rep);
      nlohmann::json lm = nlohmann::json::array();
      for (std::size_t n = 0; n <= std::min<std::size_t>(x_depth, 20); ++n) {
        lm.push_back({{"level", n}, {"measure", to_string(level_measure(tree, n))}});
      }
      j["level_measure"] = lm;
      emit(x_out, j.dump(2) + "\n", out);
      if (!x_out.empty() && x_out != "-") {
        write_manifest(x_out + ".manifest.json", "counterexample", args, {{"depth", x_depth}, {"a", x_a}}, {x_out},
                       elapsed());
        out << "N(a) = " << rep.threshold << ", checked " << rep.checked << " intervals, " << rep.exceptions
            << " exceptions\n";
      }
      return rep.pass() ? 0 : 1;
    }

    if (pipeline->parsed()) {
      namespace fs = std::filesystem;
      std::error_code ec;
      fs::create_directories(p_dir, ec);
      if (ec) throw Error(ErrorCode::Io, "cannot create " + p_dir);
      FamilySpec spec;
      spec.kind = family_kind_from_string(p_kind);
      require(spec.kind != FamilyKind::Explicit, "pipeline generates its family; use construct for files");
      spec.d = p_d;
      spec.rule = parse_shape_rule(p_shape);
      spec.count = p_count;
      spec.seed = p_seed;
      const std::string fam_path = (fs::path(p_dir) / "family.jsonl").string();
      const std::string tree_path = (fs::path(p_dir) / "tree.json").string();
      const std::string csv_path = (fs::path(p_dir) / "report.csv").string();
      const std::string json_path = (fs::path(p_dir) / "report.json").string();
      write_text(fam_path, family_text(spec, generate_pairs(spec)));

      const Family family(spec);
      const ConstructionTree tree = build(family, construction_params(p_depth, "harmonic", 0.0, 1, false));
      const nlohmann::json doc = tree_document(tree, family);
      write_text(tree_path, doc.dump() + "\n");

      const InvariantReport inv = check_invariants(tree);
      CaseOptions co;
      co.s = tree_s(doc, 0.0);
      co.samples = p_samples;
      co.seed = p_seed;
      co.threads = resolve_threads(p_threads);
      const LocalDimReport rep = verify_case_bounds(tree, co);
      write_text(csv_path, samples_csv(rep.samples, tree.d));
      MdpOptions mo;
      mo.seed = p_seed;
      mo.threads = co.threads;
      const MdpReport mdp = mdp_report(tree, default_s_grid(), mo);

      const nlohmann::json report = {
          {"family", to_json(spec)},
          {"depth", tree.depth},
          {"cubes", tree.cubes.size()},
          {"pairs", tree.pairs.size()},
          {"invariants", invariants_json(inv)},
          {"c_constants", c_rows_json(c_constants(tree))},
          {"cases", {{"samples", rep.samples.size()},
                     {"violations", rep.violations},
                     {"inconsistent_nodes", rep.consistency_violations},
                     {"fitted_slope", rep.fitted_slope},
                     {"failures", rep.failures}}},
          {"mdp", {{"s", mdp.s}, {"s_sup", mdp.s_sup}, {"constant", mdp.constant}, {"r_lo", mdp.r_lo}, {"r_hi", mdp.r_hi}}},
          {"s_target", co.s}};
      write_text(json_path, report.dump(2) + "\n");
      write_manifest((fs::path(p_dir) / "manifest.json").string(), "pipeline", args,
                     {{"kind", p_kind}, {"shape", p_shape}, {"d", p_d}, {"depth", p_depth}, {"count", p_count},
                      {"seed", p_seed}, {"samples", p_samples}, {"threads", co.threads}},
                     {fam_path, tree_path, csv_path, json_path}, elapsed());
      out << "pipeline: " << tree.cubes.size() << " cubes, " << invariants_line(inv) << ", " << rep.violations
          << " case violations, mdp s " << fmt(mdp.s) << "\n";
      return inv.pass() && rep.pass() ? 0 : 1;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::Io ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 1;
}

}  // namespace limsup::cli
