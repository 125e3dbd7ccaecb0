#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "limsup/cli.hpp"
#include "limsup/families.hpp"
#include "limsup/geom_io.hpp"

using namespace limsup;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result lab(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("limsup_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

}  // namespace

TEST_CASE("wwx prints the bound") {
  const Result r = lab({"wwx", "--d", "2", "--a", "1,2"});
  CHECK(r.code == 0);
  CHECK(r.out == "1.5\n");
}

TEST_CASE("usage errors") {
  CHECK(lab({"frobnicate"}).code == 1);
  CHECK(lab({}).code == 1);
  CHECK(lab({"wwx", "--d", "2"}).code == 1);
  CHECK(lab({"dimension", "--tree", "x.json", "--mode", "bogus"}).code == 1);
  const Result help = lab({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("counterexample") != std::string::npos);
}

TEST_CASE("contract violations and io errors") {
  const Result bad = lab({"wwx", "--d", "2", "--a", "2,1"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("error:") == 0);
  const Result missing = lab({"construct", "--family", "/nonexistent/family.jsonl", "--out", "/tmp/never.json"});
  CHECK(missing.code == 2);
  const Result shallow = lab({"counterexample", "--depth", "10", "--a", "1.5"});
  CHECK(shallow.code == 1);
}

TEST_CASE("gen-family writes a readable family") {
  TempDir dir("gen");
  const Result r = lab({"gen-family", "--kind", "random_cover", "--d", "2", "--count", "40", "--seed", "3", "--shape",
                        "ellipsoid:1,1.5", "--out", dir / "fam.jsonl"});
  REQUIRE(r.code == 0);
  const auto pairs = read_family_jsonl(dir / "fam.jsonl");
  CHECK(pairs.size() == 40);
  const auto header = read_family_header(dir / "fam.jsonl");
  REQUIRE(header.has_value());
  CHECK(header->seed == 3);
  CHECK(header->kind == FamilyKind::RandomCover);
  CHECK(fs::exists(dir / "fam.jsonl.manifest.json"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "fam.jsonl.manifest.json"));
  CHECK(manifest["command"] == "gen-family");
}

TEST_CASE("phi, content and sandwich tables") {
  TempDir dir("shapes");
  {
    std::ofstream f(dir / "shapes.jsonl");
    f << to_json(Shape(AxisCube({0.0}, 0.25))).dump() << "\n";
    nlohmann::json b = to_json(Shape(Ball({0.5}, 0.1)));
    b["id"] = "ball";
    f << b.dump() << "\n";
  }
  const Result phi = lab({"phi", "--shapes", dir / "shapes.jsonl", "--s", "0.5,1", "--resolution", "6"});
  REQUIRE(phi.code == 0);
  CHECK(first_line(phi.out) == "shape_id,s,value,upper,witness_feasible");
  CHECK(line_count(phi.out) == 5);
  CHECK(phi.out.find("\nball,0.5,") != std::string::npos);

  const Result content = lab({"content", "--shapes", dir / "shapes.jsonl", "--s", "0.5", "--out", dir / "c.csv"});
  REQUIRE(content.code == 0);
  CHECK(first_line(slurp(dir / "c.csv")) == "shape_id,s,content,comparability");
  CHECK(fs::exists(dir / "c.csv.manifest.json"));

  const Result sw = lab({"sandwich", "--shapes", dir / "shapes.jsonl", "--s", "0.3,1", "--resolution", "6", "--plot-out",
                         dir / "plot.csv"});
  REQUIRE(sw.code == 0);
  CHECK(line_count(sw.out) == 5);
  CHECK(sw.err.find("0 violations") != std::string::npos);
  const std::string plot = slurp(dir / "plot.csv");
  CHECK(first_line(plot) == "s,series,value");
  CHECK(line_count(plot) == 1 + 3 * 4);
  // s beyond the dimension of the shapes is a contract violation.
  CHECK(lab({"sandwich", "--shapes", dir / "shapes.jsonl", "--s", "1.5"}).code == 1);
}

TEST_CASE("construct and dimension") {
  TempDir dir("construct");
  REQUIRE(lab({"gen-family", "--kind", "dirichlet", "--count", "50", "--shape", "concentric:2", "--out",
               dir / "fam.jsonl"})
              .code == 0);
  const Result c = lab({"construct", "--family", dir / "fam.jsonl", "--depth", "2", "--out", dir / "tree.json"});
  REQUIRE(c.code == 0);
  CHECK(c.out.find("invariants pass") != std::string::npos);
  const auto doc = nlohmann::json::parse(slurp(dir / "tree.json"));
  CHECK(doc["s"] == 0.5);

  const Result cases = lab({"dimension", "--tree", dir / "tree.json", "--mode", "cases", "--samples", "50", "--out",
                            dir / "cases.csv", "--plot-out", dir / "cases_plot.csv"});
  REQUIRE(cases.code == 0);
  const std::string csv = slurp(dir / "cases.csv");
  CHECK(first_line(csv) == "x1,r,mu,case,bound,pass");
  CHECK(line_count(csv) == 51);
  CHECK(line_count(slurp(dir / "cases_plot.csv")) == 51);
  CHECK(cases.out.find("0 violations") != std::string::npos);

  const Result mdp = lab({"dimension", "--tree", dir / "tree.json", "--mode", "mdp", "--samples", "30"});
  REQUIRE(mdp.code == 0);
  CHECK(line_count(mdp.out) == 31);
  CHECK(mdp.err.find("mdp: certified s") != std::string::npos);

  const Result box =
      lab({"dimension", "--tree", dir / "tree.json", "--mode", "box", "--levels", "2,3,4,5", "--out", dir / "box.csv"});
  REQUIRE(box.code == 0);
  CHECK(first_line(slurp(dir / "box.csv")) == "level,delta,count");
}

TEST_CASE("counterexample report") {
  TempDir dir("cex");
  const Result r = lab({"counterexample", "--depth", "20", "--a", "1.5", "--out", dir / "cex.json"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("N(a) = 18") == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "cex.json"));
  CHECK(j["pass"] == true);
  CHECK(j["threshold"] == 18);
  CHECK(j["level_measure"][2]["measure"] == "7/16");
}

TEST_CASE("pipeline is deterministic") {
  TempDir a("pipe_a");
  TempDir b("pipe_b");
  const std::vector<std::string> base{"pipeline", "--kind", "dirichlet", "--shape", "concentric:2", "--depth", "3",
                                      "--seed", "7", "--samples", "500", "--count", "100"};
  auto with_dir = [&](const TempDir& d, const std::string& threads) {
    auto args = base;
    args.insert(args.end(), {"--out-dir", d.path.string(), "--threads", threads});
    return args;
  };
  const Result ra = lab(with_dir(a, "1"));
  const Result rb = lab(with_dir(b, "2"));
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  for (const char* f : {"family.jsonl", "tree.json", "report.csv", "report.json"}) {
    CHECK(fs::exists(a.path / f));
    CHECK(slurp(a.path / f) == slurp(b.path / f));
  }
  CHECK(fs::exists(a.path / "manifest.json"));
  const auto report = nlohmann::json::parse(slurp(a.path / "report.json"));
  CHECK(report["cases"]["violations"] == 0);
  CHECK(report["invariants"]["pass"] == true);
  // The tree round-trips through its own parser.
  const auto tree = tree_from_json(nlohmann::json::parse(slurp(a.path / "tree.json")));
  CHECK(tree.depth == 3);
}

TEST_CASE("plot data and formatting") {
  TempDir dir("plot");
  LocalDimReport rep;
  cli::emit_plot_data(rep, dir / "empty.csv");
  CHECK(slurp(dir / "empty.csv") == "log_r,log_mu,case\n");
  LocalDimSample s;
  s.x = {0.5};
  s.r = 0.1;
  s.mu = 0.2;
  rep.samples = {s, s, s};
  cli::emit_plot_data(rep, dir / "three.csv");
  CHECK(line_count(slurp(dir / "three.csv")) == 4);
  CHECK(cli::samples_csv(rep.samples, 1) == "x1,r,mu,case,bound,pass\n0.5,0.1,0.2,1,0,1\n0.5,0.1,0.2,1,0,1\n"
                                            "0.5,0.1,0.2,1,0,1\n");

  CHECK(cli::fmt(0.1) == "0.1");
  CHECK(cli::fmt(1.5) == "1.5");
  CHECK(std::stod(cli::fmt(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("thread count resolution") {
  CHECK(cli::resolve_threads(3) == 3);
  ::setenv("LIMSUP_LAB_THREADS", "5", 1);
  CHECK(cli::resolve_threads(0) == 5);
  CHECK(cli::resolve_threads(2) == 2);
  ::setenv("LIMSUP_LAB_THREADS", "junk", 1);
  CHECK(cli::resolve_threads(0) == 1);
  ::unsetenv("LIMSUP_LAB_THREADS");
  CHECK(cli::resolve_threads(0) == 1);
}
