#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "gcflow/cli_io.hpp"
#include "gcflow/error.hpp"
#include "support.hpp"

using namespace gcflow;
using namespace gcflow::io;

namespace {

// Fresh directory under the system temp dir, removed on scope exit.
struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("gcflow_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

int cli(const std::string& args) {
  const std::string cmd = std::string(GCFLOW_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  return json::parse(in);
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("format_double round-trips") {
  for (double v : {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23,
                   std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max()}) {
    const std::string s = format_double(v);
    CHECK(s.find(',') == std::string::npos);
    CHECK(parse_double(s) == v);
    CHECK(std::signbit(parse_double(s)) == std::signbit(v));
  }
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(INFINITY) == "inf");
  CHECK(format_double(-INFINITY) == "-inf");
  CHECK(std::isnan(parse_double("nan")));
  CHECK(parse_double("-inf") == -INFINITY);
  CHECK_THROWS_AS(parse_double("1.5x"), Error);
  CHECK_THROWS_AS(parse_double(""), Error);
}

TEST_CASE("trace csv round-trips bit for bit") {
  TempDir dir;
  DiagnosticsTrace tr;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 50; ++i) {
    DiagnosticsSample s;
    s.t = 0.01 * i + 1e-17 * i;
    s.step = 3 * i;
    s.v_bar = u(rng);
    s.delta = std::exp(u(rng));
    s.rate = i == 0 ? std::nan("") : u(rng);
    s.max_abs_udot = std::abs(u(rng));
    s.osc_udot = std::abs(u(rng)) / 3.0;
    tr.samples.push_back(s);
  }
  const fs::path p = dir.path / "trace.csv";
  write_trace_csv(p, tr);
  const std::string text = slurp(p);
  CHECK(text.rfind("t,v_bar,delta,rate,max_abs_udot,osc_udot\n", 0) == 0);
  const auto back = read_trace_csv(p);
  REQUIRE(back.size() == tr.samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& a = tr.samples[i];
    const auto& b = back[i];
    CHECK(a.t == b.t);
    CHECK(a.v_bar == b.v_bar);
    CHECK(a.delta == b.delta);
    CHECK((a.rate == b.rate || (std::isnan(a.rate) && std::isnan(b.rate))));
    CHECK(a.max_abs_udot == b.max_abs_udot);
    CHECK(a.osc_udot == b.osc_udot);
  }

  write_text(dir.path / "bad.csv", "t,v_bar\n1,2\n");
  CHECK_THROWS_AS(read_trace_csv(dir.path / "bad.csv"), Error);
}

TEST_CASE("PGM frames") {
  TempDir dir;
  auto t = testing::disk(0.5, 40, 0.6);
  // a ramp in x over the interior
  const auto ramp = ScalarField::sample(t, [](Point p) { return 3.0 + p.x; });
  const fs::path p = dir.path / frame_name(0.1);
  CHECK(p.filename() == "frame_t0.100000.pgm");
  const auto info = write_frame(ramp, p);
  CHECK_FALSE(info.degenerate);

  const auto img = read_pgm(p);
  CHECK(img.width == 40);
  CHECK(img.height == 40);
  CHECK(img.maxval == 255);
  REQUIRE(img.pixels.size() == 40u * 40u);
  const std::string raw = slurp(p);
  CHECK(raw.rfind("P5", 0) == 0);

  double lo = 1e300, hi = -1e300;
  for (std::size_t k : t->interior_nodes) {
    lo = std::min(lo, ramp[k]);
    hi = std::max(hi, ramp[k]);
  }
  CHECK(info.vmin == lo);
  CHECK(info.vmax == hi);
  const auto side = read_json(p.string() + ".minmax.json");
  CHECK(side["vmin"].get<double>() == lo);
  CHECK(side["vmax"].get<double>() == hi);
  CHECK(side["degenerate"] == false);

  const auto& g = t->grid;
  bool saw0 = false, saw255 = false;
  for (int j = 0; j < g.ny; ++j) {
    const int row = g.ny - 1 - j;  // row 0 is y_max
    int prev = -1;
    for (int i = 0; i < g.nx; ++i) {
      const int px = img.pixels[static_cast<std::size_t>(row) * g.nx + i];
      if (t->label(i, j) != NodeLabel::interior) {
        CHECK(px == 0);
        continue;
      }
      // the ramp is nondecreasing left to right, and reconstructs to 1/255
      CHECK(px >= prev);
      prev = px;
      const double expect = 255.0 * (ramp[g.index(i, j)] - lo) / (hi - lo);
      CHECK(std::abs(px - expect) <= 0.5 + 1e-9);
      saw0 = saw0 || px == 0;
      saw255 = saw255 || px == 255;
    }
  }
  CHECK(saw0);
  CHECK(saw255);

  // constant field: all interior pixels mid-grey
  const auto flat = ScalarField::sample(t, [](Point) { return 2.0; });
  const auto fi = write_frame(flat, dir.path / "flat.pgm");
  CHECK(fi.degenerate);
  const auto fimg = read_pgm(dir.path / "flat.pgm");
  for (std::size_t k : t->interior_nodes) {
    const int row = g.ny - 1 - g.row(k);
    CHECK(fimg.pixels[static_cast<std::size_t>(row) * g.nx + g.col(k)] == 128);
  }
  CHECK(read_json(dir.path / "flat.pgm.minmax.json")["degenerate"] == true);

  // malformed files
  write_text(dir.path / "p2.pgm", "P2\n2 2\n255\n0 0 0 0\n");
  CHECK_THROWS_AS(read_pgm(dir.path / "p2.pgm"), Error);
  write_text(dir.path / "short.pgm", "P5\n4 4\n255\nabc");
  CHECK_THROWS_AS(read_pgm(dir.path / "short.pgm"), Error);
}

TEST_CASE("dotted overrides") {
  json c = json::object();
  apply_override(c, "grid.nx", "200");
  apply_override(c, "grid.x_min", "-1.5");
  apply_override(c, "law.kind", "euclidean_graph");
  apply_override(c, "elliptic.epsilons", "[0.2,0.1]");
  apply_override(c, "flow.flag", "true");
  CHECK(c["grid"]["nx"] == 200);
  CHECK(c["grid"]["x_min"] == -1.5);
  CHECK(c["law"]["kind"] == "euclidean_graph");
  CHECK(c["elliptic"]["epsilons"].size() == 2);
  CHECK(c["flow"]["flag"] == true);
  apply_override(c, "grid.nx", "64");
  CHECK(c["grid"]["nx"] == 64);
  CHECK_THROWS_AS(apply_override(c, "grid.nx.deeper", "1"), Error);
  CHECK_THROWS_AS(apply_override(c, "", "1"), Error);
}

TEST_CASE("config readers") {
  auto c = *preset_config("ellipse_bowl");
  const auto g = grid_from_config(c["grid"]);
  CHECK(g.nx == 100);
  CHECK(g.ny == 50);
  const auto d = domain_from_config(c);
  CHECK(d.level({0.0, 0.0}) < 0.0);
  CHECK(d.level({0.99, 0.0}) > 0.0);
  const auto u0 = initial_from_config(c);
  CHECK(u0({0.5, 0.5}) == doctest::Approx(testing::quartic_bowl({0.5, 0.5})));
  CHECK(flow_options_from_config(c).snapshot_times == std::vector<double>{0.0, 0.1, 0.5});

  c["grid"]["nx"] = 4;
  CHECK_THROWS_AS(grid_from_config(c["grid"]), Error);
  c["grid"]["nx"] = "wide";
  CHECK_THROWS_AS(grid_from_config(c["grid"]), Error);
  c["domain"]["preset"] = "torus";
  CHECK_THROWS_AS(domain_from_config(c), Error);
  CHECK_FALSE(preset_config("nope"));

  json e = {{"elliptic", {{"epsilons", json::array()}}}};
  CHECK_THROWS_AS(epsilons_from_config(e), Error);
}

TEST_CASE("run directory lock") {
  TempDir dir;
  {
    RunLock a(dir.path);
    CHECK(fs::exists(dir.path / ".gcflow.lock"));
    CHECK_THROWS_AS(RunLock(dir.path), Error);
  }
  CHECK_FALSE(fs::exists(dir.path / ".gcflow.lock"));
  RunLock again(dir.path);

  // a second CLI run into a locked directory fails as an io error
  CHECK(cli("radial --preset hyperboloid --out " + dir.path.string()) == 3);
}

TEST_CASE("cli: ellipse flow writes frames, trace and summary") {
  TempDir dir;
  const fs::path out = dir.path / "run";
  CHECK(cli("flow --preset ellipse_bowl --out " + out.string()) == 0);
  for (const char* f : {"frame_t0.000000.pgm", "frame_t0.100000.pgm", "frame_t0.500000.pgm",
                        "trace.csv", "summary.json"}) {
    CHECK(fs::exists(out / f));
  }
  CHECK_FALSE(fs::exists(out / ".gcflow.lock"));
  const auto s = read_json(out / "summary.json");
  CHECK(s["status"] == "ok");
  CHECK(s["final_time"] == 0.5);
  CHECK(s["halvings"] == 0);
  CHECK(s["monitors"]["max_principle"]["violated"] == false);
  CHECK(s["monitors"]["convexity"]["convex"] == true);
  CHECK(s["grid"]["nx"] == 100);
  CHECK(s["config"]["domain"]["preset"] == "ellipse");
  CHECK(s.contains("wall_clock"));

  // the velocity frame at t = 0.5 is nearly uniform
  const auto late = read_json(out / "frame_t0.500000.pgm.minmax.json");
  const double lo = late["vmin"], hi = late["vmax"];
  CHECK(hi - lo <= 0.01 * std::abs(hi));
  const auto early = read_json(out / "frame_t0.000000.pgm.minmax.json");
  CHECK(early["vmax"].get<double>() - early["vmin"].get<double>() > 10 * (hi - lo));

  const auto trace = read_trace_csv(out / "trace.csv");
  REQUIRE(trace.size() > 2);
  CHECK(trace.front().t == 0.0);
  CHECK(trace.back().t == 0.5);

  // determinism: a second run writes identical files apart from wall_clock
  const fs::path out2 = dir.path / "run2";
  CHECK(cli("flow --preset ellipse_bowl --out " + out2.string()) == 0);
  CHECK(slurp(out / "trace.csv") == slurp(out2 / "trace.csv"));
  CHECK(slurp(out / "frame_t0.500000.pgm") == slurp(out2 / "frame_t0.500000.pgm"));
  auto a = read_json(out / "summary.json");
  auto b = read_json(out2 / "summary.json");
  a.erase("wall_clock");
  b.erase("wall_clock");
  CHECK(a == b);
}

TEST_CASE("cli: config file with overrides") {
  TempDir dir;
  auto c = *preset_config("ellipse_bowl");
  c["flow"]["t_end"] = 0.02;
  c["flow"]["snapshot_times"] = json::array();
  write_text(dir.path / "config.json", c.dump());
  const fs::path out = dir.path / "run";
  CHECK(cli("flow --config " + (dir.path / "config.json").string() + " --out " + out.string() +
            " --grid.nx=60 --grid.ny 30") == 0);
  const auto s = read_json(out / "summary.json");
  CHECK(s["grid"]["nx"] == 60);
  CHECK(s["grid"]["ny"] == 30);
  CHECK(s["final_time"] == 0.02);
  CHECK(s["frames"].empty());
}

TEST_CASE("cli: exit codes") {
  TempDir dir;
  // t_end = 0: a single trace row
  CHECK(cli("flow --preset ellipse_bowl --flow.t_end=0 --flow.snapshot_times=[] --out " +
            (dir.path / "zero").string()) == 0);
  CHECK(read_trace_csv(dir.path / "zero" / "trace.csv").size() == 1);

  // nonconvex start
  const fs::path sad = dir.path / "saddle";
  CHECK(cli("flow --preset ellipse_bowl --initial.preset=saddle --out " + sad.string()) == 3);
  const auto err = read_json(sad / "error.json");
  CHECK(err["error"] == "ConvexityLost");
  CHECK(err["exit_code"] == 3);

  // config errors
  CHECK(cli("flow --preset ellipse_bowl --grid.nx=3 --out " + (dir.path / "c1").string()) == 2);
  CHECK(cli("flow --preset nope --out " + (dir.path / "c2").string()) == 2);
  write_text(dir.path / "broken.json", "{ \"grid\": ");
  CHECK(cli("flow --config " + (dir.path / "broken.json").string() + " --out " +
            (dir.path / "c3").string()) == 2);
  CHECK(cli("translate --preset paraboloid --elliptic.epsilons=null --out " +
            (dir.path / "c4").string()) == 2);
  CHECK(cli("radial --preset hyperboloid --radial.R=null --radial.radii=[] --out " +
            (dir.path / "c5").string()) == 2);
  CHECK(cli("compare --preset disk_graph --elliptic.grid.nx=32 --out " +
            (dir.path / "c6").string()) == 2);

  // non-convergence: results still written
  const fs::path nc = dir.path / "nc";
  CHECK(cli("translate --preset paraboloid --grid.nx=32 --grid.ny=32 --elliptic.max_steps=5 --out " +
            nc.string()) == 4);
  CHECK(fs::exists(nc / "error.json"));
}

TEST_CASE("cli: translate with and without warm start") {
  TempDir dir;
  const std::string base = "translate --preset paraboloid --grid.nx=32 --grid.ny=32 ";
  CHECK(cli(base + "--out " + (dir.path / "warm").string()) == 0);
  CHECK(cli(base + "--elliptic.warm_start=false --out " + (dir.path / "cold").string()) == 0);
  const auto w = read_json(dir.path / "warm" / "summary.json");
  const auto c = read_json(dir.path / "cold" / "summary.json");
  const double tol = 1e-10;
  CHECK(std::abs(w["extrapolated_speed"].get<double>() - c["extrapolated_speed"].get<double>()) <=
        10 * tol);
  CHECK(std::abs(w["extrapolated_speed"].get<double>()) <= 1e-3);
  CHECK(fs::exists(dir.path / "warm" / "speeds.csv"));
  CHECK(fs::exists(dir.path / "warm" / "profile.csv"));
}

TEST_CASE("cli: radial classification and profiles") {
  TempDir dir;
  const fs::path h = dir.path / "hyp";
  CHECK(cli("radial --preset hyperboloid --radial.samples=4096 --out " + h.string()) == 0);
  const auto s = read_json(h / "summary.json");
  CHECK(s["classification"]["verdict"] == "exists_unbounded_gradient");
  CHECK(s["rho_zero_speed"].get<double>() == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(s["profile"]["u_at_R"].get<double>() == doctest::Approx(std::sqrt(2.0) - 1).epsilon(1e-8));

  const struct {
    double a;
    const char* verdict;
  } rows[] = {{2.0, "no_entire_solution"},
              {1.0, "exists_unbounded_gradient"},
              {0.5, "exists_bounded_gradient"}};
  for (const auto& row : rows) {
    const fs::path out = dir.path / ("a" + std::to_string(row.a));
    CHECK(cli("radial --preset hyperboloid --radial.kernel=euclidean --radial.R=0.5 "
              "--radial.samples=257 --radial.weight={\\\"preset\\\":\\\"inverse_power\\\",\\\"a\\\":" +
              std::to_string(row.a) + ",\\\"k\\\":2} --out " + out.string()) == 0);
    CHECK(read_json(out / "summary.json")["classification"]["verdict"] == row.verdict);
  }
}

TEST_CASE("cli: compare with a method run twice gives zero deltas") {
  TempDir dir;
  const fs::path out = dir.path / "cmp";
  CHECK(cli("compare --preset paraboloid --grid.nx=32 --grid.ny=32 --flow.t_end=0.01 "
            "--compare.methods=[\\\"flow\\\",\\\"flow\\\"] --out " +
            out.string()) == 0);
  const auto s = read_json(out / "summary.json");
  REQUIRE(s.contains("deltas"));
  for (const auto& d : s["deltas"]) {
    CHECK(d["speed_delta"] == 0.0);
    CHECK(d["profile_sup_difference"] == 0.0);
  }
  CHECK(fs::exists(out / "deltas.csv"));
}
