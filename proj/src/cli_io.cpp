#include "gcflow/cli_io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <system_error>

#include "gcflow/error.hpp"

namespace gcflow::io {

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::config, what); }

const json& section(const json& config, const char* key) {
  if (!config.is_object() || !config.contains(key)) {
    config_error(std::string("missing config section '") + key + "'");
  }
  return config.at(key);
}

template <class T>
T value_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    config_error(std::string("config key '") + key + "' has the wrong type");
  }
}

template <class T>
T required(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    config_error(std::string("missing config key '") + key + "'");
  }
  return value_or<T>(j, key, T{});
}

Polynomial2 polynomial_from(const json& terms) {
  if (!terms.is_array() || terms.empty()) config_error("polynomial terms must be a nonempty list");
  std::vector<Monomial> out;
  for (const auto& t : terms) {
    if (!t.is_array() || t.size() != 3) config_error("each term is [coeff, px, py]");
    try {
      Monomial m{t[0].get<double>(), t[1].get<int>(), t[2].get<int>()};
      if (m.px < 0 || m.py < 0) config_error("monomial powers must be nonnegative");
      out.push_back(m);
    } catch (const json::exception&) {
      config_error("each term is [coeff, px, py]");
    }
  }
  return Polynomial2(std::move(out));
}

/// log g(|x|) for the weight presets; empty for g == 1.
std::function<double(Point)> log_weight_from(const json& weight) {
  const auto preset = required<std::string>(weight, "preset");
  if (preset == "constant") {
    const double c = value_or(weight, "value", 1.0);
    if (!(c > 0.0)) config_error("weight value must be positive");
    if (c == 1.0) return {};
    const double lc = std::log(c);
    return [lc](Point) { return lc; };
  }
  if (preset == "inverse_power") {
    const double a = value_or(weight, "a", 1.0);
    const double k = value_or(weight, "k", 2.0);
    if (!(a > 0.0)) config_error("weight a must be positive");
    const double la = std::log(a);
    return [la, k](Point x) { return la - k * std::log1p(dot(x, x)); };
  }
  if (preset == "gaussian") {
    const double a = value_or(weight, "a", 1.0);
    const double b = value_or(weight, "b", 1.0);
    if (!(a > 0.0 && b > 0.0)) config_error("gaussian weight needs a, b > 0");
    const double la = std::log(a);
    return [la, b](Point x) { return la - b * dot(x, x); };
  }
  config_error("unknown weight preset '" + preset + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorKind::io, "write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::shared_ptr<const GridTopology> topology_from(const json& config, const json& grid) {
  return std::make_shared<const GridTopology>(
      build_topology(domain_from_config(config), grid_from_config(grid)));
}

json grid_echo(const GridTopology& topo) {
  const auto& g = topo.grid;
  return {{"x_min", g.x_min}, {"x_max", g.x_max}, {"y_min", g.y_min}, {"y_max", g.y_max},
          {"nx", g.nx},       {"ny", g.ny},       {"hx", g.hx()},     {"hy", g.hy()},
          {"interior_nodes", topo.count(NodeLabel::interior)},
          {"boundary_nodes", topo.count(NodeLabel::boundary)}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ScalarField mean_free(ScalarField f) {
  f += -f.interior_mean();
  return f;
}

double sup_difference(const ScalarField& a, const ScalarField& b) {
  double sup = 0.0;
  for (std::size_t k : a.topology().interior_nodes) sup = std::max(sup, std::abs(a[k] - b[k]));
  return sup;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct FlowOutcome {
  FlowResult result;
  FlowSetup setup;
  json summary;
};

FlowOutcome flow_method(const json& config, const fs::path* frames_dir) {
  auto topo = topology_from(config, section(config, "grid"));
  const auto u0_poly = initial_from_config(config);
  FlowSetup setup = make_flow_setup(law_from_config(config),
                                    ScalarField::sample(topo, [&](Point p) { return u0_poly(p); }));
  const FlowOptions opt = flow_options_from_config(config);
  json frames = json::array();
  SnapshotObserver observer;
  if (frames_dir) {
    observer = [&](double t, const ScalarField&, const ScalarField& udot) {
      const std::string name = frame_name(t);
      const FrameInfo info = write_frame(udot, *frames_dir / name);
      frames.push_back({{"t", t}, {"file", name}, {"degenerate", info.degenerate}});
    };
  }
  FlowResult res = run(setup, opt, observer);
  const auto mp = max_principle_monitor(res.trace);
  const auto osc = oscillation_monitor(res.trace);
  const auto cvx = convexity_check(res.state.u);
  json s;
  s["final_time"] = res.state.t;
  s["steps"] = res.state.step_count;
  s["halvings"] = res.halvings;
  s["speed_flow"] = res.translator.speed;
  s["residual_sup"] = res.translator.residual_sup;
  s["delta_final"] = res.trace.samples.back().delta;
  s["delta_tol_reached"] = res.delta_tol_reached;
  s["non_convergence"] = res.non_convergence;
  s["monitors"] = {
      {"max_principle",
       {{"reference", mp.reference}, {"value", mp.value}, {"tolerance", mp.tolerance},
        {"violated", mp.violated}}},
      {"oscillation",
       {{"reference", osc.reference}, {"value", osc.value}, {"tolerance", osc.tolerance},
        {"violated", osc.violated}}},
      {"convexity", {{"min_det", cvx.min_det}, {"min_uxx", cvx.min_uxx}, {"convex", cvx.convex()}}}};
  s["grid"] = grid_echo(setup.u0.topology());
  s["frames"] = frames;
  return {std::move(res), std::move(setup), std::move(s)};
}

struct TranslateOutcome {
  SpeedContinuation cont;
  json summary;
};

const json& elliptic_grid(const json& config) {
  const json& el = section(config, "elliptic");
  return el.contains("grid") ? el.at("grid") : section(config, "grid");
}

TranslateOutcome translate_method(const json& config) {
  auto topo = topology_from(config, elliptic_grid(config));
  const auto u0_poly = initial_from_config(config);
  const FlowSetup setup = make_flow_setup(
      law_from_config(config), ScalarField::sample(topo, [&](Point p) { return u0_poly(p); }));
  const auto eps = epsilons_from_config(config);
  ContinuationOptions opt;
  opt.relaxation = relaxation_from_config(config);
  opt.warm_start = value_or(section(config, "elliptic"), "warm_start", true);
  SpeedContinuation c = continue_speed(setup, eps, opt);
  const RegularizedProblem last{c.epsilons.back(), 0.0, &setup};
  json s;
  s["epsilons"] = c.epsilons;
  s["speeds"] = c.speeds;
  s["extrapolated_speed"] = c.extrapolated_speed;
  s["extrapolated"] = c.extrapolated;
  s["previous_extrapolant"] =
      c.previous_extrapolant ? json(*c.previous_extrapolant) : json(nullptr);
  s["total_steps"] = c.total_steps;
  s["residual_sup"] = regularized_residual(last, c.last_solution);
  s["grid"] = grid_echo(*topo);
  return {std::move(c), std::move(s)};
}

/// Radial speed for a disk run, with rho taken from the Neumann data: the
/// translator keeps D_nu u = D_nu u0, and a radial translator's gradient is
/// normal on the circle, so |Du| there is the mean outward slope of u0.
json radial_match(const json& config) {
  const json& dom = section(config, "domain");
  if (value_or<std::string>(dom, "preset", "") != "disk") {
    config_error("the radial method needs a disk domain");
  }
  const json& law = section(config, "law");
  const auto kind = required<std::string>(law, "kind");
  const int n = value_or(law, "n", 2);
  radial::RadialKernel kernel;
  if (kind == "euclidean_graph") {
    kernel = radial::RadialKernel::euclidean(n);
  } else if (kind == "minkowski_graph") {
    kernel = radial::RadialKernel::minkowski(n);
  } else {
    config_error("the radial method needs a euclidean_graph or minkowski_graph law");
  }
  const json weight_cfg = law.contains("weight") ? law.at("weight")
                                                 : json{{"preset", "constant"}, {"value", 1.0}};
  const auto weight = radial_weight_from_config(weight_cfg, n);
  const double R = required<double>(dom, "radius");
  const auto u0 = initial_from_config(config);
  constexpr int kSamples = 720;
  double rho = 0.0;
  for (int k = 0; k < kSamples; ++k) {
    const double th = 2.0 * std::numbers::pi * k / kSamples;
    const Point x{R * std::cos(th), R * std::sin(th)};
    rho += dot(u0.gradient(x), x) / R;
  }
  rho /= kSamples;
  return {{"R", R}, {"rho", rho}, {"speed", radial::speed(kernel, weight, R, rho)}};
}

}  // namespace

// ---- configuration -------------------------------------------------------

json load_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) config_error("cannot read config file " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    config_error("config is not valid JSON: " + std::string(e.what()));
  }
}

void apply_override(json& config, const std::string& dotted_key, const std::string& value) {
  if (dotted_key.empty()) config_error("empty override key");
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;
  }
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot_pos = dotted_key.find('.', start);
    const std::string key = dotted_key.substr(start, dot_pos - start);
    if (key.empty()) config_error("malformed override key '" + dotted_key + "'");
    if (!node->is_object()) {
      if (!node->is_null()) config_error("override '" + dotted_key + "' descends into a value");
      *node = json::object();
    }
    node = &(*node)[key];
    if (dot_pos == std::string::npos) break;
    start = dot_pos + 1;
  }
  *node = std::move(parsed);
}

DomainSpec domain_from_config(const json& config) {
  const json& d = section(config, "domain");
  const auto preset = required<std::string>(d, "preset");
  DomainSpec domain;
  if (preset == "ellipse") {
    domain = DomainSpec::ellipse(value_or(d, "q", 1.1), value_or(d, "a", 1.0), value_or(d, "b", 4.0));
  } else if (preset == "disk") {
    const double r = required<double>(d, "radius");
    if (!(r > 0.0)) config_error("disk radius must be positive");
    domain = DomainSpec::disk(r);
  } else if (preset == "polynomial") {
    domain = DomainSpec::polynomial(polynomial_from(required<json>(d, "terms")));
  } else {
    config_error("unknown domain preset '" + preset + "'");
  }
  if (d.contains("oblique")) {
    const json& ob = d.at("oblique");
    const auto bx = polynomial_from(required<json>(ob, "beta_x"));
    const auto by = polynomial_from(required<json>(ob, "beta_y"));
    domain = domain.with_oblique([bx, by](Point p) { return Vec2{bx(p), by(p)}; },
                                 value_or(ob, "floor", 0.5));
  }
  return domain;
}

GridSpec grid_from_config(const json& g) {
  GridSpec grid{required<double>(g, "x_min"), required<double>(g, "x_max"),
                required<double>(g, "y_min"), required<double>(g, "y_max"),
                required<int>(g, "nx"),       required<int>(g, "ny")};
  grid.validate();
  return grid;
}

Polynomial2 initial_from_config(const json& config) {
  const json& u = section(config, "initial");
  const auto preset = required<std::string>(u, "preset");
  if (preset == "quartic_bowl") return Polynomial2({{1.5, 2, 0}, {1.0, 0, 2}, {-0.1, 0, 4}});
  if (preset == "paraboloid") {
    const double s = value_or(u, "scale", 0.5);
    return Polynomial2({{s, 2, 0}, {s, 0, 2}});
  }
  if (preset == "saddle") return Polynomial2({{1.0, 1, 1}});
  if (preset == "polynomial") return polynomial_from(required<json>(u, "terms"));
  config_error("unknown initial preset '" + preset + "'");
}

SpeedLaw law_from_config(const json& config) {
  const json& l = section(config, "law");
  const auto kind = required<std::string>(l, "kind");
  if (kind == "constant") {
    const double c = value_or(l, "value", 1.0);
    if (!(c > 0.0)) config_error("constant law needs a positive value");
    return SpeedLaw::constant_law(c);
  }
  const int n = value_or(l, "n", 2);
  if (n < 1) config_error("law dimension must be >= 1");
  auto logw = l.contains("weight") ? log_weight_from(l.at("weight")) : std::function<double(Point)>{};
  if (kind == "euclidean_graph") return SpeedLaw::euclidean_graph(n, std::move(logw));
  if (kind == "minkowski_graph") return SpeedLaw::minkowski_graph(n, std::move(logw));
  if (kind == "custom") {
    const auto k = value_or<std::string>(l, "kernel", "none");
    KernelKind kk = KernelKind::none;
    if (k == "euclidean") {
      kk = KernelKind::euclidean;
    } else if (k == "minkowski") {
      kk = KernelKind::minkowski;
    } else if (k != "none") {
      config_error("unknown kernel '" + k + "'");
    }
    return SpeedLaw::custom(std::move(logw), kk, value_or(l, "exponent", 0.0));
  }
  config_error("unknown law kind '" + kind + "'");
}

FlowOptions flow_options_from_config(const json& config) {
  const json& f = section(config, "flow");
  FlowOptions opt;
  opt.sigma = value_or(f, "sigma", opt.sigma);
  opt.t_end = value_or(f, "t_end", opt.t_end);
  opt.delta_tol = value_or(f, "delta_tol", opt.delta_tol);
  opt.record_every = value_or(f, "record_every", opt.record_every);
  opt.max_halvings = value_or(f, "max_halvings", opt.max_halvings);
  opt.max_steps = value_or(f, "max_steps", opt.max_steps);
  opt.snapshot_times = value_or(f, "snapshot_times", std::vector<double>{0.0, opt.t_end});
  return opt;
}

RelaxationOptions relaxation_from_config(const json& config) {
  const json& e = section(config, "elliptic");
  RelaxationOptions opt;
  opt.tol = value_or(e, "tol", 1e-9);
  opt.sigma = value_or(e, "sigma", opt.sigma);
  opt.max_steps = value_or(e, "max_steps", opt.max_steps);
  opt.max_halvings = value_or(e, "max_halvings", opt.max_halvings);
  opt.project_mean = value_or(e, "project_mean", opt.project_mean);
  if (!(opt.tol > 0.0)) config_error("elliptic tol must be positive");
  return opt;
}

std::vector<double> epsilons_from_config(const json& config) {
  const json& e = section(config, "elliptic");
  auto eps = required<std::vector<double>>(e, "epsilons");
  if (eps.empty()) config_error("epsilon list is empty");
  return eps;
}

radial::RadialWeight radial_weight_from_config(const json& weight, int n) {
  const auto preset = required<std::string>(weight, "preset");
  if (preset == "constant") return radial::RadialWeight::constant(value_or(weight, "value", 1.0), n);
  if (preset == "inverse_power") {
    return radial::RadialWeight::inverse_power(value_or(weight, "a", 1.0),
                                               value_or(weight, "k", 2.0), n);
  }
  if (preset == "gaussian") {
    return radial::RadialWeight::gaussian(value_or(weight, "a", 1.0), value_or(weight, "b", 1.0), n);
  }
  config_error("unknown weight preset '" + preset + "'");
}

radial::RadialKernel radial_kernel_from_config(const json& r) {
  const auto k = value_or<std::string>(r, "kernel", "euclidean");
  const int n = value_or(r, "n", 2);
  if (n < 1) config_error("radial dimension must be >= 1");
  if (k == "euclidean") return radial::RadialKernel::euclidean(n);
  if (k == "minkowski") return radial::RadialKernel::minkowski(n);
  config_error("unknown radial kernel '" + k + "'");
}

// ---- number formatting ---------------------------------------------------

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw Error(ErrorKind::io, "number formatting failed");
  return std::string(buf, end);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw Error(ErrorKind::io, "not a number: '" + s + "'");
  }
  return v;
}

// ---- files ---------------------------------------------------------------

void write_trace_csv(const fs::path& path, const DiagnosticsTrace& trace) {
  std::string out = "t,v_bar,delta,rate,max_abs_udot,osc_udot\n";
  for (const auto& s : trace.samples) {
    for (double v : {s.t, s.v_bar, s.delta, s.rate, s.max_abs_udot}) {
      out += format_double(v);
      out += ',';
    }
    out += format_double(s.osc_udot);
    out += '\n';
  }
  write_text(path, out);
}

std::vector<DiagnosticsSample> read_trace_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != "t,v_bar,delta,rate,max_abs_udot,osc_udot") {
    throw Error(ErrorKind::io, "unexpected trace header");
  }
  std::vector<DiagnosticsSample> out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> cols;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cols.push_back(parse_double(line.substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cols.size() != 6) throw Error(ErrorKind::io, "trace row needs 6 columns");
    DiagnosticsSample s;
    s.t = cols[0];
    s.v_bar = cols[1];
    s.delta = cols[2];
    s.rate = cols[3];
    s.max_abs_udot = cols[4];
    s.osc_udot = cols[5];
    out.push_back(s);
  }
  return out;
}

void write_speeds_csv(const fs::path& path, const SpeedContinuation& c) {
  std::string out = "epsilon,v_epsilon\n";
  for (std::size_t i = 0; i < c.epsilons.size(); ++i) {
    out += format_double(c.epsilons[i]) + "," + format_double(c.speeds[i]) + "\n";
  }
  write_text(path, out);
}

void write_radial_profile_csv(const fs::path& path, const radial::RadialProfile& p) {
  std::string out = "r,uprime,u\n";
  for (std::size_t k = 0; k < p.r.size(); ++k) {
    out += format_double(p.r[k]) + "," + format_double(p.uprime[k]) + "," +
           format_double(p.u[k]) + "\n";
  }
  write_text(path, out);
}

void write_field_csv(const fs::path& path, const ScalarField& field) {
  const auto& g = field.grid();
  std::string out = "i,j,x,y,value\n";
  for (std::size_t k : field.topology().interior_nodes) {
    const Point p = g.position(k);
    out += std::to_string(g.col(k)) + "," + std::to_string(g.row(k)) + "," + format_double(p.x) +
           "," + format_double(p.y) + "," + format_double(field[k]) + "\n";
  }
  write_text(path, out);
}

FrameInfo write_frame(const ScalarField& field, const fs::path& path) {
  const auto& topo = field.topology();
  const auto& g = topo.grid;
  FrameInfo info;
  info.vmin = std::numeric_limits<double>::infinity();
  info.vmax = -std::numeric_limits<double>::infinity();
  for (std::size_t k : topo.interior_nodes) {
    if (!std::isfinite(field[k])) throw Error(ErrorKind::precondition, "frame field is not finite");
    info.vmin = std::min(info.vmin, field[k]);
    info.vmax = std::max(info.vmax, field[k]);
  }
  if (topo.interior_nodes.empty()) throw Error(ErrorKind::precondition, "no interior nodes");
  info.degenerate = !(info.vmax - info.vmin >= 1e-30);

  std::vector<unsigned char> px(g.size(), info.degenerate ? 128 : 0);
  if (!info.degenerate) {
    const double scale = 255.0 / (info.vmax - info.vmin);
    for (std::size_t k : topo.interior_nodes) {
      const int row = g.ny - 1 - g.row(k);
      const auto idx = static_cast<std::size_t>(row) * static_cast<std::size_t>(g.nx) +
                       static_cast<std::size_t>(g.col(k));
      px[idx] = static_cast<unsigned char>(std::lround((field[k] - info.vmin) * scale));
    }
  }
  std::string header = "P5\n" + std::to_string(g.nx) + " " + std::to_string(g.ny) + "\n255\n";
  std::string data(px.begin(), px.end());
  write_text(path, header + data);

  char buf[160];
  std::snprintf(buf, sizeof buf, "{\"vmin\": %.17g, \"vmax\": %.17g, \"degenerate\": %s}\n",
                info.vmin, info.vmax, info.degenerate ? "true" : "false");
  write_text(fs::path(path.string() + ".minmax.json"), buf);
  return info;
}

PgmImage read_pgm(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  auto fail = [&](const char* what) -> void { throw Error(ErrorKind::io, std::string("PGM: ") + what); };
  auto skip_ws = [&] {
    const std::size_t before = pos;
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
        ++pos;
      } else {
        break;
      }
    }
    if (pos == before) fail("missing whitespace");
  };
  auto number = [&] {
    if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9') fail("expected a number");
    int v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1'000'000) fail("number too large");
      ++pos;
    }
    return v;
  };
  if (bytes.compare(0, 2, "P5") != 0) fail("bad magic");
  pos = 2;
  PgmImage img;
  skip_ws();
  img.width = number();
  skip_ws();
  img.height = number();
  skip_ws();
  img.maxval = number();
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    fail("missing single whitespace before raster");
  }
  ++pos;
  if (img.width <= 0 || img.height <= 0 || img.maxval <= 0 || img.maxval > 255) fail("bad header");
  const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  if (bytes.size() - pos != n) fail("raster length mismatch");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

std::string frame_name(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "frame_t%.6f.pgm", t);
  return buf;
}

RunLock::RunLock(const fs::path& dir) : path_(dir / ".gcflow.lock") {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create output directory " + dir.string());
  // "x" mode is exclusive creation
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) {
    throw Error(ErrorKind::io, "output directory " + dir.string() + " is locked by another run");
  }
  std::fclose(f);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

// ---- commands ------------------------------------------------------------

int cmd_flow(const json& config, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  auto outcome = flow_method(config, &out);
  write_trace_csv(out / "trace.csv", outcome.result.trace);
  json s = std::move(outcome.summary);
  s["command"] = "flow";
  s["config"] = config;
  s["status"] = outcome.result.non_convergence ? "non_convergence" : "ok";
  s["wall_clock"] = seconds_since(t0);
  write_json(out / "summary.json", s);
  return outcome.result.non_convergence ? exit_non_convergence : exit_ok;
}

int cmd_translate(const json& config, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  auto outcome = translate_method(config);
  write_speeds_csv(out / "speeds.csv", outcome.cont);
  const ScalarField profile = mean_free(outcome.cont.last_solution);
  write_field_csv(out / "profile.csv", profile);
  write_frame(profile, out / "profile.pgm");
  json s = std::move(outcome.summary);
  s["command"] = "translate";
  s["config"] = config;
  s["status"] = "ok";
  s["wall_clock"] = seconds_since(t0);
  write_json(out / "summary.json", s);
  return exit_ok;
}

int cmd_radial(const json& config, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const json& r = section(config, "radial");
  const auto kernel = radial_kernel_from_config(r);
  const auto weight = radial_weight_from_config(required<json>(r, "weight"), kernel.dimension);
  const int samples = value_or(r, "samples", 2048);
  json s;
  s["command"] = "radial";
  s["config"] = config;

  if (weight.declared_total.kind != radial::DeclaredTotal::Kind::unknown) {
    const auto c = radial::classify_entire(kernel, weight);
    s["classification"] = {{"verdict", radial::to_string(c.verdict)},
                           {"v", c.v ? json(*c.v) : json(nullptr)}};
  }

  if (r.contains("speed_surface")) {
    const json& ss = r.at("speed_surface");
    const auto Rs = required<std::vector<double>>(ss, "R");
    const auto rhos = required<std::vector<double>>(ss, "rho");
    if (Rs.empty() || rhos.empty()) config_error("speed surface needs R and rho samples");
    std::string csv = "R,rho,v\n";
    for (double R : Rs) {
      for (double rho : rhos) {
        csv += format_double(R) + "," + format_double(rho) + "," +
               format_double(radial::speed(kernel, weight, R, rho)) + "\n";
      }
    }
    write_text(out / "speed_surface.csv", csv);
  }

  const radial::RadialProfile* written = nullptr;
  radial::RadialProfile single;
  radial::EntireProfiles entire;
  if (r.contains("radii")) {
    const auto radii = required<std::vector<double>>(r, "radii");
    if (radii.empty()) config_error("radius list is empty");
    entire = radial::entire_profile(kernel, weight, radii, samples);
    s["entire"] = {{"radii", radii},
                   {"rhos", entire.rhos},
                   {"nesting_gap", entire.nesting_gap},
                   {"nested", entire.nested}};
    written = &entire.profiles.back();
  } else if (r.contains("R")) {
    const double R = required<double>(r, "R");
    if (r.contains("rho")) {
      single = radial::profile_for_rho(kernel, weight, R, required<double>(r, "rho"), samples);
    } else {
      single = radial::profile(kernel, weight, R, value_or(r, "v", 0.0), samples);
    }
    const auto rho0 = radial::rho_for_zero_speed(kernel, weight, R);
    s["rho_zero_speed"] = rho0 ? json(*rho0) : json(nullptr);
    written = &single;
  } else if (!r.contains("speed_surface") && !s.contains("classification")) {
    config_error("radial config needs R, radii or speed_surface");
  }
  if (written) {
    write_radial_profile_csv(out / "profile.csv", *written);
    s["profile"] = {{"R", written->R},
                    {"v", written->v_used},
                    {"sup_uprime", written->uprime.back()},
                    {"u_at_R", written->u.back()},
                    {"residual_sup", radial::profile_residual(kernel, weight, *written)}};
  }
  s["status"] = "ok";
  s["wall_clock"] = seconds_since(t0);
  write_json(out / "summary.json", s);
  return exit_ok;
}

int cmd_compare(const json& config, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> methods;
  if (config.contains("compare") && config.at("compare").contains("methods")) {
    methods = required<std::vector<std::string>>(config.at("compare"), "methods");
  } else {
    methods = {"flow", "elliptic"};
    if (value_or<std::string>(section(config, "domain"), "preset", "") == "disk") {
      methods.push_back("radial");
    }
  }
  if (methods.size() < 2) config_error("compare needs at least two methods");
  for (const auto& m : methods) {
    if (m != "flow" && m != "elliptic" && m != "radial") config_error("unknown method '" + m + "'");
    if (m == "elliptic" && config.contains("elliptic") && config.at("elliptic").contains("grid") &&
        !(grid_from_config(config.at("elliptic").at("grid")) ==
          grid_from_config(section(config, "grid")))) {
      config_error("flow and elliptic grids differ");
    }
  }

  struct Estimate {
    std::string method;
    double speed = 0.0;
    std::optional<ScalarField> profile;
  };
  std::vector<Estimate> est;
  json results = json::array();
  for (const auto& m : methods) {
    if (m == "flow") {
      auto o = flow_method(config, nullptr);
      est.push_back({m, o.result.translator.speed, mean_free(o.result.translator.profile)});
      results.push_back({{"method", m}, {"speed", o.result.translator.speed}, {"detail", o.summary}});
    } else if (m == "elliptic") {
      auto o = translate_method(config);
      est.push_back({m, o.cont.extrapolated_speed, mean_free(o.cont.last_solution)});
      results.push_back({{"method", m}, {"speed", o.cont.extrapolated_speed}, {"detail", o.summary}});
    } else {
      const json match = radial_match(config);
      est.push_back({m, match.at("speed").get<double>(), std::nullopt});
      results.push_back({{"method", m}, {"speed", match.at("speed")}, {"detail", match}});
    }
  }

  std::string csv = "method_a,method_b,speed_delta,profile_sup_difference\n";
  json deltas = json::array();
  for (std::size_t a = 0; a < est.size(); ++a) {
    for (std::size_t b = a + 1; b < est.size(); ++b) {
      const double dv = std::abs(est[a].speed - est[b].speed);
      double dp = std::numeric_limits<double>::quiet_NaN();
      if (est[a].profile && est[b].profile) dp = sup_difference(*est[a].profile, *est[b].profile);
      deltas.push_back({{"a", est[a].method},
                        {"b", est[b].method},
                        {"speed_delta", dv},
                        {"profile_sup_difference", finite_or_null(dp)}});
      csv += est[a].method + "," + est[b].method + "," + format_double(dv) + "," +
             format_double(dp) + "\n";
    }
  }
  write_text(out / "deltas.csv", csv);
  json s;
  s["command"] = "compare";
  s["config"] = config;
  s["methods"] = results;
  s["deltas"] = deltas;
  s["status"] = "ok";
  s["wall_clock"] = seconds_since(t0);
  write_json(out / "summary.json", s);
  return exit_ok;
}

int run_command(const std::string& name, const json& config, const fs::path& out) {
  int code = exit_ok;
  json record;
  std::unique_ptr<RunLock> lock;
  try {
    lock = std::make_unique<RunLock>(out);
    if (name == "flow") return cmd_flow(config, out);
    if (name == "translate") return cmd_translate(config, out);
    if (name == "radial") return cmd_radial(config, out);
    if (name == "compare") return cmd_compare(config, out);
    config_error("unknown subcommand '" + name + "'");
  } catch (const ConvexityLost& e) {
    code = exit_numerical;
    record = {{"error", to_string(e.kind())}, {"message", e.what()},
              {"node", e.node()},             {"det", finite_or_null(e.det())},
              {"uxx", finite_or_null(e.uxx())}};
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::config: code = exit_config; break;
      case ErrorKind::non_convergence: code = exit_non_convergence; break;
      default: code = exit_numerical; break;
    }
    record = {{"error", to_string(e.kind())}, {"message", e.what()}};
  } catch (const json::exception& e) {
    code = exit_config;
    record = {{"error", "Config"}, {"message", e.what()}};
  } catch (const std::exception& e) {
    code = exit_numerical;
    record = {{"error", "Internal"}, {"message", e.what()}};
  }
  record["command"] = name;
  record["exit_code"] = code;
  if (lock) {
    try {
      write_json(out / "error.json", record);
    } catch (const Error&) {
      // the exit code still reports the failure
    }
  }
  std::fprintf(stderr, "%s\n", record.dump().c_str());
  return code;
}

std::optional<json> preset_config(const std::string& name) {
  if (name == "ellipse_bowl") {
    return json::parse(R"({
      "domain": {"preset": "ellipse", "q": 1.1, "a": 1.0, "b": 4.0},
      "grid": {"x_min": -1.0, "x_max": 1.0, "y_min": -0.5, "y_max": 0.5, "nx": 100, "ny": 50},
      "initial": {"preset": "quartic_bowl"},
      "law": {"kind": "constant", "value": 1.0},
      "flow": {"sigma": 0.4, "t_end": 0.5, "record_every": 10, "snapshot_times": [0.0, 0.1, 0.5]}
    })");
  }
  if (name == "disk_graph") {
    return json::parse(R"({
      "domain": {"preset": "disk", "radius": 0.5},
      "grid": {"x_min": -0.6, "x_max": 0.6, "y_min": -0.6, "y_max": 0.6, "nx": 128, "ny": 128},
      "initial": {"preset": "paraboloid", "scale": 0.8},
      "law": {"kind": "euclidean_graph", "n": 2, "weight": {"preset": "constant", "value": 1.0}},
      "flow": {"sigma": 0.4, "t_end": 0.3, "record_every": 50, "snapshot_times": []},
      "elliptic": {"epsilons": [0.2, 0.1, 0.05], "tol": 1e-9}
    })");
  }
  if (name == "paraboloid") {
    return json::parse(R"({
      "domain": {"preset": "disk", "radius": 0.5},
      "grid": {"x_min": -0.6, "x_max": 0.6, "y_min": -0.6, "y_max": 0.6, "nx": 64, "ny": 64},
      "initial": {"preset": "paraboloid", "scale": 0.5},
      "law": {"kind": "constant", "value": 1.0},
      "flow": {"sigma": 0.4, "t_end": 0.05, "record_every": 10, "snapshot_times": []},
      "elliptic": {"epsilons": [0.2, 0.1, 0.05], "tol": 1e-10}
    })");
  }
  if (name == "hyperboloid") {
    return json::parse(R"({
      "radial": {"kernel": "minkowski", "n": 2, "weight": {"preset": "constant", "value": 1.0},
                 "R": 1.0, "v": 0.0, "samples": 8192}
    })");
  }
  return std::nullopt;
}

}  // namespace gcflow::io
