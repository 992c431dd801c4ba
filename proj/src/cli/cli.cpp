#include "attrakt/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "attrakt/roa.hpp"
#include "attrakt/verify.hpp"

namespace attrakt::cli {

namespace {

/// Thrown while loading inputs; mapped to an exit code.
struct Exit {
  int code;
  std::string message;
};

struct Common {
  std::string system;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> deg_vn;
  std::optional<int> deg_r;
  std::optional<double> gamma_hi;
  bool verbose = false;
};

void AddCommon(CLI::App* app, Common& c) {
  app->add_option("system", c.system, "system file")->required();
  app->add_option("-c,--config", c.config, "run configuration file");
  app->add_option("--seed", c.seed, "seed for all random sampling");
  app->add_option("--deg-vn", c.deg_vn, "degree of V_N");
  app->add_option("--deg-r", c.deg_r, "degree of R in the update step");
  app->add_option("--gamma-hi", c.gamma_hi, "upper end of the gamma search");
  app->add_flag("--verbose", c.verbose, "log every solver probe to stderr");
}

template <typename F>
auto Input(F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    std::string where;
    if (e.line() > 0) where = " (line " + std::to_string(e.line()) + ", column " + std::to_string(e.column()) + ")";
    throw Exit{kInputError, std::string(e.what()) + where};
  } catch (const std::exception& e) {
    throw Exit{kInputError, e.what()};
  }
}

PolySystem LoadSystem(const std::string& path) {
  return Input([&] { return ParseSystem(ReadFile(path)); });
}

RunConfig LoadConfig(const Common& c) {
  return Input([&] {
    RunConfig cfg = c.config.empty() ? RunConfig{} : ParseConfig(ReadFile(c.config));
    if (c.seed) cfg.seed = *c.seed;
    if (c.deg_vn) cfg.deg_vn = *c.deg_vn;
    if (c.deg_r) cfg.deg_r = *c.deg_r;
    if (c.gamma_hi) cfg.gamma_hi = *c.gamma_hi;
    cfg.Validate();
    return cfg;
  });
}

roa::EraCertificate LoadCertificate(const std::string& path, const PolySystem& sys) {
  roa::EraCertificate cert = Input([&] { return roa::ReadCertificate(ReadFile(path)); });
  if (cert.nvars() != sys.nvars())
    throw Exit{kInputError, "certificate has " + std::to_string(cert.nvars()) + " variables, the system " +
                                std::to_string(sys.nvars())};
  return cert;
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw Exit{kInputError, "cannot write '" + path + "'"};
}

std::string DefaultOut(const std::string& system, const std::string& suffix) {
  return std::filesystem::path(system).stem().string() + suffix;
}

// ---- era ----

struct EraArgs {
  Common common;
  std::string out;
  std::string pieces;
  std::string r0_from;
};

int Era(const EraArgs& a, std::ostream& out, std::ostream& err) {
  const PolySystem sys = LoadSystem(a.common.system);
  const RunConfig cfg = LoadConfig(a.common);
  const auto backend = Input([] { return sdp::BackendFromEnvironment(); });
  const roa::Context ctx{backend.get(), a.common.verbose ? &err : nullptr};
  std::optional<roa::PiecewiseMax> pieces;
  if (!a.pieces.empty())
    pieces = roa::PiecewiseMax{Input([&] { return ParsePieces(ReadFile(a.pieces), sys.var_names); })};
  std::optional<roa::EraCertificate> seed;
  if (!a.r0_from.empty()) seed = LoadCertificate(a.r0_from, sys);

  std::vector<roa::EraCertificate> certs;
  try {
    if (pieces) {
      certs.push_back(roa::PiecewiseEra(sys, *pieces, cfg, ctx));
    } else {
      certs = roa::Algorithm3(sys, cfg, ctx, seed ? &*seed : nullptr);
      roa::EraCertificate& last = certs.back();
      if (auto lf = roa::RecoverRationalLf(sys, last.r, last.gamma, last.p, cfg, ctx)) roa::AttachRational(last, *lf);
    }
  } catch (const roa::NotCertifiable& e) {
    throw Exit{kNotCertifiable, e.what()};
  } catch (const roa::SolverFailure& e) {
    throw Exit{kSolverFailure, e.what()};
  }

  out << "iter  gamma\n";
  for (const roa::EraCertificate& c : certs)
    out << std::setw(4) << c.iteration << "  " << std::setprecision(10) << c.gamma << "\n";
  const roa::EraCertificate& final = certs.back();
  out << "rational Lyapunov function: " << (final.has_rational() ? "recovered" : "not found") << "\n";
  const std::string path = a.out.empty() ? DefaultOut(a.common.system, ".cert.json") : a.out;
  WriteText(path, roa::WriteCertificate(final));
  out << "certificate written to " << path << "\n";
  return kOk;
}

// ---- check ----

struct CheckArgs {
  Common common;
  std::string cert;
};

int Check(const CheckArgs& a, std::ostream& out) {
  const PolySystem sys = LoadSystem(a.common.system);
  const RunConfig cfg = LoadConfig(a.common);
  const roa::EraCertificate cert = LoadCertificate(a.cert, sys);
  const verify::VerificationReport rep = verify::CheckCertificate(sys, cert, verify::VerifyConfig::From(cfg));
  rep.Print(out);
  return rep.pass() ? kOk : kCheckFailed;
}

/// Box around E(R_M, gamma) from boundary samples, scaled about its centre.
verify::Box EstimateBox(const roa::EraCertificate& cert, const RunConfig& cfg, double scale) {
  std::mt19937_64 rng(cfg.seed);
  const auto b = verify::SampleBoundary(cert.r, cert.gamma, std::max(cfg.n_boundary, 50), cfg.search_radius, rng);
  if (b.points.empty()) throw Exit{kCheckFailed, "no boundary point of the estimate was found"};
  verify::Box box = verify::BoxAround(b.points, 0.0);
  for (int i = 0; i < box.dim(); ++i) {
    const double mid = 0.5 * (box.lo[i] + box.hi[i]), half = 0.5 * (box.hi[i] - box.lo[i]) * scale;
    box.lo[i] = mid - half;
    box.hi[i] = mid + half;
  }
  return box;
}

// ---- simulate ----

struct SimulateArgs {
  Common common;
  std::string cert;
  std::string out;
  int grid = 20;
  double scale = 1.5;
  int stride = 10;
};

int Simulate(const SimulateArgs& a, std::ostream& out) {
  const PolySystem sys = LoadSystem(a.common.system);
  const RunConfig cfg = LoadConfig(a.common);
  const roa::EraCertificate cert = LoadCertificate(a.cert, sys);
  if (a.grid < 1) throw Exit{kInputError, "--grid must be positive"};
  const int n = sys.nvars();
  const verify::Box box = EstimateBox(cert, cfg, a.scale);

  std::vector<std::vector<double>> starts;
  auto node = [&](int axis, int k) {
    return a.grid == 1 ? 0.5 * (box.lo[axis] + box.hi[axis])
                       : box.lo[axis] + (box.hi[axis] - box.lo[axis]) * k / (a.grid - 1);
  };
  if (n <= 3) {
    std::vector<int> idx(n, 0);
    for (;;) {
      std::vector<double> z(n);
      for (int i = 0; i < n; ++i) z[i] = node(i, idx[i]);
      starts.push_back(std::move(z));
      int i = 0;
      while (i < n && ++idx[i] == a.grid) idx[i++] = 0;
      if (i == n) break;
    }
  } else {
    std::mt19937_64 rng(cfg.seed);
    for (int k = 0; k < a.grid * a.grid; ++k) {
      std::vector<double> z(n);
      for (int i = 0; i < n; ++i) z[i] = std::uniform_real_distribution<double>(box.lo[i], box.hi[i])(rng);
      starts.push_back(std::move(z));
    }
  }

  verify::Rk4Options o;
  o.dt = cfg.sim_dt;
  o.t_final = cfg.sim_T;
  o.conv_tol = cfg.conv_tol;
  o.stride = a.stride;
  o.escape_radius = 10.0 * box.Diagonal();
  const auto trajs = verify::SimulateBatch(sys, starts, o);

  const std::string path = a.out.empty() ? DefaultOut(a.common.system, ".traj.csv") : a.out;
  std::ofstream f(path);
  if (!f) throw Exit{kInputError, "cannot write '" + path + "'"};
  verify::WriteTrajectoryCsv(trajs, n, f);
  int counts[3] = {0, 0, 0};
  for (const auto& t : trajs) ++counts[static_cast<int>(t.status)];
  out << trajs.size() << " trajectories: " << counts[0] << " converging, " << counts[1] << " diverging, "
      << counts[2] << " undecided\n";
  out << "trajectories written to " << path << "\n";
  return kOk;
}

// ---- contour ----

struct ContourArgs {
  Common common;
  std::string cert;
  std::string out;
  std::string svg;
  int levels = 5;
  int res = 256;
  double scale = 1.3;
};

int Contour(const ContourArgs& a, std::ostream& out) {
  const PolySystem sys = LoadSystem(a.common.system);
  if (sys.nvars() != 2)
    throw Exit{kDimensionError, "contours need a 2-D system, this one has " + std::to_string(sys.nvars()) +
                                    " variables"};
  const RunConfig cfg = LoadConfig(a.common);
  const roa::EraCertificate cert = LoadCertificate(a.cert, sys);
  if (a.res < 2 || a.levels < 0) throw Exit{kInputError, "--res must be >= 2 and --levels >= 0"};
  const verify::Box box = EstimateBox(cert, cfg, a.scale);

  std::vector<verify::ContourLevel> levels;
  levels.push_back({cert.gamma, verify::Contour2d(cert.r, cert.gamma, box, a.res)});

  // V-levels through points on rays scaled towards the origin.
  std::function<double(double, double)> v;
  if (cert.has_rational())
    v = [&](double x, double y) {
      const double z[2] = {x, y};
      return cert.RationalV(z);
    };
  else
    v = [&](double x, double y) {
      const double z[2] = {x, y};
      return cert.v_n.Evaluate(z);
    };
  std::mt19937_64 rng(cfg.seed);
  const auto bs = verify::SampleBoundary(cert.r, cert.gamma, 200, cfg.search_radius, rng);
  for (int k = 1; k <= a.levels; ++k) {
    const double s = static_cast<double>(k) / (a.levels + 1);
    double c = std::numeric_limits<double>::infinity();
    for (const auto& z : bs.points) c = std::min(c, v(s * z[0], s * z[1]));
    if (std::isfinite(c) && c > 0.0) levels.push_back({c, verify::Contour2d(v, c, box, a.res)});
  }

  const std::string path = a.out.empty() ? DefaultOut(a.common.system, ".contour.csv") : a.out;
  std::ofstream f(path);
  if (!f) throw Exit{kInputError, "cannot write '" + path + "'"};
  verify::WriteContourCsv(levels, f);
  if (!a.svg.empty()) {
    std::ofstream s(a.svg);
    if (!s) throw Exit{kInputError, "cannot write '" + a.svg + "'"};
    verify::WriteContourSvg(levels, box, s);
  }
  out << "level  polylines\n";
  for (const auto& l : levels) out << std::setprecision(8) << l.level << "  " << l.lines.size() << "\n";
  out << "contours written to " << path << "\n";
  return kOk;
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Region-of-attraction estimates for polynomial systems", "attrakt"};
  app.require_subcommand(1, 1);

  EraArgs era;
  CLI::App* era_cmd = app.add_subcommand("era", "estimate a region of attraction and write a certificate");
  AddCommon(era_cmd, era.common);
  era_cmd->add_option("-o,--out", era.out, "certificate file");
  era_cmd->add_option("--pieces", era.pieces, "fixed pieces R_i of a piecewise R_M");
  era_cmd->add_option("--r0-from", era.r0_from, "start from the V_N of an existing certificate");

  CheckArgs check;
  CLI::App* check_cmd = app.add_subcommand("check", "numerically re-check a certificate");
  AddCommon(check_cmd, check.common);
  check_cmd->add_option("cert", check.cert, "certificate file")->required();

  SimulateArgs sim;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "simulate a grid of trajectories around the estimate");
  AddCommon(sim_cmd, sim.common);
  sim_cmd->add_option("cert", sim.cert, "certificate file")->required();
  sim_cmd->add_option("-o,--out", sim.out, "trajectory CSV");
  sim_cmd->add_option("--grid", sim.grid, "grid points per axis");
  sim_cmd->add_option("--scale", sim.scale, "grid box relative to the estimate's bounding box");
  sim_cmd->add_option("--stride", sim.stride, "record every k-th step");

  ContourArgs con;
  CLI::App* con_cmd = app.add_subcommand("contour", "level curves of R_M and V for a 2-D certificate");
  AddCommon(con_cmd, con.common);
  con_cmd->add_option("cert", con.cert, "certificate file")->required();
  con_cmd->add_option("-o,--out", con.out, "contour CSV");
  con_cmd->add_option("--svg", con.svg, "also write an SVG drawing");
  con_cmd->add_option("--levels", con.levels, "number of interior V levels");
  con_cmd->add_option("--res", con.res, "grid cells per axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*era_cmd) return Era(era, out, err);
    if (*check_cmd) return Check(check, out);
    if (*sim_cmd) return Simulate(sim, out);
    return Contour(con, out);
  } catch (const Exit& e) {
    err << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kSolverFailure;
  }
}

}  // namespace attrakt::cli
