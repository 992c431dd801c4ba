#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attrakt/roa.hpp"
#include "attrakt/sysparse.hpp"

namespace attrakt::verify {

/// f(x) compiled into flat term lists for repeated evaluation.
class FieldEvaluator {
 public:
  explicit FieldEvaluator(const PolySystem& sys);
  int nvars() const { return nvars_; }
  void operator()(const double* x, double* dx) const;

 private:
  struct Term {
    int out;
    double coeff;
    std::vector<std::pair<int, int>> factors;  // (variable, power)
  };
  int nvars_;
  std::vector<Term> terms_;
};

struct Box {
  std::vector<double> lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double Diagonal() const;
  static Box Cube(int n, double half_width);
};

enum class TrajectoryStatus { kConverged, kDiverged, kUndecided };
std::string_view ToString(TrajectoryStatus s);

struct Rk4Options {
  double dt = 0.01;
  double t_final = 100.0;
  double escape_radius = std::numeric_limits<double>::infinity();
  double conv_tol = 1e-3;
  /// Record every k-th step (the final state is always recorded); 0 keeps
  /// only the endpoints.
  int stride = 1;
  /// Called on every state; a false return marks the trajectory as having
  /// left the watched set. Must be safe to call concurrently.
  std::function<bool(std::span<const double>)> inside;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<double> x;  // row-major, nvars per recorded time
  TrajectoryStatus status = TrajectoryStatus::kUndecided;
  bool left_set = false;

  int size() const { return static_cast<int>(t.size()); }
  std::span<const double> state(int k, int n) const { return {x.data() + static_cast<std::size_t>(k) * n, static_cast<std::size_t>(n)}; }
};

/// Classical fixed-step RK4 on [0, t_final]. Aborts as divergent when
/// |x| exceeds escape_radius or turns non-finite.
Trajectory Rk4(const FieldEvaluator& f, std::span<const double> x0, const Rk4Options& o);
Trajectory Rk4(const PolySystem& sys, std::span<const double> x0, const Rk4Options& o);

/// One trajectory per start point, OpenMP over start points.
std::vector<Trajectory> SimulateBatch(const PolySystem& sys, const std::vector<std::vector<double>>& starts,
                                      const Rk4Options& o);
std::vector<Trajectory> SimulateBatchSerial(const PolySystem& sys, const std::vector<std::vector<double>>& starts,
                                            const Rk4Options& o);

struct BoundarySamples {
  std::vector<std::vector<double>> points;
  int requested = 0;
  int attempts = 0;
  bool complete() const { return static_cast<int>(points.size()) == requested; }
};

/// Points with |R_M(z) - gamma| <= tol on the boundary of the component of
/// E(R_M, gamma) around the origin, by bisection along random rays. Rays
/// that do not cross within `radius` are redrawn, up to 50 n attempts.
BoundarySamples SampleBoundary(const roa::PiecewiseMax& r, double gamma, int n, double radius, std::mt19937_64& rng,
                               double tol = 1e-9);

/// Bounding box of boundary samples, widened by `pad` relative to its size.
Box BoxAround(const std::vector<std::vector<double>>& points, double pad);

/// Uniform samples of {z in box : R_M(z) <= level} by rejection, at most
/// max_tries draws.
std::vector<std::vector<double>> SampleSublevel(const roa::PiecewiseMax& r, double level, const Box& box, int n,
                                                std::mt19937_64& rng, long max_tries = 2'000'000);

struct VerifyConfig {
  int n_boundary = 500;
  int n_interior = 200;
  int n_decrease = 1000;
  int n_rational = 20;
  double sim_t = 100.0;
  double sim_dt = 0.01;
  double conv_tol = 1e-3;
  double search_radius = 100.0;
  double interior_level = 0.98;
  double gram_tol = 1e-7;
  double identity_tol = 1e-6;
  std::uint64_t seed = 1;
  bool parallel = true;

  static VerifyConfig From(const RunConfig& cfg);
};

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerificationReport {
  bool origin_interior = false;
  int boundary_requested = 0;
  int boundary_found = 0;
  double worst_boundary_lie = -std::numeric_limits<double>::infinity();
  int boundary_violations = 0;
  int interior_samples = 0;
  int interior_converged = 0;
  int containment_violations = 0;
  double worst_gram_eigenvalue = std::numeric_limits<double>::infinity();
  int gram_violations = 0;
  double worst_identity_error = 0.0;
  int identity_violations = 0;
  int decrease_samples = 0;
  int decrease_violations = 0;
  bool rational_checked = false;
  int rational_trajectories = 0;
  int rational_violations = 0;
  std::vector<CheckLine> checks;

  bool pass() const;
  void Print(std::ostream& os) const;
};

/// Expression each stored constraint Gram must reproduce, rebuilt from the
/// certificate's polynomials. Keys match the Gram labels.
std::vector<std::pair<std::string, Polynomial>> ConstraintExpressions(const PolySystem& sys,
                                                                      const roa::EraCertificate& cert);

/// Numerical re-check of every claim a certificate makes.
VerificationReport CheckCertificate(const PolySystem& sys, const roa::EraCertificate& cert, const VerifyConfig& vcfg);

// ---- contours ----

using Polyline = std::vector<std::array<double, 2>>;

/// Row-major (res + 1) x (res + 1) samples of f over a 2-D box; OpenMP over rows.
std::vector<double> EvaluateGrid(const std::function<double(double, double)>& f, const Box& box, int res);
std::vector<double> EvaluateGridSerial(const std::function<double(double, double)>& f, const Box& box, int res);

/// Marching squares for {f = level} on a res x res cell grid with linear
/// interpolation on cell edges. Closed curves repeat their first point.
/// Non-finite samples are treated as far above the level.
std::vector<Polyline> Contour2d(const std::function<double(double, double)>& f, double level, const Box& box, int res);
/// Throws std::invalid_argument unless the pieces have two variables.
std::vector<Polyline> Contour2d(const roa::PiecewiseMax& r, double gamma, const Box& box, int res);

struct ContourLevel {
  double level = 0.0;
  std::vector<Polyline> lines;
};

/// Header `x1,x2,polyline_id`; ids run across all levels.
void WriteContourCsv(const std::vector<ContourLevel>& levels, std::ostream& os);
void WriteContourSvg(const std::vector<ContourLevel>& levels, const Box& box, std::ostream& os);
/// Header `t,x1,...,xn,status,traj`.
void WriteTrajectoryCsv(const std::vector<Trajectory>& trajs, int nvars, std::ostream& os);

}  // namespace attrakt::verify
