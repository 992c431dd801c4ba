#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "attrakt/polynomial.hpp"

namespace attrakt {

/// Syntax or semantic error in a system, config or pieces file. Line and
/// column are 1-based; 0 means "not tied to a position".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Polynomial vector field xdot = f(x) with its equilibrium at the origin.
struct PolySystem {
  std::vector<std::string> var_names;
  std::vector<Polynomial> f;

  int nvars() const { return static_cast<int>(var_names.size()); }
  std::vector<double> Eval(std::span<const double> x) const;
};

/// Run parameters. Loaded from flat `key = value` files; unknown keys are
/// rejected.
struct RunConfig {
  int deg_vn = 4;
  int deg_r = 2;
  // Optional per-multiplier degree overrides, keyed by p, m0, m1, m2, m3, s, c.
  std::map<std::string, int> deg_multipliers;

  double gamma_lo = 1e-6;
  double gamma_hi = 100.0;
  double bisect_tol = 1e-3;
  int max_outer_iters = 10;
  double stop_tol = 1e-3;
  double eps_margin = 1e-6;
  double kappa = 1e-3;
  int k_compact = 0;  // 0 selects deg_r / 2

  double tol_feas = 1e-8;
  double tol_gap = 1e-8;
  int max_iters = 100;

  std::uint64_t seed = 1;

  // Verification.
  int n_boundary = 500;
  int n_interior = 200;
  int n_decrease = 1000;
  int n_rational = 20;
  double sim_T = 100.0;
  double sim_dt = 0.01;
  double conv_tol = 1e-3;
  double search_radius = 100.0;

  /// Degree override for a named multiplier, or -1 when none was given.
  int MultiplierDegree(const std::string& name) const;
  /// Throws std::invalid_argument on violated invariants.
  void Validate() const;
  /// Every key with its current value, in file syntax order.
  std::vector<std::pair<std::string, std::string>> Entries() const;
};

/// Parses a polynomial expression over the given variable names.
///   expr   := term (('+'|'-') term)*
///   term   := factor ('*' factor)*
///   factor := base ('^' nat)?
///   base   := number | ident | '(' expr ')' | '-' factor
/// `line` is used for error positions only.
Polynomial ParsePolynomial(std::string_view text, const std::vector<std::string>& var_names,
                           int line = 1);

/// Parses a system file:
///   vars: x1 x2
///   dot x1 = ...
///   dot x2 = ...
/// `#` starts a comment. Rejects systems with f(0) != 0.
PolySystem ParseSystem(std::string_view contents);

RunConfig ParseConfig(std::string_view contents, RunConfig base = {});

/// One polynomial per non-empty line; lines may be written `piece = expr`.
std::vector<Polynomial> ParsePieces(std::string_view contents,
                                    const std::vector<std::string>& var_names);

std::string ReadFile(const std::string& path);

}  // namespace attrakt
