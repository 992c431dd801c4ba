#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "attrakt/verify.hpp"

namespace attrakt::verify {

FieldEvaluator::FieldEvaluator(const PolySystem& sys) : nvars_(sys.nvars()) {
  for (int i = 0; i < nvars_; ++i) {
    for (const auto& [m, c] : sys.f[i].terms()) {
      Term t{i, c, {}};
      for (int v = 0; v < m.nvars(); ++v)
        if (m[v] > 0) t.factors.emplace_back(v, m[v]);
      terms_.push_back(std::move(t));
    }
  }
}

void FieldEvaluator::operator()(const double* x, double* dx) const {
  std::fill(dx, dx + nvars_, 0.0);
  for (const Term& t : terms_) {
    double v = t.coeff;
    for (const auto& [var, pw] : t.factors)
      for (int k = 0; k < pw; ++k) v *= x[var];
    dx[t.out] += v;
  }
}

double Box::Diagonal() const {
  double s = 0.0;
  for (int i = 0; i < dim(); ++i) s += (hi[i] - lo[i]) * (hi[i] - lo[i]);
  return std::sqrt(s);
}

Box Box::Cube(int n, double half_width) {
  return Box{std::vector<double>(n, -half_width), std::vector<double>(n, half_width)};
}

std::string_view ToString(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::kConverged: return "converging";
    case TrajectoryStatus::kDiverged: return "diverging";
    case TrajectoryStatus::kUndecided: return "undecided";
  }
  return "undecided";
}

namespace {

double Norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

Trajectory Rk4(const FieldEvaluator& f, std::span<const double> x0, const Rk4Options& o) {
  const int n = f.nvars();
  if (static_cast<int>(x0.size()) != n) throw std::invalid_argument("start point has the wrong dimension");
  if (!(o.dt > 0.0) || !(o.t_final >= 0.0)) throw std::invalid_argument("dt must be positive and t_final >= 0");

  const long steps = std::lround(o.t_final / o.dt);
  std::vector<double> x(x0.begin(), x0.end()), k1(n), k2(n), k3(n), k4(n), tmp(n);
  Trajectory tr;
  auto record = [&](double t) {
    tr.t.push_back(t);
    tr.x.insert(tr.x.end(), x.begin(), x.end());
  };
  auto watch = [&] {
    if (o.inside && !tr.left_set && !o.inside(x)) tr.left_set = true;
  };

  record(0.0);
  watch();
  for (long k = 1; k <= steps; ++k) {
    f(x.data(), k1.data());
    for (int i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * o.dt * k1[i];
    f(tmp.data(), k2.data());
    for (int i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * o.dt * k2[i];
    f(tmp.data(), k3.data());
    for (int i = 0; i < n; ++i) tmp[i] = x[i] + o.dt * k3[i];
    f(tmp.data(), k4.data());
    for (int i = 0; i < n; ++i) x[i] += o.dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

    const double nx = Norm(x);
    const double t = k * o.dt;
    if (!std::isfinite(nx) || nx > o.escape_radius) {
      record(t);
      tr.status = TrajectoryStatus::kDiverged;
      return tr;
    }
    watch();
    if (k == steps || (o.stride > 0 && k % o.stride == 0)) record(t);
  }
  tr.status = Norm(x) < o.conv_tol ? TrajectoryStatus::kConverged : TrajectoryStatus::kUndecided;
  return tr;
}

Trajectory Rk4(const PolySystem& sys, std::span<const double> x0, const Rk4Options& o) {
  return Rk4(FieldEvaluator(sys), x0, o);
}

std::vector<Trajectory> SimulateBatch(const PolySystem& sys, const std::vector<std::vector<double>>& starts,
                                      const Rk4Options& o) {
  const FieldEvaluator f(sys);
  std::vector<Trajectory> out(starts.size());
  const long count = static_cast<long>(starts.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) out[i] = Rk4(f, starts[i], o);
  return out;
}

std::vector<Trajectory> SimulateBatchSerial(const PolySystem& sys, const std::vector<std::vector<double>>& starts,
                                            const Rk4Options& o) {
  const FieldEvaluator f(sys);
  std::vector<Trajectory> out;
  out.reserve(starts.size());
  for (const auto& s : starts) out.push_back(Rk4(f, s, o));
  return out;
}

BoundarySamples SampleBoundary(const roa::PiecewiseMax& r, double gamma, int n, double radius, std::mt19937_64& rng,
                               double tol) {
  BoundarySamples out;
  out.requested = n;
  const int dim = r.nvars();
  std::vector<double> zero(dim, 0.0);
  if (!(r.Evaluate(zero) < gamma)) return out;

  std::normal_distribution<double> normal;
  std::vector<double> dir(dim), z(dim);
  auto at = [&](double t) {
    for (int i = 0; i < dim; ++i) z[i] = t * dir[i];
    return r.Evaluate(z);
  };
  const int max_attempts = 50 * n;
  while (static_cast<int>(out.points.size()) < n && out.attempts < max_attempts) {
    ++out.attempts;
    double len = 0.0;
    for (double& d : dir) {
      d = normal(rng);
      len += d * d;
    }
    len = std::sqrt(len);
    if (len == 0.0) continue;
    for (double& d : dir) d /= len;

    // Geometric march to the first crossing, then bisection.
    double lo = 0.0, hi = 0.0;
    bool crossed = false;
    for (double t = std::min(1e-6, radius); t <= radius; t *= 1.02) {
      if (at(t) >= gamma) {
        hi = t;
        crossed = true;
        break;
      }
      lo = t;
    }
    if (!crossed && at(radius) >= gamma) {
      hi = radius;
      crossed = true;
    }
    if (!crossed) continue;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (at(mid) < gamma ? lo : hi) = mid;
      if (std::abs(at(lo) - gamma) <= tol) break;
    }
    if (std::abs(at(lo) - gamma) <= tol) {
      at(lo);
      out.points.push_back(z);
    } else if (std::abs(at(hi) - gamma) <= tol) {
      at(hi);
      out.points.push_back(z);
    }
  }
  return out;
}

Box BoxAround(const std::vector<std::vector<double>>& points, double pad) {
  if (points.empty()) throw std::invalid_argument("no points to bound");
  const int n = static_cast<int>(points.front().size());
  Box b{points.front(), points.front()};
  for (const auto& p : points)
    for (int i = 0; i < n; ++i) {
      b.lo[i] = std::min(b.lo[i], p[i]);
      b.hi[i] = std::max(b.hi[i], p[i]);
    }
  for (int i = 0; i < n; ++i) {
    const double w = std::max(b.hi[i] - b.lo[i], 1e-12);
    b.lo[i] -= pad * w;
    b.hi[i] += pad * w;
  }
  return b;
}

std::vector<std::vector<double>> SampleSublevel(const roa::PiecewiseMax& r, double level, const Box& box, int n,
                                                std::mt19937_64& rng, long max_tries) {
  std::vector<std::vector<double>> out;
  std::vector<std::uniform_real_distribution<double>> axis;
  for (int i = 0; i < box.dim(); ++i) axis.emplace_back(box.lo[i], box.hi[i]);
  std::vector<double> z(box.dim());
  for (long tries = 0; static_cast<int>(out.size()) < n && tries < max_tries; ++tries) {
    for (int i = 0; i < box.dim(); ++i) z[i] = axis[i](rng);
    if (r.Evaluate(z) < level) out.push_back(z);
  }
  return out;
}

}  // namespace attrakt::verify
