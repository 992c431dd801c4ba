#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "attrakt/verify.hpp"

namespace attrakt::verify {

namespace {

void CheckGrid(const Box& box, int res) {
  if (box.dim() != 2) throw std::invalid_argument("contours need a 2-D box");
  if (res < 1) throw std::invalid_argument("grid resolution must be positive");
}

double GridX(const Box& b, int res, int i) { return b.lo[0] + (b.hi[0] - b.lo[0]) * i / res; }
double GridY(const Box& b, int res, int j) { return b.lo[1] + (b.hi[1] - b.lo[1]) * j / res; }

}  // namespace

std::vector<double> EvaluateGrid(const std::function<double(double, double)>& f, const Box& box, int res) {
  CheckGrid(box, res);
  const int m = res + 1;
  std::vector<double> v(static_cast<std::size_t>(m) * m);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) v[static_cast<std::size_t>(j) * m + i] = f(GridX(box, res, i), GridY(box, res, j));
  return v;
}

std::vector<double> EvaluateGridSerial(const std::function<double(double, double)>& f, const Box& box, int res) {
  CheckGrid(box, res);
  const int m = res + 1;
  std::vector<double> v(static_cast<std::size_t>(m) * m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) v[static_cast<std::size_t>(j) * m + i] = f(GridX(box, res, i), GridY(box, res, j));
  return v;
}

std::vector<Polyline> Contour2d(const std::function<double(double, double)>& f, double level, const Box& box,
                                int res) {
  std::vector<double> v = EvaluateGrid(f, box, res);
  const double big = level + 1e6 * (1.0 + std::abs(level));
  for (double& x : v)
    if (!std::isfinite(x)) x = big;
  const int m = res + 1;
  auto val = [&](int i, int j) { return v[static_cast<std::size_t>(j) * m + i]; };
  auto in = [&](int i, int j) { return val(i, j) < level; };
  // Edge ids: 2 * node for the edge to the right of a node, 2 * node + 1 for the one above.
  auto hedge = [&](int i, int j) { return 2L * (static_cast<long>(j) * m + i); };
  auto vedge = [&](int i, int j) { return 2L * (static_cast<long>(j) * m + i) + 1; };

  std::unordered_map<long, std::array<double, 2>> point;
  auto cross = [&](long id, int i0, int j0, int i1, int j1) {
    if (point.count(id)) return id;
    const double a = val(i0, j0), b = val(i1, j1);
    const double t = (level - a) / (b - a);
    const double x0 = GridX(box, res, i0), y0 = GridY(box, res, j0);
    const double x1 = GridX(box, res, i1), y1 = GridY(box, res, j1);
    point[id] = {x0 + t * (x1 - x0), y0 + t * (y1 - y0)};
    return id;
  };

  std::vector<std::array<long, 2>> segs;
  for (int j = 0; j < res; ++j) {
    for (int i = 0; i < res; ++i) {
      const bool c0 = in(i, j), c1 = in(i + 1, j), c2 = in(i + 1, j + 1), c3 = in(i, j + 1);
      long e[4] = {-1, -1, -1, -1};
      int k = 0;
      const bool cut[4] = {c0 != c1, c1 != c2, c3 != c2, c0 != c3};
      if (cut[0]) e[0] = cross(hedge(i, j), i, j, i + 1, j);
      if (cut[1]) e[1] = cross(vedge(i + 1, j), i + 1, j, i + 1, j + 1);
      if (cut[2]) e[2] = cross(hedge(i, j + 1), i, j + 1, i + 1, j + 1);
      if (cut[3]) e[3] = cross(vedge(i, j), i, j, i, j + 1);
      for (bool c : cut) k += c;
      if (k == 2) {
        long ends[2];
        int q = 0;
        for (int s = 0; s < 4; ++s)
          if (cut[s]) ends[q++] = e[s];
        segs.push_back({ends[0], ends[1]});
      } else if (k == 4) {
        const double centre = 0.25 * (val(i, j) + val(i + 1, j) + val(i + 1, j + 1) + val(i, j + 1));
        if ((centre < level) == c0) {
          segs.push_back({e[0], e[1]});
          segs.push_back({e[2], e[3]});
        } else {
          segs.push_back({e[0], e[3]});
          segs.push_back({e[1], e[2]});
        }
      }
    }
  }

  std::unordered_map<long, std::vector<int>> at;
  for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
    at[segs[s][0]].push_back(s);
    at[segs[s][1]].push_back(s);
  }
  std::vector<bool> used(segs.size(), false);
  std::vector<Polyline> out;
  auto walk = [&](long start) {
    Polyline line{point.at(start)};
    long node = start;
    for (;;) {
      int next = -1;
      for (int s : at[node])
        if (!used[s]) {
          next = s;
          break;
        }
      if (next < 0) break;
      used[next] = true;
      node = segs[next][0] == node ? segs[next][1] : segs[next][0];
      line.push_back(point.at(node));
    }
    out.push_back(std::move(line));
  };
  for (const auto& [node, list] : at)
    if (list.size() == 1 && !used[list[0]]) walk(node);
  for (int s = 0; s < static_cast<int>(segs.size()); ++s)
    if (!used[s]) walk(segs[s][0]);
  return out;
}

std::vector<Polyline> Contour2d(const roa::PiecewiseMax& r, double gamma, const Box& box, int res) {
  if (r.nvars() != 2) throw std::invalid_argument("contours need two variables");
  return Contour2d(
      [&r](double x, double y) {
        const double z[2] = {x, y};
        return r.Evaluate(z);
      },
      gamma, box, res);
}

void WriteContourCsv(const std::vector<ContourLevel>& levels, std::ostream& os) {
  os.precision(17);
  os << "x1,x2,polyline_id\n";
  int id = 0;
  for (const ContourLevel& l : levels)
    for (const Polyline& p : l.lines) {
      for (const auto& q : p) os << q[0] << "," << q[1] << "," << id << "\n";
      ++id;
    }
}

void WriteContourSvg(const std::vector<ContourLevel>& levels, const Box& box, std::ostream& os) {
  if (box.dim() != 2) throw std::invalid_argument("contours need a 2-D box");
  const double size = 600.0;
  const double sx = size / (box.hi[0] - box.lo[0]);
  const double sy = size / (box.hi[1] - box.lo[1]);
  static const char* kColors[] = {"#c0392b", "#2471a3", "#229954", "#7d3c98", "#d68910", "#17a589"};
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\" viewBox=\"0 0 "
     << size << " " << size << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t k = 0; k < levels.size(); ++k) {
    os << "<g stroke=\"" << kColors[k % 6] << "\" fill=\"none\" stroke-width=\"" << (k == 0 ? 2 : 1)
       << "\"><title>level " << levels[k].level << "</title>\n";
    for (const Polyline& p : levels[k].lines) {
      os << "<polyline points=\"";
      for (const auto& q : p) os << (q[0] - box.lo[0]) * sx << "," << (box.hi[1] - q[1]) * sy << " ";
      os << "\"/>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
}

void WriteTrajectoryCsv(const std::vector<Trajectory>& trajs, int nvars, std::ostream& os) {
  os.precision(12);
  os << "t";
  for (int i = 1; i <= nvars; ++i) os << ",x" << i;
  os << ",status,traj\n";
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    const Trajectory& t = trajs[k];
    for (int s = 0; s < t.size(); ++s) {
      os << t.t[s];
      for (double v : t.state(s, nvars)) os << "," << v;
      os << "," << ToString(t.status) << "," << k << "\n";
    }
  }
}

}  // namespace attrakt::verify
