#include <benchmark/benchmark.h>

#include <random>

#include "attrakt/sdp_kernels.hpp"
#include "attrakt/verify.hpp"
#include "sdp_random.hpp"

namespace {

using namespace attrakt;

struct SchurCase {
  sdp::kernels::PsdStructure s;
  std::vector<Eigen::MatrixXd> w;
  int m;
};

/// m constraints over three PSD blocks of side n.
SchurCase MakeSchur(int m, int n) {
  std::mt19937 rng(42);
  const std::vector<sdp::Block> blocks(3, sdp::Block{sdp::BlockKind::kPsd, n});
  const sdp::SdpProblem p = sdp::testing::RandomFeasible(rng, m, blocks, 0.2);
  SchurCase c{{}, {}, m};
  c.s.num_constraints = m;
  for (const auto& b : blocks) c.s.blocks.push_back({b.size, {}});
  for (int i = 0; i < m; ++i) {
    std::vector<sdp::kernels::ConstraintBlock> per(blocks.size());
    for (const sdp::Entry& e : p.a[i]) {
      per[e.block].constraint = i;
      per[e.block].entries.push_back({e.row, e.col, e.value});
    }
    for (std::size_t b = 0; b < blocks.size(); ++b)
      if (!per[b].entries.empty()) c.s.blocks[b].cons.push_back(per[b]);
  }
  c.s.Index();
  for (const auto& b : blocks) c.w.push_back(sdp::testing::RandomPd(rng, b.size));
  return c;
}

void BM_SchurParallel(benchmark::State& st) {
  const SchurCase c = MakeSchur(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  for (auto _ : st) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(c.m, c.m);
    sdp::kernels::AddPsdSchur(c.s, c.w, m);
    benchmark::DoNotOptimize(m.data());
  }
}

void BM_SchurSerial(benchmark::State& st) {
  const SchurCase c = MakeSchur(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  for (auto _ : st) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(c.m, c.m);
    sdp::kernels::AddPsdSchurSerial(c.s, c.w, m);
    benchmark::DoNotOptimize(m.data());
  }
}

BENCHMARK(BM_SchurParallel)->Args({100, 15})->Args({300, 28})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SchurSerial)->Args({100, 15})->Args({300, 28})->Unit(benchmark::kMillisecond);

PolySystem Example1() {
  return ParseSystem(
      "vars: x1 x2\n"
      "dot x1 = -0.42*x1 - 1.05*x2 - 2.3*x1^2 - 0.5*x1*x2 - x1^3\n"
      "dot x2 = 1.98*x1 + x1*x2\n");
}

std::vector<std::vector<double>> Starts(int count) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  std::vector<std::vector<double>> s(count);
  for (auto& z : s) z = {u(rng), u(rng)};
  return s;
}

verify::Rk4Options Horizon() {
  verify::Rk4Options o;
  o.t_final = 20.0;
  o.stride = 0;
  return o;
}

void BM_TrajectoriesParallel(benchmark::State& st) {
  const PolySystem sys = Example1();
  const auto starts = Starts(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(verify::SimulateBatch(sys, starts, Horizon()));
}

void BM_TrajectoriesSerial(benchmark::State& st) {
  const PolySystem sys = Example1();
  const auto starts = Starts(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(verify::SimulateBatchSerial(sys, starts, Horizon()));
}

BENCHMARK(BM_TrajectoriesParallel)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrajectoriesSerial)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_GridParallel(benchmark::State& st) {
  const Polynomial r = ParsePolynomial("x1^4 + 3*x1^2*x2^2 - x2^3 + x1*x2 + x2^2", {"x1", "x2"});
  auto f = [&](double x, double y) {
    const double z[2] = {x, y};
    return r.Evaluate(z);
  };
  for (auto _ : st) benchmark::DoNotOptimize(verify::EvaluateGrid(f, verify::Box::Cube(2, 1.0), 512));
}

void BM_GridSerial(benchmark::State& st) {
  const Polynomial r = ParsePolynomial("x1^4 + 3*x1^2*x2^2 - x2^3 + x1*x2 + x2^2", {"x1", "x2"});
  auto f = [&](double x, double y) {
    const double z[2] = {x, y};
    return r.Evaluate(z);
  };
  for (auto _ : st) benchmark::DoNotOptimize(verify::EvaluateGridSerial(f, verify::Box::Cube(2, 1.0), 512));
}

BENCHMARK(BM_GridParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridSerial)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
