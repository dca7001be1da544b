#include "trajid/continuation.hpp"
#include "trajid/linalg.hpp"
#include "trajid/linear_affine.hpp"
#include "trajid/shooting.hpp"

#include <benchmark/benchmark.h>

#include <array>

using namespace trajid;

namespace {

void BM_Expm(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const linalg::Mat m = linalg::Mat::Random(n, n) * 2.0;
    for (auto _ : state) benchmark::DoNotOptimize(linalg::expm(m));
}
BENCHMARK(BM_Expm)->Arg(2)->Arg(3)->Arg(8);

void BM_SolveLinearRotation(benchmark::State& state) {
    const double c = std::cos(0.9), s = std::sin(0.9);
    inverse::TimedDataSet d;
    for (auto [x, y] : {std::pair{1.0, 0.0}, {c, s}, {c * c - s * s, 2 * c * s}}) {
        linalg::Vec v(2);
        v << x, y;
        d.points.push_back(v);
    }
    for (auto _ : state) benchmark::DoNotOptimize(inverse::solve_linear(d, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_SolveLinearRotation)->Arg(0)->Arg(4);

void BM_ResidualWithJacobian(benchmark::State& state) {
    const shooting::InverseProblem pr;
    const shooting::Vec4 th(1.13, -0.37, 0.62, -0.5);
    for (auto _ : state) benchmark::DoNotOptimize(shooting::evaluate_residual(pr, th, 1e-11));
}
BENCHMARK(BM_ResidualWithJacobian);

void BM_ShootFromNearby(benchmark::State& state) {
    const shooting::InverseProblem pr;
    const shooting::Vec4 seed(1.0, -0.3, 0.5, -0.4);
    for (auto _ : state) benchmark::DoNotOptimize(shooting::shoot(pr, seed));
}
BENCHMARK(BM_ShootFromNearby)->Unit(benchmark::kMillisecond);

void BM_MultiStartNoLattice(benchmark::State& state) {
    const shooting::InverseProblem pr;
    shooting::MultiStartOptions mo;
    mo.use_lattice = false;
    for (auto _ : state) benchmark::DoNotOptimize(shooting::multi_start(pr, mo));
}
BENCHMARK(BM_MultiStartNoLattice)->Unit(benchmark::kMillisecond);

void BM_ContinueAlongY2(benchmark::State& state) {
    shooting::InverseProblem pr;
    pr.p2 = {4.5, 1.05};
    shooting::MultiStartOptions mo;
    mo.use_lattice = false;
    const auto set = shooting::multi_start(pr, mo);
    if (set.solutions.empty()) {
        state.SkipWithError("no start solution");
        return;
    }
    continuation::StepPolicy pol;
    pol.max_states = 100;
    for (auto _ : state)
        benchmark::DoNotOptimize(continuation::continue_branch(pr, set.solutions.front().theta(),
                                                               continuation::Control::Y2, 0.05, 1.5, -1, pol));
}
BENCHMARK(BM_ContinueAlongY2)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
