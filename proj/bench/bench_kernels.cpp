// Parallel kernels against their serial references.
#include <benchmark/benchmark.h>

#include "qwkb/models.hpp"
#include "qwkb/network.hpp"
#include "qwkb/series.hpp"

using namespace qwkb;

namespace {

void BM_VerifyRiccati(benchmark::State& st) {
    QdeModel m = builtin("qmathieu").model;
    SeriesRing<QI> ring(m);
    auto s = riccati_coeffs(ring, m, 1, 6);
    std::vector<cplx> pts;
    for (int k = 0; k < 16; ++k) pts.push_back(std::polar(0.5 + 0.1 * k, 0.37 * k));
    for (auto _ : st) benchmark::DoNotOptimize(verify_riccati(ring, s, pts, st.range(0) != 0));
}

void BM_SaddleSweep(benchmark::State& st) {
    QdeModel m = builtin("qairy").model;
    for (auto _ : st) benchmark::DoNotOptimize(find_saddles(m, -0.5, 0.5, 16, {}, st.range(0) != 0));
}

void BM_BuildGraph(benchmark::State& st) {
    QdeModel m = builtin("qmathieu").model;
    for (auto _ : st) benchmark::DoNotOptimize(build_graph(m, 0.6, {}, st.range(0) != 0));
}

}  // namespace

BENCHMARK(BM_VerifyRiccati)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SaddleSweep)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BuildGraph)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
