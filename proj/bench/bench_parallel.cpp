// Timings for the data-parallel kernels: serial reference vs OpenMP.
// Build target `bench_parallel`; not part of the test suite.

#include <chrono>
#include <cstdio>

#include "epcore/finder.hpp"
#include "epcore/models.hpp"
#include "epcore/parallel.hpp"

using namespace epcore;
using Clock = std::chrono::steady_clock;

namespace {

template <typename Fn>
double time_ms(const Fn& fn) {
    const auto t0 = Clock::now();
    fn();
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void bench_grid(const char* name, const MatrixFamily& fam, const SearchRegion& r) {
    std::vector<double> checksum(2, 0.0);
    const double serial = time_ms([&] {
        const auto grid = finder::discriminant_grid(fam, r, ExecPolicy::serial);
        for (double v : grid.values) checksum[0] += v;
    });
    const double openmp = time_ms([&] {
        const auto grid = finder::discriminant_grid(fam, r, ExecPolicy::openmp);
        for (double v : grid.values) checksum[1] += v;
    });
    std::printf("%-28s serial %9.1f ms   openmp %9.1f ms   speedup %.2fx   %s\n", name,
                serial, openmp, serial / openmp,
                checksum[0] == checksum[1] ? "results identical" : "RESULT MISMATCH");
}

void bench_census(const char* name, const MatrixFamily& fam, const SearchRegion& r) {
    size_t n1 = 0, n2 = 0;
    const double serial =
        time_ms([&] { n1 = finder::census(fam, r, ExecPolicy::serial).size(); });
    const double openmp =
        time_ms([&] { n2 = finder::census(fam, r, ExecPolicy::openmp).size(); });
    std::printf("%-28s serial %9.1f ms   openmp %9.1f ms   speedup %.2fx   %s (%zu found)\n",
                name, serial, openmp, serial / openmp,
                n1 == n2 ? "results identical" : "RESULT MISMATCH", n1);
}

} // namespace

int main() {
    std::printf("workers available: %d\n\n", max_workers());

    SearchRegion quadrant;
    quadrant.lo = {0.0, 0.0};
    quadrant.hi = {2.0, 2.0};

    quadrant.grid_step = 0.01;
    bench_grid("grid lipkin N=16 even", models::lipkin_blocks(16).even, quadrant);
    quadrant.grid_step = 0.02;
    bench_grid("grid lipkin N=32 even", models::lipkin_blocks(32).even, quadrant);
    bench_grid("grid lipkin N=32 odd", models::lipkin_blocks(32).odd, quadrant);

    quadrant.grid_step = 0.04;
    bench_census("census lipkin N=16 even", models::lipkin_blocks(16).even, quadrant);
    quadrant.grid_step = 0.02;
    bench_census("census lipkin N=32 even", models::lipkin_blocks(32).even, quadrant);
    return 0;
}
