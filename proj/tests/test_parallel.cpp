#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "epcore/finder.hpp"
#include "epcore/models.hpp"
#include "epcore/parallel.hpp"
#include "epcore/twolevel.hpp"

using namespace epcore;

TEST_CASE("discriminant grid: serial and OpenMP evaluations are bit identical") {
    const MatrixFamily fam = twolevel::canonical_dimer().family();
    SearchRegion r;
    r.grid_step = 0.1;
    const auto serial = finder::discriminant_grid(fam, r, ExecPolicy::serial);
    const auto openmp = finder::discriminant_grid(fam, r, ExecPolicy::openmp);
    REQUIRE(serial.values.size() == openmp.values.size());
    for (size_t i = 0; i < serial.values.size(); ++i)
        CHECK(serial.values[i] == openmp.values[i]);
}

TEST_CASE("lipkin block grid: serial and OpenMP evaluations are bit identical") {
    const auto blocks = models::lipkin_blocks(8);
    SearchRegion r;
    r.lo = {0.0, 0.0};
    r.hi = {2.0, 2.0};
    r.grid_step = 0.1;
    const auto serial = finder::discriminant_grid(blocks.even, r, ExecPolicy::serial);
    const auto openmp = finder::discriminant_grid(blocks.even, r, ExecPolicy::openmp);
    for (size_t i = 0; i < serial.values.size(); ++i)
        CHECK(serial.values[i] == openmp.values[i]);
}

TEST_CASE("census: serial and OpenMP agree exactly, any worker count") {
    const MatrixFamily fam = twolevel::canonical_dimer().family();
    SearchRegion r;
    r.grid_step = 0.05;
    const auto serial = finder::census(fam, r, ExecPolicy::serial);
    const auto openmp = finder::census(fam, r, ExecPolicy::openmp);
    set_workers(1);
    const auto one = finder::census(fam, r, ExecPolicy::openmp);
    set_workers(max_workers());
    REQUIRE(serial.size() == openmp.size());
    REQUIRE(serial.size() == one.size());
    for (size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].lambda() == openmp[i].lambda());
        CHECK(serial[i].lambda() == one[i].lambda());
        CHECK(serial[i].energy == openmp[i].energy);
        CHECK(serial[i].exponent == openmp[i].exponent);
    }
}

TEST_CASE("parallel_for: slot writes land exactly once") {
    std::vector<int> hits(1000, 0);
    parallel_for(1000, [&](std::ptrdiff_t i) { hits[static_cast<size_t>(i)] += 1; });
    for (int h : hits) CHECK(h == 1);
}
