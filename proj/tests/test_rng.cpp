#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "unlearnrec/optim.hpp"
#include "unlearnrec/rng.hpp"

using namespace unlearnrec;

TEST_SUITE("unit") {

TEST_CASE("engine matches the standard's reference output") {
    Rng rng(5489);
    std::uint64_t x = 0;
    for (int k = 0; k < 10000; ++k) x = rng.next();
    CHECK(x == 9981545732273789042ULL);
}

TEST_CASE("derived streams are distinct and stable") {
    CHECK(derive_seed(0, 0) != derive_seed(0, 1));
    CHECK(derive_seed(0, 1) != derive_seed(1, 0));
    CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}

TEST_CASE("below stays in range and covers it") {
    Rng rng(1);
    std::vector<int> hits(7, 0);
    for (int k = 0; k < 7000; ++k) {
        const auto v = rng.below(7);
        REQUIRE(v < 7);
        ++hits[v];
    }
    for (int h : hits) CHECK(h > 800);
}

TEST_CASE("uniform and normal moments") {
    Rng rng(2);
    double sum = 0, sq = 0, usum = 0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) {
        const double z = rng.normal();
        sum += z;
        sq += z * z;
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        usum += u;
    }
    CHECK(std::abs(sum / n) < 0.03);
    CHECK(std::abs(sq / n - 1.0) < 0.05);
    CHECK(std::abs(usum / n - 0.5) < 0.01);
}

TEST_CASE("shuffle permutes") {
    Rng rng(3);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    auto w = v;
    rng.shuffle(std::span<int>(w));
    CHECK(w != v);
    std::sort(w.begin(), w.end());
    CHECK(w == v);
}

TEST_CASE("optimizers") {
    CHECK(parse_optimizer("adam") == OptimizerKind::adam);
    CHECK(parse_optimizer("sgd") == OptimizerKind::sgd);
    Matrix p = Matrix::Constant(1, 2, 1.0);
    Matrix g(1, 2);
    g << 2.0, -4.0;
    Optimizer sgd(OptimizerKind::sgd, 0.5, 1, 2);
    sgd.step(p, g);
    CHECK(p(0, 0) == doctest::Approx(0.0));
    CHECK(p(0, 1) == doctest::Approx(3.0));
    // First Adam step moves each coordinate by lr against the gradient sign.
    Matrix q = Matrix::Zero(1, 2);
    Optimizer adam(OptimizerKind::adam, 0.1, 1, 2);
    adam.step(q, g);
    CHECK(q(0, 0) == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(q(0, 1) == doctest::Approx(0.1).epsilon(1e-6));
}

}  // TEST_SUITE("unit")
