#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "figac/grid.hpp"
#include "oracles.hpp"

using namespace figac;

TEST_CASE("scalar field rejects small grids and non-finite values")
{
    CHECK_THROWS_AS(ScalarField(2, 5), ParameterError);
    CHECK_THROWS_AS(ScalarField(5, 2), ParameterError);
    CHECK_THROWS_AS(ScalarField(3, 3, std::nan("")), ParameterError);
    CHECK_THROWS_AS(ScalarField(3, 3, std::vector<double>(8, 0.0)), ParameterError);
    std::vector<double> data(9, 1.0);
    data[4] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(ScalarField(3, 3, data), ParameterError);
    ScalarField f(4, 3, 2.5);
    CHECK(f.width() == 4);
    CHECK(f.height() == 3);
    CHECK(f.size() == 12);
    CHECK(f(2, 3) == 2.5);
}

TEST_CASE("ct slice ingest clamps to the representable range")
{
    ScalarField raw(3, 3, 0.0);
    raw(0, 0) = -40000.0;
    raw(1, 1) = 50000.0;
    const CtSlice s = CtSlice::ingest(raw);
    CHECK(s.hu(0, 0) == -32768.0);
    CHECK(s.hu(1, 1) == 32767.0);
    CHECK(s.hu(2, 2) == 0.0);
    CHECK(s.pixel_spacing == 1.0);
    CHECK_THROWS_AS(CtSlice::ingest(raw, 0.0), ParameterError);
}

TEST_CASE("gradient of constants, ramps and a parabola")
{
    const auto flat = gradient(ScalarField(6, 5, 3.0));
    for (double v : flat.gx.values())
        CHECK(v == 0.0);
    for (double v : flat.gy.values())
        CHECK(v == 0.0);

    const auto ramp = gradient(ScalarField::generate(6, 5, [](int, int c) { return double(c); }));
    for (int r = 1; r < 4; ++r)
        for (int c = 1; c < 5; ++c) {
            CHECK(ramp.gx(r, c) == 1.0);
            CHECK(ramp.gy(r, c) == 0.0);
        }

    const ScalarField sq = ScalarField::generate(5, 5, [](int r, int) { return double(r * r); });
    const auto g = gradient(sq);
    CHECK(g.gy(2, 2) == doctest::Approx((sq(3, 2) - sq(1, 2)) / 2.0));
    CHECK(g.gy(2, 2) == 4.0);
    // One-sided at the frame.
    CHECK(g.gy(0, 2) == sq(1, 2) - sq(0, 2));
    CHECK(g.gy(4, 2) == sq(4, 2) - sq(3, 2));
}

TEST_CASE("gradient of random affine fields is exact in the interior")
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double a = u(rng), b = u(rng), d = u(rng);
        const auto g = gradient(ScalarField::generate(9, 7, [&](int r, int c) { return a * r + b * c + d; }));
        for (int r = 1; r < 6; ++r)
            for (int c = 1; c < 8; ++c) {
                CHECK(g.gx(r, c) == doctest::Approx(b).epsilon(1e-12));
                CHECK(g.gy(r, c) == doctest::Approx(a).epsilon(1e-12));
            }
    }
}

TEST_CASE("magnitude combines both components")
{
    const auto g = gradient(ScalarField::generate(5, 5, [](int r, int c) { return 3.0 * c + 4.0 * r; }));
    CHECK(magnitude(g)(2, 2) == doctest::Approx(5.0));
}

TEST_CASE("kernel construction")
{
    const Kernel avg = Kernel::average(3);
    CHECK(std::abs(avg.sum() - 1.0) < 1e-12);
    CHECK(avg(1, 1) == doctest::Approx(1.0 / 9.0));
    const Kernel gs = Kernel::gaussian(9, 1.5);
    CHECK(std::abs(gs.sum() - 1.0) < 1e-12);
    CHECK(gs(4, 4) > gs(4, 5));
    CHECK(gs(0, 1) == doctest::Approx(gs(1, 0)));
    CHECK_THROWS_AS(Kernel::average(4), ParameterError);
    CHECK_THROWS_AS(Kernel::gaussian(5, 0.0), ParameterError);
    CHECK_THROWS_AS(Kernel::gaussian(4, 1.0), ParameterError);
    CHECK_THROWS_AS(Kernel(3, std::vector<double>(8, 0.0)), ParameterError);
}

TEST_CASE("convolution examples")
{
    const ScalarField c70(8, 8, 70.0);
    const ScalarField smoothed = convolve(c70, Kernel::average(3));
    for (double v : smoothed.values())
        CHECK(v == doctest::Approx(70.0));

    ScalarField impulse(7, 7, 0.0);
    impulse(3, 3) = 9.0;
    const ScalarField out = convolve(impulse, Kernel::average(3));
    for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 7; ++c) {
            const bool block = std::abs(r - 3) <= 1 && std::abs(c - 3) <= 1;
            CHECK(out(r, c) == doctest::Approx(block ? 1.0 : 0.0));
        }

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 255.0);
    const ScalarField f = ScalarField::generate(6, 5, [&](int, int) { return u(rng); });
    CHECK(convolve(f, Kernel::identity(3)) == f);
}

TEST_CASE("convolution matches a direct replicate-edge sum with a flipped kernel")
{
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const ScalarField f = ScalarField::generate(9, 7, [&](int, int) { return u(rng); });
    std::vector<double> w(25);
    for (double& x : w)
        x = u(rng);
    const Kernel k(5, w);
    const ScalarField out = convolve(f, k);
    for (int r = 0; r < 7; ++r) {
        for (int c = 0; c < 9; ++c) {
            double sum = 0.0;
            for (int i = -2; i <= 2; ++i)
                for (int j = -2; j <= 2; ++j) {
                    const int rr = std::clamp(r - i, 0, 6);
                    const int cc = std::clamp(c - j, 0, 8);
                    sum += k(i + 2, j + 2) * f(rr, cc);
                }
            CHECK(out(r, c) == doctest::Approx(sum).epsilon(1e-12));
        }
    }
}

TEST_CASE("normalized nonnegative kernels obey the maximum principle")
{
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-50.0, 200.0);
    for (int trial = 0; trial < 20; ++trial) {
        const ScalarField f = ScalarField::generate(12, 10, [&](int, int) { return u(rng); });
        for (const Kernel& k : {Kernel::average(3), Kernel::gaussian(5, 1.0), Kernel::gaussian(9, 1.5)}) {
            const ScalarField g = convolve(f, k);
            CHECK(g.min() >= f.min() - 1e-9);
            CHECK(g.max() <= f.max() + 1e-9);
        }
    }
}

TEST_CASE("gaussian smoothing")
{
    const ScalarField flat(10, 10, 42.0);
    const ScalarField blurred = gaussian_smooth(flat, 9, 1.5);
    for (double v : blurred.values())
        CHECK(v == doctest::Approx(42.0));

    ScalarField impulse(11, 11, 0.0);
    impulse(5, 5) = 1.0;
    const ScalarField imprint = gaussian_smooth(impulse, 5, 1.0);
    const Kernel k = Kernel::gaussian(5, 1.0);
    double total = 0.0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            CHECK(imprint(3 + i, 3 + j) == doctest::Approx(k(i, j)).epsilon(1e-12));
            total += imprint(3 + i, 3 + j);
        }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    const ScalarField step = ScalarField::generate(20, 5, [](int, int c) { return c < 10 ? 0.0 : 100.0; });
    const ScalarField smooth = gaussian_smooth(step, 9, 1.5);
    double max_slope = 0.0;
    for (int c = 1; c < 20; ++c) {
        CHECK(smooth(2, c) >= smooth(2, c - 1) - 1e-12);
        max_slope = std::max(max_slope, smooth(2, c) - smooth(2, c - 1));
    }
    CHECK(max_slope < 100.0);
    CHECK_THROWS_AS(gaussian_smooth(flat, 4, 1.0), ParameterError);
    CHECK_THROWS_AS(gaussian_smooth(flat, 5, -1.0), ParameterError);
}

TEST_CASE("operations leave their inputs untouched and are deterministic")
{
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const ScalarField f = ScalarField::generate(8, 8, [&](int, int) { return u(rng); });
    const ScalarField copy = f;
    const auto a = convolve(f, Kernel::gaussian(5, 1.0));
    const auto b = convolve(f, Kernel::gaussian(5, 1.0));
    gradient(f);
    CHECK(f == copy);
    CHECK(a == b);
}

TEST_CASE("squared distance transform matches exhaustive search")
{
    std::mt19937 rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        const Mask m = oracle::random_mask(rng, 1 + trial % 17, 1 + (trial * 7) % 13, 0.08);
        if (count(m) == 0)
            continue;
        const Grid<double> d2 = squared_distance_to(m);
        const auto ref = oracle::brute_distance(m);
        for (std::size_t i = 0; i < ref.size(); ++i)
            CHECK(std::sqrt(d2.values()[i]) == doctest::Approx(ref[i]).epsilon(1e-12));
    }
    const Grid<double> empty = squared_distance_to(Mask(4, 4, 0));
    for (double v : empty.values())
        CHECK(std::isinf(v));
}
