#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "nonneg/device.hpp"
#include "test_support.hpp"

using namespace nonneg;
using namespace testsupport;

TEST_CASE("device params validate and derive the see-through budget") {
    const DeviceParams d = DeviceParams::ost(0.6);
    CHECK(d.alpha == 0.6);
    CHECK(d.beta == doctest::Approx(0.4).epsilon(1e-15));

    CHECK_THROWS_AS(DeviceParams(-0.1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(DeviceParams(0.5, 1.2), std::invalid_argument);
    CHECK_NOTHROW(DeviceParams(0.9, 0.9));  // decoupled projector setup
}

TEST_CASE("affine_target") {
    const Image y = make_image(1, 2, 1, {0.0, 1.0});

    SUBCASE("identity theta returns the proposal unchanged") {
        const Image t = affine_target(y, Theta::identity());
        CHECK(t.data[0] == y.data[0]);
        CHECK(t.data[1] == y.data[1]);
    }
    SUBCASE("values may leave [0,1]") {
        Theta th = Theta::identity();
        th.gain[0] = 2.0;
        th.offset[0] = 0.1;
        const Image t = affine_target(make_image(1, 1, 1, {0.5}), th);
        CHECK(t.data[0] == doctest::Approx(1.1).epsilon(1e-15));
    }
    SUBCASE("gain and offset apply elementwise") {
        Theta th = Theta::identity();
        th.gain[0] = 0.5;
        th.offset[0] = 0.25;
        const Image t = affine_target(y, th);
        CHECK(t.data[0] == 0.25);
        CHECK(t.data[1] == 0.75);
    }
    SUBCASE("per-channel theta length must match") {
        Theta th = Theta::identity_per_channel(3);
        CHECK_THROWS_AS(affine_target(y, th), std::invalid_argument);
    }
    SUBCASE("per-channel theta applies channel-wise") {
        const Image rgb = make_image(1, 1, 3, {0.5, 0.5, 0.5});
        Theta th = Theta::identity_per_channel(3);
        th.gain = {1.0, 2.0, 0.0};
        th.offset = {0.0, 0.0, 0.3};
        const Image t = affine_target(rgb, th);
        CHECK(t.data[0] == 0.5);
        CHECK(t.data[1] == 1.0);
        CHECK(t.data[2] == 0.3);
    }
}

TEST_CASE("residual") {
    SUBCASE("unclamped difference") {
        const Image r = residual(make_image(1, 1, 1, {0.5}),
                                 make_image(1, 1, 1, {0.2}),
                                 DeviceParams(0.6, 0.4));
        CHECK(r.data[0] == doctest::Approx(-0.1).epsilon(1e-12));
    }
    SUBCASE("alpha 0 reduces to the target") {
        const Image t = make_image(1, 2, 1, {0.3, 0.9});
        const Image r = residual(make_image(1, 2, 1, {0.8, 0.1}), t,
                                 DeviceParams(0.0, 1.0));
        CHECK(r.data[0] == t.data[0]);
        CHECK(r.data[1] == t.data[1]);
    }
    SUBCASE("target == x at alpha 1 gives zeros") {
        const Image x = make_image(1, 2, 1, {0.4, 0.7});
        const Image r = residual(x, x, DeviceParams(1.0, 0.0));
        CHECK(r.data[0] == 0.0);
        CHECK(r.data[1] == 0.0);
    }
    SUBCASE("dimension mismatch throws") {
        CHECK_THROWS_AS(residual(Image(1, 2, 1), Image(2, 1, 1),
                                 DeviceParams(0.5, 0.5)),
                        std::invalid_argument);
    }
}

TEST_CASE("compose_output clamps into the feasible band") {
    SUBCASE("alpha 0: plain clamp of the target") {
        const Image o = compose_output(make_image(1, 3, 1, {0.0, 0.0, 0.0}),
                                       make_image(1, 3, 1, {0.2, 1.3, -0.1}),
                                       DeviceParams(0.0, 1.0));
        CHECK(o.data[0] == 0.2);
        CHECK(o.data[1] == 1.0);
        CHECK(o.data[2] == 0.0);
    }
    SUBCASE("negative residual clamps to the floor alpha*x") {
        const Image o = compose_output(make_image(1, 1, 1, {0.5}),
                                       make_image(1, 1, 1, {0.2}),
                                       DeviceParams(0.6, 0.4));
        CHECK(o.data[0] == doctest::Approx(0.3).epsilon(1e-15));
    }
    SUBCASE("zero budget returns the attenuated input") {
        const Image x = make_image(1, 2, 1, {0.3, 0.9});
        const Image o = compose_output(x, make_image(1, 2, 1, {-5.0, 5.0}),
                                       DeviceParams(1.0, 0.0));
        CHECK(o.data[0] == x.data[0]);
        CHECK(o.data[1] == x.data[1]);
    }
}

TEST_CASE("heuristic_baseline") {
    SUBCASE("unconstrained case returns the proposal") {
        const Image y = make_image(1, 3, 1, {0.1, 0.5, 1.0});
        const Image o = heuristic_baseline(make_image(1, 3, 1, {0.9, 0.2, 0.0}),
                                           y, DeviceParams(0.0, 1.0));
        CHECK(o.data[0] == y.data[0]);
        CHECK(o.data[1] == y.data[1]);
        CHECK(o.data[2] == y.data[2]);
    }
    SUBCASE("clips the required difference") {
        const Image o = heuristic_baseline(make_image(1, 1, 1, {0.5}),
                                           make_image(1, 1, 1, {0.2}),
                                           DeviceParams(0.6, 0.4));
        CHECK(o.data[0] == doctest::Approx(0.3).epsilon(1e-15));

        const Image hi = heuristic_baseline(make_image(1, 1, 1, {0.0}),
                                            make_image(1, 1, 1, {0.9}),
                                            DeviceParams(0.5, 0.5));
        CHECK(hi.data[0] == 0.5);
    }
}

TEST_CASE("physical realizability holds exactly under recomputation") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> alpha_dist(0.0, 1.0);
    std::uniform_real_distribution<double> wild(-2.0, 3.0);
    for (int trial = 0; trial < 300; ++trial) {
        const double alpha = alpha_dist(rng);
        const DeviceParams d = DeviceParams::ost(alpha);
        const Image x = random_image(rng, 4, 4, 1);
        Image target(4, 4, 1);
        for (double& v : target.data) v = wild(rng);

        const Image o = compose_output(x, target, d);
        for (std::size_t p = 0; p < o.size(); ++p) {
            const double applied = o.data[p] - d.alpha * x.data[p];
            CHECK(applied >= 0.0);
            CHECK(applied <= d.beta);
        }
    }
}

TEST_CASE("compose_output with identity target matches the heuristic bit-exactly") {
    std::mt19937_64 rng(22);
    const Image x = random_image(rng, 5, 5, 3);
    const Image y = random_image(rng, 5, 5, 3);
    const DeviceParams d = DeviceParams::ost(0.35);
    const Image a = compose_output(x, affine_target(y, Theta::identity()), d);
    const Image b = heuristic_baseline(x, y, d);
    for (std::size_t p = 0; p < a.size(); ++p)
        CHECK(a.data[p] == b.data[p]);
}
