#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "nonneg/losses.hpp"
#include "test_support.hpp"

using namespace nonneg;
using namespace testsupport;

TEST_CASE("perceptual_loss basics") {
    std::mt19937_64 rng(31);
    const Image img = random_image(rng, 4, 4, 1);
    CHECK(perceptual_loss(img, img, true) == 0.0);
    CHECK(perceptual_loss(img, img, false) == 0.0);

    // Already-stretched single-channel pair: N is the identity here.
    const Image a = make_image(1, 2, 1, {0.0, 1.0});
    const Image b = make_image(1, 2, 1, {1.0, 0.0});
    CHECK(perceptual_loss(a, b, true) == 1.0);

    CHECK_THROWS_AS(perceptual_loss(Image(1, 2, 1), Image(2, 1, 1), true),
                    std::invalid_argument);
}

TEST_CASE("normalized perceptual_loss ignores positive affine maps") {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> gain(0.1, 3.0);
    std::uniform_real_distribution<double> offset(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const Image img = random_image(rng, 6, 6, trial % 2 ? 3 : 1);
        Image mapped = img;
        const double g = gain(rng);
        const double o = offset(rng);
        for (double& v : mapped.data) v = g * v + o;
        CHECK(perceptual_loss(mapped, img, true) <= 1e-9);

        // Applying a second, different map to the other argument too.
        Image mapped2 = img;
        const double g2 = gain(rng);
        const double o2 = offset(rng);
        for (double& v : mapped2.data) v = g2 * v + o2;
        CHECK(perceptual_loss(mapped, mapped2, true) <= 1e-9);
    }
}

TEST_CASE("perceptual_loss is symmetric and nonnegative") {
    std::mt19937_64 rng(35);
    for (int trial = 0; trial < 50; ++trial) {
        const Image a = random_image(rng, 5, 5, 3);
        const Image b = random_image(rng, 5, 5, 3);
        for (const bool normalized : {false, true}) {
            const double ab = perceptual_loss(a, b, normalized);
            const double ba = perceptual_loss(b, a, normalized);
            CHECK(ab == ba);
            CHECK(ab >= 0.0);
        }
    }
}

TEST_CASE("soft_constraint_loss") {
    SUBCASE("zero inside the band") {
        CHECK(soft_constraint_loss(make_image(1, 3, 1, {0.0, 0.5, 1.0}), 0.0,
                                   1.0, 1.0) == 0.0);
    }
    SUBCASE("mean clamp distance, linear in gamma") {
        const Image r = make_image(1, 3, 1, {-0.1, 0.5, 1.2});
        CHECK(soft_constraint_loss(r, 0.0, 1.0, 1.0) ==
              doctest::Approx(0.1).epsilon(1e-12));
        CHECK(soft_constraint_loss(r, 0.0, 1.0, 2.0) ==
              doctest::Approx(0.2).epsilon(1e-12));
        CHECK(soft_constraint_loss(r, 0.0, 1.0, 0.0) == 0.0);
    }
    SUBCASE("lo > hi rejected") {
        CHECK_THROWS_AS(soft_constraint_loss(Image(1, 1, 1), 1.0, 0.0, 1.0),
                        std::invalid_argument);
    }
    SUBCASE("continuous across the kinks") {
        // Probe |f(r + d) - f(r)| for small d around both band edges.
        const double d = 1e-8;
        for (const double edge : {0.0, 1.0}) {
            double prev = -1.0;
            for (const double v : {edge - d, edge, edge + d}) {
                const double f =
                    soft_constraint_loss(make_image(1, 1, 1, {v}), 0.0, 1.0, 1.0);
                if (prev >= 0.0) CHECK(std::abs(f - prev) <= 2.0 * d);
                prev = f;
            }
        }
    }
    SUBCASE("positively homogeneous in gamma") {
        std::mt19937_64 rng(37);
        const Image r = random_image(rng, 4, 4, 1, -1.0, 2.0);
        const double base = soft_constraint_loss(r, 0.0, 0.4, 1.0);
        for (const double g : {0.5, 2.0, 7.25})
            CHECK(soft_constraint_loss(r, 0.0, 0.4, g) ==
                  doctest::Approx(g * base).epsilon(1e-12));
    }
}

TEST_CASE("objective combines the two terms") {
    std::mt19937_64 rng(39);
    const DeviceParams unconstrained(0.0, 1.0);

    SUBCASE("identity theta on a feasible pair is a global optimum") {
        const Image x = random_image(rng, 4, 4, 1);
        const Image y = random_image(rng, 4, 4, 1);
        const LossBreakdown bd = objective(x, y, Theta::identity(), unconstrained,
                                           1.0, LossVariant::full);
        CHECK(bd.sim == 0.0);
        CHECK(bd.constr == 0.0);
        CHECK(bd.total == 0.0);
    }
    SUBCASE("no_const zeroes the constraint term even when violated") {
        const Image x = make_image(1, 1, 1, {1.0});
        const Image y = make_image(1, 1, 1, {0.0});
        const DeviceParams tight(1.0, 0.0);
        const LossBreakdown bd =
            objective(x, y, Theta::identity(), tight, 5.0, LossVariant::no_const);
        CHECK(bd.constr == 0.0);
        const LossBreakdown full =
            objective(x, y, Theta::identity(), tight, 5.0, LossVariant::full);
        CHECK(full.constr > 0.0);
    }
    SUBCASE("no_sim zeroes the similarity term") {
        const Image x = random_image(rng, 3, 3, 1);
        const Image y = random_image(rng, 3, 3, 1);
        const LossBreakdown bd = objective(x, y, Theta::identity(),
                                           DeviceParams::ost(0.7), 1.0,
                                           LossVariant::no_sim);
        CHECK(bd.sim == 0.0);
        CHECK(bd.total == bd.constr);
    }
    SUBCASE("total is the exact sum, and dropping a term never increases it") {
        for (int trial = 0; trial < 30; ++trial) {
            const Image x = random_image(rng, 5, 5, 3);
            const Image y = random_image(rng, 5, 5, 3);
            Theta th = Theta::identity();
            th.gain[0] = 0.5 + trial * 0.05;
            th.offset[0] = -0.3 + trial * 0.02;
            const DeviceParams d = DeviceParams::ost(0.5);
            const LossBreakdown full = objective(x, y, th, d, 1.0, LossVariant::full);
            CHECK(full.total == full.sim + full.constr);
            const LossBreakdown ablated =
                objective(x, y, th, d, 1.0, LossVariant::no_const);
            CHECK(full.total >= ablated.sim);
        }
    }
}

TEST_CASE("n_psnr") {
    std::mt19937_64 rng(41);
    const Image img = random_image(rng, 6, 6, 1);

    SUBCASE("identical images hit the cap") {
        CHECK(n_psnr(img, img) == 99.0);
    }
    SUBCASE("positive affine map of a non-constant image hits the cap") {
        Image mapped = img;
        for (double& v : mapped.data) v = 1.7 * v + 0.2;
        CHECK(n_psnr(mapped, img) == 99.0);
    }
    SUBCASE("MSE 0.01 between stretched images gives 20 dB") {
        // Both images already span [0,1] so N leaves them unchanged.
        const double d = std::sqrt(0.02);
        const Image a = make_image(1, 4, 1, {0.0, 1.0, 0.5, 0.5});
        const Image b = make_image(1, 4, 1, {0.0, 1.0, 0.5 + d, 0.5 - d});
        CHECK(n_psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));
    }
    SUBCASE("symmetry") {
        const Image other = random_image(rng, 6, 6, 1);
        CHECK(n_psnr(img, other) == n_psnr(other, img));
    }
    SUBCASE("strictly decreasing under growing noise") {
        std::mt19937_64 noise_rng(43);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        std::vector<double> noise(img.size());
        for (double& v : noise) v = unit(noise_rng);
        double prev = 100.0;
        for (const double amplitude : {0.01, 0.05, 0.2}) {
            Image noisy = img;
            for (std::size_t p = 0; p < noisy.size(); ++p)
                noisy.data[p] += amplitude * noise[p];
            const double db = n_psnr(noisy, img);
            CHECK(db < prev);
            prev = db;
        }
    }
}

TEST_CASE("violation_stats") {
    SUBCASE("feasible residual") {
        const ViolationStats s =
            violation_stats(make_image(1, 2, 1, {0.0, 0.3}), 0.0, 0.4);
        CHECK(s.fraction == 0.0);
        CHECK(s.mean_magnitude == 0.0);
        CHECK(s.max_magnitude == 0.0);
    }
    SUBCASE("mixed entries") {
        const ViolationStats s =
            violation_stats(make_image(1, 3, 1, {-0.1, 0.5, 1.2}), 0.0, 1.0);
        CHECK(s.fraction == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
        CHECK(s.mean_magnitude == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(s.max_magnitude == doctest::Approx(0.2).epsilon(1e-12));
    }
    SUBCASE("single entry below") {
        const ViolationStats s =
            violation_stats(make_image(1, 1, 1, {-0.5}), 0.0, 1.0);
        CHECK(s.fraction == 1.0);
        CHECK(s.mean_magnitude == 0.5);
        CHECK(s.max_magnitude == 0.5);
    }
    SUBCASE("zero-linked invariant") {
        std::mt19937_64 rng(45);
        for (int trial = 0; trial < 40; ++trial) {
            const Image r = random_image(rng, 4, 4, 1, -0.5, 1.5);
            const ViolationStats s = violation_stats(r, 0.0, 1.0);
            CHECK((s.fraction == 0.0) == (s.mean_magnitude == 0.0));
            CHECK((s.fraction == 0.0) == (s.max_magnitude == 0.0));
        }
    }
}
