#include <doctest.h>

#include <cmath>
#include <random>

#include "photonpano/warp.hpp"
#include "support/test_support.hpp"

using namespace photonpano;

namespace {

double matrix_distance(const Homography& a, const Homography& b) {
    double d = 0.0;
    for (int i = 0; i < 9; ++i) d = std::max(d, std::abs(a.m[i] - b.m[i]));
    return d;
}

WarpParams random_params(std::mt19937_64& gen, double magnitude) {
    std::uniform_real_distribution<double> uni(-magnitude, magnitude);
    WarpParams w;
    for (double& v : w.p) v = uni(gen);
    return w;
}

}  // namespace

TEST_SUITE("warp") {

TEST_CASE("from_params follows the eight-parameter layout") {
    CHECK(matrix_distance(from_params(WarpParams{}), Homography::identity()) == 0.0);

    const Homography t = from_params(WarpParams::translation(3.0, -2.0));
    CHECK(t.m[2] == 3.0);
    CHECK(t.m[5] == -2.0);
    const Vec2 p = t.apply({1.0, 1.0});
    CHECK(p.x == doctest::Approx(4.0));
    CHECK(p.y == doctest::Approx(-1.0));
}

TEST_CASE("to_params and from_params are mutually inverse") {
    std::mt19937_64 gen(1);
    for (int i = 0; i < 200; ++i) {
        const WarpParams w = random_params(gen, 0.1);
        const WarpParams back = to_params(from_params(w));
        for (int k = 0; k < 8; ++k) CHECK(back.p[k] == doctest::Approx(w.p[k]).epsilon(1e-12));
    }
}

TEST_CASE("to_params normalizes projective scale") {
    const WarpParams zero = to_params(Homography::identity());
    for (double v : zero.p) CHECK(v == 0.0);

    // a scalar multiple of the identity is projectively the identity
    const Homography twice = Homography::from_matrix({2, 0, 0, 0, 2, 0, 0, 0, 2});
    for (double v : to_params(twice).p) CHECK(v == doctest::Approx(0.0));

    std::array<double, 9> flat{1, 0, 0, 0, 1, 0, 0, 0, 0};
    CHECK_THROWS_AS(Homography::from_matrix(flat), Error);
}

TEST_CASE("compose and invert behave like the matrix group") {
    const Homography a = from_params(WarpParams::translation(1.0, 0.0));
    const Homography b = from_params(WarpParams::translation(2.0, 5.0));
    const Homography ab = compose(a, b);
    CHECK(ab.m[2] == doctest::Approx(3.0));
    CHECK(ab.m[5] == doctest::Approx(5.0));

    std::mt19937_64 gen(2);
    for (int i = 0; i < 100; ++i) {
        const Homography h = from_params(random_params(gen, 0.1));
        CHECK(matrix_distance(compose(h, invert(h)), Homography::identity()) < 1e-10);
        CHECK(matrix_distance(compose(Homography::identity(), h), h) < 1e-15);
    }
}

TEST_CASE("compose is associative on well-conditioned triples") {
    std::mt19937_64 gen(3);
    for (int i = 0; i < 100; ++i) {
        const Homography a = from_params(random_params(gen, 0.05));
        const Homography b = from_params(random_params(gen, 0.05));
        const Homography c = from_params(random_params(gen, 0.05));
        CHECK(matrix_distance(compose(compose(a, b), c), compose(a, compose(b, c))) < 1e-10);
    }
}

TEST_CASE("degenerate parameters are rejected") {
    WarpParams w;
    w.p[0] = -1.0;  // first diagonal entry collapses to 0
    w.p[3] = -1.0;
    CHECK_THROWS_AS(from_params(w), Error);
}

TEST_CASE("apply_warp with the identity keeps the image") {
    const Image img = ppt::value_noise_texture(24, 17, 5);
    const WarpedImage out = apply_warp(img, Homography::identity(), 24, 17);
    for (int y = 0; y < 17; ++y)
        for (int x = 0; x < 24; ++x) {
            CHECK(out.values.at(x, y) == doctest::Approx(img.at(x, y)).epsilon(1e-14));
            CHECK(out.weights.at(x, y) == doctest::Approx(1.0));
        }
}

TEST_CASE("apply_warp splits an impulse under a half-pixel shift") {
    Image img(7, 5, 0.0);
    img.at(3, 2) = 1.0;
    const Homography shift = from_params(WarpParams::translation(0.5, 0.0));
    const WarpedImage out = apply_warp(img, shift, 7, 5);
    CHECK(out.values.at(3, 2) == doctest::Approx(0.5));
    CHECK(out.values.at(4, 2) == doctest::Approx(0.5));
    CHECK(out.values.at(2, 2) == doctest::Approx(0.0));
}

TEST_CASE("warping forward then back preserves the interior") {
    const Image img = ppt::value_noise_texture(96, 96, 8);
    std::mt19937_64 gen(11);
    const WarpParams w = ppt::random_bounded_warp(gen, 96, 96, 4.0);
    const Homography h = from_params(w);

    const WarpedImage fwd = apply_warp(img, h, 96, 96);
    Image fwd_norm = fwd.values;
    for (size_t i = 0; i < fwd_norm.pixels.size(); ++i)
        if (fwd.weights.pixels[i] > 0.0) fwd_norm.pixels[i] /= fwd.weights.pixels[i];
    const WarpedImage back = apply_warp(fwd_norm, invert(h), 96, 96);

    Image interior_mask(96, 96, 0.0);
    for (int y = 8; y < 88; ++y)
        for (int x = 8; x < 88; ++x)
            if (back.weights.at(x, y) > 0.999) interior_mask.at(x, y) = 1.0;
    Image back_norm = back.values;
    for (size_t i = 0; i < back_norm.pixels.size(); ++i)
        if (back.weights.pixels[i] > 0.0) back_norm.pixels[i] /= back.weights.pixels[i];
    CHECK(ppt::plain_psnr(back_norm, img, 1.0, &interior_mask) > 40.0);
}

TEST_CASE("apply_warp total weight never exceeds the pixel count") {
    const Image img = ppt::value_noise_texture(40, 40, 13);
    std::mt19937_64 gen(14);
    for (int i = 0; i < 20; ++i) {
        const Homography h = from_params(ppt::random_bounded_warp(gen, 40, 40, 5.0));
        const WarpedImage out = apply_warp(img, h, 40, 40);
        double total = 0.0;
        for (double v : out.weights.pixels) total += v;
        CHECK(total <= 40.0 * 40.0 + 1e-9);
    }
}

TEST_CASE("scale_warp conjugates onto the upsampled grid") {
    CHECK(matrix_distance(scale_warp(Homography::identity(), 3.0), Homography::identity()) == 0.0);

    const Homography t = scale_warp(from_params(WarpParams::translation(1.0, 0.0)), 2.0);
    CHECK(t.m[2] == doctest::Approx(2.0));

    std::mt19937_64 gen(4);
    for (int i = 0; i < 100; ++i) {
        const Homography h = from_params(random_params(gen, 0.1));
        CHECK(matrix_distance(scale_warp(scale_warp(h, 2.0), 0.5), h) < 1e-12);
    }
}

TEST_CASE("scale_warp is a group homomorphism") {
    std::mt19937_64 gen(6);
    for (int i = 0; i < 100; ++i) {
        const Homography a = from_params(random_params(gen, 0.05));
        const Homography b = from_params(random_params(gen, 0.05));
        const double s = 0.5 + 3.0 * std::uniform_real_distribution<double>(0, 1)(gen);
        CHECK(matrix_distance(scale_warp(compose(a, b), s),
                              compose(scale_warp(a, s), scale_warp(b, s))) < 1e-10);
    }
}

}  // TEST_SUITE
