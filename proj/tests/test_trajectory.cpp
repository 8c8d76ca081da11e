#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "photonpano/trajectory.hpp"
#include "support/test_support.hpp"

using namespace photonpano;

namespace {

Knot make_knot(double t, std::array<double, 8> p) {
    Knot k;
    k.t = t;
    k.params.p = p;
    return k;
}

Knot translation_knot(double t, double dx, double dy = 0.0) {
    return Knot{t, WarpParams::translation(dx, dy), 0.0};
}

}  // namespace

TEST_SUITE("trajectory") {

TEST_CASE("two knots interpolate linearly") {
    const Trajectory traj = Trajectory::fit({translation_knot(0, 0), translation_knot(100, 10)});
    CHECK(traj.eval(50.0).p[4] == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(traj.eval(25.0).p[4] == doctest::Approx(2.5).epsilon(1e-12));
    // linear extrapolation beyond the range
    CHECK(traj.eval(120.0).p[4] == doctest::Approx(12.0).epsilon(1e-12));
    CHECK(traj.eval(-10.0).p[4] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("interpolation passes through every knot") {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> uni(-0.2, 0.2);
    std::vector<Knot> knots;
    double t = 0.0;
    for (int i = 0; i < 7; ++i) {
        std::array<double, 8> p;
        for (double& v : p) v = uni(gen);
        knots.push_back(make_knot(t, p));
        t += 1.0 + 10.0 * std::uniform_real_distribution<double>(0, 1)(gen);
    }
    const Trajectory traj = Trajectory::fit(knots);
    for (const Knot& k : knots) {
        const WarpParams at = traj.eval(k.t);
        for (int i = 0; i < 8; ++i) CHECK(std::abs(at.p[i] - k.params.p[i]) < 1e-10);
    }
}

TEST_CASE("identical knots give a constant trajectory") {
    std::array<double, 8> p{0.01, 0, 0, 0.02, 3, -1, 0, 0};
    const Trajectory traj = Trajectory::fit({make_knot(0, p), make_knot(10, p), make_knot(25, p)});
    for (double t : {0.0, 3.7, 12.0, 25.0}) {
        const WarpParams at = traj.eval(t);
        for (int i = 0; i < 8; ++i) CHECK(at.p[i] == doctest::Approx(p[i]).epsilon(1e-12));
    }
}

TEST_CASE("splines reproduce linear motion exactly") {
    std::vector<Knot> knots;
    for (double t : {0.0, 5.0, 11.0, 17.0, 26.0, 31.0}) {
        std::array<double, 8> p;
        for (int i = 0; i < 8; ++i) p[static_cast<size_t>(i)] = 0.01 * (i + 1) * t - 0.003 * i;
        knots.push_back(make_knot(t, p));
    }
    const Trajectory traj = Trajectory::fit(knots);
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> uni(0.0, 31.0);
    for (int k = 0; k < 50; ++k) {
        const double t = uni(gen);
        const WarpParams at = traj.eval(t);
        for (int i = 0; i < 8; ++i)
            CHECK(at.p[i] == doctest::Approx(0.01 * (i + 1) * t - 0.003 * i).epsilon(1e-10));
    }
}

TEST_CASE("cubic fit matches an independent dense solve on quadratic data") {
    // Natural end conditions cannot reproduce t^2 exactly (the boundary
    // second derivative is forced to zero), so the oracle here is an
    // independently solved natural spline; agreement is required to 1e-10
    // and the residual against t^2 must shrink as knots densify.
    std::vector<double> t6{0, 2, 4, 6, 8, 10};
    std::vector<double> y6;
    for (double t : t6) y6.push_back(t * t);
    std::vector<Knot> knots;
    for (size_t i = 0; i < t6.size(); ++i) {
        std::array<double, 8> p{};
        p[4] = y6[i];
        knots.push_back(make_knot(t6[i], p));
    }
    const Trajectory traj = Trajectory::fit(knots);
    const ppt::DenseNaturalSpline oracle(t6, y6);

    double coarse_err = 0.0;
    for (double mid : {3.0, 5.0, 7.0}) {  // interior interval midpoints
        CHECK(traj.eval(mid).p[4] == doctest::Approx(oracle.eval(mid)).epsilon(1e-10));
        coarse_err = std::max(coarse_err, std::abs(traj.eval(mid).p[4] - mid * mid));
    }

    std::vector<Knot> dense;
    for (double t = 0.0; t <= 10.0 + 1e-9; t += 0.5) {
        std::array<double, 8> p{};
        p[4] = t * t;
        dense.push_back(make_knot(t, p));
    }
    const Trajectory fine = Trajectory::fit(dense);
    double fine_err = 0.0;
    for (double mid : {3.25, 5.25, 7.25})
        fine_err = std::max(fine_err, std::abs(fine.eval(mid).p[4] - mid * mid));
    CHECK(fine_err < coarse_err);
    CHECK(fine_err < 1e-3);
}

TEST_CASE("three knots fall back to the exact quadratic") {
    std::vector<Knot> knots;
    for (double t : {1.0, 4.0, 9.0}) {
        std::array<double, 8> p{};
        p[4] = 2.0 * t * t - 3.0 * t + 1.0;
        knots.push_back(make_knot(t, p));
    }
    const Trajectory traj = Trajectory::fit(knots);
    for (double t : {2.0, 3.0, 6.5, 8.0})
        CHECK(traj.eval(t).p[4] == doctest::Approx(2.0 * t * t - 3.0 * t + 1.0).epsilon(1e-10));
}

TEST_CASE("extrapolation is linear beyond the knot range") {
    std::vector<Knot> knots;
    for (double t : {0.0, 3.0, 7.0, 12.0, 18.0}) {
        std::array<double, 8> p{};
        p[4] = std::sin(0.4 * t);
        knots.push_back(make_knot(t, p));
    }
    const Trajectory traj = Trajectory::fit(knots);
    // three extrapolated samples must be collinear
    const double a = traj.eval(20.0).p[4];
    const double b = traj.eval(22.0).p[4];
    const double c = traj.eval(24.0).p[4];
    CHECK(b - a == doctest::Approx(c - b).epsilon(1e-10));
    const double a2 = traj.eval(-2.0).p[4];
    const double b2 = traj.eval(-4.0).p[4];
    const double c2 = traj.eval(-6.0).p[4];
    CHECK(b2 - a2 == doctest::Approx(c2 - b2).epsilon(1e-10));
}

TEST_CASE("duplicate knot times are rejected, order does not matter") {
    CHECK_THROWS_AS(
        Trajectory::fit({translation_knot(5, 1), translation_knot(5, 2), translation_knot(9, 3)}),
        Error);

    std::vector<Knot> knots{translation_knot(0, 0), translation_knot(10, 4),
                            translation_knot(4, 1), translation_knot(7, 3)};
    const Trajectory sorted_fit = Trajectory::fit(knots);
    std::reverse(knots.begin(), knots.end());
    const Trajectory reversed_fit = Trajectory::fit(knots);
    for (double t : {1.0, 4.0, 6.3, 9.9})
        CHECK(sorted_fit.eval(t).p[4] == doctest::Approx(reversed_fit.eval(t).p[4]).epsilon(1e-14));
}

TEST_CASE("relative_warp maps between frame coordinates") {
    std::vector<Knot> knots;
    for (double t : {0.0, 10.0, 20.0, 30.0}) knots.push_back(translation_knot(t, t));
    const Trajectory traj = Trajectory::fit(knots);

    const Homography self = traj.relative_warp(13.0, 13.0);
    for (int i = 0; i < 9; ++i) CHECK(self.m[i] == Homography::identity().m[i]);

    const Homography rel = traj.relative_warp(10.0, 13.0);
    const Vec2 p = rel.apply({0.0, 0.0});
    CHECK(p.x == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(p.y == doctest::Approx(0.0));
}

TEST_CASE("relative warps telescope") {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> uni(-0.05, 0.05);
    std::vector<Knot> knots;
    for (double t : {0.0, 8.0, 17.0, 25.0, 40.0}) {
        std::array<double, 8> p;
        for (double& v : p) v = uni(gen);
        p[4] *= 100.0;
        p[5] *= 100.0;
        knots.push_back(make_knot(t, p));
    }
    const Trajectory traj = Trajectory::fit(knots);
    std::uniform_real_distribution<double> pick(0.0, 40.0);
    for (int i = 0; i < 30; ++i) {
        const double a = pick(gen), b = pick(gen), c = pick(gen);
        const Homography left = compose(traj.relative_warp(a, b), traj.relative_warp(b, c));
        const Homography right = traj.relative_warp(a, c);
        for (int k = 0; k < 9; ++k) CHECK(std::abs(left.m[k] - right.m[k]) < 1e-9);
    }
}

TEST_CASE("CSV round trip preserves knots") {
    std::mt19937_64 gen(41);
    std::uniform_real_distribution<double> uni(-0.1, 0.1);
    std::vector<Knot> knots;
    for (double t : {0.0, 97.5, 210.0}) {
        std::array<double, 8> p;
        for (double& v : p) v = uni(gen);
        knots.push_back(make_knot(t, p));
    }
    const Trajectory traj = Trajectory::fit(knots);
    std::ostringstream out;
    traj.to_csv(out);
    CHECK(out.str().substr(0, 26) == "t,p1,p2,p3,p4,p5,p6,p7,p8\n");

    std::istringstream in(out.str());
    const Trajectory back = Trajectory::from_csv(in);
    REQUIRE(back.knots().size() == knots.size());
    for (size_t i = 0; i < knots.size(); ++i) {
        CHECK(back.knots()[i].t == knots[i].t);
        for (int k = 0; k < 8; ++k) CHECK(back.knots()[i].params.p[k] == knots[i].params.p[k]);
    }

    std::istringstream bad("x,y\n");
    CHECK_THROWS_AS(Trajectory::from_csv(bad), Error);
}

}  // TEST_SUITE
