#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "photonpano/warp.hpp"

namespace photonpano {

// Time-indexed warp sample. t is a (real-valued) binary-frame index;
// confidence carries the registration residual that produced the knot.
struct Knot {
    double t = 0.0;
    WarpParams params;
    double confidence = 0.0;
};

// Per-parameter 1D interpolant: natural cubic spline for >= 4 knots,
// degrading to the exact quadratic/line for 3/2 knots. Evaluation outside
// the knot range extrapolates linearly from the boundary derivative.
class Spline1D {
public:
    Spline1D() = default;
    Spline1D(std::vector<double> t, std::vector<double> y);

    double eval(double x) const;

private:
    std::vector<double> t_;
    std::vector<double> y_;
    std::vector<double> m_;  // second derivatives (natural ends), cubic case only
    double quad_[3] = {0, 0, 0};  // c0 + c1*x + c2*x^2 for the 3-knot case
};

// Warp knots plus cubic interpolation of the eight warp parameters down to
// individual binary-frame granularity. Immutable once fitted.
class Trajectory {
public:
    Trajectory() = default;

    // Sorts knots by t; duplicate times are an argument error. Needs >= 2
    // knots.
    static Trajectory fit(std::vector<Knot> knots);

    // Identity motion between two anchor times.
    static Trajectory identity(double t_first, double t_last);

    const std::vector<Knot>& knots() const { return knots_; }

    WarpParams eval(double t) const;

    // from_params(eval(t)); maps frame-t pixel coordinates to the
    // trajectory's global frame.
    Homography warp_at(double t) const;

    // invert(W(t_ref)) * W(t): maps frame-t pixel coordinates into frame-t_ref
    // coordinates. relative_warp(t, t) is the identity by construction.
    Homography relative_warp(double t_ref, double t) const;

    // Same trajectory with the gauge fixed so eval(t0) is the identity.
    Trajectory re_anchored(double t0) const;

    // CSV: header "t,p1,p2,p3,p4,p5,p6,p7,p8", one row per knot.
    void to_csv(std::ostream& out) const;
    void to_csv(const std::filesystem::path& path) const;
    static Trajectory from_csv(std::istream& in);
    static Trajectory from_csv(const std::filesystem::path& path);

private:
    std::vector<Knot> knots_;
    std::vector<Spline1D> splines_;  // one per warp parameter
};

}  // namespace photonpano
