#include "photonpano/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace photonpano {

Spline1D::Spline1D(std::vector<double> t, std::vector<double> y)
    : t_(std::move(t)), y_(std::move(y)) {
    const size_t k = t_.size();
    if (k < 2 || y_.size() != k) raise(ErrorKind::argument, "spline needs >= 2 samples");

    if (k == 3) {
        // exact quadratic through the three points (divided differences)
        const double d01 = (y_[1] - y_[0]) / (t_[1] - t_[0]);
        const double d12 = (y_[2] - y_[1]) / (t_[2] - t_[1]);
        const double c2 = (d12 - d01) / (t_[2] - t_[0]);
        quad_[2] = c2;
        quad_[1] = d01 - c2 * (t_[0] + t_[1]);
        quad_[0] = y_[0] - quad_[1] * t_[0] - c2 * t_[0] * t_[0];
        return;
    }
    if (k == 2) return;

    // natural cubic spline: tridiagonal solve for interior second derivatives
    m_.assign(k, 0.0);
    std::vector<double> diag(k, 0.0), rhs(k, 0.0), upper(k, 0.0);
    for (size_t i = 1; i + 1 < k; ++i) {
        const double h0 = t_[i] - t_[i - 1];
        const double h1 = t_[i + 1] - t_[i];
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    // forward sweep (lower diagonal of row i is h0 = t_i - t_{i-1})
    for (size_t i = 2; i + 1 < k; ++i) {
        const double lower = t_[i] - t_[i - 1];
        const double f = lower / diag[i - 1];
        diag[i] -= f * upper[i - 1];
        rhs[i] -= f * rhs[i - 1];
    }
    for (size_t i = k - 2; i >= 1; --i) {
        m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
        if (i == 1) break;
    }
}

double Spline1D::eval(double x) const {
    const size_t k = t_.size();

    if (k == 2) {
        const double slope = (y_[1] - y_[0]) / (t_[1] - t_[0]);
        return y_[0] + slope * (x - t_[0]);
    }
    if (k == 3) {
        if (x < t_.front()) {
            const double d = quad_[1] + 2.0 * quad_[2] * t_.front();
            return y_.front() + d * (x - t_.front());
        }
        if (x > t_.back()) {
            const double d = quad_[1] + 2.0 * quad_[2] * t_.back();
            return y_.back() + d * (x - t_.back());
        }
        return quad_[0] + quad_[1] * x + quad_[2] * x * x;
    }

    if (x <= t_.front()) {
        const double h = t_[1] - t_[0];
        const double d = (y_[1] - y_[0]) / h - h * (2.0 * m_[0] + m_[1]) / 6.0;
        return y_.front() + d * (x - t_.front());
    }
    if (x >= t_.back()) {
        const double h = t_[k - 1] - t_[k - 2];
        const double d = (y_[k - 1] - y_[k - 2]) / h + h * (2.0 * m_[k - 1] + m_[k - 2]) / 6.0;
        return y_.back() + d * (x - t_.back());
    }

    size_t hi = static_cast<size_t>(std::upper_bound(t_.begin(), t_.end(), x) - t_.begin());
    if (hi == 0) hi = 1;
    if (hi >= k) hi = k - 1;
    const size_t lo = hi - 1;
    const double h = t_[hi] - t_[lo];
    const double a = (t_[hi] - x) / h;
    const double b = (x - t_[lo]) / h;
    return a * y_[lo] + b * y_[hi] +
           ((a * a * a - a) * m_[lo] + (b * b * b - b) * m_[hi]) * h * h / 6.0;
}

Trajectory Trajectory::fit(std::vector<Knot> knots) {
    if (knots.size() < 2) raise(ErrorKind::argument, "trajectory fit needs >= 2 knots");
    std::sort(knots.begin(), knots.end(), [](const Knot& a, const Knot& b) { return a.t < b.t; });
    for (size_t i = 1; i < knots.size(); ++i)
        if (!(knots[i].t > knots[i - 1].t))
            raise(ErrorKind::argument, "trajectory fit: duplicate knot time");

    Trajectory traj;
    traj.knots_ = std::move(knots);
    std::vector<double> t(traj.knots_.size());
    for (size_t i = 0; i < traj.knots_.size(); ++i) t[i] = traj.knots_[i].t;
    traj.splines_.reserve(8);
    for (int p = 0; p < 8; ++p) {
        std::vector<double> y(traj.knots_.size());
        for (size_t i = 0; i < traj.knots_.size(); ++i) y[i] = traj.knots_[i].params.p[static_cast<size_t>(p)];
        traj.splines_.emplace_back(t, std::move(y));
    }
    return traj;
}

Trajectory Trajectory::identity(double t_first, double t_last) {
    if (!(t_last > t_first)) t_last = t_first + 1.0;
    return fit({Knot{t_first, WarpParams{}, 0.0}, Knot{t_last, WarpParams{}, 0.0}});
}

WarpParams Trajectory::eval(double t) const {
    if (splines_.empty()) raise(ErrorKind::argument, "trajectory is not fitted");
    WarpParams w;
    for (int p = 0; p < 8; ++p) w.p[static_cast<size_t>(p)] = splines_[static_cast<size_t>(p)].eval(t);
    return w;
}

Homography Trajectory::warp_at(double t) const { return from_params(eval(t)); }

Homography Trajectory::relative_warp(double t_ref, double t) const {
    if (t_ref == t) return Homography::identity();
    return compose(invert(warp_at(t_ref)), warp_at(t));
}

Trajectory Trajectory::re_anchored(double t0) const {
    const Homography gauge = invert(warp_at(t0));
    std::vector<Knot> knots = knots_;
    for (Knot& k : knots) k.params = to_params(compose(gauge, from_params(k.params)));
    return fit(std::move(knots));
}

void Trajectory::to_csv(std::ostream& out) const {
    out << "t,p1,p2,p3,p4,p5,p6,p7,p8\n";
    out << std::setprecision(17);
    for (const Knot& k : knots_) {
        out << k.t;
        for (double v : k.params.p) out << ',' << v;
        out << '\n';
    }
}

void Trajectory::to_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) raise(ErrorKind::io, "cannot write " + path.string());
    to_csv(out);
}

Trajectory Trajectory::from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) raise(ErrorKind::format, "empty trajectory CSV");
    if (line.ends_with('\r')) line.pop_back();
    if (line != "t,p1,p2,p3,p4,p5,p6,p7,p8")
        raise(ErrorKind::format, "trajectory CSV: unexpected header '" + line + "'");

    std::vector<Knot> knots;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.ends_with('\r')) line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        double fields[9];
        for (int i = 0; i < 9; ++i) {
            if (!std::getline(row, cell, ','))
                raise(ErrorKind::format,
                      "trajectory CSV line " + std::to_string(line_no) + ": expected 9 fields");
            try {
                fields[i] = std::stod(cell);
            } catch (...) {
                raise(ErrorKind::format, "trajectory CSV line " + std::to_string(line_no) +
                                             ": bad number '" + cell + "'");
            }
        }
        Knot k;
        k.t = fields[0];
        for (int i = 0; i < 8; ++i) k.params.p[static_cast<size_t>(i)] = fields[i + 1];
        knots.push_back(k);
    }
    return fit(std::move(knots));
}

Trajectory Trajectory::from_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::io, "cannot open " + path.string());
    return from_csv(in);
}

}  // namespace photonpano
