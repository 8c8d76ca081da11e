#include "photonpano/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "photonpano/registration.hpp"

namespace photonpano {

std::vector<std::pair<std::string, std::string>> Metrics::to_entries() const {
    std::vector<std::pair<std::string, std::string>> kv;
    auto num = [](double v) {
        std::ostringstream s;
        s.precision(17);
        s << v;
        return s.str();
    };
    if (corner_rmse_px >= 0.0) kv.emplace_back("corner_rmse_px", num(corner_rmse_px));
    if (psnr_db >= 0.0) kv.emplace_back("psnr_db", num(psnr_db));
    if (coverage_fraction >= 0.0) kv.emplace_back("coverage_fraction", num(coverage_fraction));
    if (!registrations_per_iteration.empty()) {
        std::ostringstream s;
        for (size_t i = 0; i < registrations_per_iteration.size(); ++i) {
            if (i) s << ",";
            s << registrations_per_iteration[i];
        }
        kv.emplace_back("registrations_per_iteration", s.str());
    }
    if (iterations > 0) kv.emplace_back("iterations", std::to_string(iterations));
    kv.emplace_back("converged", converged ? "1" : "0");
    if (wall_time_s >= 0.0) kv.emplace_back("wall_time_s", num(wall_time_s));
    return kv;
}

double trajectory_corner_rmse(const Trajectory& a, const Trajectory& b, int fov_width,
                              int fov_height) {
    const double first = std::max(a.knots().front().t, b.knots().front().t);
    const double last = std::min(a.knots().back().t, b.knots().back().t);
    if (!(first <= last))
        raise(ErrorKind::evaluation, "trajectories cover disjoint time ranges");

    const Trajectory aa = a.re_anchored(first);
    const Trajectory bb = b.re_anchored(first);

    std::set<double> times;
    for (const Knot& k : a.knots())
        if (k.t >= first && k.t <= last) times.insert(k.t);
    for (const Knot& k : b.knots())
        if (k.t >= first && k.t <= last) times.insert(k.t);
    if (times.empty()) raise(ErrorKind::evaluation, "no knot times in the common range");

    double sum_sq = 0.0;
    for (double t : times) {
        const double cd = corner_displacement(aa.eval(t), bb.eval(t), fov_width, fov_height);
        sum_sq += cd * cd;
    }
    return std::sqrt(sum_sq / static_cast<double>(times.size()));
}

double psnr_over_coverage(const LinearImage& recon, const Image& reference, double peak,
                          double* coverage_out) {
    if (recon.width != reference.width || recon.height != reference.height)
        raise(ErrorKind::evaluation, "psnr: image dimensions differ");
    if (!(peak > 0.0)) raise(ErrorKind::argument, "psnr: peak must be positive");

    double err_sq = 0.0;
    size_t covered = 0;
    for (size_t i = 0; i < recon.size(); ++i) {
        if (recon.weights[i] <= 0.0) continue;
        const double d = recon.values[i] - reference.pixels[i];
        err_sq += d * d;
        ++covered;
    }
    if (coverage_out)
        *coverage_out = reference.pixels.empty()
                            ? 0.0
                            : static_cast<double>(covered) / static_cast<double>(reference.pixels.size());
    if (covered == 0) raise(ErrorKind::evaluation, "psnr: no covered pixels");
    const double mse = err_sq / static_cast<double>(covered);
    if (mse <= 0.0) return 99.0;
    return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace photonpano
