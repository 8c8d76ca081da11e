#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "photonpano/color.hpp"
#include "photonpano/metrics.hpp"
#include "photonpano/parallel.hpp"
#include "photonpano/photon_cube.hpp"
#include "photonpano/pipeline.hpp"
#include "photonpano/registration.hpp"
#include "photonpano/render.hpp"
#include "photonpano/simulator.hpp"

namespace py = pybind11;
using namespace photonpano;

namespace {

Image image_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw py::value_error("expected a 2-D array");
    Image img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
    std::memcpy(img.pixels.data(), arr.data(), sizeof(double) * img.pixels.size());
    return img;
}

py::array_t<double> array_from_image(const Image& img) {
    py::array_t<double> arr({img.height, img.width});
    std::memcpy(arr.mutable_data(), img.pixels.data(), sizeof(double) * img.pixels.size());
    return arr;
}

py::array_t<double> array_from_vector(const std::vector<double>& v, int height, int width) {
    py::array_t<double> arr({height, width});
    std::memcpy(arr.mutable_data(), v.data(), sizeof(double) * v.size());
    return arr;
}

WarpParams params_from_seq(const std::array<double, 8>& p) {
    WarpParams w;
    w.p = p;
    return w;
}

std::array<double, 9> matrix_from_array(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2 || arr.shape(0) != 3 || arr.shape(1) != 3)
        throw py::value_error("expected a 3x3 matrix");
    std::array<double, 9> m;
    std::memcpy(m.data(), arr.data(), sizeof(double) * 9);
    return m;
}

py::array_t<double> array_from_matrix(const Homography& h) {
    py::array_t<double> arr({3, 3});
    std::memcpy(arr.mutable_data(), h.m.data(), sizeof(double) * 9);
    return arr;
}

LinearImage linear_from_arrays(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& values,
    const py::array_t<double, py::array::c_style | py::array::forcecast>& weights) {
    if (values.ndim() != 2 || weights.ndim() != 2 || values.shape(0) != weights.shape(0) ||
        values.shape(1) != weights.shape(1))
        throw py::value_error("values and weights must be matching 2-D arrays");
    LinearImage img(static_cast<int>(values.shape(1)), static_cast<int>(values.shape(0)));
    std::memcpy(img.values.data(), values.data(), sizeof(double) * img.size());
    std::memcpy(img.weights.data(), weights.data(), sizeof(double) * img.size());
    return img;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Panoramas and motion trajectories from single-photon binary frame streams";

    py::register_exception<Error>(m, "PhotonPanoError");

    py::class_<PhotonCube>(m, "PhotonCube")
        .def(py::init<int, int, int64_t, double>(), py::arg("width"), py::arg("height"),
             py::arg("num_frames"), py::arg("tau"))
        .def_property_readonly("width", &PhotonCube::width)
        .def_property_readonly("height", &PhotonCube::height)
        .def_property_readonly("num_frames", &PhotonCube::num_frames)
        .def_property_readonly("tau", &PhotonCube::tau)
        .def("frame", [](const PhotonCube& c, int64_t i) { return array_from_image(c.decode_frame(i)); })
        .def("set_pixel", &PhotonCube::set_pixel)
        .def("pixel", &PhotonCube::pixel)
        .def_static("from_frames",
                    [](const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& frames,
                       double tau) {
                        if (frames.ndim() != 3) throw py::value_error("expected frames[n, h, w]");
                        PhotonCube cube(static_cast<int>(frames.shape(2)),
                                        static_cast<int>(frames.shape(1)), frames.shape(0), tau);
                        auto r = frames.unchecked<3>();
                        for (py::ssize_t f = 0; f < frames.shape(0); ++f)
                            for (py::ssize_t y = 0; y < frames.shape(1); ++y)
                                for (py::ssize_t x = 0; x < frames.shape(2); ++x)
                                    if (r(f, y, x)) cube.set_pixel(f, static_cast<int>(x), static_cast<int>(y), true);
                        return cube;
                    },
                    py::arg("frames"), py::arg("tau"))
        .def("save", [](const PhotonCube& c, const std::filesystem::path& p) { write_pcube(c, p); })
        .def_static("load", [](const std::filesystem::path& p) { return read_pcube(p); });

    py::class_<LinearImage>(m, "LinearImage")
        .def(py::init(&linear_from_arrays), py::arg("values"), py::arg("weights"))
        .def_property_readonly("width", [](const LinearImage& i) { return i.width; })
        .def_property_readonly("height", [](const LinearImage& i) { return i.height; })
        .def_property_readonly("values",
                               [](const LinearImage& i) { return array_from_vector(i.values, i.height, i.width); })
        .def_property_readonly("weights",
                               [](const LinearImage& i) { return array_from_vector(i.weights, i.height, i.width); })
        .def_property_readonly("saturated",
                               [](const LinearImage& i) {
                                   py::array_t<uint8_t> arr({i.height, i.width});
                                   std::memcpy(arr.mutable_data(), i.saturated.data(), i.size());
                                   return arr;
                               })
        .def("valid_fraction", &LinearImage::valid_fraction);

    m.def("mean_frame",
          [](const PhotonCube& cube, const std::vector<int64_t>& indices) {
              return array_from_image(mean_frame(cube, indices));
          },
          py::arg("cube"), py::arg("indices"));

    m.def("mle_flux",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& mean,
             double tau, double n) { return mle_flux(image_from_array(mean), tau, n); },
          py::arg("mean"), py::arg("tau"), py::arg("n"));

    // warp algebra on 8-parameter vectors and 3x3 matrices
    m.def("from_params",
          [](const std::array<double, 8>& p) { return array_from_matrix(from_params(params_from_seq(p))); });
    m.def("to_params",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& h) {
              return to_params(Homography::from_matrix(matrix_from_array(h))).p;
          });
    m.def("compose",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
              return array_from_matrix(compose(Homography::from_matrix(matrix_from_array(a)),
                                               Homography::from_matrix(matrix_from_array(b))));
          });
    m.def("invert",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
              return array_from_matrix(invert(Homography::from_matrix(matrix_from_array(a))));
          });
    m.def("scale_warp",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a, double s) {
              return array_from_matrix(scale_warp(Homography::from_matrix(matrix_from_array(a)), s));
          });
    m.def("apply_warp",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& image,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& h, int out_width,
             int out_height, double offset_x, double offset_y) {
              const WarpedImage out =
                  apply_warp(image_from_array(image), Homography::from_matrix(matrix_from_array(h)),
                             out_width, out_height, Vec2{offset_x, offset_y});
              return py::make_tuple(array_from_image(out.values), array_from_image(out.weights));
          },
          py::arg("image"), py::arg("warp"), py::arg("out_width"), py::arg("out_height"),
          py::arg("offset_x") = 0.0, py::arg("offset_y") = 0.0);
    m.def("corner_displacement",
          [](const std::array<double, 8>& a, const std::array<double, 8>& b, int w, int h) {
              return corner_displacement(params_from_seq(a), params_from_seq(b), w, h);
          });

    py::class_<Trajectory>(m, "Trajectory")
        .def_static("fit",
                    [](const std::vector<std::pair<double, std::array<double, 8>>>& knots) {
                        std::vector<Knot> ks;
                        for (const auto& [t, p] : knots) ks.push_back(Knot{t, params_from_seq(p), 0.0});
                        return Trajectory::fit(std::move(ks));
                    })
        .def_static("identity", &Trajectory::identity)
        .def("eval", [](const Trajectory& t, double x) { return t.eval(x).p; })
        .def("warp_at", [](const Trajectory& t, double x) { return array_from_matrix(t.warp_at(x)); })
        .def("relative_warp",
             [](const Trajectory& t, double t_ref, double x) {
                 return array_from_matrix(t.relative_warp(t_ref, x));
             })
        .def("re_anchored", &Trajectory::re_anchored)
        .def_property_readonly("knots",
                               [](const Trajectory& t) {
                                   std::vector<std::pair<double, std::array<double, 8>>> out;
                                   for (const Knot& k : t.knots()) out.emplace_back(k.t, k.params.p);
                                   return out;
                               })
        .def("to_csv", py::overload_cast<const std::filesystem::path&>(&Trajectory::to_csv, py::const_))
        .def_static("from_csv",
                    py::overload_cast<const std::filesystem::path&>(&Trajectory::from_csv));

    py::class_<RegisterOptions>(m, "RegisterOptions")
        .def(py::init<>())
        .def_readwrite("pyramid_levels", &RegisterOptions::pyramid_levels)
        .def_readwrite("max_iterations", &RegisterOptions::max_iterations)
        .def_readwrite("tolerance", &RegisterOptions::tolerance);

    m.def("register_images",
          [](const LinearImage& moving, const LinearImage& fixed, const std::array<double, 8>& init,
             const RegisterOptions& opts) {
              const RegistrationResult r = register_images(moving, fixed, params_from_seq(init), opts);
              py::dict d;
              d["warp"] = r.warp.p;
              d["residual"] = r.residual;
              d["converged"] = r.converged;
              d["iterations_used"] = r.iterations_used;
              return d;
          },
          py::arg("moving"), py::arg("fixed"),
          py::arg("init") = std::array<double, 8>{}, py::arg("opts") = RegisterOptions{});

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("panorama_path", &SimConfig::panorama_path)
        .def_readwrite("fov_width", &SimConfig::fov_width)
        .def_readwrite("fov_height", &SimConfig::fov_height)
        .def_readwrite("num_frames", &SimConfig::num_frames)
        .def_readwrite("tau", &SimConfig::tau)
        .def_readwrite("flux_at_white", &SimConfig::flux_at_white)
        .def_readwrite("seed", &SimConfig::seed)
        .def_readwrite("read_noise_sigma", &SimConfig::read_noise_sigma)
        .def_readwrite("rgb_exposure_frames", &SimConfig::rgb_exposure_frames)
        .def("set_control_points",
             [](SimConfig& cfg, const std::string& kind,
                const std::vector<std::pair<double, std::array<double, 8>>>& pts) {
                 cfg.trajectory.kind = kind == "spline_path" ? TrajectorySpec::Kind::spline_path
                                                             : TrajectorySpec::Kind::linear_pan;
                 cfg.trajectory.control_points.clear();
                 for (const auto& [t, p] : pts)
                     cfg.trajectory.control_points.push_back(Knot{t, params_from_seq(p), 0.0});
             })
        .def_static("from_file", &SimConfig::from_file);

    m.def("simulate_sequence",
          [](const SimConfig& cfg,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& scene) {
              auto [cube, truth] = simulate_sequence(cfg, image_from_array(scene));
              return py::make_tuple(std::move(cube), std::move(truth));
          },
          py::arg("cfg"), py::arg("scene"));
    m.def("simulate_rgb",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& scene,
             const Trajectory& traj, int64_t window_start, int64_t window_length,
             const SimConfig& cfg) {
              return simulate_rgb(image_from_array(scene), traj, window_start, window_length, cfg);
          });
    m.def("srgb_to_linear", [](double c) { return srgb_to_linear(c); });
    m.def("linear_to_srgb", [](double l) { return linear_to_srgb(l); });
    m.def("load_panorama",
          [](const std::filesystem::path& p) { return array_from_image(load_panorama(p)); });

    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def(py::init<>())
        .def_readwrite("group_size", &PipelineConfig::group_size)
        .def_readwrite("max_iterations", &PipelineConfig::max_iterations)
        .def_readwrite("convergence_epsilon", &PipelineConfig::convergence_epsilon)
        .def_readwrite("scale_schedule", &PipelineConfig::scale_schedule)
        .def_readwrite("add_boundary_groups", &PipelineConfig::add_boundary_groups);

    m.def("run_pipeline",
          [](const PhotonCube& cube, const PipelineConfig& cfg) {
              auto [traj, diag] = run(cube, cfg);
              py::dict d;
              d["converged"] = diag.converged;
              d["warning"] = diag.warning;
              py::list iters;
              for (const auto& it : diag.iterations) {
                  py::dict i;
                  i["iteration"] = it.iteration;
                  i["registrations"] = it.registrations;
                  i["max_knot_shift"] = it.max_knot_shift;
                  iters.append(i);
              }
              d["iterations"] = iters;
              return py::make_tuple(std::move(traj), d);
          },
          py::arg("cube"), py::arg("cfg") = PipelineConfig{});

    py::class_<PanoramaCanvas>(m, "PanoramaCanvas")
        .def_property_readonly("width", [](const PanoramaCanvas& c) { return c.width; })
        .def_property_readonly("height", [](const PanoramaCanvas& c) { return c.height; })
        .def_property_readonly("origin",
                               [](const PanoramaCanvas& c) {
                                   return py::make_tuple(c.origin_offset.x, c.origin_offset.y);
                               })
        .def_property_readonly("scale", [](const PanoramaCanvas& c) { return c.scale; })
        .def_property_readonly("sum", [](const PanoramaCanvas& c) { return array_from_image(c.sum); })
        .def_property_readonly("weight",
                               [](const PanoramaCanvas& c) { return array_from_image(c.weight); });

    m.def("assemble",
          [](const PhotonCube& cube, const Trajectory& traj, double scale, int64_t stride) {
              AssembleConfig cfg;
              cfg.scale = scale;
              cfg.frame_stride = stride;
              return assemble(cube, traj, cfg);
          },
          py::arg("cube"), py::arg("trajectory"), py::arg("scale") = 1.0, py::arg("stride") = 1);
    m.def("resolve_flux", &resolve_flux, py::arg("canvas"), py::arg("tau"),
          py::arg("weight_min") = 8.0);
    m.def("tonemap",
          [](const LinearImage& img, double exposure) {
              const Tonemapped tm = tonemap(img, exposure);
              py::array_t<uint8_t> image({tm.image.height, tm.image.width});
              std::memcpy(image.mutable_data(), tm.image.pixels.data(), tm.image.pixels.size());
              py::array_t<uint8_t> validity({tm.validity.height, tm.validity.width});
              std::memcpy(validity.mutable_data(), tm.validity.pixels.data(),
                          tm.validity.pixels.size());
              return py::make_tuple(image, validity);
          },
          py::arg("image"), py::arg("exposure"));
    m.def("default_exposure", &default_exposure);

    m.def("trajectory_corner_rmse", &trajectory_corner_rmse, py::arg("a"), py::arg("b"),
          py::arg("fov_width"), py::arg("fov_height"));
    m.def("set_workers", &parallel::set_workers);
}
