// Python bindings for the core operators: trajectory initializers, the
// kinematic projection, the non-uniform Fourier pair with coordinate
// gradients, phantom generation and the image metrics.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ktraj/config.hpp"
#include "ktraj/data.hpp"
#include "ktraj/kinematics.hpp"
#include "ktraj/metrics.hpp"
#include "ktraj/nufft.hpp"
#include "ktraj/trajectory.hpp"

namespace py = pybind11;
using namespace ktraj;

namespace {

py::array_t<double> traj_to_array(const TrajectorySet& traj) {
  py::array_t<double> out({traj.n_frames(), traj.n_shots(), traj.m(), 2});
  std::memcpy(out.mutable_data(), traj.coords().data(),
              traj.coords().size() * sizeof(double));
  return out;
}

TrajectorySet traj_from_array(const py::array_t<double, py::array::c_style |
                                                            py::array::forcecast>& arr) {
  if (arr.ndim() != 4 || arr.shape(3) != 2)
    throw ArgumentError("trajectory array must have shape [frames][shots][m][2]");
  TrajectorySet traj(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)),
                     static_cast<int>(arr.shape(2)));
  std::memcpy(traj.coords().data(), arr.data(), traj.coords().size() * sizeof(double));
  return traj;
}

ComplexImage image_from_array(
    const py::array_t<cplx, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw ArgumentError("image must be a 2D complex array");
  ComplexImage img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
  std::memcpy(img.v.data(), arr.data(), img.v.size() * sizeof(cplx));
  return img;
}

RealImage real_from_array(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw ArgumentError("image must be a 2D real array");
  RealImage img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
  std::memcpy(img.v.data(), arr.data(), img.v.size() * sizeof(double));
  return img;
}

// coords: [shots][m][2]
struct CoordsHolder {
  std::vector<double> xy;
  int n_shots, m;
  FrameCoords view() const { return FrameCoords{xy.data(), n_shots, m}; }
};

CoordsHolder coords_from_array(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 3 || arr.shape(2) != 2)
    throw ArgumentError("coords array must have shape [shots][m][2]");
  CoordsHolder holder;
  holder.n_shots = static_cast<int>(arr.shape(0));
  holder.m = static_cast<int>(arr.shape(1));
  holder.xy.resize(static_cast<std::size_t>(holder.n_shots) * holder.m * 2);
  std::memcpy(holder.xy.data(), arr.data(), holder.xy.size() * sizeof(double));
  return holder;
}

KSamples samples_from_array(
    const py::array_t<cplx, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw ArgumentError("samples array must have shape [shots][m]");
  KSamples s;
  s.n_shots = static_cast<int>(arr.shape(0));
  s.m = static_cast<int>(arr.shape(1));
  s.values.resize(static_cast<std::size_t>(s.n_shots) * s.m);
  std::memcpy(s.values.data(), arr.data(), s.values.size() * sizeof(cplx));
  return s;
}

py::array_t<cplx> samples_to_array(const KSamples& s) {
  py::array_t<cplx> out({s.n_shots, s.m});
  std::memcpy(out.mutable_data(), s.values.data(), s.values.size() * sizeof(cplx));
  return out;
}

py::array_t<cplx> image_to_array(const ComplexImage& img) {
  py::array_t<cplx> out({img.h, img.w});
  std::memcpy(out.mutable_data(), img.v.data(), img.v.size() * sizeof(cplx));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "learned per-frame k-space trajectories: core operators";

  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<KinematicLimits>(m, "KinematicLimits")
      .def(py::init<>())
      .def_readwrite("g_max", &KinematicLimits::g_max)
      .def_readwrite("s_max", &KinematicLimits::s_max)
      .def_readwrite("dt", &KinematicLimits::dt)
      .def_readwrite("gamma", &KinematicLimits::gamma)
      .def_readwrite("fov", &KinematicLimits::fov)
      .def("v_max", &KinematicLimits::v_max)
      .def("a_max", &KinematicLimits::a_max);

  py::class_<GriddingKernel>(m, "GriddingKernel")
      .def(py::init<>())
      .def_readwrite("width", &GriddingKernel::width)
      .def_readwrite("oversampling", &GriddingKernel::oversampling)
      .def("beta", &GriddingKernel::beta);

  m.def("init_radial",
        [](int n_frames, int n_shots, int samples, double k_extent) {
          return traj_to_array(init_radial(n_frames, n_shots, samples, k_extent));
        },
        py::arg("n_frames"), py::arg("n_shots"), py::arg("m"), py::arg("k_extent") = 0.5);
  m.def("init_golden_angle",
        [](int n_frames, int n_shots, int samples, double k_extent) {
          return traj_to_array(init_golden_angle(n_frames, n_shots, samples, k_extent));
        },
        py::arg("n_frames"), py::arg("n_shots"), py::arg("m"), py::arg("k_extent") = 0.5);
  m.def("save_trajectory",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& arr,
           const std::string& path) { save_trajectory(traj_from_array(arr), path); });
  m.def("load_trajectory",
        [](const std::string& path) { return traj_to_array(load_trajectory(path)); });

  m.def("difference_bounds",
        [](const KinematicLimits& limits) { return difference_bounds(limits); });
  m.def("audit",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& arr,
           const KinematicLimits& limits, double tol) {
          const auto report = audit(traj_from_array(arr), limits, tol);
          py::dict d;
          d["feasible"] = report.feasible;
          d["max_speed_violation"] = report.max_speed_violation;
          d["max_accel_violation"] = report.max_accel_violation;
          return d;
        },
        py::arg("traj"), py::arg("limits"), py::arg("tol") = 1e-9);
  m.def("project_feasible",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& arr,
           const KinematicLimits& limits, int iters) {
          return traj_to_array(project_feasible(traj_from_array(arr), limits, iters));
        },
        py::arg("traj"), py::arg("limits"), py::arg("iters") = 200);

  m.def("forward_direct",
        [](const py::array_t<cplx, py::array::c_style | py::array::forcecast>& img,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& coords) {
          const auto holder = coords_from_array(coords);
          return samples_to_array(forward_direct(image_from_array(img), holder.view()));
        });
  m.def("forward_fast",
        [](const py::array_t<cplx, py::array::c_style | py::array::forcecast>& img,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& coords,
           const GriddingKernel& kernel) {
          const auto holder = coords_from_array(coords);
          return samples_to_array(forward_fast(image_from_array(img), holder.view(), kernel));
        },
        py::arg("image"), py::arg("coords"), py::arg("kernel") = GriddingKernel{});
  m.def("adjoint_direct",
        [](const py::array_t<cplx, py::array::c_style | py::array::forcecast>& samples,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& coords,
           int h, int w) {
          const auto holder = coords_from_array(coords);
          return image_to_array(adjoint_direct(samples_from_array(samples), holder.view(), h, w));
        });
  m.def("adjoint_fast",
        [](const py::array_t<cplx, py::array::c_style | py::array::forcecast>& samples,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& coords,
           int h, int w, const GriddingKernel& kernel) {
          const auto holder = coords_from_array(coords);
          return image_to_array(
              adjoint_fast(samples_from_array(samples), holder.view(), h, w, kernel));
        },
        py::arg("samples"), py::arg("coords"), py::arg("h"), py::arg("w"),
        py::arg("kernel") = GriddingKernel{});
  m.def("grad_wrt_coords",
        [](const py::array_t<cplx, py::array::c_style | py::array::forcecast>& img,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& coords,
           const py::array_t<cplx, py::array::c_style | py::array::forcecast>& upstream) {
          const auto holder = coords_from_array(coords);
          const auto grad = grad_wrt_coords_direct(image_from_array(img), holder.view(),
                                                   samples_from_array(upstream));
          py::array_t<double> out({holder.n_shots, holder.m, 2});
          std::memcpy(out.mutable_data(), grad.data(), grad.size() * sizeof(double));
          return out;
        });

  m.def("psnr",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& ref,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& test,
           double data_range) {
          return psnr(real_from_array(ref), real_from_array(test), data_range);
        },
        py::arg("ref"), py::arg("test"), py::arg("data_range") = 1.0);
  m.def("vif", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& ref,
                  const py::array_t<double, py::array::c_style | py::array::forcecast>& test) {
    return vif(real_from_array(ref), real_from_array(test));
  });
  m.def("fsim", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& ref,
                   const py::array_t<double, py::array::c_style | py::array::forcecast>& test) {
    return fsim(real_from_array(ref), real_from_array(test));
  });

  m.def("generate_phantom",
        [](int h, int w, int n_frames, std::uint64_t seed) {
          const auto seq = generate_phantom(default_phantom_spec(h, w, n_frames), seed);
          py::array_t<std::complex<float>> out({seq.n_frames, seq.h, seq.w});
          std::memcpy(out.mutable_data(), seq.frames.data(),
                      seq.frames.size() * sizeof(std::complex<float>));
          return out;
        },
        py::arg("h") = 64, py::arg("w") = 64, py::arg("n_frames") = 8, py::arg("seed") = 0);

  m.attr("__version__") = "0.1.0";
}
