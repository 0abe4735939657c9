#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "msense/accuracy.hpp"
#include "msense/cloud.hpp"
#include "msense/error.hpp"
#include "msense/geometry.hpp"
#include "msense/io.hpp"
#include "msense/registration.hpp"
#include "msense/rules.hpp"
#include "msense/runner.hpp"
#include "msense/sim.hpp"
#include "msense/tracking.hpp"
#include "msense/zones.hpp"

namespace py = pybind11;
using namespace msense;

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

PointCloud to_cloud(const Points& m) {
  PointCloud c;
  c.points.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) c.points.emplace_back(m(i, 0), m(i, 1), m(i, 2));
  return c;
}

Points to_points(const PointCloud& c) {
  Points m(static_cast<Eigen::Index>(c.size()), 3);
  for (std::size_t i = 0; i < c.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = c.points[i].transpose();
  return m;
}

DepthMap to_depth(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw Error(ErrorCode::kInput, "depth array must be 2-D (height, width)");
  DepthMap d(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), d.values.begin());
  return d;
}

py::array_t<float> from_depth(const DepthMap& d) {
  py::array_t<float> a({d.height, d.width});
  std::copy(d.values.begin(), d.values.end(), a.mutable_data());
  return a;
}

py::dict event_dict(const Event& e) {
  py::dict d;
  d["kind"] = std::string(to_string(e.kind));
  d["t"] = e.timestamp;
  d["track_id"] = e.track_id;
  d["ref_id"] = e.ref_id;
  d["payload"] = e.payload;
  return d;
}

std::vector<py::dict> event_dicts(const std::vector<Event>& ev) {
  std::vector<py::dict> out;
  for (const auto& e : ev) out.push_back(event_dict(e));
  return out;
}

// Runs a CLI subcommand and returns (exit_code, stdout, stderr).
template <typename Fn>
py::tuple run_command(Fn fn, const CliOptions& o) {
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = fn(o, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

CliOptions options(const std::string& config, const std::string& input, const std::string& output,
                   std::optional<std::uint64_t> seed, std::optional<double> duration,
                   std::optional<long> frames) {
  CliOptions o;
  o.config = config;
  o.input = input;
  o.output = output;
  o.seed = seed;
  o.duration = duration;
  o.frames = frames;
  return o;
}

}  // namespace

PYBIND11_MODULE(_msense, m) {
  m.doc() = "Multi-camera depth sensing core";

  static py::handle error_type = py::exception<Error>(m, "Error", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error_type)(e.what());
      inst.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  py::class_<CameraIntrinsics>(m, "Intrinsics")
      .def(py::init([](double fx, double fy, double cx, double cy, int width, int height, double dmin,
                       double dmax) {
             CameraIntrinsics k{fx, fy, cx, cy, width, height, dmin, dmax};
             k.validate();
             return k;
           }),
           py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("width"), py::arg("height"),
           py::arg("depth_min") = 0.2, py::arg("depth_max") = 20.0)
      .def_readwrite("fx", &CameraIntrinsics::fx)
      .def_readwrite("fy", &CameraIntrinsics::fy)
      .def_readwrite("cx", &CameraIntrinsics::cx)
      .def_readwrite("cy", &CameraIntrinsics::cy)
      .def_readwrite("width", &CameraIntrinsics::width)
      .def_readwrite("height", &CameraIntrinsics::height)
      .def_readwrite("depth_min", &CameraIntrinsics::depth_min)
      .def_readwrite("depth_max", &CameraIntrinsics::depth_max);

  py::class_<RigidTransform>(m, "Transform")
      .def(py::init<>())
      .def(py::init([](const Matrix3& r, const Point3& t) { return RigidTransform{r, t}; }), py::arg("rotation"),
           py::arg("translation"))
      .def_static("from_axis_angle", &RigidTransform::from_axis_angle, py::arg("axis"), py::arg("angle"),
                  py::arg("translation") = Point3::Zero())
      .def_readwrite("rotation", &RigidTransform::rotation)
      .def_readwrite("translation", &RigidTransform::translation)
      .def("apply", &RigidTransform::apply)
      .def("inverse", &RigidTransform::inverse)
      .def("__matmul__", [](const RigidTransform& a, const RigidTransform& b) { return a * b; })
      .def("is_valid", &RigidTransform::is_valid, py::arg("tol") = 1e-9);

  m.def("look_at", &look_at, py::arg("eye"), py::arg("target"), py::arg("up") = Point3::UnitZ());
  m.def("rotation_angle_between", &rotation_angle_between);

  m.def(
      "backproject", [](double u, double v, double depth, const CameraIntrinsics& k) {
        return backproject_pixel({u, v}, depth, k);
      },
      py::arg("u"), py::arg("v"), py::arg("depth"), py::arg("k"));
  m.def("project", [](const Point3& p, const CameraIntrinsics& k) {
    Projection pr = project_point(p, k);
    return py::make_tuple(pr.pixel.u, pr.pixel.v, pr.depth);
  });
  m.def(
      "bbox_to_centroid",
      [](py::array_t<float, py::array::c_style | py::array::forcecast> depth, std::array<double, 4> bbox,
         const CameraIntrinsics& k, const RigidTransform& pose) {
        Detection2D d;
        d.bbox = {bbox[0], bbox[1], bbox[2], bbox[3]};
        return bbox_to_object3d(d, to_depth(depth), k, pose).centroid;
      },
      py::arg("depth"), py::arg("bbox"), py::arg("k"), py::arg("pose") = RigidTransform{});

  m.def(
      "cloud_from_depth",
      [](py::array_t<float, py::array::c_style | py::array::forcecast> depth, const CameraIntrinsics& k,
         const RigidTransform& pose, int stride) { return to_points(cloud_from_depth(to_depth(depth), k, pose, stride)); },
      py::arg("depth"), py::arg("k"), py::arg("pose") = RigidTransform{}, py::arg("stride") = 1);
  m.def(
      "voxel_downsample", [](const Points& p, double voxel) { return to_points(voxel_downsample(to_cloud(p), voxel)); },
      py::arg("points"), py::arg("voxel_size"));

  m.def(
      "estimate_rigid",
      [](const Points& src, const Points& dst) {
        if (src.rows() != dst.rows()) throw Error(ErrorCode::kDomain, "source and target differ in length");
        CorrespondenceSet pairs;
        for (Eigen::Index i = 0; i < src.rows(); ++i)
          pairs.push_back({src.row(i).transpose(), dst.row(i).transpose()});
        return estimate_rigid(pairs);
      },
      py::arg("source"), py::arg("target"));

  py::class_<RegistrationResult>(m, "RegistrationResult")
      .def_readonly("transform", &RegistrationResult::transform)
      .def_readonly("rms_residual", &RegistrationResult::rms_residual)
      .def_readonly("iterations", &RegistrationResult::iterations)
      .def_readonly("converged", &RegistrationResult::converged)
      .def_readonly("residual_history", &RegistrationResult::residual_history);

  m.def(
      "icp_refine",
      [](const Points& src, const Points& dst, const RigidTransform& init, int max_iterations, double eps,
         double max_pair_distance, double voxel) {
        IcpParams p;
        p.max_iterations = max_iterations;
        p.convergence_eps = eps;
        p.max_pair_distance = max_pair_distance;
        p.downsample_voxel = voxel;
        PointCloud a = to_cloud(src), b = to_cloud(dst);
        py::gil_scoped_release release;
        return icp_refine(a, b, init, p);
      },
      py::arg("source"), py::arg("target"), py::arg("init") = RigidTransform{}, py::arg("max_iterations") = 50,
      py::arg("convergence_eps") = 1e-6, py::arg("max_pair_distance") = 0.5, py::arg("downsample_voxel") = 0.05);

  py::class_<TrackerParams>(m, "TrackerParams")
      .def(py::init<>())
      .def_readwrite("gate_distance", &TrackerParams::gate_distance)
      .def_readwrite("confirm_hits", &TrackerParams::confirm_hits)
      .def_readwrite("max_misses", &TrackerParams::max_misses)
      .def_readwrite("process_noise_accel", &TrackerParams::process_noise_accel)
      .def_readwrite("measurement_noise", &TrackerParams::measurement_noise)
      .def_readwrite("init_velocity_std", &TrackerParams::init_velocity_std);

  py::class_<Track>(m, "Track")
      .def_readonly("id", &Track::id)
      .def_readonly("class_id", &Track::class_id)
      .def_readonly("hits", &Track::hits)
      .def_readonly("misses", &Track::misses)
      .def_property_readonly("status", [](const Track& t) { return std::string(to_string(t.status)); })
      .def_property_readonly("position", [](const Track& t) { return Point3(t.state.head<3>()); })
      .def_property_readonly("velocity", [](const Track& t) { return Point3(t.state.tail<3>()); });

  py::class_<Tracker>(m, "Tracker")
      .def(py::init<TrackerParams>(), py::arg("params") = TrackerParams{})
      .def(
          "step",
          [](Tracker& tr, const Points& centroids, double t, std::optional<std::vector<int>> classes) {
            std::vector<Object3D> objs(static_cast<std::size_t>(centroids.rows()));
            for (std::size_t i = 0; i < objs.size(); ++i) {
              objs[i].centroid = centroids.row(static_cast<Eigen::Index>(i)).transpose();
              objs[i].aabb.min = objs[i].aabb.max = objs[i].centroid;
              objs[i].class_id = classes ? classes->at(i) : 0;
              objs[i].confidence = 1.0;
              objs[i].timestamp = t;
            }
            return tr.step(objs, t).tracks;
          },
          py::arg("centroids"), py::arg("t"), py::arg("class_ids") = std::nullopt)
      .def_property_readonly("tracks", &Tracker::tracks);

  py::class_<Rule>(m, "Rule")
      .def(py::init([](const std::string& id, const std::string& kind) {
             auto k = rule_kind_from_string(kind);
             if (!k) throw Error(ErrorCode::kConfig, "unknown rule kind '" + kind + "'");
             Rule r;
             r.id = id;
             r.kind = *k;
             r.anchor.point = Point3::Zero();
             return r;
           }),
           py::arg("id"), py::arg("kind"))
      .def_readwrite("threshold", &Rule::threshold)
      .def_readwrite("hysteresis", &Rule::hysteresis)
      .def_readwrite("window_k", &Rule::window_k)
      .def_readwrite("min_step", &Rule::min_step)
      .def_readwrite("d_min", &Rule::d_min)
      .def_readwrite("d_max", &Rule::d_max)
      .def_readwrite("invert", &Rule::invert)
      .def_readwrite("level_step", &Rule::level_step);

  m.def("distance_level", &distance_level);
  auto trace = [](auto fn) {
    return [fn](const Rule& r, const std::vector<double>& d, std::optional<std::vector<double>> t) {
      std::vector<double> times = t.value_or(std::vector<double>{});
      if (!t)
        for (std::size_t i = 0; i < d.size(); ++i) times.push_back(static_cast<double>(i));
      return event_dicts(fn(r, d, times, 1));
    };
  };
  m.def("eval_proximity", trace(&eval_proximity), py::arg("rule"), py::arg("distances"), py::arg("times") = py::none());
  m.def("eval_approach", trace(&eval_approach), py::arg("rule"), py::arg("distances"), py::arg("times") = py::none());
  m.def("eval_distance_level", trace(&eval_distance_level), py::arg("rule"), py::arg("distances"),
        py::arg("times") = py::none());

  m.def(
      "zone_contains",
      [](const std::vector<std::array<double, 2>>& footprint, double z_min, double z_max, const Point3& p) {
        Zone z;
        z.id = "zone";
        for (const auto& v : footprint) z.footprint.emplace_back(v[0], v[1]);
        z.z_min = z_min;
        z.z_max = z_max;
        z.validate();
        return zone_contains(z, p);
      },
      py::arg("footprint"), py::arg("z_min"), py::arg("z_max"), py::arg("point"));

  m.def(
      "render_spheres",
      [](const CameraIntrinsics& k, const RigidTransform& pose, const std::vector<std::array<double, 4>>& spheres) {
        Scene s;
        s.cameras.push_back({0, k, pose});
        for (const auto& sp : spheres)
          s.actors.push_back({"s", Sphere{sp[3]}, 0, Trajectory::fixed({sp[0], sp[1], sp[2]})});
        return from_depth(render_depth(s, 0, 0.0));
      },
      py::arg("k"), py::arg("pose"), py::arg("spheres"));
  m.def("depth_noise_sigma", [](double z, double fx, double disparity_std, double baseline) {
    NoiseModel n;
    n.disparity_std = disparity_std;
    n.baseline = baseline;
    return depth_noise_sigma(z, fx, n);
  });

  m.def("read_depth", [](const std::string& path) { return from_depth(read_depth_file(fs::path(path))); });
  m.def("write_depth", [](const std::string& path, py::array_t<float, py::array::c_style | py::array::forcecast> a) {
    write_depth_file(fs::path(path), to_depth(a));
  });

  m.def("heat_color", [](double e) {
    Rgb c = heat_color(e);
    return py::make_tuple(c.r, c.g, c.b);
  });
  m.def(
      "run_accuracy",
      [](std::optional<std::string> config) {
        AccuracyConfig cfg = config ? load_accuracy_config(*config) : default_accuracy_config();
        AccuracyResult res;
        {
          py::gil_scoped_release release;
          res = run_accuracy_experiment(cfg);
        }
        py::dict out;
        auto add = [&](const HeatmapReport& r) {
          py::list cells;
          for (const auto& c : r.cells) {
            py::dict d;
            d["label"] = c.label;
            d["camera_distance"] = c.camera_distance;
            d["true_distance"] = c.true_distance;
            d["measured_distance"] = c.measured_distance;
            d["abs_error"] = c.abs_error;
            cells.append(d);
          }
          out[py::str(r.name)] = cells;
        };
        for (const auto& r : res.conditions) add(r);
        add(res.average);
        return out;
      },
      py::arg("config") = py::none());

  // Command-line subcommands: each returns (exit_code, stdout, stderr).
  m.def(
      "cli_run",
      [](const std::string& config, const std::string& input, const std::string& output,
         std::optional<double> duration) {
        return run_command(cmd_run, options(config, input, output, std::nullopt, duration, std::nullopt));
      },
      py::arg("config"), py::arg("input"), py::arg("output"), py::arg("duration") = py::none());
  m.def(
      "cli_simulate",
      [](const std::string& config, const std::string& output, const std::string& scene,
         std::optional<std::uint64_t> seed, std::optional<double> duration) {
        return run_command(cmd_simulate, options(config, scene, output, seed, duration, std::nullopt));
      },
      py::arg("config"), py::arg("output"), py::arg("scene") = "", py::arg("seed") = py::none(),
      py::arg("duration") = py::none());
  m.def(
      "cli_calibrate",
      [](const std::string& input, const std::string& output, const std::string& source, const std::string& target) {
        CliOptions o = options("", input, output, std::nullopt, std::nullopt, std::nullopt);
        o.source_ply = source;
        o.target_ply = target;
        return run_command(cmd_calibrate, o);
      },
      py::arg("input"), py::arg("output"), py::arg("source") = "", py::arg("target") = "");
  m.def(
      "cli_bench",
      [](const std::string& output, const std::string& config, std::optional<long> frames) {
        return run_command(cmd_bench, options(config, "", output, std::nullopt, std::nullopt, frames));
      },
      py::arg("output"), py::arg("config") = "", py::arg("frames") = py::none());
  m.def(
      "cli_accuracy",
      [](const std::string& output, const std::string& config, std::optional<std::uint64_t> seed) {
        return run_command(cmd_accuracy, options(config, "", output, seed, std::nullopt, std::nullopt));
      },
      py::arg("output"), py::arg("config") = "", py::arg("seed") = py::none());
}
