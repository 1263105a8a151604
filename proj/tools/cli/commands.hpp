#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "loggauss/loggauss.hpp"
#include "scene.hpp"

namespace loggauss::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitRefused = 3,
  kExitUnsupported = 4,
  kExitStatistical = 5,
};

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SingularPoint:
    case ErrorKind::UncertainRank:
    case ErrorKind::OffVariety:
      return kExitRefused;
    case ErrorKind::UnsupportedShape:
      return kExitUnsupported;
    case ErrorKind::InsufficientRegularTrials:
      return kExitStatistical;
    default:
      return kExitInput;
  }
}

using ordered_json = nlohmann::ordered_json;

inline ordered_json complex_json(Complex c) { return ordered_json::array({c.real(), c.imag()}); }

inline ordered_json point_json(std::span<const Complex> z) {
  ordered_json a = ordered_json::array();
  for (const auto& c : z) a.push_back(complex_json(c));
  return a;
}

inline ordered_json matrix_json(const CMatrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_complex(Complex c) {
  return format_double(c.real()) + (std::signbit(c.imag()) ? "-" : "+") +
         format_double(std::abs(c.imag())) + "i";
}

/// Full report for one point. Throws on refusal after filling what it can.
inline ordered_json eval_report(const Scene& scene, const VarietySystem& v, const Point& z) {
  require_torus_point(z, v.n());
  ordered_json j;
  j["point"] = point_json(z);
  ordered_json residuals = ordered_json::array();
  for (const auto& val : v.values(z)) residuals.push_back(std::abs(val));
  j["residuals"] = residuals;
  j["gauss_matrix"] = matrix_json(gauss_matrix(v, z));
  if (v.l() == 1) {
    const ProjectivePoint p = hypersurface_gauss(v.generators()[0], z, scene.tolerances.rank);
    j["gauss_map"] = point_json(p.coords);
    j["gauss_map_real"] = has_real_representative(p, scene.tolerances.rank);
  }
  const CriticalClassification c = classify_point(v, z, scene.tolerances);
  j["grassmann_basis"] = matrix_json(generalized_gauss(v, z, scene.tolerances.rank).basis);
  j["m"] = c.m;
  j["generic_m"] = c.generic_m;
  j["j"] = c.j;
  j["critical"] = c.critical;
  j["stratum"] = c.stratum();
  j["s_required"] = c.s_required;
  j["margin"] = c.margin;
  j["cell_dimension"] = c.m <= v.k() ? ordered_json(schubert_cell_dimension(c.m, v.n(), v.k()))
                                     : ordered_json(nullptr);
  return j;
}

inline void print_human(std::ostream& out, const ordered_json& j) {
  out << "point:";
  for (const auto& c : j["point"]) out << ' ' << format_complex({c[0].get<double>(), c[1].get<double>()});
  out << "\nresiduals:";
  for (const auto& r : j["residuals"]) out << ' ' << format_double(r.get<double>());
  out << "\ngauss matrix:\n";
  for (const auto& row : j["gauss_matrix"]) {
    out << "  [";
    bool first = true;
    for (const auto& c : row) {
      out << (first ? "" : ", ") << format_complex({c[0].get<double>(), c[1].get<double>()});
      first = false;
    }
    out << "]\n";
  }
  if (j.contains("gauss_map")) {
    out << "gauss map: [";
    bool first = true;
    for (const auto& c : j["gauss_map"]) {
      out << (first ? "" : " : ") << format_complex({c[0].get<double>(), c[1].get<double>()});
      first = false;
    }
    out << "]" << (j["gauss_map_real"].get<bool>() ? " (real)" : "") << '\n';
  }
  out << "schubert index m = " << j["m"] << " (" << j["stratum"].get<std::string>() << "), generic "
      << j["generic_m"] << ", excess j = " << j["j"] << '\n';
  out << "critical: " << (j["critical"].get<bool>() ? "yes" : "no") << '\n';
  out << "margin: " << format_double(j["margin"].get<double>()) << '\n';
}

/// Opens --out (or stdout when empty or "-") for writing.
class OutputSink {
 public:
  OutputSink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
      if (!*file_) throw Error(ErrorKind::InvalidArgument, "cannot open output '" + path + "'");
      stream_ = file_.get();
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

inline void write_csv(std::ostream& out, std::size_t n, const std::vector<std::vector<double>>& xs,
                      const std::vector<std::pair<std::size_t, int>>* strata = nullptr) {
  for (std::size_t j = 0; j < n; ++j) out << (j ? "," : "") << 'x' << j + 1;
  if (strata) out << ",m,j";
  out << '\n';
  for (std::size_t r = 0; r < xs.size(); ++r) {
    for (std::size_t j = 0; j < n; ++j) out << (j ? "," : "") << format_double(xs[r][j]);
    if (strata) out << ',' << (*strata)[r].first << ',' << (*strata)[r].second;
    out << '\n';
  }
}

/// Binary P6 raster of the window's first two axes; `layers` are painted in
/// order, each with its own colour.
struct RasterLayer {
  const std::vector<std::vector<double>>* points;
  unsigned char rgb[3];
};

inline void write_ppm(std::ostream& out, const Window& window, std::size_t size,
                      const std::vector<RasterLayer>& layers) {
  std::vector<unsigned char> pixels(size * size * 3, 255);
  const auto [xlo, xhi] = window.ranges[0];
  const auto [ylo, yhi] = window.ranges[1];
  auto cell = [size](double t) {
    const auto c = static_cast<long long>(std::floor(t * static_cast<double>(size)));
    return static_cast<std::size_t>(std::clamp<long long>(c, 0, static_cast<long long>(size) - 1));
  };
  for (const auto& layer : layers) {
    for (const auto& x : *layer.points) {
      const std::size_t col = cell((x[0] - xlo) / (xhi - xlo));
      const std::size_t row = size - 1 - cell((x[1] - ylo) / (yhi - ylo));
      unsigned char* px = &pixels[(row * size + col) * 3];
      std::copy(layer.rgb, layer.rgb + 3, px);
    }
  }
  out << "P6\n" << size << ' ' << size << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

inline AmoebaCloud scene_amoeba(const Scene& scene, std::size_t jobs) {
  if (scene.is_affine()) {
    return compute_amoeba(scene.affine_space(), scene.window, scene.resolution * scene.args_per_fiber,
                          scene.seed, jobs);
  }
  return compute_amoeba(scene.variety(), scene.window, {scene.resolution, scene.args_per_fiber},
                        scene.tolerances, jobs);
}

inline std::vector<std::vector<double>> log_coordinates(const AmoebaCloud& cloud) {
  std::vector<std::vector<double>> xs;
  xs.reserve(cloud.points.size());
  for (const auto& p : cloud.points) xs.push_back(p.x.x);
  return xs;
}

struct Options {
  std::string scene_path;
  std::string point;
  std::string points_path;
  std::string out_path;
  std::string format;
  std::size_t trials = 50;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

inline int cmd_eval(const Options& opt, std::ostream& out) {
  const Scene scene = load_scene(opt.scene_path);
  const VarietySystem v = scene.variety();
  const Point z = parse_point(opt.point);
  const ordered_json j = eval_report(scene, v, z);
  if (opt.format != "json") print_human(out, j);
  out << j.dump() << '\n';
  return kExitOk;
}

inline int cmd_classify(const Options& opt, std::ostream& out, std::ostream& err) {
  const Scene scene = load_scene(opt.scene_path);
  const VarietySystem v = scene.variety();
  std::vector<std::string> lines;
  if (!opt.point.empty()) lines.push_back(opt.point);
  if (!opt.points_path.empty()) {
    std::ifstream in(opt.points_path);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open points file '" + opt.points_path + "'");
    for (std::string line; std::getline(in, line);) {
      const auto t = detail::trim(line);
      if (!t.empty() && t.front() != '#') lines.emplace_back(t);
    }
  }
  if (lines.empty()) throw Error(ErrorKind::InvalidArgument, "classify needs --point or --points");
  int code = kExitOk;
  for (const auto& line : lines) {
    const Point z = parse_point(line);
    try {
      out << eval_report(scene, v, z).dump() << '\n';
    } catch (const Error& e) {
      const int c = exit_code_for(e.kind());
      if (c == kExitInput) throw;
      ordered_json j;
      j["point"] = point_json(z);
      j["error"] = e.what();
      out << j.dump() << '\n';
      err << e.what() << '\n';
      code = std::max(code, c);
    }
  }
  return code;
}

inline int cmd_amoeba(const Options& opt, std::ostream& out) {
  const Scene scene = load_scene(opt.scene_path);
  const std::string format = opt.format.empty() ? "csv" : opt.format;
  const AmoebaCloud cloud = scene_amoeba(scene, opt.jobs);
  const auto xs = log_coordinates(cloud);
  OutputSink sink(opt.out_path, out);
  if (format == "csv") {
    write_csv(sink.get(), scene.n, xs);
  } else if (format == "ppm") {
    write_ppm(sink.get(), scene.window, scene.resolution, {{&xs, {0, 0, 0}}});
  } else if (format == "json") {
    ordered_json j;
    j["points"] = xs;
    j["failed_fibers"] = cloud.failed_fibers;
    sink.get() << j.dump() << '\n';
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown format '" + format + "'");
  }
  return kExitOk;
}

inline int cmd_contour(const Options& opt, std::ostream& out) {
  const Scene scene = load_scene(opt.scene_path);
  const std::string format = opt.format.empty() ? "csv" : opt.format;
  const VarietySystem v = scene.variety();
  const AmoebaCloud cloud = scene_amoeba(scene, opt.jobs);
  const Contour contour = contour_from_cloud(v, cloud, scene.tolerances, opt.jobs);
  std::vector<std::vector<double>> xs;
  std::vector<std::pair<std::size_t, int>> strata;
  for (const auto& c : contour.points) {
    xs.push_back(c.point.x.x);
    strata.emplace_back(c.classification.m, c.classification.j);
  }
  OutputSink sink(opt.out_path, out);
  if (format == "csv") {
    write_csv(sink.get(), scene.n, xs, &strata);
  } else if (format == "ppm") {
    const auto all = log_coordinates(cloud);
    write_ppm(sink.get(), scene.window, scene.resolution,
              {{&all, {96, 96, 96}}, {&xs, {200, 0, 0}}});
  } else if (format == "json") {
    ordered_json j;
    ordered_json pts = ordered_json::array();
    for (std::size_t i = 0; i < xs.size(); ++i)
      pts.push_back({{"x", xs[i]}, {"m", strata[i].first}, {"j", strata[i].second}});
    j["points"] = pts;
    j["amoeba_points"] = cloud.points.size();
    j["refused"] = contour.refused;
    sink.get() << j.dump() << '\n';
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown format '" + format + "'");
  }
  return kExitOk;
}

inline ordered_json covering_json(const CoveringReport& r) {
  ordered_json j;
  j["l"] = r.l_real;
  j["bound"] = r.bound;
  j["trials"] = r.trials;
  j["attempts"] = r.attempts;
  j["regular_trials"] = r.regular_trials;
  j["meeting_bound"] = r.meeting_bound;
  j["min_preimages"] = r.min_preimages;
  j["max_preimages"] = r.max_preimages;
  j["rejected_nonregular"] = r.rejected_nonregular;
  j["rejected_outside"] = r.rejected_outside;
  j["exact_counts"] = r.exact_counts;
  j["empty_intersection"] = r.l_real < 0;
  j["success"] = r.success;
  return j;
}

inline int cmd_covering(const Options& opt, std::ostream& out) {
  const Scene scene = load_scene(opt.scene_path);
  if (!scene.is_affine()) throw Error(ErrorKind::InvalidArgument, "covering needs an affine scene (A, b)");
  const CoveringReport r =
      verify_covering(scene.affine_space(), opt.trials, opt.seed.value_or(scene.seed), opt.jobs);
  OutputSink sink(opt.out_path, out);
  sink.get() << covering_json(r).dump() << '\n';
  return r.success ? kExitOk : kExitStatistical;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Logarithmic Gauss maps, critical loci and amoebas of subvarieties of the complex torus"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scene", opt.scene_path, "Scene JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--jobs", opt.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto* eval = app.add_subcommand("eval", "Classify a single point");
  add_common(eval);
  eval->add_option("--point", opt.point, "Comma-separated complex coordinates")->required();
  eval->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"json", "human"}));

  auto* classify = app.add_subcommand("classify", "Classify every point of a points file");
  add_common(classify);
  classify->add_option("--points", opt.points_path, "File with one point per line");
  classify->add_option("--point", opt.point, "Single point");

  auto* amoeba = app.add_subcommand("amoeba", "Sample the amoeba");
  add_common(amoeba);
  amoeba->add_option("--out", opt.out_path, "Output file (stdout by default)");
  amoeba->add_option("--format", opt.format, "csv, json or ppm")->check(CLI::IsMember({"csv", "json", "ppm"}));

  auto* contour = app.add_subcommand("contour", "Sample the critical locus image");
  add_common(contour);
  contour->add_option("--out", opt.out_path, "Output file (stdout by default)");
  contour->add_option("--format", opt.format, "csv, json or ppm")->check(CLI::IsMember({"csv", "json", "ppm"}));

  auto* covering = app.add_subcommand("covering", "Check the preimage lower bound on an affine space");
  add_common(covering);
  covering->add_option("--trials", opt.trials, "Number of trials")->check(CLI::PositiveNumber);
  covering->add_option("--seed", opt.seed, "Seed (overrides the scene)");
  covering->add_option("--out", opt.out_path, "Output file (stdout by default)");
  covering->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitInput;
  }

  try {
    if (eval->parsed()) return cmd_eval(opt, out);
    if (classify->parsed()) return cmd_classify(opt, out, err);
    if (amoeba->parsed()) return cmd_amoeba(opt, out);
    if (contour->parsed()) return cmd_contour(opt, out);
    if (covering->parsed()) return cmd_covering(opt, out);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code_for(e.kind());
  }
  return kExitInput;
}

}  // namespace loggauss::cli
