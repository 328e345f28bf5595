#pragma once

// Eigen must be parsed before httplib: <resolv.h>, which httplib pulls in,
// defines `_res` as a macro and Eigen uses that name for parameters.
#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "driftscope/dataset.hpp"
#include "driftscope/diffusion.hpp"
#include "driftscope/embedding_io.hpp"
#include "driftscope/errors.hpp"
#include "driftscope/flows.hpp"
#include "driftscope/landmark_eval.hpp"
#include "driftscope/landmarks.hpp"
#include "driftscope/scalar_field.hpp"
#include "driftscope/separation.hpp"
#include "driftscope/service.hpp"
#include "driftscope/session.hpp"
#include "driftscope/similarity.hpp"
#include "driftscope/trajectory_io.hpp"

namespace driftscope::cli {

/// Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.
inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_usage = 2;

namespace detail {

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

inline double to_real(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) throw ConfigError("invalid " + what + " value '" + s + "'");
  return v;
}

inline std::size_t to_count(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("invalid " + what + " value '" + s + "'");
  return static_cast<std::size_t>(std::stoull(s));
}

inline std::vector<std::size_t> parse_counts(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  for (const auto& p : split(text, ',')) out.push_back(to_count(p, what));
  if (out.empty()) throw ConfigError("empty " + what + " list");
  return out;
}

/// "120x60" or "64x64x64".
inline std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& p : split(text, 'x')) out.push_back(to_count(p, "grid"));
  return out;
}

/// "x0,x1,y0,y1[,z0,z1]" into (lower, upper).
inline std::pair<std::vector<double>, std::vector<double>> parse_domain(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 4 && parts.size() != 6) throw ConfigError("domain needs 4 or 6 comma-separated values");
  std::vector<double> lo, hi;
  for (std::size_t a = 0; a < parts.size() / 2; ++a) {
    lo.push_back(to_real(parts[2 * a], "domain"));
    hi.push_back(to_real(parts[2 * a + 1], "domain"));
  }
  return {lo, hi};
}

inline bool parse_switch(const std::string& s) {
  if (s == "on" || s == "true" || s == "1") return true;
  if (s == "off" || s == "false" || s == "0") return false;
  throw ConfigError("expected on|off, got '" + s + "'");
}

inline void write_json(const nlohmann::json& j, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << j.dump() << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << j.dump() << '\n';
  if (!f) throw Error("failed writing '" + path + "'");
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open '" + path + "' for reading");
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline nlohmann::json landmarks_json(const LandmarkSet& lm, double seconds) {
  return {{"strategy", to_string(lm.strategy)}, {"rng_seed", lm.rng_seed}, {"stride", lm.stride},
          {"count", lm.size()},                 {"indices", lm.indices},   {"select_seconds", seconds}};
}

inline LandmarkSet landmarks_from_json(const nlohmann::json& j, std::size_t n) {
  LandmarkSet lm;
  try {
    lm.indices = j.at("indices").get<std::vector<std::size_t>>();
    if (j.contains("strategy")) lm.strategy = parse_landmark_strategy(j.at("strategy").get<std::string>());
    if (j.contains("rng_seed")) lm.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    if (j.contains("stride")) lm.stride = j.at("stride").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed landmark file: ") + e.what());
  }
  if (lm.indices.empty()) throw FormatError("landmark file lists no indices");
  std::vector<char> seen(n, 0);
  for (auto i : lm.indices) {
    if (i >= n) throw FormatError("landmark index " + std::to_string(i) + " out of range");
    if (seen[i]) throw FormatError("duplicate landmark index " + std::to_string(i));
    seen[i] = 1;
  }
  return lm;
}

inline void require_same_size(const TrajectoryDataset& ds, const DiffusionEmbedding& E) {
  if (ds.size() != E.size())
    throw ArgumentError("embedding has " + std::to_string(E.size()) + " particles but the dataset has " +
                        std::to_string(ds.size()));
}

}  // namespace detail

/// Runs the command line. Never calls exit(); returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace detail;
  CLI::App app{"Multi-scale diffusion geometry on particle trajectories", "driftscope"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Sample trajectories of an analytic flow");
  std::string flow_name, grid_text, domain_text, out_path, precision = "f32", four_form = "vortex";
  std::optional<double> t0, tau, seed_time;
  std::optional<std::size_t> steps;
  double max_substep = 0.02;
  gen->add_option("--flow", flow_name, "double-gyre | abc | four-centers | sine-ridge")->required();
  gen->add_option("--grid", grid_text, "Seed grid resolution, e.g. 120x60");
  gen->add_option("--domain", domain_text, "Seed box x0,x1,y0,y1[,z0,z1]");
  gen->add_option("--t0", t0, "Start time t1");
  gen->add_option("--tau", tau, "Duration");
  gen->add_option("--steps", steps, "Number of time steps T");
  gen->add_option("--seed-time", seed_time, "Seed particles at this time and advect them to t1 first");
  gen->add_option("--max-substep", max_substep, "Largest RK4 substep");
  gen->add_option("--four-centers-form", four_form, "Four Centers variant: vortex | printed");
  gen->add_option("--precision", precision, "Stored position precision: f32 | f64");
  gen->add_option("-o,--out", out_path, "Output .ptrj file")->required();

  // landmarks
  auto* lmk = app.add_subcommand("landmarks", "Select landmark particles");
  std::string in_path, strategy_name = "tfps";
  std::size_t count = 1000, stride = 5;
  std::uint64_t seed = 0;
  lmk->add_option("-i,--input", in_path, "Trajectory file (.ptrj or .csv)")->required();
  lmk->add_option("-n,--count", count, "Number of landmarks");
  lmk->add_option("--strategy", strategy_name, "random | fps | tfps");
  lmk->add_option("--seed", seed, "RNG seed");
  lmk->add_option("--stride", stride, "Temporal stride for tfps");
  lmk->add_option("-o,--out", out_path, "Output JSON (default stdout)");

  // build
  auto* bld = app.add_subcommand("build", "Build the diffusion embedding and write a DGEM cache");
  std::string landmarks_arg = "1000", renorm = "on", orphans = "error", solver = "auto", bw_ref = "landmarks",
              cache_path;
  double alpha = 1.0, threshold = 1e-6;
  std::size_t neighbors = 6, modes = 0;
  bld->add_option("-i,--input", in_path, "Trajectory file")->required();
  bld->add_option("--landmarks", landmarks_arg, "Landmark count, or a landmark JSON file");
  bld->add_option("--strategy", strategy_name, "Selection strategy when --landmarks is a count");
  bld->add_option("--seed", seed, "Selection seed");
  bld->add_option("--stride", stride, "Temporal stride for tfps");
  bld->add_option("--alpha", alpha, "Global bandwidth scale");
  bld->add_option("--neighbors", neighbors, "Neighbors per bandwidth");
  bld->add_option("--bandwidth-ref", bw_ref, "Bandwidth neighbors among: landmarks | particles");
  bld->add_option("--threshold", threshold, "Kernel sparsification threshold");
  bld->add_option("--modes", modes, "Retained eigenpairs (0 = min(n_l, 300))");
  bld->add_option("--renormalize", renorm, "Density renormalization: on | off");
  bld->add_option("--orphans", orphans, "Particles without landmark affinity: error | attach");
  bld->add_option("--solver", solver, "Eigensolver: auto | dense | lanczos");
  bld->add_option("--cache", cache_path, "Output .dgem file")->required();

  // separation
  auto* sep = app.add_subcommand("separation", "Per-particle separation field");
  std::string emb_path, direction = "forward";
  std::optional<double> scale;
  std::size_t k = 0;
  sep->add_option("-i,--input", in_path, "Trajectory file")->required();
  sep->add_option("--embedding", emb_path, "DGEM file (needed with --scale)");
  sep->add_option("--scale", scale, "Diffusion scale; omit for particle covariance");
  sep->add_option("--direction", direction, "forward | backward");
  sep->add_option("--k", k, "Neighborhood size (0 = 9 in 2D, 27 in 3D)");
  sep->add_option("--out", out_path, "Output .dgsf file (JSON sidecar written alongside)")->required();

  // field
  auto* fld = app.add_subcommand("field", "Diffusion distance field from one or more sources");
  std::string sources_text, field_out;
  double scale_req = 0;
  fld->add_option("--embedding", emb_path, "DGEM file")->required();
  fld->add_option("--sources", sources_text, "Comma-separated particle indices")->required();
  fld->add_option("--scale", scale_req, "Diffusion scale")->required();
  fld->add_option("-o,--out", out_path, "Output JSON (default stdout)");
  fld->add_option("--field-out", field_out, "Also write distances as a .dgsf field");

  // neighborhood
  auto* nbh = app.add_subcommand("neighborhood", "Similarity neighborhood of a particle");
  std::size_t source = 0, max_count = 200;
  double radius = 0;
  nbh->add_option("--embedding", emb_path, "DGEM file")->required();
  nbh->add_option("--source", source, "Source particle")->required();
  nbh->add_option("--scale", scale_req, "Diffusion scale")->required();
  nbh->add_option("--radius", radius, "Diffusion distance threshold")->required();
  nbh->add_option("--max", max_count, "Maximum member count");
  nbh->add_option("-o,--out", out_path, "Output JSON (default stdout)");

  // clusters
  auto* cls = app.add_subcommand("clusters", "k-means clustering of the scaled embedding");
  std::size_t clusters = 0;
  cls->add_option("--embedding", emb_path, "DGEM file")->required();
  cls->add_option("--k", clusters, "Cluster count")->required();
  cls->add_option("--scale", scale_req, "Diffusion scale")->required();
  cls->add_option("--seed", seed, "RNG seed");
  cls->add_option("-o,--out", out_path, "Output JSON (default stdout)");

  // eval-landmarks
  auto* evl = app.add_subcommand("eval-landmarks", "Subspace error of landmark strategies");
  std::string strategies_text = "random,fps,tfps", counts_text = "250,500,1000", subspaces_text = "50,150,250";
  std::size_t trials = 10;
  bool summary = false;
  evl->add_option("-i,--input", in_path, "Trajectory file")->required();
  evl->add_option("--strategies", strategies_text, "Comma-separated strategies");
  evl->add_option("--counts", counts_text, "Comma-separated landmark counts");
  evl->add_option("--subspaces", subspaces_text, "Comma-separated subspace sizes");
  evl->add_option("--trials", trials, "Trials per configuration");
  evl->add_option("--seed", seed, "Base seed");
  evl->add_option("--stride", stride, "Temporal stride for tfps");
  evl->add_option("--alpha", alpha, "Global bandwidth scale");
  evl->add_flag("--summary", summary, "Also print medians per configuration to stdout");
  evl->add_option("-o,--out", out_path, "Output CSV (default stdout)");

  // serve
  auto* srv = app.add_subcommand("serve", "Serve a dataset and its embedding over HTTP");
  std::string host = "127.0.0.1";
  int port = 8080;
  srv->add_option("-i,--input", in_path, "Trajectory file")->required();
  srv->add_option("--embedding", emb_path, "DGEM file")->required();
  srv->add_option("--host", host, "Bind address");
  srv->add_option("--port", port, "Port (DRIFTSCOPE_PORT overrides)");
  srv->add_option("--seed", seed, "Seed for clustering queries");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_usage;
  }

  using clock = std::chrono::steady_clock;
  auto seconds_since = [](clock::time_point t) { return std::chrono::duration<double>(clock::now() - t).count(); };

  try {
    if (gen->parsed()) {
      FlowSpec flow = make_flow(parse_flow_id(flow_name));
      if (!grid_text.empty()) flow.grid.resolution = parse_grid(grid_text);
      if (!domain_text.empty()) std::tie(flow.grid.lower, flow.grid.upper) = parse_domain(domain_text);
      if (t0) flow.t1 = *t0;
      if (tau) flow.tau = *tau;
      if (steps) flow.steps = *steps;
      flow.seed_time = seed_time;
      if (four_form == "printed")
        flow.four_centers.form = FourCentersForm::printed;
      else if (four_form != "vortex")
        throw ConfigError("unknown Four Centers form '" + four_form + "' (expected vortex|printed)");
      flow.max_substep = max_substep;
      if (precision != "f32" && precision != "f64") throw ConfigError("precision must be f32 or f64");
      const auto ds = integrate_flow(flow);
      write_trajectories(ds, out_path, precision == "f32" ? PositionPrecision::f32 : PositionPrecision::f64);
      out << "wrote " << out_path << ": n=" << ds.size() << " T=" << ds.steps() << " d=" << ds.dim() << '\n';
    } else if (lmk->parsed()) {
      const auto ds = load_trajectories(in_path);
      const auto start = clock::now();
      const auto lm = select_landmarks(ds, count, parse_landmark_strategy(strategy_name), seed, stride);
      write_json(landmarks_json(lm, seconds_since(start)), out_path, out);
    } else if (bld->parsed()) {
      const auto ds = load_trajectories(in_path);
      LandmarkSet lm;
      double select_seconds = 0;
      if (!landmarks_arg.empty() && landmarks_arg.find_first_not_of("0123456789") == std::string::npos) {
        const auto start = clock::now();
        lm = select_landmarks(ds, to_count(landmarks_arg, "landmarks"), parse_landmark_strategy(strategy_name), seed,
                              stride);
        select_seconds = seconds_since(start);
      } else {
        lm = landmarks_from_json(read_json(landmarks_arg), ds.size());
      }
      BuildOptions opt;
      opt.bandwidth.alpha = alpha;
      opt.bandwidth.neighbors = neighbors;
      if (bw_ref == "landmarks")
        opt.bandwidth.reference = BandwidthReference::landmarks;
      else if (bw_ref == "particles")
        opt.bandwidth.reference = BandwidthReference::particles;
      else
        throw ConfigError("--bandwidth-ref must be landmarks or particles");
      opt.threshold = threshold;
      opt.op.modes = modes;
      opt.op.renormalize = parse_switch(renorm);
      if (orphans == "error")
        opt.orphans = OrphanPolicy::error;
      else if (orphans == "attach")
        opt.orphans = OrphanPolicy::attach;
      else
        throw ConfigError("--orphans must be error or attach");
      if (solver == "auto")
        opt.op.solver = EigenSolverKind::automatic;
      else if (solver == "dense")
        opt.op.solver = EigenSolverKind::dense;
      else if (solver == "lanczos")
        opt.op.solver = EigenSolverKind::lanczos;
      else
        throw ConfigError("--solver must be auto, dense or lanczos");
      const auto b = build_embedding(ds, lm, opt);
      write_embedding(b.embedding, std::filesystem::path(cache_path));
      out << std::fixed << std::setprecision(3) << "wrote " << cache_path << ": n=" << ds.size()
          << " landmarks=" << lm.size() << " modes=" << b.embedding.modes() << " nnz=" << b.kernel.matrix.nonZeros()
          << "\ntimings (s): landmarks " << select_seconds << ", kernel " << b.kernel_seconds << ", eigendecomposition "
          << b.eigen_seconds << '\n';
      if (!b.kernel.attached.empty())
        out << b.kernel.attached.size() << " particle(s) attached to their strongest landmark\n";
    } else if (sep->parsed()) {
      const auto ds = load_trajectories(in_path);
      const Direction dir = parse_direction(direction);
      ScalarField f;
      if (scale) {
        if (emb_path.empty()) throw ConfigError("--scale requires --embedding");
        const auto E = read_embedding(std::filesystem::path(emb_path));
        require_same_size(ds, E);
        f = diffusion_separation(ds, E, *scale, dir, k);
      } else {
        f = particle_separation(ds, dir, k);
      }
      write_field(f, std::filesystem::path(out_path));
      out << "wrote " << out_path << " and " << sidecar_path(out_path).string() << '\n';
    } else if (fld->parsed()) {
      const auto E = read_embedding(std::filesystem::path(emb_path));
      const auto sources = parse_counts(sources_text, "sources");
      const auto f = multi_source_field(E, sources, scale_req);
      if (!field_out.empty()) {
        ScalarField sf;
        sf.kind = FieldKind::distance;
        sf.scale = scale_req;
        sf.sources = sources;
        sf.values = f.distances;
        write_field(sf, std::filesystem::path(field_out));
      }
      write_json({{"sources", f.sources}, {"scale", f.scale}, {"nearest", f.nearest}, {"distances", f.distances}},
                 out_path, out);
    } else if (nbh->parsed()) {
      const auto E = read_embedding(std::filesystem::path(emb_path));
      const auto r = similarity_neighborhood(E, source, scale_req, radius, max_count);
      write_json({{"source", r.source},
                  {"scale", r.scale},
                  {"radius", r.radius},
                  {"max_count", r.max_count},
                  {"candidates", r.candidates},
                  {"members", r.members},
                  {"distances", r.distances}},
                 out_path, out);
    } else if (cls->parsed()) {
      const auto E = read_embedding(std::filesystem::path(emb_path));
      const auto c = cluster_embedding(E, scale_req, clusters, seed);
      write_json({{"k", clusters}, {"scale", scale_req}, {"seed", seed}, {"inertia", c.inertia}, {"labels", c.labels}},
                 out_path, out);
    } else if (evl->parsed()) {
      const auto ds = load_trajectories(in_path);
      EvalConfig cfg;
      cfg.strategies.clear();
      for (const auto& s : split(strategies_text, ',')) cfg.strategies.push_back(parse_landmark_strategy(s));
      cfg.landmark_counts = parse_counts(counts_text, "counts");
      cfg.subspaces = parse_counts(subspaces_text, "subspaces");
      cfg.trials = trials;
      cfg.seed = seed;
      cfg.stride = stride;
      cfg.build.bandwidth.alpha = alpha;
      const auto report = eval_landmarks(ds, cfg);
      std::ostringstream csv;
      csv << "strategy,n_l,subspace,trial,error,select_seconds\n" << std::setprecision(10);
      for (const auto& r : report.rows)
        csv << to_string(r.strategy) << ',' << r.landmarks << ',' << r.subspace << ',' << r.trial << ',' << r.error
            << ',' << r.select_seconds << '\n';
      if (out_path.empty() || out_path == "-") {
        out << csv.str();
      } else {
        std::ofstream f(out_path);
        if (!f) throw Error("cannot open '" + out_path + "' for writing");
        f << csv.str();
      }
      if (summary)
        for (const auto& s : summarize(report.rows))
          out << to_string(s.strategy) << " n_l=" << s.landmarks << " subspace=" << s.subspace
              << " median_error=" << s.median_error << " median_select_s=" << s.median_select_seconds << '\n';
    } else if (srv->parsed()) {
      const int bind_port = http::resolve_port(port);
      Session session(load_trajectories(in_path), read_embedding(std::filesystem::path(emb_path)), seed);
      httplib::Server server;
      http::register_routes(server, session);
      out << "serving " << in_path << " on http://" << host << ':' << bind_port << '\n' << std::flush;
      if (!server.listen(host, bind_port)) throw Error("cannot listen on " + host + ":" + std::to_string(bind_port));
    }
  } catch (const ConfigError& e) {
    err << "driftscope: error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    err << "driftscope: error: " << e.what() << '\n';
    return exit_failure;
  }
  return exit_ok;
}

}  // namespace driftscope::cli
