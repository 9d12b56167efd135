#include "trussnet/cli.hpp"

#include <CLI11.hpp>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>
#include <utility>
#include <vector>

#include "trussnet/dataset.hpp"
#include "trussnet/errors.hpp"
#include "trussnet/homogenizer.hpp"
#include "trussnet/hypernet.hpp"
#include "trussnet/macro_fe.hpp"
#include "trussnet/metrics.hpp"
#include "trussnet/rng.hpp"
#include "trussnet/training.hpp"

namespace tn {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const std::string& path) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

// Every command writes its fully resolved configuration next to its outputs.
void log_resolved(const RunConfig& c, const std::string& command) {
  const std::string path = resolve_path(c, command + "_config.txt");
  std::ofstream out = open_out(path);
  out << resolved_config(c);
  if (!out) throw IoError("failed writing resolved config: " + path);
  std::cerr << "[trussnet] " << command << ": config resolved to " << path << "\n";
}

std::vector<OctantGraph> load_designs_checked(const std::string& path) {
  std::vector<OctantGraph> designs = load_designs(path);
  for (std::size_t i = 0; i < designs.size(); ++i) {
    ValidationReport rep = validate(designs[i]);
    if (!rep.valid)
      throw ValidationError("design " + std::to_string(i) + " in " + path +
                            " is invalid: " + rep.violations.front());
  }
  return designs;
}

std::vector<int> id_range(int first, int count) {
  std::vector<int> ids(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) ids[std::size_t(i)] = first + i;
  return ids;
}

// The four-split layout: leading design ids train, the following ones are
// held out; test_L = train designs on held-out loadings, test_G = held-out
// designs on the training loadings, test_GL = held-out designs on sampled
// extrapolation loadings.
DatasetManifest make_manifest(const RunConfig& c, int design_count) {
  const HomogenizeSection& h = c.homogenize;
  if (h.train_designs + h.test_designs > design_count)
    throw ValidationError("designs file holds " + std::to_string(design_count) +
                          " designs, fewer than train_designs + test_designs");

  DatasetManifest m;
  m.paths = training_paths(h.steps);
  const int interp_first = int(m.paths.size());
  for (const DeformationPath& p : interpolation_test_paths(h.steps)) m.paths.push_back(p);
  const int extrap_first = int(m.paths.size());
  Rng rng = Rng(c.seed).substream("extrapolation_paths");
  for (const DeformationPath& p : sample_extrapolation_paths(h.extrapolation_paths, h.steps, rng))
    m.paths.push_back(p);

  const std::vector<int> train_ids = id_range(0, h.train_designs);
  const std::vector<int> test_ids = id_range(h.train_designs, h.test_designs);
  m.splits.push_back({"train", train_ids, id_range(0, interp_first)});
  m.splits.push_back({"test_L", train_ids, id_range(interp_first, extrap_first - interp_first)});
  m.splits.push_back({"test_G", test_ids, id_range(0, interp_first)});
  m.splits.push_back(
      {"test_GL", test_ids, id_range(extrap_first, int(m.paths.size()) - extrap_first)});
  return m;
}

SampleRecord to_record(int design, int path, const HomogenizedPoint& pt) {
  SampleRecord r;
  r.design = std::uint32_t(design);
  r.path = std::uint32_t(path);
  r.t = std::uint16_t(pt.step);
  r.flags = pt.converged ? std::uint16_t(kRecordFlagConverged) : std::uint16_t(0);
  r.F = pt.deformation;
  r.E = sym_to_vec(green_lagrange(pt.deformation));
  r.S = sym_to_vec(pt.second_pk);
  r.W = pt.energy_density;
  return r;
}

// Serves build_dataset tasks from a bounded parallel lookahead along the
// task stream. Records depend only on (design, path), so the output is
// byte-identical to the serial run for any worker count.
class LookaheadSolver {
 public:
  LookaheadSolver(std::vector<std::pair<int, int>> stream, int workers, PathSolver base)
      : stream_(std::move(stream)), workers_(workers), base_(std::move(base)) {}

  std::vector<SampleRecord> operator()(int design, int path) {
    const std::pair<int, int> key{design, path};
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      while (pos_ < stream_.size() && stream_[pos_] != key) ++pos_;
      if (pos_ == stream_.size()) return base_(design, path);  // off-stream request
      fill_window();
      it = cache_.find(key);
    }
    std::vector<SampleRecord> out = std::move(it->second);
    cache_.erase(it);
    return out;
  }

 private:
  void fill_window() {
    const std::size_t end = std::min(pos_ + std::size_t(workers_), stream_.size());
    std::vector<std::pair<int, int>> todo;
    for (std::size_t k = pos_; k < end; ++k)
      if (!cache_.count(stream_[k])) todo.push_back(stream_[k]);
    std::vector<std::vector<SampleRecord>> results(todo.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i; (i = next.fetch_add(1)) < todo.size();)
        results[i] = base_(todo[i].first, todo[i].second);
    };
    std::vector<std::thread> pool;
    const std::size_t n = std::min(std::size_t(workers_), todo.size());
    for (std::size_t w = 0; w + 1 < n; ++w) pool.emplace_back(worker);
    worker();  // the calling thread participates
    for (std::thread& t : pool) t.join();
    for (std::size_t i = 0; i < todo.size(); ++i) cache_[todo[i]] = std::move(results[i]);
  }

  std::vector<std::pair<int, int>> stream_;
  std::size_t pos_ = 0;
  int workers_ = 1;
  PathSolver base_;
  std::map<std::pair<int, int>, std::vector<SampleRecord>> cache_;
};

// Resume tokens cover exactly the inputs that shape the dataset: the global
// seed, the homogenize section, and the designs file bytes.
std::string homogenize_token(const RunConfig& c, const std::string& designs_path) {
  std::uint64_t h = fnv1a("homogenize-v1");
  std::istringstream lines(resolved_config(c));
  std::string line;
  while (std::getline(lines, line))
    if (line.rfind("seed ", 0) == 0 || line.rfind("homogenize.", 0) == 0) h = fnv1a(line, h);
  std::ifstream in(designs_path, std::ios::binary);
  if (!in) throw IoError("cannot read designs file: " + designs_path);
  std::ostringstream bytes;
  bytes << in.rdbuf();
  h = fnv1a(bytes.str(), h);
  std::ostringstream hex;
  hex << std::hex << h;
  return hex.str();
}

MetricsReport split_metrics(const Hypernet& net, const std::vector<OctantGraph>& graphs,
                            const DatasetManifest& manifest, const std::string& dataset_dir,
                            const std::string& split) {
  if (!manifest.find(split)) throw ValidationError("dataset has no split named " + split);
  const std::vector<SampleRecord> records =
      read_records((fs::path(dataset_dir) / (split + ".hcds")).string());
  if (records.empty()) throw ValidationError("split " + split + " is empty");
  for (const SampleRecord& r : records) {
    if (r.design >= graphs.size())
      throw ValidationError("record design id " + std::to_string(r.design) +
                            " exceeds the designs file");
    if (r.path >= manifest.paths.size())
      throw ValidationError("record path id " + std::to_string(r.path) +
                            " exceeds the manifest path table");
  }
  TrainingSet set = assemble_training_set(graphs, records);
  return evaluate(net, set, manifest.paths);
}

void write_summary_csv(const RunConfig& c,
                       const std::vector<std::pair<std::string, MetricsReport>>& reports) {
  std::ofstream out = open_out(resolve_path(c, "metrics_summary.csv"));
  out.precision(17);
  out << "split,component,count,rmse,nrmse,r2,min_true,max_true\n";
  for (const auto& [split, report] : reports)
    for (const ComponentMetrics& m : report.overall)
      out << split << ',' << m.component << ',' << m.count << ',' << m.rmse << ',' << m.nrmse
          << ',' << m.r2 << ',' << m.min_true << ',' << m.max_true << '\n';
  if (!out) throw IoError("failed writing metrics summary");
}

Eigen::Matrix3d affine_endpoint(const SimulateSection& s) {
  Eigen::Matrix3d f;
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 3; ++col) f(r, col) = s.affine[std::size_t(3 * r + col)];
  return f;
}

}  // namespace

void cmd_gen(const RunConfig& c) {
  c.validate();
  log_resolved(c, "gen");

  PerturbParams params;
  params.p_add_edge = c.gen.p_add_edge;
  params.p_remove_edge = c.gen.p_remove_edge;
  params.p_move_face = c.gen.p_move_face;
  params.max_ops = c.gen.max_ops;

  std::vector<OctantGraph> seeds;
  for (const auto& [name, graph] : seed_cells()) seeds.push_back(graph);
  Rng rng = Rng(c.seed).substream("gen");
  std::vector<OctantGraph> designs = generate_designs(c.gen.n, seeds, params, rng);

  const std::string path = resolve_path(c, c.gen.designs);
  save_designs(path, designs);
  std::ofstream manifest = open_out(path + ".manifest");
  manifest << "requested = " << c.gen.n << "\nproduced = " << designs.size()
           << "\nseed = " << c.seed << "\nfile = " << c.gen.designs << "\n";
  if (!manifest) throw IoError("failed writing designs manifest");
  std::cerr << "[trussnet] gen: " << designs.size() << " designs -> " << path << "\n";
}

void cmd_homogenize(const RunConfig& c) {
  c.validate();
  log_resolved(c, "homogenize");

  const std::string designs_path = resolve_path(c, c.homogenize.designs);
  const std::vector<OctantGraph> graphs = load_designs_checked(designs_path);
  const DatasetManifest manifest = make_manifest(c, int(graphs.size()));

  BeamMaterial material;
  material.youngs_modulus = c.homogenize.youngs_modulus;
  material.poisson_ratio = c.homogenize.poisson_ratio;
  material.check();
  SolverConfig solver;
  solver.residual_rel_tol = c.homogenize.residual_rel_tol;

  PathSolver solve_task = [&](int design, int path) -> std::vector<SampleRecord> {
    UnitCellMesh mesh = tessellate(graphs[std::size_t(design)]);
    if (c.homogenize.subdivisions > 1) mesh = subdivided(mesh, c.homogenize.subdivisions);
    Homogenizer h(std::move(mesh), material, c.homogenize.relative_density, solver);
    std::vector<HomogenizedPoint> points;
    try {
      points = h.run_path(manifest.paths[std::size_t(path)]);
    } catch (const SolverError& err) {
      std::cerr << "[trussnet] homogenize: design " << design << " path " << path
                << " diverged: " << err.what() << "\n";
      return {};
    }
    std::vector<SampleRecord> records;
    records.reserve(points.size());
    for (const HomogenizedPoint& pt : points) records.push_back(to_record(design, path, pt));
    return records;
  };

  PathSolver solver_fn = solve_task;
  if (c.threads > 1) {
    std::vector<std::pair<int, int>> stream;
    for (const SplitSpec& split : manifest.splits)
      for (int d : split.designs)
        for (int p : split.paths) stream.emplace_back(d, p);
    solver_fn = LookaheadSolver(std::move(stream), c.threads, solve_task);
  }

  const BuildReport report = build_dataset(resolve_path(c, c.homogenize.dataset), manifest,
                                           solver_fn, homogenize_token(c, designs_path));
  std::cerr << "[trussnet] homogenize: " << report.tasks_total << " tasks ("
            << report.tasks_resumed << " resumed), " << report.records_written << " records, "
            << report.nonconverged_records << " nonconverged\n";
}

void cmd_train(const RunConfig& c) {
  c.validate();
  log_resolved(c, "train");

  const std::vector<OctantGraph> graphs = load_designs_checked(resolve_path(c, c.train.designs));
  const std::string dataset_dir = resolve_path(c, c.train.dataset);
  const DatasetManifest manifest = load_manifest((fs::path(dataset_dir) / "manifest.txt").string());
  if (!manifest.find("train")) throw ValidationError("dataset has no train split");
  const std::vector<SampleRecord> records =
      read_records((fs::path(dataset_dir) / "train.hcds").string());
  const TrainingSet set = assemble_training_set(graphs, records);
  if (set.designs.empty()) throw ValidationError("train split has no converged records");

  TrainConfig tc = c.train.optimizer;
  tc.seed = c.seed;
  Hypernet net;
  net.init(c.seed);
  Trainer trainer(std::move(net), tc);

  const std::string checkpoint = resolve_path(c, c.train.checkpoint);
  trainer.train(set, manifest.paths,
                [&](int epoch, const Trainer& t) {
                  (void)epoch;
                  t.net().save(checkpoint);
                });
  trainer.net().save(checkpoint);

  {
    std::ofstream log = open_out(resolve_path(c, "training_log.csv"));
    Trainer::write_step_csv(log, trainer.step_log());
    if (!log) throw IoError("failed writing training log");
  }
  {
    std::ofstream log = open_out(resolve_path(c, "training_epochs.csv"));
    log.precision(17);
    log << "epoch,mean_loss,train_nrmse\n";
    for (const EpochLog& e : trainer.epoch_log())
      log << e.epoch << ',' << e.mean_loss << ',' << e.train_nrmse << '\n';
    if (!log) throw IoError("failed writing epoch log");
  }

  const std::vector<EpochLog>& epochs = trainer.epoch_log();
  std::cerr << "[trussnet] train: " << set.designs.size() << " designs, "
            << set.record_count() << " records, " << epochs.size() << " epochs";
  if (!epochs.empty())
    std::cerr << ", final loss " << epochs.back().mean_loss << ", train nrmse "
              << epochs.back().train_nrmse;
  std::cerr << ", checkpoint " << checkpoint << "\n";
  if (trainer.aborted())
    throw SolverError("training aborted on a non-finite loss; last good checkpoint kept at " +
                      checkpoint);
}

void cmd_eval(const RunConfig& c) {
  c.validate();
  log_resolved(c, "eval");

  const std::vector<OctantGraph> graphs = load_designs_checked(resolve_path(c, c.eval.designs));
  const std::string dataset_dir = resolve_path(c, c.eval.dataset);
  const DatasetManifest manifest = load_manifest((fs::path(dataset_dir) / "manifest.txt").string());
  const Hypernet net = Hypernet::load(resolve_path(c, c.eval.checkpoint));

  const std::vector<std::string> splits = split_names(c.eval.splits);
  if (splits.empty()) throw ValidationError("eval.splits names no splits");
  std::vector<std::pair<std::string, MetricsReport>> reports;
  for (const std::string& split : splits) {
    MetricsReport report = split_metrics(net, graphs, manifest, dataset_dir, split);
    std::ofstream out = open_out(resolve_path(c, "metrics_" + split + ".csv"));
    report.write_csv(out);
    if (!out) throw IoError("failed writing metrics for split " + split);
    std::cerr << "[trussnet] eval " << split << ": mean normal-stress nrmse "
              << report.mean_normal_stress_nrmse() << ", excluded " << report.excluded << "\n";
    reports.emplace_back(split, std::move(report));
  }
  write_summary_csv(c, reports);
}

void cmd_simulate(const RunConfig& c) {
  c.validate();
  log_resolved(c, "simulate");
  const SimulateSection& s = c.simulate;

  const std::vector<OctantGraph> graphs = load_designs_checked(resolve_path(c, s.designs));
  if (s.design >= int(graphs.size()))
    throw ValidationError("simulate.design " + std::to_string(s.design) +
                          " exceeds the designs file (" + std::to_string(graphs.size()) + ")");
  const Hypernet net = Hypernet::load(resolve_path(c, s.checkpoint));
  const ConstitutiveModel model = net.predict(graphs[std::size_t(s.design)]);

  const bool want_continuum = s.mode != "resolved";
  const bool want_resolved = s.mode != "continuum";
  if (want_resolved && s.program == "affine")
    throw ValidationError("the affine program is a continuum-only probe; set simulate.mode");

  ResponseCurve continuum, resolved;
  if (want_continuum) {
    MacroProblem problem;
    problem.mesh = structured_cube_mesh(s.side, s.divisions);
    problem.youngs_modulus = s.youngs_modulus;
    problem.steps = s.steps;
    problem.solver.residual_rel_tol = s.residual_rel_tol;
    if (s.program == "affine") {
      problem.program = BoundaryProgram::kAffineBoundary;
      problem.affine_deformation = affine_endpoint(s);
    } else {
      problem.program = BoundaryProgram::kUniaxialTop;
      problem.final_displacement = s.u_over_l * s.side;
    }
    continuum = solve(problem, model);
    std::ofstream out = open_out(resolve_path(c, "curve_continuum.csv"));
    write_curve_csv(out, continuum);
    if (!out) throw IoError("failed writing continuum curve");
  }
  if (want_resolved) {
    FullyResolvedProblem problem;
    problem.design = graphs[std::size_t(s.design)];
    problem.tiling = s.tiling;
    problem.subdivisions = s.subdivisions;
    problem.material.youngs_modulus = s.youngs_modulus;
    problem.material.poisson_ratio = s.poisson_ratio;
    problem.relative_density = s.relative_density;
    problem.side = s.side;
    problem.steps = s.steps;
    problem.final_displacement = s.u_over_l * s.side;
    problem.solver.residual_rel_tol = s.residual_rel_tol;
    resolved = fully_resolved(problem);
    std::ofstream out = open_out(resolve_path(c, "curve_resolved.csv"));
    write_curve_csv(out, resolved);
    if (!out) throw IoError("failed writing resolved curve");
  }

  std::ofstream summary = open_out(resolve_path(c, "simulate_summary.txt"));
  summary.precision(17);
  summary << "mode = " << s.mode << "\nprogram = " << s.program << "\ndesign = " << s.design
          << "\n";
  if (want_continuum) {
    summary << "continuum_complete = " << (continuum.complete ? 1 : 0)
            << "\ncontinuum_points = " << continuum.points.size()
            << "\ncontinuum_out_of_range_points = " << continuum.out_of_range_points << "\n";
    if (!continuum.diagnostic.empty())
      summary << "continuum_diagnostic = " << continuum.diagnostic << "\n";
  }
  if (want_resolved) {
    summary << "resolved_complete = " << (resolved.complete ? 1 : 0)
            << "\nresolved_points = " << resolved.points.size() << "\n";
    if (!resolved.diagnostic.empty())
      summary << "resolved_diagnostic = " << resolved.diagnostic << "\n";
  }
  if (want_continuum && want_resolved) {
    try {
      const double nrmse = compare_curves(resolved, continuum);
      summary << "force_nrmse = " << nrmse << "\n";
      std::cerr << "[trussnet] simulate: force nrmse " << nrmse << "\n";
    } catch (const ValidationError& err) {
      summary << "force_nrmse_error = " << err.what() << "\n";
      std::cerr << "[trussnet] simulate: curves not comparable: " << err.what() << "\n";
    }
  }
  if (!summary) throw IoError("failed writing simulate summary");
}

void cmd_export(const RunConfig& c) {
  c.validate();
  log_resolved(c, "export");

  const std::vector<OctantGraph> graphs = load_designs_checked(resolve_path(c, c.export_.designs));
  const std::string dataset_dir = resolve_path(c, c.export_.dataset);
  const DatasetManifest manifest = load_manifest((fs::path(dataset_dir) / "manifest.txt").string());
  const Hypernet net = Hypernet::load(resolve_path(c, c.export_.checkpoint));

  const std::vector<std::string> splits = split_names(c.export_.splits);
  if (splits.empty()) throw ValidationError("export.splits names no splits");

  std::map<int, ConstitutiveModel> models;
  auto model_for = [&](int design) -> const ConstitutiveModel& {
    auto it = models.find(design);
    if (it == models.end())
      it = models.emplace(design, net.predict(graphs[std::size_t(design)])).first;
    return it->second;
  };

  std::vector<std::pair<std::string, MetricsReport>> reports;
  for (const std::string& split : splits) {
    const std::vector<SampleRecord> records =
        read_records((fs::path(dataset_dir) / (split + ".hcds")).string());
    if (records.empty()) throw ValidationError("split " + split + " is empty");

    std::ofstream curves = open_out(resolve_path(c, "curves_" + split + ".csv"));
    curves.precision(17);
    curves << "design,path,family,t,converged,E11,E22,E33,E23,E13,E12,"
              "S11,S22,S33,S23,S13,S12,S11_pred,S22_pred,S33_pred,S23_pred,S13_pred,S12_pred,"
              "W,W_pred\n";
    std::ofstream invariants = open_out(resolve_path(c, "invariants_" + split + ".csv"));
    invariants.precision(17);
    invariants << "design,path,t,i1bar_minus_3,i2bar_minus_3,j_minus_1_sq\n";

    for (const SampleRecord& r : records) {
      if (r.design >= graphs.size() || r.path >= manifest.paths.size())
        throw ValidationError("record ids in split " + split + " exceed the inputs");
      const ConstitutiveModel& model = model_for(int(r.design));
      const Eigen::Matrix3d strain = vec_to_sym(r.E);
      const Vector6d s_pred = sym_to_vec(model.stress(strain));
      const double w_pred = model.energy(strain);

      curves << r.design << ',' << r.path << ','
             << family_name(manifest.paths[r.path].family) << ',' << r.t << ','
             << (r.converged() ? 1 : 0);
      for (int i = 0; i < 6; ++i) curves << ',' << r.E[i];
      for (int i = 0; i < 6; ++i) curves << ',' << r.S[i];
      for (int i = 0; i < 6; ++i) curves << ',' << s_pred[i];
      curves << ',' << r.W << ',' << w_pred << '\n';

      const Eigen::Vector3d iso = isochoric_invariants(r.F);
      invariants << r.design << ',' << r.path << ',' << r.t << ',' << iso[0] - 3.0 << ','
                 << iso[1] - 3.0 << ',' << (iso[2] - 1.0) * (iso[2] - 1.0) << '\n';
    }
    if (!curves) throw IoError("failed writing curves for split " + split);
    if (!invariants) throw IoError("failed writing invariants for split " + split);

    MetricsReport report = split_metrics(net, graphs, manifest, dataset_dir, split);
    std::ofstream metrics = open_out(resolve_path(c, "metrics_" + split + ".csv"));
    report.write_csv(metrics);
    if (!metrics) throw IoError("failed writing metrics for split " + split);
    reports.emplace_back(split, std::move(report));
    std::cerr << "[trussnet] export " << split << ": " << records.size() << " records\n";
  }
  write_summary_csv(c, reports);
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"truss lattice constitutive pipeline"};
  app.require_subcommand(1);

  std::string config_path, out;
  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("--config,-c", config_path, "run configuration file (key = value lines)");
  CLI::Option* opt_seed = app.add_option("--seed", seed, "override the global seed");
  CLI::Option* opt_threads = app.add_option("--threads", threads, "override the worker count");
  CLI::Option* opt_out = app.add_option("--out,-o", out, "override the output directory");

  struct Command {
    const char* name;
    const char* help;
    void (*fn)(const RunConfig&);
  };
  static constexpr Command kCommands[] = {
      {"gen", "generate a population of lattice designs", &cmd_gen},
      {"homogenize", "build the homogenized stress/energy dataset", &cmd_homogenize},
      {"train", "fit the weight generator to the train split", &cmd_train},
      {"eval", "score a checkpoint on dataset splits", &cmd_eval},
      {"simulate", "run macroscale compression studies", &cmd_simulate},
      {"export", "emit plot-ready CSV tables", &cmd_export},
  };
  for (const Command& cmd : kCommands) app.add_subcommand(cmd.name, cmd.help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (opt_seed->count()) c.seed = seed;
    if (opt_threads->count()) c.threads = threads;
    if (opt_out->count()) c.out = out;
    for (const Command& cmd : kCommands)
      if (app.got_subcommand(cmd.name)) {
        cmd.fn(c);
        return 0;
      }
    throw ValidationError("no command given");
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace tn
