// Experiment orchestration: synthesize -> reconstruct -> stats -> report.
//
// The pipeline maps independent per-sample work over a bounded worker pool.
// Determinism contract: every random draw comes from a keyed substream
// (seed, tag, indices), results land in preallocated per-index slots, and
// reductions run serially in index order after the pool joins, so artifacts
// are identical for any worker count. The multi-stage continuation is
// sequential by construction: stage j starts every sample from the mean of
// the stage j-1 batch, which is the coupling that tames the nonconvexity.

#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "gratstat/config.hpp"
#include "gratstat/core.hpp"
#include "gratstat/forward.hpp"
#include "gratstat/inverse.hpp"
#include "gratstat/manifest.hpp"
#include "gratstat/numio.hpp"
#include "gratstat/stats.hpp"
#include "gratstat/surface.hpp"

namespace gratstat {

namespace fs = std::filesystem;

// Sample-level parallelism owns the cores; nested BLAS threading would
// oversubscribe and, worse, let reduction splits vary between runs. Called
// by binaries before the first factorization; respects explicit user picks.
inline void pin_blas_threads() {
  ::setenv("OPENBLAS_NUM_THREADS", "1", 0);
  ::setenv("OMP_NUM_THREADS", "1", 0);
}

inline int resolve_workers(int configured) {
  if (configured > 0) return configured;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Index-sharded parallel map. fn(i) must only touch state owned by index i.
template <typename Fn>
inline void parallel_for(int count, int workers, Fn &&fn) {
  if (count <= 0) return;
  const int nthreads = std::min(workers, count);
  if (nthreads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<size_t>(nthreads));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(nthreads));
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t] {
      try {
        while (true) {
          const int i = next.fetch_add(1);
          if (i >= count) break;
          fn(i);
        }
      } catch (...) {
        errors[static_cast<size_t>(t)] = std::current_exception();
        next.store(count); // drain remaining work
      }
    });
  }
  for (auto &th : pool) th.join();
  for (const auto &e : errors)
    if (e) std::rethrow_exception(e);
}

namespace detail {

inline std::string zero_pad(int v, int width) {
  std::string s = std::to_string(v);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

inline std::string pnd_rel(int m, int stage, int angle) {
  return "dataset/pnd_m" + zero_pad(m, 4) + "_s" + std::to_string(stage) + "_a" +
         std::to_string(angle) + ".csv";
}

inline std::string path_rel(int m) { return "dataset/paths/path_m" + zero_pad(m, 4) + ".csv"; }

inline std::string coeff_rel(int m) { return "recon/coeff_m" + zero_pad(m, 4) + ".csv"; }

inline std::string kde_rel(size_t loc_index) {
  return "stats/kde_" + std::to_string(loc_index) + ".csv";
}

inline void write_pnd_csv(const fs::path &file, const NearFieldData &d) {
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<size_t>(d.p.size()));
  for (int n = -d.N; n <= d.N; ++n) {
    const Complex v = d.p[n + d.N];
    rows.push_back({static_cast<double>(n), v.real(), v.imag()});
  }
  write_csv(file.string(), {"n", "re_p", "im_p"}, rows);
}

inline VectorXcd read_pnd_csv(const fs::path &file, int N) {
  const CsvTable t = read_csv(file.string());
  if (t.header != std::vector<std::string>{"n", "re_p", "im_p"})
    throw ArtifactError("unexpected data header in " + file.string());
  if (static_cast<int>(t.rows.size()) != 2 * N + 1)
    throw ArtifactError("unexpected mode count in " + file.string());
  VectorXcd p(2 * N + 1);
  for (int i = 0; i <= 2 * N; ++i) {
    const auto &row = t.rows[static_cast<size_t>(i)];
    if (static_cast<int>(row[0]) != i - N)
      throw ArtifactError("unexpected mode ordering in " + file.string());
    p[i] = Complex(row[1], row[2]);
  }
  return p;
}

inline void write_coeff_csv(const fs::path &file, const FourierProfile &a) {
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<size_t>(a.a.size()));
  for (int p = 0; p < a.a.size(); ++p) rows.push_back({static_cast<double>(p), a.a[p]});
  write_csv(file.string(), {"p", "a"}, rows);
}

inline FourierProfile read_coeff_csv(const fs::path &file) {
  const CsvTable t = read_csv(file.string());
  if (t.header != std::vector<std::string>{"p", "a"})
    throw ArtifactError("unexpected coefficient header in " + file.string());
  if (t.rows.empty() || t.rows.size() % 2 == 0)
    throw ArtifactError("coefficient count must be odd in " + file.string());
  VectorXd a(t.rows.size());
  for (size_t i = 0; i < t.rows.size(); ++i) {
    if (static_cast<size_t>(t.rows[i][0]) != i)
      throw ArtifactError("unexpected coefficient ordering in " + file.string());
    a[static_cast<Eigen::Index>(i)] = t.rows[i][1];
  }
  return FourierProfile(a);
}

inline double wall_ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

} // namespace detail

// ---------------------------------------------------------------------------
// synthesize: draw surfaces, simulate near-field data for every stage/angle
// pair a sample participates in, persist records plus the dataset manifest.

struct SynthesisSummary {
  int records = 0;
  int flagged = 0;
};

inline SynthesisSummary cmd_synthesize(const ExperimentConfig &config, const fs::path &outdir) {
  const Schedule &sched = config.schedule;
  const SurfaceSpec spec = config.surface_spec();
  const GeometryConfig geom = config.resolved_geometry();
  const int M_Q = sched.M_per_stage.back();
  const int Q = sched.Q();
  const int L = static_cast<int>(sched.angles.size());

  fs::create_directories(outdir / "dataset");
  if (config.synth.export_paths) fs::create_directories(outdir / "dataset" / "paths");

  struct RecordMeta {
    int m, stage, angle;
    Real fit_rel_rms;
    bool flagged;
  };
  // per-sample record lists, merged in index order afterwards
  std::vector<std::vector<RecordMeta>> metas(static_cast<size_t>(M_Q));

  SynthesisOptions opt;
  opt.n_extra = config.synth.n_extra;
  opt.tau = sched.tau;
  opt.flag_tol = config.synth.residual_flag;

  parallel_for(M_Q, resolve_workers(config.workers), [&](int m) {
    const SurfaceSample surf = draw_surface(spec, m, sched.seed);
    for (int j = 0; j < Q; ++j) {
      if (m >= sched.M_per_stage[static_cast<size_t>(j)]) continue;
      for (int l = 0; l < L; ++l) {
        Substream noise(sched.seed, "noise", static_cast<std::uint64_t>(m),
                        static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(l));
        const NearFieldData d = synthesize_near_field(
            config.medium, sched.kappas[static_cast<size_t>(j)],
            sched.angles[static_cast<size_t>(l)], geom.b_plus, surf.f, surf.fp, sched.N, opt,
            &noise, spec.base.grid_offset_frac);
        detail::write_pnd_csv(outdir / detail::pnd_rel(m, j, l), d);
        metas[static_cast<size_t>(m)].push_back({m, j, l, d.fit_rel_rms, d.flagged});
      }
    }
    if (config.synth.export_paths) {
      const VectorXd x = stats_grid(config.stats.n);
      std::vector<std::vector<double>> rows;
      for (int i = 0; i < x.size(); ++i) rows.push_back({x[i], surf.f(x[i])});
      write_csv((outdir / detail::path_rel(m)).string(), {"x", "f"}, rows);
    }
  });

  Manifest man = make_manifest("dataset", config);
  Json records = Json::array();
  SynthesisSummary sum;
  for (int m = 0; m < M_Q; ++m) {
    for (const auto &r : metas[static_cast<size_t>(m)]) {
      const std::string rel = detail::pnd_rel(r.m, r.stage, r.angle);
      record_file(man, outdir, rel);
      records.push_back({{"m", r.m},
                         {"stage", r.stage},
                         {"angle", r.angle},
                         {"file", rel},
                         {"fit_rel_rms", r.fit_rel_rms},
                         {"flagged", r.flagged}});
      ++sum.records;
      if (r.flagged) ++sum.flagged;
    }
    if (config.synth.export_paths) record_file(man, outdir, detail::path_rel(m));
  }
  man.extra["records"] = std::move(records);
  man.extra["record_count"] = sum.records;
  man.extra["flagged_count"] = sum.flagged;

  write_json_file(outdir / "config.json", config_identity_json(config));
  record_file(man, outdir, "config.json");
  write_manifest(man, outdir, "dataset/manifest.json");
  return sum;
}

// ---------------------------------------------------------------------------
// reconstruct: the two-step continuation over the persisted dataset.

struct ReconstructionSummary {
  int samples = 0;
  int flagged = 0;  // samples with any flagged data record
  int diverged = 0; // samples whose descent tripped the divergence guard
};

inline ReconstructionSummary cmd_reconstruct(const ExperimentConfig &config,
                                             const fs::path &outdir) {
  const Schedule &sched = config.schedule;
  const GeometryConfig geom = config.resolved_geometry();
  const int M_Q = sched.M_per_stage.back();
  const int Q = sched.Q();
  const int L = static_cast<int>(sched.angles.size());

  const Manifest dm = read_manifest(outdir, "dataset/manifest.json");
  require_same_experiment(dm, config, "reconstruct");
  verify_manifest_files(dm, outdir);

  std::vector<char> sample_flagged(static_cast<size_t>(M_Q), 0);
  for (const auto &r : dm.extra.at("records")) {
    if (r.at("flagged").get<bool>())
      sample_flagged[r.at("m").get<size_t>()] = 1;
  }
  std::vector<char> sample_diverged(static_cast<size_t>(M_Q), 0);

  fs::create_directories(outdir / "recon");
  std::ofstream log(outdir / "recon" / "stages.jsonl", std::ios::binary);
  if (!log) throw ArtifactError("cannot write: " + (outdir / "recon" / "stages.jsonl").string());

  std::vector<FourierProfile> current(static_cast<size_t>(M_Q));
  std::vector<StageTrace> traces(static_cast<size_t>(M_Q));
  std::vector<double> walls(static_cast<size_t>(M_Q));
  Json samples_extra = Json::array();
  for (int m = 0; m < M_Q; ++m)
    samples_extra.push_back(
        {{"m", m}, {"flagged", static_cast<bool>(sample_flagged[static_cast<size_t>(m)])},
         {"stages", Json::array()}});

  int prev_batch = 0;
  for (int j = 0; j < Q; ++j) {
    const int M_j = sched.M_per_stage[static_cast<size_t>(j)];
    const Real kappa_j = sched.kappas[static_cast<size_t>(j)];

    // stage seed profile: flat at the measurement height first, then the
    // previous batch mean, widened to the stage coefficient count
    FourierProfile init;
    if (j == 0) {
      init.a = VectorXd::Constant(1, geom.b_plus);
    } else {
      VectorXd acc = VectorXd::Zero(current[0].a.size());
      for (int m = 0; m < prev_batch; ++m) acc += current[static_cast<size_t>(m)].a;
      init.a = acc / static_cast<Real>(prev_batch);
    }
    init = init.resized(z_of(kappa_j));

    StageSettings set;
    set.N = sched.N;
    set.N_prime = sched.N_prime;
    set.eps = sched.eps;
    set.gamma = sched.gamma;
    set.delta = sched.delta;
    set.T = sched.T;
    set.eta = eta_for(kappa_j, sched);
    set.b_plus = geom.b_plus;

    parallel_for(M_j, resolve_workers(config.workers), [&](int m) {
      const auto t0 = std::chrono::steady_clock::now();
      StageData sd;
      sd.kappa = kappa_j;
      sd.angles.resize(static_cast<size_t>(L));
      for (int l = 0; l < L; ++l) {
        sd.angles[static_cast<size_t>(l)].theta = sched.angles[static_cast<size_t>(l)];
        sd.angles[static_cast<size_t>(l)].pnd =
            detail::read_pnd_csv(outdir / detail::pnd_rel(m, j, l), sched.N);
      }
      StageTrace tr;
      current[static_cast<size_t>(m)] = landweber_stage(config.medium, sd, set, init, &tr);
      traces[static_cast<size_t>(m)] = tr;
      walls[static_cast<size_t>(m)] = detail::wall_ms_since(t0);
    });

    for (int m = 0; m < M_j; ++m) {
      const StageTrace &tr = traces[static_cast<size_t>(m)];
      if (tr.diverged) sample_diverged[static_cast<size_t>(m)] = 1;
      Json line = {{"m", m},
                   {"stage", j},
                   {"iterations", tr.iterations},
                   {"step_norm", tr.step_norm},
                   {"J_final", tr.J_final},
                   {"converged", tr.converged},
                   {"diverged", tr.diverged},
                   {"wall_ms", walls[static_cast<size_t>(m)]}};
      log << line.dump() << "\n";
      samples_extra[static_cast<size_t>(m)]["stages"].push_back(
          {{"stage", j},
           {"iterations", tr.iterations},
           {"step_norm", tr.step_norm},
           {"J_final", tr.J_final},
           {"converged", tr.converged},
           {"diverged", tr.diverged}});
    }
    prev_batch = M_j;
  }
  log.flush();
  if (!log) throw ArtifactError("write failed: recon/stages.jsonl");

  Manifest man = make_manifest("recon", config);
  ReconstructionSummary sum;
  sum.samples = M_Q;
  for (int m = 0; m < M_Q; ++m) {
    detail::write_coeff_csv(outdir / detail::coeff_rel(m), current[static_cast<size_t>(m)]);
    record_file(man, outdir, detail::coeff_rel(m));
    if (sample_flagged[static_cast<size_t>(m)]) ++sum.flagged;
    if (sample_diverged[static_cast<size_t>(m)]) ++sum.diverged;
  }
  man.logs.push_back("recon/stages.jsonl");
  man.extra["samples"] = std::move(samples_extra);
  man.extra["flagged_samples"] = sum.flagged;
  man.extra["diverged_samples"] = sum.diverged;
  write_manifest(man, outdir, "recon/manifest.json");
  return sum;
}

// ---------------------------------------------------------------------------
// stats: reduce the reconstructed ensemble to mean/covariance/densities.

inline MatrixXd ground_truth_covariance(const ExperimentConfig &config) {
  const SurfaceSpec spec = config.surface_spec();
  const int n = config.stats.n;
  if (config.stats.ground_truth == "nominal")
    return nominal_covariance(n, spec.sigma, spec.ell);
  if (config.stats.ground_truth == "periodized")
    return periodized_covariance(n, spec.sigma, spec.ell);
  // empirical: covariance of the drawn surfaces themselves, same seeds as
  // the synthesized dataset
  const int M_Q = config.schedule.M_per_stage.back();
  const VectorXd x = stats_grid(n);
  MatrixXd D(M_Q, n);
  for (int m = 0; m < M_Q; ++m) {
    const SurfaceSample s = draw_surface(spec, m, config.schedule.seed);
    for (int i = 0; i < n; ++i) D(m, i) = s.f(x[i]);
  }
  return compute_ensemble_stats(std::move(D)).cov;
}

inline void cmd_stats(const ExperimentConfig &config, const fs::path &outdir) {
  const Manifest rm = read_manifest(outdir, "recon/manifest.json");
  require_same_experiment(rm, config, "stats");
  verify_manifest_files(rm, outdir);

  const int M_Q = config.schedule.M_per_stage.back();
  std::vector<FourierProfile> profiles;
  profiles.reserve(static_cast<size_t>(M_Q));
  for (int m = 0; m < M_Q; ++m)
    profiles.push_back(detail::read_coeff_csv(outdir / detail::coeff_rel(m)));

  const EnsembleStats st = compute_ensemble_stats(profiles, config.stats.n);
  const auto base = preset_profile(config.surface_preset);

  fs::create_directories(outdir / "stats");
  Manifest man = make_manifest("stats", config);

  {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < st.x.size(); ++i)
      rows.push_back({st.x[i], st.mean[i], base.f(st.x[i])});
    write_csv((outdir / "stats" / "mean_curve.csv").string(), {"x", "f_bar", "f_tilde"}, rows);
    record_file(man, outdir, "stats/mean_curve.csv");
  }
  {
    std::vector<std::string> header(static_cast<size_t>(st.cov.cols()));
    for (int i = 0; i < st.cov.cols(); ++i) header[static_cast<size_t>(i)] = "c" + std::to_string(i);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < st.cov.rows(); ++i) {
      std::vector<double> row(static_cast<size_t>(st.cov.cols()));
      for (int k = 0; k < st.cov.cols(); ++k) row[static_cast<size_t>(k)] = st.cov(i, k);
      rows.push_back(std::move(row));
    }
    write_csv((outdir / "stats" / "covariance.csv").string(), header, rows);
    record_file(man, outdir, "stats/covariance.csv");

    const MatrixXd truth = ground_truth_covariance(config);
    std::vector<std::vector<double>> trows;
    for (int i = 0; i < truth.rows(); ++i) {
      std::vector<double> row(static_cast<size_t>(truth.cols()));
      for (int k = 0; k < truth.cols(); ++k) row[static_cast<size_t>(k)] = truth(i, k);
      trows.push_back(std::move(row));
    }
    write_csv((outdir / "stats" / "covariance_truth.csv").string(), header, trows);
    record_file(man, outdir, "stats/covariance_truth.csv");
  }

  Json degenerate = Json::array();
  for (size_t li = 0; li < config.stats.kde_locations.size(); ++li) {
    const Real loc = config.stats.kde_locations[li];
    std::vector<Real> values;
    values.reserve(profiles.size());
    for (const auto &pr : profiles) values.push_back(pr.eval(loc));
    std::vector<std::vector<double>> rows;
    if (M_Q >= 2) {
      const Kde k = make_kde(std::move(values));
      if (k.degenerate) {
        degenerate.push_back(loc);
      } else {
        Real lo = k.values.front(), hi = lo;
        for (const Real v : k.values) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        lo -= 4.0 * k.bandwidth;
        hi += 4.0 * k.bandwidth;
        for (int i = 0; i < 201; ++i) {
          const Real t = lo + (hi - lo) * i / 200;
          rows.push_back({t, k.eval(t)});
        }
      }
    } else {
      degenerate.push_back(loc);
    }
    write_csv((outdir / detail::kde_rel(li)).string(), {"t", "density"}, rows);
    record_file(man, outdir, detail::kde_rel(li));
  }

  man.extra["n"] = config.stats.n;
  man.extra["M"] = st.M;
  man.extra["kde_locations"] = config.stats.kde_locations;
  man.extra["degenerate_kde"] = std::move(degenerate);
  write_manifest(man, outdir, "stats/manifest.json");
}

// ---------------------------------------------------------------------------
// report: error metrics against the configured ground truth, plus the
// consolidated run manifest.

inline Json cmd_report(const ExperimentConfig &config, const fs::path &outdir) {
  const Manifest sm = read_manifest(outdir, "stats/manifest.json");
  require_same_experiment(sm, config, "report");
  verify_manifest_files(sm, outdir);
  const Manifest rm = read_manifest(outdir, "recon/manifest.json");
  require_same_experiment(rm, config, "report");
  const Manifest dm = read_manifest(outdir, "dataset/manifest.json");
  require_same_experiment(dm, config, "report");

  const int n = config.stats.n;
  const CsvTable mean_tab = read_csv((outdir / "stats" / "mean_curve.csv").string());
  if (static_cast<int>(mean_tab.rows.size()) != n)
    throw ArtifactError("stats/mean_curve.csv row count does not match stats.n");
  Real acc = 0.0;
  for (int i = 0; i < n - 1; ++i) {
    const Real d = mean_tab.rows[static_cast<size_t>(i)][1] - mean_tab.rows[static_cast<size_t>(i)][2];
    acc += d * d;
  }
  const Real em = std::sqrt(acc * TWO_PI / static_cast<Real>(n - 1));

  const CsvTable cov_tab = read_csv((outdir / "stats" / "covariance.csv").string());
  const CsvTable truth_tab = read_csv((outdir / "stats" / "covariance_truth.csv").string());
  if (static_cast<int>(cov_tab.rows.size()) != n || static_cast<int>(truth_tab.rows.size()) != n)
    throw ArtifactError("covariance artifacts do not match stats.n");
  MatrixXd cov(n, n), truth(n, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      cov(i, k) = cov_tab.rows[static_cast<size_t>(i)][static_cast<size_t>(k)];
      truth(i, k) = truth_tab.rows[static_cast<size_t>(i)][static_cast<size_t>(k)];
    }
  }

  const int M_Q = config.schedule.M_per_stage.back();
  const int flagged = rm.extra.at("flagged_samples").get<int>();
  const Real flagged_fraction = static_cast<Real>(flagged) / static_cast<Real>(M_Q);

  Json metrics;
  metrics["err_mean"] = em;
  if (truth.cwiseAbs().sum() > 0.0) {
    metrics["err_cov"] = err_cov(cov, truth);
  } else {
    metrics["err_cov"] = nullptr; // deterministic surface: no spread to compare
  }
  metrics["n"] = n;
  metrics["M"] = M_Q;
  metrics["ground_truth"] = config.stats.ground_truth;
  metrics["flagged_fraction"] = flagged_fraction;
  write_json_file(outdir / "metrics.json", metrics);

  Manifest man = make_manifest("run", config);
  for (const Manifest *part : {&dm, &rm, &sm}) {
    for (auto it = part->files.begin(); it != part->files.end(); ++it)
      man.files[it.key()] = it.value();
    for (const auto &lg : part->logs) man.logs.push_back(lg);
  }
  record_file(man, outdir, "metrics.json");
  man.extra["samples"] = rm.extra.at("samples");
  man.extra["flagged_fraction"] = flagged_fraction;
  man.extra["metrics"] = metrics;
  write_manifest(man, outdir, "run_manifest.json");
  return metrics;
}

// ---------------------------------------------------------------------------

struct RunSummary {
  Json metrics;
  Real flagged_fraction = 0.0;
};

inline RunSummary cmd_run(const ExperimentConfig &config, const fs::path &outdir) {
  cmd_synthesize(config, outdir);
  cmd_reconstruct(config, outdir);
  cmd_stats(config, outdir);
  RunSummary s;
  s.metrics = cmd_report(config, outdir);
  s.flagged_fraction = s.metrics.at("flagged_fraction").get<Real>();
  if (s.flagged_fraction > 0.10)
    throw NumericalError("run: flagged-sample fraction " +
                         fmt_double(s.flagged_fraction) + " exceeds 10%");
  return s;
}

} // namespace gratstat
