// aedbench: synthetic corpus generation, feature caching, background model
// training and the 10-fold detection benchmark.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aed/error.hpp"
#include "aed/experiment.hpp"
#include "aed/gmm.hpp"
#include "aed/manifest.hpp"
#include "aed/matrix.hpp"
#include "aed/parallel.hpp"
#include "aed/synth.hpp"

namespace fs = std::filesystem;

namespace {

struct DataOpts {
  std::string manifest;
  std::string dataset = "generic";
  std::string cache;
};

void add_data_opts(CLI::App* cmd, DataOpts& d) {
  cmd->add_option("--manifest", d.manifest, "Manifest / metadata CSV path")
      ->required();
  cmd->add_option("--dataset", d.dataset,
                  "Manifest flavor: generic, urbansound8k or esc50")
      ->capture_default_str();
  cmd->add_option("--cache", d.cache, "Cache root directory")
      ->envname("AEDBENCH_CACHE");
}

void add_mfcc_opts(CLI::App* cmd, aed::MfccConfig& m) {
  cmd->add_option("--window-ms", m.window_ms)->capture_default_str();
  cmd->add_option("--hop-ms", m.hop_ms)->capture_default_str();
  cmd->add_option("--coeffs", m.n_coeffs)->capture_default_str();
  cmd->add_option("--mel-filters", m.n_mel_filters)->capture_default_str();
  cmd->add_option("--fft-size", m.fft_size)->capture_default_str();
  cmd->add_option("--fmin", m.fmin_hz)->capture_default_str();
  cmd->add_option("--fmax", m.fmax_hz)->capture_default_str();
}

void add_gmm_opts(CLI::App* cmd, aed::GmmTrainConfig& g) {
  cmd->add_option("--gmm-max-iter", g.max_iterations)->capture_default_str();
  cmd->add_option("--gmm-tol", g.tolerance)->capture_default_str();
  cmd->add_option("--gmm-kmeans-iter", g.kmeans_iterations)
      ->capture_default_str();
  cmd->add_option("--gmm-floor-factor", g.variance_floor_factor)
      ->capture_default_str();
}

void add_grid_opts(CLI::App* cmd, aed::CvGrid& grid) {
  cmd->add_option("--c-grid", grid.c_values, "Slack candidates")
      ->delimiter(',');
  cmd->add_option("--gamma-grid", grid.gamma_values, "Gamma candidates")
      ->delimiter(',');
  cmd->add_option("--cv-folds", grid.folds)->capture_default_str();
}

aed::Manifest load(const DataOpts& d) {
  return aed::load_manifest(d.manifest, aed::dataset_kind_from_name(d.dataset));
}

aed::SigmaEncoding sigma_from_name(const std::string& name) {
  if (name == "stddev") return aed::SigmaEncoding::std_dev;
  if (name == "variance") return aed::SigmaEncoding::variance;
  throw aed::InvalidArgument("unknown sigma encoding: " + name);
}

std::string safe_filename(const std::string& name) {
  std::string out = name;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_')
      c = '_';
  return out;
}

void write_event_table(const fs::path& path,
                       const std::vector<aed::EventResult>& events) {
  std::ofstream f(path);
  if (!f) throw aed::IoError("report: cannot write " + path.string());
  f << "event,ap,det_auc\n";
  f.precision(10);
  for (const auto& er : events)
    f << er.event << "," << er.ap << "," << er.det_auc << "\n";
}

int run_cli(int argc, char** argv) {
  CLI::App app{"GMM soft-count and supervector benchmark for audio event "
               "detection"};
  app.set_config("--config", "", "Read options from a key=value file");
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all hardware)")
      ->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  std::string synth_out;
  aed::SynthConfig synth_cfg;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--clips-per-class", synth_cfg.clips_per_class)
      ->capture_default_str();
  synth->add_option("--seconds", synth_cfg.clip_seconds)
      ->capture_default_str();
  synth->add_option("--seed", synth_cfg.seed)->capture_default_str();
  synth->add_option("--folds", synth_cfg.fold_count)->capture_default_str();

  // extract
  auto* extract =
      app.add_subcommand("extract", "Populate the MFCC / feature cache");
  DataOpts extract_data;
  aed::MfccConfig extract_mfcc;
  std::string extract_gmm, extract_variant = "alpha",
                           extract_sigma = "stddev";
  double extract_relevance = 20.0;
  add_data_opts(extract, extract_data);
  add_mfcc_opts(extract, extract_mfcc);
  extract->add_option("--gmm", extract_gmm,
                      "Also cache features against this model file");
  extract->add_option("--variant", extract_variant)->capture_default_str();
  extract->add_option("--relevance,-r", extract_relevance)
      ->capture_default_str();
  extract->add_option("--sigma-encoding", extract_sigma)
      ->capture_default_str();

  // train-gmm
  auto* train = app.add_subcommand("train-gmm", "Train a background model");
  DataOpts train_data;
  aed::MfccConfig train_mfcc;
  aed::GmmTrainConfig train_gcfg;
  std::vector<int> train_folds;
  std::string train_out = "gmm.bin";
  add_data_opts(train, train_data);
  add_mfcc_opts(train, train_mfcc);
  add_gmm_opts(train, train_gcfg);
  train->add_option("--components,-m", train_gcfg.components)
      ->capture_default_str();
  train->add_option("--seed", train_gcfg.seed)->capture_default_str();
  train->add_option("--folds", train_folds,
                    "Train on these folds only (default: all)")
      ->delimiter(',');
  train->add_option("--out", train_out, "Model output path")
      ->capture_default_str();

  // run
  auto* run = app.add_subcommand("run", "Run one 10-fold experiment");
  DataOpts run_data;
  aed::ExperimentConfig run_cfg;
  std::string run_variant = "alpha", run_kernel = "lk",
              run_sigma = "stddev", run_out = "results.json";
  add_data_opts(run, run_data);
  add_mfcc_opts(run, run_cfg.mfcc);
  add_gmm_opts(run, run_cfg.gmm);
  add_grid_opts(run, run_cfg.grid);
  run->add_option("--variant", run_variant,
                  "alpha, beta_m, beta_s, beta_sigma or beta_s_sigma")
      ->capture_default_str();
  run->add_option("--kernel", run_kernel, "lk, rk or ck")
      ->capture_default_str();
  run->add_option("--components,-m", run_cfg.components)
      ->capture_default_str();
  run->add_option("--relevance,-r", run_cfg.relevance)->capture_default_str();
  run->add_option("--sigma-encoding", run_sigma)->capture_default_str();
  run->add_option("--seed", run_cfg.seed)->capture_default_str();
  run->add_option("--out", run_out, "Results bundle path")
      ->capture_default_str();

  // sweep
  auto* sweep_cmd =
      app.add_subcommand("sweep", "Run the full benchmark table");
  DataOpts sweep_data;
  aed::ExperimentConfig sweep_cfg;
  std::vector<int> sweep_ms = {32, 64, 128, 256};
  std::vector<std::string> sweep_variants, sweep_kernels;
  std::string sweep_sigma = "stddev", sweep_out = "tables.csv";
  add_data_opts(sweep_cmd, sweep_data);
  add_mfcc_opts(sweep_cmd, sweep_cfg.mfcc);
  add_gmm_opts(sweep_cmd, sweep_cfg.gmm);
  add_grid_opts(sweep_cmd, sweep_cfg.grid);
  sweep_cmd->add_option("--components,-m", sweep_ms, "Model sizes")
      ->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--variants", sweep_variants,
                        "Restrict to these feature variants")
      ->delimiter(',');
  sweep_cmd->add_option("--kernels", sweep_kernels,
                        "Restrict to these kernels")
      ->delimiter(',');
  sweep_cmd->add_option("--relevance,-r", sweep_cfg.relevance)
      ->capture_default_str();
  sweep_cmd->add_option("--sigma-encoding", sweep_sigma)
      ->capture_default_str();
  sweep_cmd->add_option("--seed", sweep_cfg.seed)->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "Table CSV path")
      ->capture_default_str();

  // report
  auto* report =
      app.add_subcommand("report", "Tables and DET points from bundles");
  std::vector<std::string> report_bundles;
  std::string report_dir = ".";
  bool report_fuse = false;
  report->add_option("--bundle", report_bundles, "Results bundle(s)")
      ->required()
      ->delimiter(',');
  report->add_option("--out-dir", report_dir)->capture_default_str();
  report->add_flag("--fuse", report_fuse,
                   "Also score the min-max fusion of all bundles");

  CLI11_PARSE(app, argc, argv);
  aed::set_worker_count(threads);

  if (synth->parsed()) {
    const fs::path manifest = aed::synth_dataset(synth_cfg, synth_out);
    std::cout << "wrote " << manifest.string() << "\n";
    return 0;
  }

  if (extract->parsed()) {
    if (extract_data.cache.empty())
      throw aed::InvalidArgument("extract: --cache (or AEDBENCH_CACHE) is "
                                 "required");
    const aed::Manifest m = load(extract_data);
    const bool with_features = !extract_gmm.empty();
    aed::DiagGmm g;
    if (with_features) g = aed::load_gmm(extract_gmm);
    const auto variant = aed::variant_from_name(extract_variant);
    const auto enc = sigma_from_name(extract_sigma);
    for (const auto& row : m.rows) {
      const aed::Matrix frames =
          aed::cached_clip_frames(row, extract_mfcc, extract_data.cache);
      if (with_features)
        aed::cached_clip_feature(frames, g, variant, extract_relevance, enc,
                                 extract_data.cache);
    }
    std::cout << "cached " << (with_features ? "MFCCs and features" : "MFCCs")
              << " for " << m.rows.size() << " clips\n";
    return 0;
  }

  if (train->parsed()) {
    const aed::Manifest m = load(train_data);
    const std::set<int> wanted(train_folds.begin(), train_folds.end());
    std::vector<aed::Matrix> frames;
    for (const auto& row : m.rows) {
      if (!wanted.empty() && wanted.count(row.fold) == 0) continue;
      frames.push_back(
          aed::cached_clip_frames(row, train_mfcc, train_data.cache));
    }
    if (frames.empty())
      throw aed::InvalidArgument("train-gmm: no clips in the selected folds");
    std::vector<const aed::Matrix*> parts;
    for (const auto& f : frames) parts.push_back(&f);
    aed::GmmTrainReport rep;
    const aed::DiagGmm g = aed::train_gmm(aed::vstack(parts), train_gcfg, &rep);
    aed::save_gmm(train_out, g);
    std::cout << "trained " << g.components() << "-component model on "
              << frames.size() << " clips, mean log-likelihood "
              << rep.log_likelihood.back() << (rep.converged ? "" : " (hit iteration cap)")
              << "\nwrote " << train_out << "\n";
    return 0;
  }

  if (run->parsed()) {
    run_cfg.variant = aed::variant_from_name(run_variant);
    run_cfg.kernel = aed::kernel_from_name(run_kernel);
    run_cfg.sigma_encoding = sigma_from_name(run_sigma);
    run_cfg.cache_dir = run_data.cache;
    const aed::Manifest m = load(run_data);
    const aed::ExperimentResult r = aed::run_experiment(m, run_cfg);
    aed::write_result_bundle(run_out, r);
    std::cout.precision(4);
    for (const auto& er : r.events)
      std::cout << er.event << ": ap " << er.ap << ", det auc " << er.det_auc
                << "\n";
    std::cout << "map " << r.map << ", mean det auc " << r.mean_det_auc
              << "\nwrote " << run_out << "\n";
    return 0;
  }

  if (sweep_cmd->parsed()) {
    sweep_cfg.sigma_encoding = sigma_from_name(sweep_sigma);
    sweep_cfg.cache_dir = sweep_data.cache;
    const aed::Manifest m = load(sweep_data);
    std::vector<aed::SweepCell> cells = aed::table_cells(sweep_ms);
    if (!sweep_variants.empty() || !sweep_kernels.empty()) {
      std::set<aed::FeatureVariant> vs;
      std::set<aed::KernelKind> ks;
      for (const auto& v : sweep_variants) vs.insert(aed::variant_from_name(v));
      for (const auto& k : sweep_kernels) ks.insert(aed::kernel_from_name(k));
      std::erase_if(cells, [&](const aed::SweepCell& c) {
        return (!vs.empty() && vs.count(c.variant) == 0) ||
               (!ks.empty() && ks.count(c.kernel) == 0);
      });
    }
    if (cells.empty())
      throw aed::InvalidArgument("sweep: no cells match the filters");
    const aed::SweepResult r = aed::sweep(m, cells, sweep_cfg);
    std::cout.precision(4);
    for (const auto& c : r.cells)
      std::cout << aed::variant_name(c.cell.variant) << ":"
                << aed::kernel_name(c.cell.kernel) << ":M="
                << c.cell.components << "  map " << c.map << "  mauc "
                << c.mean_det_auc << "\n";
    aed::write_sweep_csv(sweep_out, r);
    std::cout << "wrote " << sweep_out << "\n";
    return 0;
  }

  if (report->parsed()) {
    fs::create_directories(report_dir);
    std::vector<aed::ExperimentResult> results;
    for (const auto& b : report_bundles)
      results.push_back(aed::read_result_bundle(b));
    for (std::size_t i = 0; i < results.size(); ++i) {
      const std::string stem = fs::path(report_bundles[i]).stem().string();
      write_event_table(fs::path(report_dir) / (stem + "-events.csv"),
                        results[i].events);
      for (const auto& er : results[i].events)
        aed::write_det_points(
            (fs::path(report_dir) /
             (stem + "-det-" + safe_filename(er.event) + ".txt"))
                .string(),
            aed::det_curve(er.scores));
    }
    if (report_fuse && results.size() > 1) {
      std::vector<aed::EventResult> fused_events;
      for (const auto& er : results.front().events) {
        std::vector<aed::ScoredSet> systems;
        for (const auto& r : results)
          for (const auto& other : r.events)
            if (other.event == er.event) systems.push_back(other.scores);
        if (systems.size() != results.size())
          throw aed::InvalidArgument("report: bundles disagree on events");
        aed::EventResult fe;
        fe.event = er.event;
        fe.scores = aed::fuse_scores(systems);
        fe.ap = aed::average_precision(fe.scores);
        fe.det_auc = aed::det_auc(aed::det_curve(fe.scores));
        fused_events.push_back(std::move(fe));
      }
      write_event_table(fs::path(report_dir) / "fused-events.csv",
                        fused_events);
      for (const auto& er : fused_events)
        aed::write_det_points(
            (fs::path(report_dir) /
             ("fused-det-" + safe_filename(er.event) + ".txt"))
                .string(),
            aed::det_curve(er.scores));
      double map = 0.0;
      for (const auto& er : fused_events) map += er.ap;
      std::cout.precision(4);
      std::cout << "fused map " << map / fused_events.size() << "\n";
    }
    std::cout << "wrote report to " << report_dir << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "aedbench: " << e.what() << "\n";
    return 1;
  }
}
