#include "aed/experiment.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <utility>

#include <json.hpp>

#include "aed/error.hpp"
#include "aed/hashing.hpp"
#include "aed/wav_io.hpp"

namespace aed {

namespace fs = std::filesystem;

std::string_view library_version() { return "0.1.0"; }

void ExperimentConfig::validate() const {
  if (components < 1)
    throw InvalidArgument("experiment: components must be at least 1");
  if (!(relevance > 0.0))
    throw InvalidArgument("experiment: relevance must be positive");
  grid.validate();
}

std::uint64_t ExperimentConfig::hash() const {
  std::uint64_t h = hash_of(
      std::string_view("experiment-config"), static_cast<int>(variant),
      static_cast<int>(kernel), components, relevance,
      static_cast<int>(sigma_encoding), mfcc.hash(), seed);
  h = hash_combine(h, gmm.max_iterations);
  h = hash_combine(h, gmm.tolerance);
  h = hash_combine(h, gmm.variance_floor_factor);
  h = hash_combine(h, gmm.kmeans_iterations);
  h = hash_combine(h, grid.folds);
  for (double c : grid.c_values) h = hash_combine(h, c);
  for (double g : grid.gamma_values) h = hash_combine(h, g);
  return h;
}

namespace {

std::uint64_t matrix_hash(const Matrix& m) {
  std::uint64_t h = hash_of(std::string_view("matrix"),
                            static_cast<std::uint64_t>(m.rows()),
                            static_cast<std::uint64_t>(m.cols()));
  return fnv1a(m.data().data(), m.data().size() * sizeof(double), h);
}

fs::path cache_file(const fs::path& root, const char* sub,
                    std::uint64_t key) {
  return root / sub / (hex_string(key) + ".bin");
}

constexpr char kFeatMagic[8] = {'A', 'E', 'D', 'F', 'E', 'A', 'T', '1'};

void write_feature_cache(const fs::path& path, std::uint64_t key,
                         const std::vector<double>& values) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("feature cache: cannot write " + path.string());
  f.write(kFeatMagic, sizeof(kFeatMagic));
  f.write(reinterpret_cast<const char*>(&key), sizeof(key));
  const auto len = static_cast<std::uint32_t>(values.size());
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(reinterpret_cast<const char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!f) throw IoError("feature cache: write failure on " + path.string());
}

std::optional<std::vector<double>> read_feature_cache(const fs::path& path,
                                                      std::uint64_t key) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return std::nullopt;
  char magic[8];
  std::uint64_t stored = 0;
  std::uint32_t len = 0;
  f.read(magic, sizeof(magic));
  f.read(reinterpret_cast<char*>(&stored), sizeof(stored));
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!f || std::memcmp(magic, kFeatMagic, sizeof(magic)) != 0 ||
      stored != key)
    return std::nullopt;
  std::vector<double> values(len);
  f.read(reinterpret_cast<char*>(values.data()),
         static_cast<std::streamsize>(len * sizeof(double)));
  if (!f) return std::nullopt;
  return values;
}

[[noreturn]] void rethrow_with(const std::string& context,
                               const std::exception& e) {
  throw Error(context + ": " + e.what());
}

}  // namespace

Matrix cached_clip_frames(const ManifestRow& row, const MfccConfig& mfcc,
                          const fs::path& cache_dir) {
  const std::uint64_t cfg_hash = mfcc.hash();
  fs::path file;
  if (!cache_dir.empty()) {
    const std::uint64_t key = hash_of(std::string_view("mfcc-cache"), cfg_hash,
                                      std::string_view(row.path.string()));
    file = cache_file(cache_dir, "mfcc", key);
    if (auto cached = read_mfcc_cache(file, cfg_hash)) return *std::move(cached);
  }
  const Waveform w = pad_to_window(load_clip(row.path), mfcc);
  Matrix m = extract_mfcc(w, mfcc);
  if (!file.empty()) {
    fs::create_directories(file.parent_path());
    write_mfcc_cache(file, m, cfg_hash);
  }
  return m;
}

std::vector<double> cached_clip_feature(const Matrix& frames, const DiagGmm& g,
                                        FeatureVariant variant,
                                        double relevance, SigmaEncoding enc,
                                        const fs::path& cache_dir) {
  fs::path file;
  std::uint64_t key = 0;
  if (!cache_dir.empty()) {
    key = hash_of(std::string_view("feat-cache"), gmm_hash(g),
                  matrix_hash(frames), static_cast<int>(variant), relevance,
                  static_cast<int>(enc));
    file = cache_file(cache_dir, "features", key);
    if (auto cached = read_feature_cache(file, key)) return *std::move(cached);
  }
  std::vector<double> values =
      clip_feature(g, frames, variant, relevance, enc).values;
  if (!file.empty()) write_feature_cache(file, key, values);
  return values;
}

ExperimentResult run_experiment(const Manifest& manifest,
                                const ExperimentConfig& cfg,
                                const LineageHook& hook) {
  manifest.validate();
  cfg.validate();
  const auto& rows = manifest.rows;
  const std::size_t n = rows.size();
  const auto events = manifest.event_labels();
  const auto folds = manifest.fold_numbers();

  std::vector<Matrix> frames(n);
  std::vector<std::uint64_t> frame_hash(n);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      frames[i] = cached_clip_frames(rows[i], cfg.mfcc, cfg.cache_dir);
    } catch (const std::exception& e) {
      rethrow_with("clip " + rows[i].clip_id, e);
    }
    frame_hash[i] = matrix_hash(frames[i]);
  }

  GmmTrainConfig gbase = cfg.gmm;
  gbase.components = cfg.components;

  std::map<std::string, std::vector<ScoredClip>> collected;
  for (const int fold : folds) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < n; ++i)
      (rows[i].fold == fold ? test_idx : train_idx).push_back(i);

    if (hook) {
      LineageEvent ev;
      ev.held_out_fold = fold;
      ev.stage = "gmm-frames";
      for (std::size_t i : train_idx) ev.clip_ids.push_back(rows[i].clip_id);
      hook(ev);
    }

    gbase.seed = derive_seed(cfg.seed, "gmm", static_cast<std::uint64_t>(fold));
    DiagGmm g;
    try {
      std::uint64_t gmm_key = hash_of(
          std::string_view("gmm-cache"), gbase.components,
          gbase.max_iterations, gbase.tolerance, gbase.variance_floor_factor,
          gbase.kmeans_iterations, gbase.seed);
      for (std::size_t i : train_idx) gmm_key = hash_combine(gmm_key, frame_hash[i]);
      const fs::path file = cfg.cache_dir.empty()
                                ? fs::path()
                                : cache_file(cfg.cache_dir, "gmm", gmm_key);
      bool hit = false;
      if (!file.empty() && fs::exists(file)) {
        try {
          g = load_gmm(file);
          hit = g.components() == cfg.components;
        } catch (const Error&) {
          hit = false;  // stale or corrupt cache entry; retrain
        }
      }
      if (!hit) {
        std::vector<const Matrix*> parts;
        for (std::size_t i : train_idx) parts.push_back(&frames[i]);
        g = train_gmm(vstack(parts), gbase);
        if (!file.empty()) {
          fs::create_directories(file.parent_path());
          save_gmm(file, g);
        }
      }
    } catch (const std::exception& e) {
      rethrow_with("fold " + std::to_string(fold) + " gmm", e);
    }

    FeatureRows feats(n);
    for (std::size_t i = 0; i < n; ++i) {
      try {
        feats[i] = cached_clip_feature(frames[i], g, cfg.variant,
                                       cfg.relevance, cfg.sigma_encoding,
                                       cfg.cache_dir);
      } catch (const std::exception& e) {
        rethrow_with("fold " + std::to_string(fold) + " features, clip " +
                         rows[i].clip_id,
                     e);
      }
    }

    std::vector<std::string> train_ids, train_labels, test_ids;
    FeatureRows train_rows, test_rows;
    for (std::size_t i : train_idx) {
      train_ids.push_back(rows[i].clip_id);
      train_labels.push_back(rows[i].label);
      train_rows.push_back(feats[i]);
    }
    for (std::size_t i : test_idx) {
      test_ids.push_back(rows[i].clip_id);
      test_rows.push_back(feats[i]);
    }

    for (const auto& event : events) {
      try {
        if (hook) {
          LineageEvent ev;
          ev.held_out_fold = fold;
          ev.stage = "detector-train";
          ev.event = event;
          ev.clip_ids = train_ids;
          hook(ev);
        }
        DetectorConfig dc;
        dc.kernel = cfg.kernel;
        dc.grid = cfg.grid;
        dc.seed = derive_seed(cfg.seed, "detector:" + event,
                              static_cast<std::uint64_t>(fold));
        const SvmModel model = train_event_detector(
            event, train_ids, train_labels, train_rows, cfg.variant, dc);
        const auto scores = score_features(model, test_rows);
        if (hook) {
          LineageEvent ev;
          ev.held_out_fold = fold;
          ev.stage = "score";
          ev.event = event;
          ev.clip_ids = test_ids;
          hook(ev);
        }
        auto& bucket = collected[event];
        for (std::size_t t = 0; t < test_idx.size(); ++t)
          bucket.push_back(
              {test_ids[t], scores[t], rows[test_idx[t]].label == event});
      } catch (const std::exception& e) {
        rethrow_with("fold " + std::to_string(fold) + ", event " + event, e);
      }
    }
  }

  ExperimentResult res;
  res.config_hash = cfg.hash();
  res.seed = cfg.seed;
  std::map<std::string, double> per_event_ap;
  double ap_sum = 0.0, auc_sum = 0.0;
  for (const auto& event : events) {
    EventResult er;
    er.event = event;
    er.scores.clips = collected[event];
    std::sort(er.scores.clips.begin(), er.scores.clips.end(),
              [](const ScoredClip& a, const ScoredClip& b) { return a.id < b.id; });
    er.ap = average_precision(er.scores);
    er.det_auc = det_auc(det_curve(er.scores));
    per_event_ap[event] = er.ap;
    ap_sum += er.ap;
    auc_sum += er.det_auc;
    res.events.push_back(std::move(er));
  }
  res.map = ap_sum / static_cast<double>(events.size());
  res.mean_det_auc = auc_sum / static_cast<double>(events.size());

  const auto categories = manifest.category_map();
  if (!categories.empty()) {
    bool full = true;
    for (const auto& event : events) full &= categories.count(event) > 0;
    if (full) res.category_ap = aggregate_by_category(per_event_ap, categories);
  }
  return res;
}

std::string result_bundle_json(const ExperimentResult& r) {
  nlohmann::json j;
  j["metadata"]["config_hash"] = hex_string(r.config_hash);
  j["metadata"]["det_axes"] = "linear-probability";
  j["metadata"]["seed"] = r.seed;
  j["metadata"]["version"] = std::string(library_version());
  j["map"] = r.map;
  j["mean_det_auc"] = r.mean_det_auc;
  if (!r.category_ap.empty()) j["category_ap"] = r.category_ap;
  auto& events = j["events"] = nlohmann::json::array();
  for (const auto& er : r.events) {
    nlohmann::json je;
    je["event"] = er.event;
    je["ap"] = er.ap;
    je["det_auc"] = er.det_auc;
    auto& scores = je["scores"] = nlohmann::json::array();
    for (const auto& c : er.scores.clips)
      scores.push_back({{"clip_id", c.id},
                        {"positive", c.positive},
                        {"score", c.score}});
    events.push_back(std::move(je));
  }
  return j.dump(2) + "\n";
}

void write_result_bundle(const fs::path& path, const ExperimentResult& r) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("result bundle: cannot write " + path.string());
  f << result_bundle_json(r);
  if (!f) throw IoError("result bundle: write failure on " + path.string());
}

ExperimentResult read_result_bundle(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("result bundle: cannot open " + path.string());
  nlohmann::json j;
  try {
    f >> j;
    ExperimentResult r;
    r.config_hash =
        std::stoull(j.at("metadata").at("config_hash").get<std::string>(),
                    nullptr, 16);
    r.seed = j.at("metadata").at("seed").get<std::uint64_t>();
    r.map = j.at("map").get<double>();
    r.mean_det_auc = j.at("mean_det_auc").get<double>();
    if (j.contains("category_ap"))
      r.category_ap =
          j.at("category_ap").get<std::map<std::string, double>>();
    for (const auto& je : j.at("events")) {
      EventResult er;
      er.event = je.at("event").get<std::string>();
      er.ap = je.at("ap").get<double>();
      er.det_auc = je.at("det_auc").get<double>();
      for (const auto& jc : je.at("scores"))
        er.scores.clips.push_back({jc.at("clip_id").get<std::string>(),
                                   jc.at("score").get<double>(),
                                   jc.at("positive").get<bool>()});
      r.events.push_back(std::move(er));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("result bundle: " + path.string() + ": " + e.what());
  }
}

std::vector<SweepCell> table_cells(const std::vector<int>& component_counts) {
  static constexpr std::pair<FeatureVariant, KernelKind> kColumns[] = {
      {FeatureVariant::alpha, KernelKind::linear},
      {FeatureVariant::alpha, KernelKind::rbf},
      {FeatureVariant::alpha, KernelKind::exp_chi2},
      {FeatureVariant::beta_m, KernelKind::linear},
      {FeatureVariant::beta_m, KernelKind::rbf},
      {FeatureVariant::beta_s, KernelKind::linear},
      {FeatureVariant::beta_s, KernelKind::rbf},
      {FeatureVariant::beta_sigma, KernelKind::linear},
      {FeatureVariant::beta_sigma, KernelKind::rbf},
      {FeatureVariant::beta_s_sigma, KernelKind::linear},
      {FeatureVariant::beta_s_sigma, KernelKind::rbf},
  };
  std::vector<SweepCell> cells;
  for (int m : component_counts)
    for (const auto& [variant, kernel] : kColumns)
      cells.push_back({variant, kernel, m});
  return cells;
}

SweepResult sweep(const Manifest& manifest, const std::vector<SweepCell>& cells,
                  const ExperimentConfig& base, const LineageHook& hook) {
  SweepResult out;
  for (const SweepCell& cell : cells) {
    ExperimentConfig cfg = base;
    cfg.variant = cell.variant;
    cfg.kernel = cell.kernel;
    cfg.components = cell.components;
    try {
      const ExperimentResult r = run_experiment(manifest, cfg, hook);
      out.cells.push_back({cell, r.map, r.mean_det_auc});
    } catch (const std::exception& e) {
      rethrow_with("sweep cell " + std::string(variant_name(cell.variant)) +
                       ":" + std::string(kernel_name(cell.kernel)) +
                       ":M=" + std::to_string(cell.components),
                   e);
    }
  }
  return out;
}

void write_sweep_csv(const fs::path& path, const SweepResult& r) {
  static constexpr std::pair<FeatureVariant, KernelKind> kColumns[] = {
      {FeatureVariant::alpha, KernelKind::linear},
      {FeatureVariant::alpha, KernelKind::rbf},
      {FeatureVariant::alpha, KernelKind::exp_chi2},
      {FeatureVariant::beta_m, KernelKind::linear},
      {FeatureVariant::beta_m, KernelKind::rbf},
      {FeatureVariant::beta_s, KernelKind::linear},
      {FeatureVariant::beta_s, KernelKind::rbf},
      {FeatureVariant::beta_sigma, KernelKind::linear},
      {FeatureVariant::beta_sigma, KernelKind::rbf},
      {FeatureVariant::beta_s_sigma, KernelKind::linear},
      {FeatureVariant::beta_s_sigma, KernelKind::rbf},
  };
  std::ofstream f(path);
  if (!f) throw IoError("sweep table: cannot write " + path.string());
  f << std::setprecision(10) << "metric,m";
  for (const auto& [variant, kernel] : kColumns)
    f << "," << variant_name(variant) << ":" << kernel_name(kernel);
  f << "\n";

  std::set<int> ms;
  for (const auto& c : r.cells) ms.insert(c.cell.components);
  const char* metrics[] = {"map", "mauc"};
  for (const char* metric : metrics) {
    for (int m : ms) {
      f << metric << "," << m;
      for (const auto& [variant, kernel] : kColumns) {
        f << ",";
        for (const auto& c : r.cells)
          if (c.cell.components == m && c.cell.variant == variant &&
              c.cell.kernel == kernel) {
            f << (std::string(metric) == "map" ? c.map : c.mean_det_auc);
            break;
          }
      }
      f << "\n";
    }
  }
  if (!f) throw IoError("sweep table: write failure on " + path.string());
}

}  // namespace aed
