// Dataset manifests: the clip inventory with event labels and fold splits
// that drives the 10-fold protocol.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace aed {

enum class DatasetKind { generic, urbansound8k, esc50 };

std::string_view dataset_kind_name(DatasetKind k);
DatasetKind dataset_kind_from_name(std::string_view name);

struct ManifestRow {
  std::string clip_id;
  std::filesystem::path path;  // resolved against the manifest directory
  std::string label;
  int fold = 0;           // 1..10
  std::string category;   // empty when the dataset has no category grouping
};

struct Manifest {
  std::vector<ManifestRow> rows;

  // Sorted unique event labels.
  std::vector<std::string> event_labels() const;
  // Sorted distinct fold numbers.
  std::vector<int> fold_numbers() const;
  // label -> category for rows that carry one; conflicting assignments throw.
  std::map<std::string, std::string> category_map() const;
  // Unique ids, folds inside 1..10 and all ten present, every event in at
  // least two folds.
  void validate() const;
};

// generic / esc50: CSV with header clip_id,path,label,fold[,category]
// (category mandatory in esc50 mode, optional otherwise), paths relative to
// the manifest file. urbansound8k: the dataset's own metadata CSV
// (slice_file_name, fold, class columns); audio resolves to
// <root>/audio/fold<N>/<file> with <root> the metadata directory's parent.
Manifest load_manifest(const std::filesystem::path& path, DatasetKind kind);

// Writes the generic schema; paths are emitted as given.
void save_manifest(const std::filesystem::path& path, const Manifest& m);

}  // namespace aed
