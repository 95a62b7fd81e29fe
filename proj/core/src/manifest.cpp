#include "aed/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "aed/error.hpp"

namespace aed {

std::string_view dataset_kind_name(DatasetKind k) {
  switch (k) {
    case DatasetKind::generic: return "generic";
    case DatasetKind::urbansound8k: return "urbansound8k";
    case DatasetKind::esc50: return "esc50";
  }
  throw InvalidArgument("unknown dataset kind");
}

DatasetKind dataset_kind_from_name(std::string_view name) {
  if (name == "generic") return DatasetKind::generic;
  if (name == "urbansound8k") return DatasetKind::urbansound8k;
  if (name == "esc50") return DatasetKind::esc50;
  throw InvalidArgument("unknown dataset kind: " + std::string(name));
}

std::vector<std::string> Manifest::event_labels() const {
  std::set<std::string> labels;
  for (const auto& r : rows) labels.insert(r.label);
  return {labels.begin(), labels.end()};
}

std::vector<int> Manifest::fold_numbers() const {
  std::set<int> folds;
  for (const auto& r : rows) folds.insert(r.fold);
  return {folds.begin(), folds.end()};
}

std::map<std::string, std::string> Manifest::category_map() const {
  std::map<std::string, std::string> out;
  for (const auto& r : rows) {
    if (r.category.empty()) continue;
    auto [it, inserted] = out.emplace(r.label, r.category);
    if (!inserted && it->second != r.category)
      throw FormatError("manifest: conflicting categories for label " +
                        r.label);
  }
  return out;
}

void Manifest::validate() const {
  if (rows.empty()) throw FormatError("manifest: no rows");
  std::set<std::string> ids;
  std::set<int> folds;
  std::map<std::string, std::set<int>> event_folds;
  for (const auto& r : rows) {
    if (!ids.insert(r.clip_id).second)
      throw FormatError("manifest: duplicate clip id " + r.clip_id);
    if (r.fold < 1 || r.fold > 10)
      throw FormatError("manifest: fold outside 1..10 for clip " + r.clip_id);
    folds.insert(r.fold);
    event_folds[r.label].insert(r.fold);
  }
  if (folds.size() != 10)
    throw FormatError("manifest: expected all folds 1..10, found " +
                      std::to_string(folds.size()));
  for (const auto& [label, fs] : event_folds)
    if (fs.size() < 2)
      throw FormatError("manifest: event " + label +
                        " present in fewer than 2 folds");
  category_map();  // surfaces conflicts
}

namespace {

// Minimal CSV: comma separator, double-quote quoting with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line,
                                        std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  if (quoted)
    throw FormatError("manifest: unterminated quote on line " +
                      std::to_string(line_no));
  fields.push_back(cur);
  return fields;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // padded to header size

  std::size_t column(const std::string& name, const std::string& file) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw FormatError("manifest: missing column '" + name + "' in " + file);
    return static_cast<std::size_t>(it - header.begin());
  }
};

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("manifest: cannot open " + path.string());
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line, line_no);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw FormatError("manifest: line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, header has " +
                        std::to_string(t.header.size()) + " in " +
                        path.string());
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty())
    throw FormatError("manifest: empty file " + path.string());
  return t;
}

int parse_fold(const std::string& text, const std::string& file) {
  std::size_t used = 0;
  int fold = 0;
  try {
    fold = std::stoi(text, &used);
  } catch (const std::exception&) {
    throw FormatError("manifest: bad fold value '" + text + "' in " + file);
  }
  if (used != text.size())
    throw FormatError("manifest: bad fold value '" + text + "' in " + file);
  return fold;
}

Manifest load_generic(const std::filesystem::path& path, bool category_required) {
  const CsvTable t = read_csv(path);
  const std::string file = path.string();
  const std::size_t id_col = t.column("clip_id", file);
  const std::size_t path_col = t.column("path", file);
  const std::size_t label_col = t.column("label", file);
  const std::size_t fold_col = t.column("fold", file);
  const bool has_category =
      std::find(t.header.begin(), t.header.end(), "category") !=
      t.header.end();
  if (category_required && !has_category)
    throw FormatError("manifest: missing column 'category' in " + file);
  const std::size_t cat_col = has_category ? t.column("category", file) : 0;

  const std::filesystem::path base = path.parent_path();
  Manifest m;
  for (const auto& row : t.rows) {
    ManifestRow r;
    r.clip_id = row[id_col];
    r.path = base / std::filesystem::path(row[path_col]);
    r.label = row[label_col];
    r.fold = parse_fold(row[fold_col], file);
    if (has_category) r.category = row[cat_col];
    if (category_required && r.category.empty())
      throw FormatError("manifest: empty category for clip " + r.clip_id);
    m.rows.push_back(std::move(r));
  }
  return m;
}

Manifest load_urbansound8k(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::string file = path.string();
  const std::size_t name_col = t.column("slice_file_name", file);
  const std::size_t fold_col = t.column("fold", file);
  const std::size_t class_col = t.column("class", file);

  // metadata/UrbanSound8K.csv sits next to audio/fold<N>/ directories
  const std::filesystem::path root = path.parent_path().parent_path();
  Manifest m;
  for (const auto& row : t.rows) {
    ManifestRow r;
    r.clip_id = row[name_col];
    r.fold = parse_fold(row[fold_col], file);
    r.label = row[class_col];
    r.path = root / "audio" / ("fold" + std::to_string(r.fold)) / r.clip_id;
    m.rows.push_back(std::move(r));
  }
  return m;
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path, DatasetKind kind) {
  Manifest m;
  switch (kind) {
    case DatasetKind::generic: m = load_generic(path, false); break;
    case DatasetKind::esc50: m = load_generic(path, true); break;
    case DatasetKind::urbansound8k: m = load_urbansound8k(path); break;
  }
  m.validate();
  return m;
}

void save_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream f(path);
  if (!f) throw IoError("manifest: cannot write " + path.string());
  bool with_category = false;
  for (const auto& r : m.rows) with_category |= !r.category.empty();
  f << "clip_id,path,label,fold" << (with_category ? ",category" : "") << "\n";
  for (const auto& r : m.rows) {
    f << r.clip_id << "," << r.path.generic_string() << "," << r.label << ","
      << r.fold;
    if (with_category) f << "," << r.category;
    f << "\n";
  }
  if (!f) throw IoError("manifest: write failure on " + path.string());
}

}  // namespace aed
