#include "aed/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "aed/error.hpp"

namespace aed {

namespace {

void check_scores_finite(const ScoredSet& s) {
  for (const auto& c : s.clips)
    if (!std::isfinite(c.score))
      throw InvalidArgument("scored set: non-finite score for clip " + c.id);
}

// Indices sorted by descending score; ties keep input order (irrelevant to
// the metrics, which treat tie groups as units).
std::vector<std::size_t> rank_order(const ScoredSet& s) {
  std::vector<std::size_t> idx(s.clips.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return s.clips[a].score > s.clips[b].score;
  });
  return idx;
}

}  // namespace

std::size_t ScoredSet::positive_count() const {
  std::size_t n = 0;
  for (const auto& c : clips) n += c.positive ? 1 : 0;
  return n;
}

std::size_t ScoredSet::negative_count() const {
  return clips.size() - positive_count();
}

double average_precision(const ScoredSet& s) {
  const std::size_t p = s.positive_count();
  if (p == 0) throw InvalidArgument("average_precision: no positives");
  check_scores_finite(s);
  const auto order = rank_order(s);

  double sum = 0.0;
  std::size_t tp = 0;
  std::size_t rank = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    // one tie group at a time
    std::size_t j = i;
    std::size_t group_tp = 0;
    const double score = s.clips[order[i]].score;
    while (j < order.size() && s.clips[order[j]].score == score) {
      group_tp += s.clips[order[j]].positive ? 1 : 0;
      ++j;
    }
    tp += group_tp;
    rank = j;  // group's final rank
    sum += static_cast<double>(group_tp) * static_cast<double>(tp) /
           static_cast<double>(rank);
    i = j;
  }
  return sum / static_cast<double>(p);
}

DetCurve det_curve(const ScoredSet& s) {
  const std::size_t p = s.positive_count();
  const std::size_t n = s.negative_count();
  if (p == 0 || n == 0)
    throw InvalidArgument("det_curve: need at least one positive and one negative");
  check_scores_finite(s);
  const auto order = rank_order(s);

  DetCurve curve;
  curve.points.push_back({0.0, 1.0});  // threshold above every score
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    const double score = s.clips[order[i]].score;
    while (j < order.size() && s.clips[order[j]].score == score) {
      if (s.clips[order[j]].positive)
        ++tp;
      else
        ++fp;
      ++j;
    }
    curve.points.push_back(
        {static_cast<double>(fp) / static_cast<double>(n),
         static_cast<double>(p - tp) / static_cast<double>(p)});
    i = j;
  }
  // last computed point is (FA=1, miss=0); keep it even if present
  if (curve.points.back().false_alarm != 1.0 ||
      curve.points.back().miss != 0.0)
    curve.points.push_back({1.0, 0.0});
  return curve;
}

double det_auc(const DetCurve& c) {
  if (c.points.size() < 2)
    throw InvalidArgument("det_auc: need at least two points");
  // integrate in order of increasing false alarm
  std::vector<DetPoint> pts = c.points;
  std::sort(pts.begin(), pts.end(), [](const DetPoint& a, const DetPoint& b) {
    if (a.false_alarm != b.false_alarm) return a.false_alarm < b.false_alarm;
    return a.miss > b.miss;
  });
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double dx = pts[i].false_alarm - pts[i - 1].false_alarm;
    area += 0.5 * dx * (pts[i].miss + pts[i - 1].miss);
  }
  return area;
}

double mean_value(const std::vector<double>& values) {
  if (values.empty()) throw InvalidArgument("mean_value: empty group");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

std::map<std::string, double> aggregate_by_category(
    const std::map<std::string, double>& per_event,
    const std::map<std::string, std::string>& event_category) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& [event, value] : per_event) {
    auto it = event_category.find(event);
    if (it == event_category.end())
      throw InvalidArgument("aggregate: event not in category map: " + event);
    groups[it->second].push_back(value);
  }
  std::map<std::string, double> out;
  for (const auto& [cat, values] : groups) out[cat] = mean_value(values);
  return out;
}

ScoredSet fuse_scores(const std::vector<ScoredSet>& systems) {
  if (systems.empty()) throw InvalidArgument("fuse_scores: no systems");
  const ScoredSet& first = systems.front();
  for (const ScoredSet& s : systems) {
    if (s.clips.size() != first.clips.size())
      throw InvalidArgument("fuse_scores: clip sets differ in size");
    for (std::size_t i = 0; i < s.clips.size(); ++i)
      if (s.clips[i].id != first.clips[i].id ||
          s.clips[i].positive != first.clips[i].positive)
        throw InvalidArgument("fuse_scores: clip sets or labels differ");
  }

  ScoredSet fused = first;
  for (auto& c : fused.clips) c.score = 0.0;
  const double inv = 1.0 / static_cast<double>(systems.size());
  for (const ScoredSet& s : systems) {
    check_scores_finite(s);
    double lo = s.clips.front().score, hi = lo;
    for (const auto& c : s.clips) {
      lo = std::min(lo, c.score);
      hi = std::max(hi, c.score);
    }
    const double span = hi - lo;
    for (std::size_t i = 0; i < s.clips.size(); ++i) {
      // constant systems normalize to 0.5, which cannot change a ranking
      const double norm = span > 0.0 ? (s.clips[i].score - lo) / span : 0.5;
      fused.clips[i].score += norm * inv;
    }
  }
  return fused;
}

void write_det_points(const std::string& path, const DetCurve& c) {
  std::ofstream f(path);
  if (!f) throw IoError("det points: cannot write " + path);
  f << "false_alarm miss\n";
  for (const auto& p : c.points) f << p.false_alarm << " " << p.miss << "\n";
  if (!f) throw IoError("det points: write failure on " + path);
}

}  // namespace aed
