// Ranked-retrieval and detection metrics: per-event average precision, DET
// curves and their area, aggregation over events and semantic categories,
// and decision-level score fusion.

#pragma once

#include <map>
#include <string>
#include <vector>

namespace aed {

struct ScoredClip {
  std::string id;
  double score = 0.0;
  bool positive = false;
};

// One event's scores over the evaluated clips.
struct ScoredSet {
  std::vector<ScoredClip> clips;

  std::size_t positive_count() const;
  std::size_t negative_count() const;
};

// Mean of precision-at-positive-ranks. Tied scores form one group; every
// positive in the group takes the precision at the group's final rank, so
// the value does not depend on input order.
double average_precision(const ScoredSet& s);

struct DetPoint {
  double false_alarm = 0.0;
  double miss = 0.0;
};

// Threshold sweep over distinct score values, plus the two limit endpoints
// (FA=1, miss=0) and (FA=0, miss=1). Probabilities on linear axes.
struct DetCurve {
  std::vector<DetPoint> points;  // ordered by descending threshold
};

DetCurve det_curve(const ScoredSet& s);

// Trapezoidal area of miss over false-alarm rate, linear axes. 0 = perfect.
double det_auc(const DetCurve& c);

double mean_value(const std::vector<double>& values);

// Unweighted mean within each category. Throws when an event is missing
// from the category map.
std::map<std::string, double> aggregate_by_category(
    const std::map<std::string, double>& per_event,
    const std::map<std::string, std::string>& event_category);

// Decision-level fusion: per-system min-max normalization to [0, 1], then
// the per-clip mean. All systems must score the same clips with the same
// labels.
ScoredSet fuse_scores(const std::vector<ScoredSet>& systems);

// DET points as two-column text ("false_alarm miss" header).
void write_det_points(const std::string& path, const DetCurve& c);

}  // namespace aed
