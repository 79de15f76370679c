#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "illum/description.hpp"
#include "illum/domain.hpp"
#include "illum/reachability.hpp"

namespace illum {

struct Stats4 {
  double max = 0.0, median = 0.0, min = 0.0, sum = 0.0;
};

struct MetricsRow {
  double boxes = 0.0;
  Stats4 side_sum;
  Stats4 volume;
  double jaccard = 0.0;
  double overlap = 0.0;
  double conjuncts = 0.0;
  double disjuncts = 0.0;
  double named = 0.0;
  double box_range = 0.0;
  double ma_multiplicity = 0.0, ma_uniqueness = 0.0, ma_prevalence = 0.0;
  double la_multiplicity = 0.0, la_uniqueness = 0.0, la_prevalence = 0.0;

  static constexpr std::size_t kFields = 21;

  // Row labels in report order.
  static const std::array<const char*, kFields>& names() {
    static const std::array<const char*, kFields> n = {
        "Boxes Number",        "Sum side lengths Max", "Sum side lengths Median", "Sum side lengths Min",
        "Sum side lengths Sum", "Volume Max",          "Volume Median",           "Volume Min",
        "Volume Sum",          "Jaccard",              "Overlap coeff.",          "Conjuncts",
        "Disjuncts",           "Named preds.",         "Box-Range preds.",        "MA Multiplicity",
        "MA Uniqueness",       "MA Prevalence",        "LA Multiplicity",         "LA Uniqueness",
        "LA Prevalence"};
    return n;
  }

  std::array<double*, kFields> fields() {
    return {&boxes,          &side_sum.max,    &side_sum.median, &side_sum.min,    &side_sum.sum,
            &volume.max,     &volume.median,   &volume.min,      &volume.sum,      &jaccard,
            &overlap,        &conjuncts,       &disjuncts,       &named,           &box_range,
            &ma_multiplicity, &ma_uniqueness,  &ma_prevalence,   &la_multiplicity, &la_uniqueness,
            &la_prevalence};
  }
  std::array<double, kFields> values() const {
    auto copy = *this;
    std::array<double, kFields> out{};
    auto f = copy.fields();
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = *f[i];
    return out;
  }
};

inline constexpr std::size_t kMetricCount = MetricsRow::kFields;

inline const char* metric_name(std::size_t i) { return MetricsRow::names().at(i); }

/// Median of a copy; the mean of the two middle values for even sizes, 0 when empty.
inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline Stats4 stats4(const std::vector<double>& v) {
  Stats4 s;
  if (v.empty()) return s;
  s.max = *std::max_element(v.begin(), v.end());
  s.min = *std::min_element(v.begin(), v.end());
  s.median = median(v);
  for (double x : v) s.sum += x;
  return s;
}

/// Box statistics over input boxes rescaled so the bounding box is the unit cube.
inline void reach_metrics(const std::vector<Box>& boxes, const Box& bounding, MetricsRow& row) {
  std::vector<double> vols, sides;
  vols.reserve(boxes.size());
  sides.reserve(boxes.size());
  for (const auto& b : boxes) {
    Box n = normalize_box(b, bounding);
    vols.push_back(box_volume(n));
    double s = 0.0;
    for (const auto& iv : n.bounds()) s += iv.width();
    sides.push_back(s);
  }
  row.boxes = static_cast<double>(boxes.size());
  row.volume = stats4(vols);
  row.side_sum = stats4(sides);
}

inline void reach_metrics(const ReachSet& rs, const Box& bounding, MetricsRow& row) {
  std::vector<Box> in;
  in.reserve(rs.pairs.size());
  for (const auto& p : rs.pairs) in.push_back(p.input);
  reach_metrics(in, bounding, row);
}

/// Distinct atomic predicates of a description (named and box-range alike).
inline std::set<std::string> atomic_set(const Description& d) {
  std::set<std::string> out;
  for (const auto& it : d.items)
    for (const auto& m : it.condition.members()) out.insert(literal_key(m));
  return out;
}

struct Similarity {
  double jaccard = 0.0;
  double overlap = 0.0;
};

// Two empty sets count as identical; an empty and a non-empty set share nothing.
inline Similarity similarity(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return {1.0, 1.0};
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  std::size_t uni = a.size() + b.size() - inter;
  std::size_t lo = std::min(a.size(), b.size());
  return {static_cast<double>(inter) / static_cast<double>(uni),
          lo == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(lo)};
}

inline Similarity similarity(const Description& a, const Description& b) {
  return similarity(atomic_set(a), atomic_set(b));
}

/// Structural and label counts. Prevalence divides the distinct labeled
/// predicates by all distinct atomic predicates, box-ranges included.
inline void description_metrics(const Description& d, const DomainPack& pack, MetricsRow& row) {
  std::size_t conj = 0, box_range = 0, ma_mult = 0, la_mult = 0;
  std::set<std::size_t> named, ma, la;
  std::set<std::string> atoms;
  for (const auto& it : d.items) {
    if (it.condition.is_conjunction()) ++conj;
    for (const auto& m : it.condition.members()) {
      atoms.insert(literal_key(m));
      const auto* p = std::get_if<PredicateRef>(&m);
      if (p == nullptr) {
        ++box_range;
        continue;
      }
      named.insert(p->index);
      const auto& lab = pack.predicate(p->index).label;
      if (lab == AbstractLabel::MA) {
        ++ma_mult;
        ma.insert(p->index);
      } else if (lab == AbstractLabel::LA) {
        ++la_mult;
        la.insert(p->index);
      }
    }
  }
  row.disjuncts = static_cast<double>(d.items.size());
  row.conjuncts = static_cast<double>(conj);
  row.named = static_cast<double>(named.size());
  row.box_range = static_cast<double>(box_range);
  double total = static_cast<double>(atoms.size());
  row.ma_multiplicity = static_cast<double>(ma_mult);
  row.ma_uniqueness = static_cast<double>(ma.size());
  row.ma_prevalence = total > 0 ? static_cast<double>(ma.size()) / total : 0.0;
  row.la_multiplicity = static_cast<double>(la_mult);
  row.la_uniqueness = static_cast<double>(la.size());
  row.la_prevalence = total > 0 ? static_cast<double>(la.size()) / total : 0.0;
}

/// after - before for every count and statistic; the similarity fields are
/// filled from the pair itself rather than differenced.
inline MetricsRow relative_change(const MetricsRow& before, const MetricsRow& after, const Similarity& sim) {
  MetricsRow out;
  auto o = out.fields();
  auto a = after.values();
  auto b = before.values();
  for (std::size_t i = 0; i < o.size(); ++i) *o[i] = a[i] - b[i];
  out.jaccard = sim.jaccard;
  out.overlap = sim.overlap;
  return out;
}

}  // namespace illum
