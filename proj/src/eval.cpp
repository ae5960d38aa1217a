#include "scwt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "scwt/error.hpp"
#include "scwt/tensor_io.hpp"

namespace scwt {
namespace {

struct SplitSizes {
  std::size_t test;
  std::size_t val;
};

SplitSizes split_sizes(std::size_t n) {
  const auto test = static_cast<std::size_t>(std::llround(kTestFraction * static_cast<double>(n)));
  const auto val = static_cast<std::size_t>(
      std::llround(kValidationFraction * (1.0 - kTestFraction) * static_cast<double>(n)));
  return {test, val};
}

std::vector<std::size_t> to_ids(const nlohmann::json& j) { return j.get<std::vector<std::size_t>>(); }

// Indices ordered by decreasing score; equal scores keep input order.
std::vector<std::size_t> descending_order(std::span<const double> scores) {
  for (double s : scores) {
    if (!std::isfinite(s)) throw ValidationError("scores must be finite");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw ShapeError("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}

nlohmann::json curve_area(const BinaryCurve& c) {
  return c.area ? nlohmann::json(*c.area) : nlohmann::json(nullptr);
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

nlohmann::json SplitManifest::to_json() const {
  return {{"train", train}, {"val", val}, {"test", test}, {"seed", seed}, {"subject_level", subject_level}};
}

SplitManifest SplitManifest::from_json(const nlohmann::json& j) {
  SplitManifest m;
  m.train = to_ids(j.at("train"));
  m.val = to_ids(j.at("val"));
  m.test = to_ids(j.at("test"));
  m.seed = j.at("seed").get<std::uint64_t>();
  m.subject_level = j.at("subject_level").get<bool>();
  return m;
}

SplitManifest split_dataset(std::span<const std::size_t> ids, std::uint64_t seed) {
  if (ids.size() < 5) throw ValidationError("need at least 5 ids to split");
  std::vector<std::size_t> shuffled(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto sizes = split_sizes(shuffled.size());

  SplitManifest m;
  m.seed = seed;
  const auto test_end = shuffled.begin() + static_cast<std::ptrdiff_t>(sizes.test);
  const auto val_end = test_end + static_cast<std::ptrdiff_t>(sizes.val);
  m.test.assign(shuffled.begin(), test_end);
  m.val.assign(test_end, val_end);
  m.train.assign(val_end, shuffled.end());
  for (auto* list : {&m.train, &m.val, &m.test}) std::sort(list->begin(), list->end());
  return m;
}

SplitManifest split_by_subject(std::span<const std::size_t> ids, std::span<const std::string> subjects,
                               std::uint64_t seed) {
  check_lengths(ids.size(), subjects.size());
  std::vector<std::string> distinct(subjects.begin(), subjects.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 5) throw ValidationError("need at least 5 subjects for a subject-level split");

  std::vector<std::size_t> subject_ids(distinct.size());
  std::iota(subject_ids.begin(), subject_ids.end(), std::size_t{0});
  const SplitManifest by_subject = split_dataset(subject_ids, seed);

  std::map<std::string, int> part;  // 0 train, 1 val, 2 test
  for (auto i : by_subject.train) part[distinct[i]] = 0;
  for (auto i : by_subject.val) part[distinct[i]] = 1;
  for (auto i : by_subject.test) part[distinct[i]] = 2;

  SplitManifest m;
  m.seed = seed;
  m.subject_level = true;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    switch (part.at(subjects[k])) {
      case 0: m.train.push_back(ids[k]); break;
      case 1: m.val.push_back(ids[k]); break;
      default: m.test.push_back(ids[k]); break;
    }
  }
  for (auto* list : {&m.train, &m.val, &m.test}) std::sort(list->begin(), list->end());
  return m;
}

ConfusionSummary confusion_and_accuracy(std::span<const int> predictions, std::span<const int> labels) {
  check_lengths(predictions.size(), labels.size());
  ConfusionSummary s;
  long long correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int t = labels[i];
    const int p = predictions[i];
    if (t < 0 || t >= kNumClasses || p < 0 || p >= kNumClasses) throw ValidationError("class index out of range");
    ++s.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    if (t == p) ++correct;
  }
  s.accuracy = labels.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(labels.size());
  return s;
}

BinaryCurve binary_roc(std::span<const double> scores, std::span<const bool> positive) {
  check_lengths(scores.size(), positive.size());
  const auto order = descending_order(scores);
  const auto n_pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const double n_neg = static_cast<double>(positive.size()) - n_pos;

  BinaryCurve c;
  c.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  if (n_pos == 0.0 || n_neg == 0.0) return c;

  double tp = 0.0;
  double fp = 0.0;
  double area = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    const double threshold = scores[order[k]];
    for (; k < order.size() && scores[order[k]] == threshold; ++k) (positive[order[k]] ? tp : fp) += 1.0;
    const CurvePoint prev = c.points.back();
    const CurvePoint next{threshold, fp / n_neg, tp / n_pos};
    area += (next.x - prev.x) * (next.y + prev.y) / 2.0;
    c.points.push_back(next);
  }
  c.area = area;
  return c;
}

BinaryCurve binary_precision_recall(std::span<const double> scores, std::span<const bool> positive) {
  check_lengths(scores.size(), positive.size());
  const auto order = descending_order(scores);
  const auto n_pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));

  BinaryCurve c;
  c.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
  if (n_pos == 0.0) return c;

  double tp = 0.0;
  double seen = 0.0;
  double ap = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    const double threshold = scores[order[k]];
    for (; k < order.size() && scores[order[k]] == threshold; ++k) {
      seen += 1.0;
      if (positive[order[k]]) tp += 1.0;
    }
    const double recall = tp / n_pos;
    const double precision = tp / seen;
    ap += (recall - c.points.back().x) * precision;
    c.points.push_back({threshold, recall, precision});
  }
  c.area = ap;
  return c;
}

namespace {

template <class CurveFn>
PerClassCurves one_vs_rest(std::span<const ScoreRow> scores, std::span<const int> labels, CurveFn curve) {
  check_lengths(scores.size(), labels.size());
  PerClassCurves out;
  std::vector<double> column(scores.size());
  // std::vector<bool> is bit-packed, so keep the mask in a plain array.
  const auto mask = std::make_unique<bool[]>(scores.size());
  const std::span<const bool> positive(mask.get(), scores.size());
  double sum = 0.0;
  int defined = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      column[i] = scores[i][static_cast<std::size_t>(c)];
      mask[i] = labels[i] == c;
    }
    out.curves[static_cast<std::size_t>(c)] = curve(column, positive);
    if (const auto& a = out.curves[static_cast<std::size_t>(c)].area) {
      sum += *a;
      ++defined;
    }
  }
  if (defined > 0) out.macro = sum / defined;
  return out;
}

}  // namespace

PerClassCurves roc_auc_ovr(std::span<const ScoreRow> scores, std::span<const int> labels) {
  return one_vs_rest(scores, labels, binary_roc);
}

PerClassCurves precision_recall_ap(std::span<const ScoreRow> scores, std::span<const int> labels) {
  return one_vs_rest(scores, labels, binary_precision_recall);
}

MetricsReport evaluate_predictions(std::span<const int> predictions, std::span<const ScoreRow> scores,
                                   std::span<const int> labels) {
  check_lengths(scores.size(), labels.size());
  MetricsReport r;
  r.samples = labels.size();
  r.summary = confusion_and_accuracy(predictions, labels);
  r.roc = roc_auc_ovr(scores, labels);
  r.pr = precision_recall_ap(scores, labels);
  return r;
}

nlohmann::json MetricsReport::to_json() const {
  auto per_class = nlohmann::json::array();
  for (int c = 0; c < kNumClasses; ++c) {
    const auto k = static_cast<std::size_t>(c);
    long long support = 0;
    for (auto v : summary.confusion[k]) support += v;
    per_class.push_back({{"class", std::string(class_name(class_from_index(c)))},
                         {"support", support},
                         {"auc", curve_area(roc.curves[k])},
                         {"ap", curve_area(pr.curves[k])}});
  }
  auto macro = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"samples", samples},
          {"accuracy", summary.accuracy},
          {"auc_macro", macro(roc.macro)},
          {"ap_macro", macro(pr.macro)},
          {"confusion", summary.confusion},
          {"per_class", per_class}};
}

void write_curve_csvs(const std::filesystem::path& dir, const MetricsReport& report) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const BinaryCurve& curve) {
    std::string text = "threshold,x,y\n";
    for (const auto& p : curve.points) {
      text += format_double(p.threshold) + "," + format_double(p.x) + "," + format_double(p.y) + "\n";
    }
    write_text_file(dir / name, text);
  };
  for (int c = 0; c < kNumClasses; ++c) {
    const std::string cls(class_name(class_from_index(c)));
    write("roc_" + cls + ".csv", report.roc.curves[static_cast<std::size_t>(c)]);
    write("pr_" + cls + ".csv", report.pr.curves[static_cast<std::size_t>(c)]);
  }
}

}  // namespace scwt
