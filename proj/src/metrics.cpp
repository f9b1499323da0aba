#include "dermkit/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace dermkit {

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& truth) {
  if (!pred.same_size(truth.height, truth.width)) {
    throw std::invalid_argument("confusion: mask sizes differ");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.data[i] != 0;
    const bool t = truth.data[i] != 0;
    if (p && t) ++c.tp;
    else if (!p && !t) ++c.tn;
    else if (p) ++c.fp;
    else ++c.fn;
  }
  return c;
}

SegMetrics seg_metrics(const ConfusionCounts& c) {
  const auto tp = static_cast<double>(c.tp);
  const auto tn = static_cast<double>(c.tn);
  const auto fp = static_cast<double>(c.fp);
  const auto fn = static_cast<double>(c.fn);
  SegMetrics m;
  const double total = tp + tn + fp + fn;
  m.accuracy = total > 0 ? (tp + tn) / total : 1.0;
  m.sensitivity = tp + fn > 0 ? tp / (tp + fn) : 1.0;
  m.specificity = tn + fp > 0 ? tn / (tn + fp) : 1.0;
  const double uni = tp + fn + fp;
  m.jaccard = uni > 0 ? tp / uni : 1.0;
  m.dice = uni > 0 ? 2.0 * tp / (2.0 * tp + fn + fp) : 1.0;
  return m;
}

namespace {

void check_scores(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("score and label counts differ");
  }
  for (int l : labels) {
    if (l != 0 && l != 1) throw std::invalid_argument("labels must be 0 or 1");
  }
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

RocResult roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_scores(scores, labels);
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) {
    throw std::invalid_argument("ROC AUC needs both positive and negative items");
  }
  const auto order = descending_order(scores);
  RocResult r;
  r.curve.push_back({0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  // Twice the area in units of 1/(pos*neg), kept integral for exactness.
  std::uint64_t area2 = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    std::size_t dtp = 0;
    std::size_t dfp = 0;
    for (; i < order.size() && scores[order[i]] == t; ++i) {
      (labels[order[i]] ? dtp : dfp) += 1;
    }
    area2 += static_cast<std::uint64_t>(dfp) * (2 * tp + dtp);
    tp += dtp;
    fp += dfp;
    r.curve.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                       static_cast<double>(tp) / static_cast<double>(pos)});
  }
  r.auc = static_cast<double>(area2) / (2.0 * static_cast<double>(pos) *
                                        static_cast<double>(neg));
  return r;
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
  check_scores(scores, labels);
  const auto order = descending_order(scores);
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (!labels[order[rank]]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
  }
  if (hits == 0) throw std::invalid_argument("average precision needs a positive item");
  return sum / static_cast<double>(hits);
}

namespace {

nlohmann::ordered_json to_json(const SegMetrics& m) {
  nlohmann::ordered_json j;
  j["AC"] = m.accuracy;
  j["JA"] = m.jaccard;
  j["DI"] = m.dice;
  j["SE"] = m.sensitivity;
  j["SP"] = m.specificity;
  return j;
}

}  // namespace

std::string segmentation_report(const std::vector<ImageSegScore>& scores) {
  nlohmann::ordered_json report;
  report["task"] = "task1";
  report["images"] = nlohmann::ordered_json::array();
  SegMetrics mean;
  for (const auto& s : scores) {
    nlohmann::ordered_json j;
    j["image_id"] = s.image_id;
    j["metrics"] = to_json(s.metrics);
    report["images"].push_back(j);
    mean.accuracy += s.metrics.accuracy;
    mean.jaccard += s.metrics.jaccard;
    mean.dice += s.metrics.dice;
    mean.sensitivity += s.metrics.sensitivity;
    mean.specificity += s.metrics.specificity;
  }
  if (!scores.empty()) {
    const auto n = static_cast<double>(scores.size());
    mean.accuracy /= n;
    mean.jaccard /= n;
    mean.dice /= n;
    mean.sensitivity /= n;
    mean.specificity /= n;
  }
  report["mean"] = to_json(mean);
  report["rank_metric"] = "JA";
  report["rank_value"] = mean.jaccard;
  return report.dump(2) + "\n";
}

std::string classification_report(const std::string& task,
                                  const std::vector<BinaryTaskScore>& scores) {
  nlohmann::ordered_json report;
  report["task"] = task;
  report["categories"] = nlohmann::ordered_json::array();
  double mean_auc = 0.0;
  for (const auto& s : scores) {
    nlohmann::ordered_json j;
    j["name"] = s.name;
    j["AUC"] = s.auc;
    j["AP"] = s.average_precision;
    report["categories"].push_back(j);
    mean_auc += s.auc;
  }
  if (!scores.empty()) mean_auc /= static_cast<double>(scores.size());
  report["rank_metric"] = "AUC";
  report["rank_value"] = mean_auc;
  return report.dump(2) + "\n";
}

}  // namespace dermkit
