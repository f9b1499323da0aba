#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dermkit/image.hpp"

namespace dermkit {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& truth);

struct SegMetrics {
  double accuracy = 0.0;     // AC
  double jaccard = 0.0;      // JA
  double dice = 0.0;         // DI
  double sensitivity = 0.0;  // SE
  double specificity = 0.0;  // SP
};

// Zero denominators: SE = 1 without positives, SP = 1 without negatives,
// JA = DI = 1 when prediction and truth are both empty, AC = 1 on no units.
SegMetrics seg_metrics(const ConfusionCounts& c);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  std::vector<RocPoint> curve;  // (0,0) ... (1,1)
  double auc = 0.0;
};

// Sweeps every distinct score as a threshold (score >= t is positive) from
// high to low; the area is the trapezoidal sum, which equals the
// Mann-Whitney statistic with ties counted one half. Throws if only one
// class is present.
RocResult roc_auc(std::span<const double> scores, std::span<const int> labels);

// Mean of the precision at the rank of every positive, ranking by
// descending score with ties kept in input order. Throws without positives.
double average_precision(std::span<const double> scores, std::span<const int> labels);

struct ImageSegScore {
  std::string image_id;
  SegMetrics metrics;
};

// JSON report with per-image metrics, dataset means (in input order) and
// the ranking metric.
std::string segmentation_report(const std::vector<ImageSegScore>& scores);

struct BinaryTaskScore {
  std::string name;  // e.g. "melanoma"
  double auc = 0.0;
  double average_precision = 0.0;
};

std::string classification_report(const std::string& task,
                                  const std::vector<BinaryTaskScore>& scores);

}  // namespace dermkit
