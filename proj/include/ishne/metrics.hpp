#pragma once

#include <string>
#include <vector>

#include "ishne/types.hpp"

namespace ishne {

// Per-class confusion counts for single-label multi-class predictions.
struct ConfusionCounts {
  std::vector<long> true_pos;
  std::vector<long> false_pos;
  std::vector<long> false_neg;
  std::vector<long> gold_count;  // class support in gold
};

ConfusionCounts confusion_counts(const std::vector<ClassId>& pred,
                                 const std::vector<ClassId>& gold);

// For single-label predictions micro-F1 equals accuracy.
double micro_f1(const std::vector<ClassId>& pred,
                const std::vector<ClassId>& gold);

// Unweighted mean of per-class F1 over classes present in gold; a class with
// no true positives and no predictions scores 0.
double macro_f1(const std::vector<ClassId>& pred,
                const std::vector<ClassId>& gold);

// "83.86" style rendering used in reports.
std::string format_percent(double fraction);

}  // namespace ishne
