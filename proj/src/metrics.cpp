#include "ishne/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ishne/error.hpp"

namespace ishne {

namespace {

void check_inputs(const std::vector<ClassId>& pred,
                  const std::vector<ClassId>& gold) {
  if (pred.empty() || gold.empty())
    fail(ErrorCode::empty_input, "no predictions to score");
  if (pred.size() != gold.size())
    fail(ErrorCode::shape_mismatch, "pred/gold length mismatch");
}

}  // namespace

ConfusionCounts confusion_counts(const std::vector<ClassId>& pred,
                                 const std::vector<ClassId>& gold) {
  check_inputs(pred, gold);
  ClassId max_class = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    max_class = std::max({max_class, pred[i], gold[i]});
  ConfusionCounts c;
  c.true_pos.assign(static_cast<size_t>(max_class) + 1, 0);
  c.false_pos.assign(static_cast<size_t>(max_class) + 1, 0);
  c.false_neg.assign(static_cast<size_t>(max_class) + 1, 0);
  c.gold_count.assign(static_cast<size_t>(max_class) + 1, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    c.gold_count[static_cast<size_t>(gold[i])]++;
    if (pred[i] == gold[i]) {
      c.true_pos[static_cast<size_t>(gold[i])]++;
    } else {
      c.false_pos[static_cast<size_t>(pred[i])]++;
      c.false_neg[static_cast<size_t>(gold[i])]++;
    }
  }
  return c;
}

double micro_f1(const std::vector<ClassId>& pred,
                const std::vector<ClassId>& gold) {
  check_inputs(pred, gold);
  long hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == gold[i]) hits++;
  // Aggregated TP / (TP + (FP+FN)/2) collapses to accuracy when every item
  // gets exactly one predicted label.
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double macro_f1(const std::vector<ClassId>& pred,
                const std::vector<ClassId>& gold) {
  const ConfusionCounts c = confusion_counts(pred, gold);
  double total = 0.0;
  int classes = 0;
  for (std::size_t k = 0; k < c.true_pos.size(); ++k) {
    if (c.gold_count[k] == 0) continue;  // absent from gold: excluded
    const double tp = static_cast<double>(c.true_pos[k]);
    const double denom = 2.0 * tp + static_cast<double>(c.false_pos[k]) +
                         static_cast<double>(c.false_neg[k]);
    total += denom > 0.0 ? 2.0 * tp / denom : 0.0;
    classes++;
  }
  return total / static_cast<double>(classes);
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

}  // namespace ishne
