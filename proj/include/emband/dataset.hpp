#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "emband/errors.hpp"
#include "emband/types.hpp"

namespace emband {

enum class TaskKind { Regression, MultiLabel, MultiClass };

inline const char* task_name(TaskKind t) {
  switch (t) {
    case TaskKind::Regression: return "regression";
    case TaskKind::MultiLabel: return "multilabel";
    case TaskKind::MultiClass: return "multiclass";
  }
  return "unknown";
}

// In-memory dataset: N samples by D named feature columns plus targets.
//   Regression  labels is N x T real (usually T = 1), target_names names them.
//   MultiLabel  labels is N x T with entries in {0, 1}, target_names = tags.
//   MultiClass  class_ids holds one id per row, target_names = class names.
struct Dataset {
  std::vector<std::string> sample_ids;
  std::vector<std::string> feature_names;
  MatrixX<double> x;

  TaskKind task = TaskKind::Regression;
  std::vector<std::string> target_names;
  MatrixX<double> labels;      // regression / multilabel
  std::vector<int> class_ids;  // multiclass

  Index rows() const { return x.rows(); }
  Index cols() const { return x.cols(); }
  Index target_count() const { return static_cast<Index>(target_names.size()); }

  void check() const {
    if (x.rows() < 1 || x.cols() < 1) throw DimensionMismatch("dataset is empty");
    if (static_cast<Index>(sample_ids.size()) != x.rows())
      throw DimensionMismatch("sample id count does not match row count");
    if (static_cast<Index>(feature_names.size()) != x.cols())
      throw DimensionMismatch("feature name count does not match column count");
    std::unordered_set<std::string> unique(feature_names.begin(), feature_names.end());
    if (unique.size() != feature_names.size())
      throw DuplicateFeatureError("feature names are not unique");
    if (task == TaskKind::MultiClass) {
      if (static_cast<Index>(class_ids.size()) != x.rows())
        throw DimensionMismatch("class id count does not match row count");
      const int c = static_cast<int>(target_names.size());
      for (int id : class_ids)
        if (id < 0 || id >= c)
          throw LabelDomainError("class id " + std::to_string(id) + " outside [0, " +
                                 std::to_string(c) + ")");
    } else {
      if (labels.rows() != x.rows())
        throw DimensionMismatch("label row count does not match feature row count");
      if (labels.cols() != target_count())
        throw DimensionMismatch("label column count does not match target names");
      if (task == TaskKind::MultiLabel) {
        for (Index i = 0; i < labels.rows(); ++i)
          for (Index t = 0; t < labels.cols(); ++t)
            if (labels(i, t) != 0.0 && labels(i, t) != 1.0)
              throw LabelDomainError("multilabel cell at row " + std::to_string(i) +
                                     ", column " + std::to_string(t) + " is not 0/1");
      }
    }
  }
};

}  // namespace emband
