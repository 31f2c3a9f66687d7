#include "vra/oracle.hpp"

namespace vra {

TargetOracle::TargetOracle(std::shared_ptr<const HardLabelClassifier> classifier,
                           std::optional<std::int64_t> query_limit)
    : classifier_(std::move(classifier)), limit_(query_limit) {
  if (!classifier_) throw ParameterError("target oracle needs a classifier");
  if (limit_ && *limit_ < 0) throw ParameterError("query limit must be non-negative");
}

int TargetOracle::hard_label_query(const VideoClip& clip) {
  std::int64_t current = count_.load();
  do {
    if (limit_ && current >= *limit_) {
      throw BudgetExceededError("query budget of " + std::to_string(*limit_) + " exhausted");
    }
  } while (!count_.compare_exchange_weak(current, current + 1));
  return classifier_->classify(clip);
}

std::optional<std::int64_t> TargetOracle::remaining() const {
  if (!limit_) return std::nullopt;
  return *limit_ - count_.load();
}

}  // namespace vra
