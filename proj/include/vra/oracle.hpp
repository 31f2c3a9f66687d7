#ifndef VRA_ORACLE_HPP
#define VRA_ORACLE_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

#include "vra/network.hpp"

namespace vra {

/// A classifier that only ever answers with its top-1 label.
class HardLabelClassifier {
 public:
  virtual ~HardLabelClassifier() = default;
  virtual int classify(const VideoClip& clip) const = 0;
};

template <typename Scalar>
class NetworkClassifier final : public HardLabelClassifier {
 public:
  explicit NetworkClassifier(std::shared_ptr<const Network<Scalar>> net) : net_(std::move(net)) {}
  int classify(const VideoClip& clip) const override { return net_->predict(clip); }

 private:
  std::shared_ptr<const Network<Scalar>> net_;
};

class FunctionClassifier final : public HardLabelClassifier {
 public:
  explicit FunctionClassifier(std::function<int(const VideoClip&)> fn) : fn_(std::move(fn)) {}
  int classify(const VideoClip& clip) const override { return fn_(clip); }

 private:
  std::function<int(const VideoClip&)> fn_;
};

/// Black-box target with strict query accounting. The counter is atomic and
/// only moves forward; with a limit set, the call that would exceed it throws
/// BudgetExceededError without reaching the classifier.
class TargetOracle {
 public:
  explicit TargetOracle(std::shared_ptr<const HardLabelClassifier> classifier,
                        std::optional<std::int64_t> query_limit = std::nullopt);

  TargetOracle(const TargetOracle&) = delete;
  TargetOracle& operator=(const TargetOracle&) = delete;

  int hard_label_query(const VideoClip& clip);

  std::int64_t query_count() const { return count_.load(); }
  std::optional<std::int64_t> query_limit() const { return limit_; }
  std::optional<std::int64_t> remaining() const;

  /// A fresh oracle over the same classifier with its own counter.
  TargetOracle view(std::optional<std::int64_t> query_limit) const {
    return TargetOracle(classifier_, query_limit);
  }

 private:
  std::shared_ptr<const HardLabelClassifier> classifier_;
  std::optional<std::int64_t> limit_;
  std::atomic<std::int64_t> count_{0};
};

inline int hard_label_query(TargetOracle& oracle, const VideoClip& clip) { return oracle.hard_label_query(clip); }

}  // namespace vra

#endif  // VRA_ORACLE_HPP
