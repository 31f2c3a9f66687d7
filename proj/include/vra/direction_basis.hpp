#ifndef VRA_DIRECTION_BASIS_HPP
#define VRA_DIRECTION_BASIS_HPP

#include <Eigen/Dense>

#include <cstdint>

#include "vra/common.hpp"
#include "vra/features.hpp"

namespace vra {

/// Growing orthonormal set of attack directions anchored at a clip's clean
/// representation.
///
/// Each new direction is a U[0,1)^d draw orthogonalized (modified
/// Gram-Schmidt, double precision) against the unit anchor and every stored
/// direction, so no direction ever has a component along the clean
/// representation. Once d-1 directions are stored the complement of the
/// anchor is exhausted: the stored set is cleared (anchor kept) and
/// `resets()` increments.
class DirectionBasis {
 public:
  /// Throws DegenerateInputError for a zero or non-finite anchor.
  DirectionBasis(const Eigen::VectorXd& anchor, std::uint64_t seed);

  Eigen::Index dimension() const { return anchor_.size(); }
  const Eigen::VectorXd& anchor() const { return anchor_; }
  const Eigen::VectorXd& anchor_unit() const { return anchor_unit_; }
  /// Stored directions as columns; between resets at most d-1.
  auto directions() const { return ortho_.leftCols(count_); }
  Eigen::Index size() const { return count_; }
  int resets() const { return resets_; }
  const Rng& rng() const { return rng_; }

  /// Next orthogonal attack direction. Draws are resampled (at most 16 draws)
  /// when the residual nearly vanishes; throws DegenerateInputError after that.
  Eigen::VectorXd next_direction();

  /// Orthogonalizes a caller-supplied raw vector instead of a fresh draw and
  /// appends the result. Throws DegenerateInputError on a vanishing residual.
  Eigen::VectorXd next_direction_from(const Eigen::VectorXd& raw);

  /// Unit-normalized U[0,1)^d draw with no orthogonalization.
  Eigen::VectorXd random_direction();

 private:
  Eigen::VectorXd draw_uniform();
  /// Unit residual of `v` after projection; false when it vanishes.
  bool orthogonalize(const Eigen::VectorXd& v, Eigen::VectorXd& unit) const;
  Eigen::VectorXd append(Eigen::VectorXd unit);

  Eigen::VectorXd anchor_;
  Eigen::VectorXd anchor_unit_;
  Eigen::MatrixXd ortho_;
  Eigen::Index count_ = 0;
  int resets_ = 0;
  Rng rng_;
};

DirectionBasis init_basis(const FeatureVector& anchor, std::uint64_t seed);

inline Eigen::VectorXd next_direction(DirectionBasis& basis) { return basis.next_direction(); }
inline Eigen::VectorXd random_direction(DirectionBasis& basis) { return basis.random_direction(); }

}  // namespace vra

#endif  // VRA_DIRECTION_BASIS_HPP
