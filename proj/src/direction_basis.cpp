#include "vra/direction_basis.hpp"

namespace vra {
namespace {

constexpr int kMaxDraws = 16;
constexpr double kDegenerateRatio = 1e-6;
constexpr double kReorthogonalizeRatio = 0.1;

}  // namespace

DirectionBasis::DirectionBasis(const Eigen::VectorXd& anchor, std::uint64_t seed) : anchor_(anchor), rng_(seed) {
  const double norm = anchor.norm();
  if (anchor.size() == 0 || !std::isfinite(norm) || norm == 0.0) {
    throw DegenerateInputError("attack direction basis needs a nonzero anchor");
  }
  anchor_unit_ = anchor / norm;
  ortho_.resize(anchor.size(), std::max<Eigen::Index>(anchor.size() - 1, 0));
}

DirectionBasis init_basis(const FeatureVector& anchor, std::uint64_t seed) {
  return DirectionBasis(anchor.values, seed);
}

Eigen::VectorXd DirectionBasis::draw_uniform() {
  Eigen::VectorXd v(dimension());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng_.uniform();
  return v;
}

bool DirectionBasis::orthogonalize(const Eigen::VectorXd& v, Eigen::VectorXd& unit) const {
  const double vnorm = v.norm();
  if (!(vnorm > 0.0) || !std::isfinite(vnorm)) return false;
  Eigen::VectorXd u = v;
  auto sweep = [&] {
    u -= anchor_unit_.dot(u) * anchor_unit_;
    for (Eigen::Index j = 0; j < count_; ++j) {
      const auto e = ortho_.col(j);
      u -= e.dot(u) * e;
    }
  };
  sweep();
  if (u.norm() < kReorthogonalizeRatio * vnorm) sweep();
  const double unorm = u.norm();
  if (unorm < kDegenerateRatio * vnorm) return false;
  unit = u / unorm;
  return true;
}

Eigen::VectorXd DirectionBasis::append(Eigen::VectorXd unit) {
  ortho_.col(count_++) = unit;
  if (count_ == ortho_.cols()) {
    count_ = 0;
    ++resets_;
  }
  return unit;
}

Eigen::VectorXd DirectionBasis::next_direction() {
  if (dimension() < 2) throw DegenerateInputError("a 1-dimensional anchor has no orthogonal directions");
  Eigen::VectorXd unit;
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    if (orthogonalize(draw_uniform(), unit)) return append(std::move(unit));
  }
  throw DegenerateInputError("orthogonal direction draw degenerated " + std::to_string(kMaxDraws) + " times");
}

Eigen::VectorXd DirectionBasis::next_direction_from(const Eigen::VectorXd& raw) {
  if (raw.size() != dimension()) throw InterfaceError("raw direction has the wrong dimension");
  if (dimension() < 2) throw DegenerateInputError("a 1-dimensional anchor has no orthogonal directions");
  Eigen::VectorXd unit;
  if (!orthogonalize(raw, unit)) throw DegenerateInputError("raw direction lies in the span of the basis");
  return append(std::move(unit));
}

Eigen::VectorXd DirectionBasis::random_direction() {
  for (;;) {
    Eigen::VectorXd v = draw_uniform();
    const double n = v.norm();
    if (n > 0.0) return v / n;
  }
}

}  // namespace vra
