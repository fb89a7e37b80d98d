#include "tacos/world.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

namespace tacos {

namespace {

constexpr double kSymmetryTol = 1e-9;

Result<Ellipsoid> invalid(std::string msg) {
  return Error{Errc::InvalidScenario, std::move(msg)};
}

}  // namespace

bool is_finite(const Vec3& v) { return v.allFinite(); }

bool Bounds::contains(const Vec3& p) const {
  return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
}

Result<Ellipsoid> Ellipsoid::from_matrix(const Vec3& center, const Mat3& shape,
                                         std::string label) {
  if (!is_finite(center) || !shape.allFinite()) {
    return invalid(fmt::format("obstacle '{}' has non-finite data", label));
  }
  if ((shape - shape.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol) {
    return invalid(fmt::format("obstacle '{}' shape matrix is not symmetric", label));
  }
  // Pivoted Cholesky: positive definite iff the factorization succeeds with a
  // strictly positive diagonal.
  Eigen::LDLT<Mat3> ldlt(shape);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) {
    return invalid(fmt::format("obstacle '{}' shape matrix is not positive definite", label));
  }
  return Ellipsoid(center, shape, std::move(label), std::nullopt);
}

Result<Ellipsoid> Ellipsoid::from_axes(const Vec3& center, const Vec3& semi_axes,
                                       const Eigen::Quaterniond& rotation, std::string label) {
  if (!is_finite(semi_axes) || !(semi_axes.array() > 0.0).all()) {
    return invalid(fmt::format("obstacle '{}' needs positive finite semi-axes", label));
  }
  if (!rotation.coeffs().allFinite() || rotation.norm() < 1e-12) {
    return invalid(fmt::format("obstacle '{}' has a degenerate rotation", label));
  }
  const Mat3 r = rotation.normalized().toRotationMatrix();
  const Vec3 inv_sq = semi_axes.cwiseProduct(semi_axes).cwiseInverse();
  Mat3 shape = r * inv_sq.asDiagonal() * r.transpose();
  // Symmetrize away rounding from the triple product.
  shape = 0.5 * (shape + shape.transpose()).eval();
  auto base = from_matrix(center, shape, label);
  if (!base.ok()) return base;
  return Ellipsoid(center, shape, std::move(label), AxesForm{semi_axes, rotation});
}

Result<Ellipsoid> Ellipsoid::aligned(const Vec3& center, const Vec3& semi_axes,
                                     std::string label) {
  return from_axes(center, semi_axes, Eigen::Quaterniond::Identity(), std::move(label));
}

double Ellipsoid::quadratic_form(const Vec3& p) const {
  const Vec3 d = p - center_;
  return d.dot(shape_ * d);
}

double Ellipsoid::margin(const Vec3& p) const { return quadratic_form(p) - 1.0; }

Vec3 Ellipsoid::gradient(const Vec3& p) const { return 2.0 * (shape_ * (p - center_)); }

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::Target: return "target";
    case EntityKind::Landmark: return "landmark";
    case EntityKind::House: return "house";
    case EntityKind::Tree: return "tree";
    case EntityKind::Car: return "car";
  }
  return "target";
}

std::optional<EntityKind> entity_kind_from_string(std::string_view s) {
  for (auto k : {EntityKind::Target, EntityKind::Landmark, EntityKind::House, EntityKind::Tree,
                 EntityKind::Car}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

const TaskEntity* WorldState::find_entity(std::string_view id) const {
  auto it = std::find_if(entities.begin(), entities.end(),
                         [&](const TaskEntity& e) { return e.id == id; });
  return it == entities.end() ? nullptr : &*it;
}

std::vector<const TaskEntity*> WorldState::entities_of_kind(EntityKind kind) const {
  std::vector<const TaskEntity*> out;
  for (const auto& e : entities) {
    if (e.kind == kind) out.push_back(&e);
  }
  return out;
}

Result<WorldState> make_world(Bounds bounds, std::vector<Ellipsoid> obstacles,
                              std::vector<TaskEntity> entities) {
  auto fail = [](std::string msg) -> Result<WorldState> {
    return Error{Errc::InvalidScenario, std::move(msg)};
  };
  if (!is_finite(bounds.min) || !is_finite(bounds.max) ||
      !(bounds.min.array() < bounds.max.array()).all()) {
    return fail("bounds must satisfy min < max componentwise");
  }
  WorldState w{bounds, std::move(obstacles), {}};
  std::set<std::string> seen;
  for (auto& e : entities) {
    if (e.id.empty()) return fail("entity with empty id");
    if (!seen.insert(e.id).second) return fail(fmt::format("duplicate entity id '{}'", e.id));
    if (!is_finite(e.position) || !point_is_free(e.position, w)) {
      return fail(fmt::format("entity '{}' is not in free space", e.id));
    }
  }
  w.entities = std::move(entities);
  return w;
}

double point_margin(const Vec3& p, const WorldState& w) {
  double best = kNoObstacles;
  for (const auto& o : w.obstacles) best = std::min(best, o.margin(p));
  return best;
}

bool point_is_free(const Vec3& p, const WorldState& w) {
  return w.bounds.contains(p) && point_margin(p, w) > 0.0;
}

double segment_min_clearance(const Vec3& a, const Vec3& b, const WorldState& w, double step) {
  if (w.obstacles.empty()) return kNoObstacles;
  const double len = (b - a).norm();
  const auto n = len > 0.0 ? static_cast<long>(std::ceil(len / step)) : 0L;
  double best = point_margin(a, w);
  for (long i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n);
    best = std::min(best, point_margin(a + t * (b - a), w));
  }
  return best;
}

}  // namespace tacos
