#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tacos/error.hpp"

namespace tacos {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kNoObstacles = std::numeric_limits<double>::infinity();

bool is_finite(const Vec3& v);

/// Axis-aligned workspace box. Containment is inclusive on both faces.
struct Bounds {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p) const;
  bool operator==(const Bounds&) const = default;
};

/// Semi-axes plus orientation, the human-authored form of an ellipsoid.
struct AxesForm {
  Vec3 semi_axes;
  Eigen::Quaterniond rotation;  // body -> world
};

/// Region {p : (p - c)^T M (p - c) <= 1} with M symmetric positive definite.
class Ellipsoid {
 public:
  static Result<Ellipsoid> from_matrix(const Vec3& center, const Mat3& shape,
                                       std::string label = {});
  static Result<Ellipsoid> from_axes(const Vec3& center, const Vec3& semi_axes,
                                     const Eigen::Quaterniond& rotation,
                                     std::string label = {});
  /// Axis-aligned ellipsoid with the given semi-axes.
  static Result<Ellipsoid> aligned(const Vec3& center, const Vec3& semi_axes,
                                   std::string label = {});

  const Vec3& center() const { return center_; }
  const Mat3& shape() const { return shape_; }
  const std::string& label() const { return label_; }
  /// Present when the ellipsoid was built from semi-axes; kept so that a
  /// save/load cycle reproduces the file form exactly.
  const std::optional<AxesForm>& axes_form() const { return axes_; }

  double quadratic_form(const Vec3& p) const;
  /// quadratic_form - 1: negative inside, zero on the surface, positive outside.
  double margin(const Vec3& p) const;
  /// Gradient of the quadratic form, 2 M (p - c). Points away from the center.
  Vec3 gradient(const Vec3& p) const;

 private:
  Ellipsoid(Vec3 center, Mat3 shape, std::string label, std::optional<AxesForm> axes)
      : center_(std::move(center)), shape_(std::move(shape)), label_(std::move(label)),
        axes_(std::move(axes)) {}

  Vec3 center_;
  Mat3 shape_;
  std::string label_;
  std::optional<AxesForm> axes_;
};

enum class EntityKind { Target, Landmark, House, Tree, Car };

std::string_view to_string(EntityKind kind);
std::optional<EntityKind> entity_kind_from_string(std::string_view s);

struct TaskEntity {
  std::string id;
  EntityKind kind = EntityKind::Target;
  Vec3 position = Vec3::Zero();
};

struct WorldState {
  Bounds bounds;
  std::vector<Ellipsoid> obstacles;
  std::vector<TaskEntity> entities;

  const TaskEntity* find_entity(std::string_view id) const;
  std::vector<const TaskEntity*> entities_of_kind(EntityKind kind) const;
};

/// Checks bounds ordering, entity id uniqueness and entity placement in free space.
Result<WorldState> make_world(Bounds bounds, std::vector<Ellipsoid> obstacles,
                              std::vector<TaskEntity> entities);

/// Smallest obstacle margin at p, or kNoObstacles for an obstacle-free world.
double point_margin(const Vec3& p, const WorldState& w);

bool point_is_free(const Vec3& p, const WorldState& w);

inline constexpr double kDefaultClearanceStep = 0.05;

/// Minimum obstacle margin over uniform samples of segment ab (endpoints
/// included). <= 0 means the segment touches an obstacle.
double segment_min_clearance(const Vec3& a, const Vec3& b, const WorldState& w,
                             double step = kDefaultClearanceStep);

}  // namespace tacos
