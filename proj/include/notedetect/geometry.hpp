/*
 * Copyright 2026 The notedetect Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// Planar geometry shared by augmentation, evaluation and post-processing.
//
// Coordinates are continuous pixels: origin at the top-left corner of the
// image, x to the right, y downward. A box covers [xmin, xmax) x [ymin, ymax);
// pixel (i, j) has its center at (i + 0.5, j + 0.5).

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <type_traits>
#include <variant>

#include <Eigen/Core>
#include <Eigen/LU>

#include "notedetect/errors.hpp"

namespace notedetect {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
struct BasicBox {
  Scalar xmin{};
  Scalar ymin{};
  Scalar xmax{};
  Scalar ymax{};

  Scalar width() const { return xmax - xmin; }
  Scalar height() const { return ymax - ymin; }
  // Zero for degenerate or inverted boxes.
  Scalar area() const {
    return is_degenerate() ? Scalar(0) : width() * height();
  }
  bool is_degenerate() const { return !(xmin < xmax && ymin < ymax); }
  bool fits_within(Scalar image_width, Scalar image_height) const {
    return xmin >= Scalar(0) && ymin >= Scalar(0) && xmax <= image_width &&
           ymax <= image_height;
  }

  // Columns: (xmin,ymin), (xmax,ymin), (xmax,ymax), (xmin,ymax).
  Eigen::Matrix<Scalar, 2, 4> corners() const {
    Eigen::Matrix<Scalar, 2, 4> c;
    c << xmin, xmax, xmax, xmin,
         ymin, ymin, ymax, ymax;
    return c;
  }

  template <typename Other>
  BasicBox<Other> cast() const {
    return {static_cast<Other>(xmin), static_cast<Other>(ymin),
            static_cast<Other>(xmax), static_cast<Other>(ymax)};
  }

  friend bool operator==(const BasicBox&, const BasicBox&) = default;
};

using BoundingBox = BasicBox<double>;

template <typename Scalar>
std::ostream& operator<<(std::ostream& os, const BasicBox<Scalar>& b) {
  return os << '(' << b.xmin << ", " << b.ymin << ", " << b.xmax << ", " << b.ymax << ')';
}

// Axis-aligned hull of the columns of a 2xN point matrix.
template <typename Derived>
BasicBox<typename Derived::Scalar> hull_of(const Eigen::MatrixBase<Derived>& points) {
  const auto lo = points.rowwise().minCoeff();
  const auto hi = points.rowwise().maxCoeff();
  return {lo(0), lo(1), hi(0), hi(1)};
}

template <typename Scalar>
BasicBox<Scalar> intersection(const BasicBox<Scalar>& a, const BasicBox<Scalar>& b) {
  return {std::max(a.xmin, b.xmin), std::max(a.ymin, b.ymin),
          std::min(a.xmax, b.xmax), std::min(a.ymax, b.ymax)};
}

template <typename Scalar>
Scalar intersection_area(const BasicBox<Scalar>& a, const BasicBox<Scalar>& b) {
  return intersection(a, b).area();
}

// Intersection over union; 0 when disjoint or when both boxes are empty.
template <typename Scalar>
Scalar iou(const BasicBox<Scalar>& a, const BasicBox<Scalar>& b) {
  const Scalar inter = intersection_area(a, b);
  const Scalar uni = a.area() + b.area() - inter;
  if (!(uni > Scalar(0))) return Scalar(0);
  return std::clamp(inter / uni, Scalar(0), Scalar(1));
}

// 2x3 planar affine map (x, y) -> (a x + b y + tx, c x + d y + ty).
template <typename Scalar>
class AffineTransform {
 public:
  using Matrix = Eigen::Matrix<Scalar, 2, 3>;
  using Homogeneous = Eigen::Matrix<Scalar, 3, 3>;

  static constexpr double kMinDeterminant = 1e-9;

  AffineTransform() : m_(Matrix::Identity()) {}
  explicit AffineTransform(const Matrix& m) : m_(m) {}

  static AffineTransform from_coefficients(Scalar a, Scalar b, Scalar tx,
                                           Scalar c, Scalar d, Scalar ty) {
    Matrix m;
    m << a, b, tx,
         c, d, ty;
    return AffineTransform(m);
  }
  static AffineTransform from_homogeneous(const Homogeneous& h) {
    return AffineTransform(h.template topRows<2>());
  }

  const Matrix& matrix() const { return m_; }
  Scalar a() const { return m_(0, 0); }
  Scalar b() const { return m_(0, 1); }
  Scalar tx() const { return m_(0, 2); }
  Scalar c() const { return m_(1, 0); }
  Scalar d() const { return m_(1, 1); }
  Scalar ty() const { return m_(1, 2); }

  Scalar determinant() const { return a() * d() - b() * c(); }
  bool is_invertible() const {
    return std::abs(determinant()) >= static_cast<Scalar>(kMinDeterminant);
  }

  Homogeneous homogeneous() const {
    Homogeneous h = Homogeneous::Identity();
    h.template topRows<2>() = m_;
    return h;
  }

  // Throws DegeneracyError when |det| < kMinDeterminant.
  AffineTransform inverse() const {
    require_invertible();
    const Eigen::Matrix<Scalar, 2, 2> lin_inv = m_.template leftCols<2>().inverse();
    Matrix inv;
    inv.template leftCols<2>() = lin_inv;
    inv.col(2) = -lin_inv * m_.col(2);
    return AffineTransform(inv);
  }

  void require_invertible() const {
    if (!is_invertible()) {
      throw DegeneracyError("affine transform is degenerate (|det| = " +
                            std::to_string(static_cast<double>(std::abs(determinant()))) +
                            ")");
    }
  }

  // Maps each column of a 2xN matrix.
  template <typename Derived>
  Eigen::Matrix<Scalar, 2, Derived::ColsAtCompileTime> apply(
      const Eigen::MatrixBase<Derived>& points) const {
    return (m_.template leftCols<2>() * points).colwise() + m_.col(2);
  }

  // Result applies *this first, then `next`.
  AffineTransform then(const AffineTransform& next) const {
    return from_homogeneous(next.homogeneous() * homogeneous());
  }

  bool is_approx(const AffineTransform& other, Scalar eps) const {
    return (m_ - other.m_).cwiseAbs().maxCoeff() <= eps;
  }

  friend bool operator==(const AffineTransform& lhs, const AffineTransform& rhs) {
    return lhs.m_ == rhs.m_;
  }

 private:
  Matrix m_;
};

// Building blocks for compose_affine. Angles are in degrees. Positive
// rotation turns content counter-clockwise as displayed (y axis down), i.e.
// (x, y) -> (x cos + y sin, -x sin + y cos) about the center.
namespace primitive {

template <typename Scalar>
struct Identity {};

template <typename Scalar>
struct Rotate {
  Scalar degrees;
  Point2<Scalar> center = Point2<Scalar>::Zero();
};

enum class Axis { kHorizontal, kVertical };

// kHorizontal mirrors x about center.x(); kVertical mirrors y about center.y().
template <typename Scalar>
struct Flip {
  Axis axis;
  Point2<Scalar> center = Point2<Scalar>::Zero();
};

// Shear along x: x' = x + tan(degrees) * (y - center.y).
template <typename Scalar>
struct Shear {
  Scalar degrees;
  Point2<Scalar> center = Point2<Scalar>::Zero();
};

template <typename Scalar>
struct Scale {
  Scalar factor;
  Point2<Scalar> center = Point2<Scalar>::Zero();
};

template <typename Scalar>
struct Translate {
  Point2<Scalar> offset;
};

}  // namespace primitive

template <typename Scalar>
using AffinePrimitive =
    std::variant<primitive::Identity<Scalar>, primitive::Rotate<Scalar>,
                 primitive::Flip<Scalar>, primitive::Shear<Scalar>,
                 primitive::Scale<Scalar>, primitive::Translate<Scalar>>;

namespace internal {

template <typename Scalar>
Scalar deg_to_rad(Scalar degrees) {
  return degrees * std::numbers::pi_v<Scalar> / Scalar(180);
}

// Conjugates a linear map L by a translation to act about `center`.
template <typename Scalar>
AffineTransform<Scalar> about(const Eigen::Matrix<Scalar, 2, 2>& linear,
                              const Point2<Scalar>& center) {
  typename AffineTransform<Scalar>::Matrix m;
  m.template leftCols<2>() = linear;
  m.col(2) = center - linear * center;
  return AffineTransform<Scalar>(m);
}

// Exact values at multiples of 90 degrees so axis-preserving rotations stay
// axis-preserving in floating point.
template <typename Scalar>
std::pair<Scalar, Scalar> sin_cos_degrees(Scalar degrees) {
  const Scalar quarter = degrees / Scalar(90);
  if (quarter == std::round(quarter)) {
    const long k = ((static_cast<long>(std::round(quarter)) % 4) + 4) % 4;
    constexpr Scalar s[4] = {0, 1, 0, -1};
    constexpr Scalar c[4] = {1, 0, -1, 0};
    return {s[k], c[k]};
  }
  const Scalar rad = deg_to_rad(degrees);
  return {std::sin(rad), std::cos(rad)};
}

}  // namespace internal

template <typename Scalar>
AffineTransform<Scalar> to_affine(const AffinePrimitive<Scalar>& p) {
  using Linear = Eigen::Matrix<Scalar, 2, 2>;
  return std::visit(
      [](const auto& prim) -> AffineTransform<Scalar> {
        using T = std::decay_t<decltype(prim)>;
        if constexpr (std::is_same_v<T, primitive::Identity<Scalar>>) {
          return AffineTransform<Scalar>();
        } else if constexpr (std::is_same_v<T, primitive::Rotate<Scalar>>) {
          const auto [s, c] = internal::sin_cos_degrees(prim.degrees);
          Linear l;
          l << c, s,
              -s, c;
          return internal::about(l, prim.center);
        } else if constexpr (std::is_same_v<T, primitive::Flip<Scalar>>) {
          Linear l = Linear::Identity();
          if (prim.axis == primitive::Axis::kHorizontal) {
            l(0, 0) = Scalar(-1);
          } else {
            l(1, 1) = Scalar(-1);
          }
          return internal::about(l, prim.center);
        } else if constexpr (std::is_same_v<T, primitive::Shear<Scalar>>) {
          Linear l = Linear::Identity();
          l(0, 1) = std::tan(internal::deg_to_rad(prim.degrees));
          return internal::about(l, prim.center);
        } else if constexpr (std::is_same_v<T, primitive::Scale<Scalar>>) {
          return internal::about(Linear(Linear::Identity() * prim.factor), prim.center);
        } else {
          typename AffineTransform<Scalar>::Matrix m;
          m << 1, 0, prim.offset.x(),
               0, 1, prim.offset.y();
          return AffineTransform<Scalar>(m);
        }
      },
      p);
}

// Applies the primitives left to right: the first element acts first.
// Throws ArgumentError on an empty list and DegeneracyError when the product
// is not invertible.
template <typename Scalar>
AffineTransform<Scalar> compose_affine(std::span<const AffinePrimitive<Scalar>> primitives) {
  if (primitives.empty()) throw ArgumentError("compose_affine: empty primitive list");
  typename AffineTransform<Scalar>::Homogeneous h =
      AffineTransform<Scalar>::Homogeneous::Identity();
  for (const auto& p : primitives) h = to_affine(p).homogeneous() * h;
  auto result = AffineTransform<Scalar>::from_homogeneous(h);
  result.require_invertible();
  return result;
}

template <typename Scalar>
AffineTransform<Scalar> compose_affine(std::initializer_list<AffinePrimitive<Scalar>> primitives) {
  return compose_affine<Scalar>(std::span<const AffinePrimitive<Scalar>>(primitives.begin(),
                                                                         primitives.size()));
}

// Axis-aligned hull of the transformed box corners (before any clipping).
template <typename Scalar>
BasicBox<Scalar> transformed_hull(const AffineTransform<Scalar>& t, const BasicBox<Scalar>& box) {
  return hull_of(t.apply(box.corners()));
}

// Transforms a box and clips it to [0, out_width] x [0, out_height]. Returns
// nullopt ("dropped") when the clipped box is degenerate or keeps less than
// min_visibility of the hull area.
template <typename Scalar>
std::optional<BasicBox<Scalar>> transform_box(const AffineTransform<Scalar>& t,
                                              const BasicBox<Scalar>& box,
                                              Scalar out_width, Scalar out_height,
                                              Scalar min_visibility) {
  const BasicBox<Scalar> hull = transformed_hull(t, box);
  const BasicBox<Scalar> clipped = intersection(hull, BasicBox<Scalar>{0, 0, out_width, out_height});
  if (clipped.is_degenerate()) return std::nullopt;
  if (clipped.area() < min_visibility * hull.area()) return std::nullopt;
  return clipped;
}

}  // namespace notedetect
