#pragma once

#include <array>
#include <cmath>

namespace bellows {

// 3-vector templated on the scalar type so the same geometry code runs in
// double and in extended precision.
template <class R>
struct Vec3T {
  R x{}, y{}, z{};

  Vec3T() = default;
  Vec3T(R xx, R yy, R zz) : x(std::move(xx)), y(std::move(yy)), z(std::move(zz)) {}

  template <class S>
  explicit Vec3T(const Vec3T<S>& o) : x(R(o.x)), y(R(o.y)), z(R(o.z)) {}

  Vec3T operator+(const Vec3T& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3T operator-(const Vec3T& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3T operator-() const { return {-x, -y, -z}; }
  Vec3T operator*(const R& s) const { return {x * s, y * s, z * s}; }
  Vec3T operator/(const R& s) const { return {x / s, y / s, z / s}; }
  Vec3T& operator+=(const Vec3T& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3T& operator-=(const Vec3T& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3T& operator*=(const R& s) { x *= s; y *= s; z *= s; return *this; }

  R& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  const R& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

template <class R>
Vec3T<R> operator*(const R& s, const Vec3T<R>& v) { return v * s; }

template <class R>
R dot(const Vec3T<R>& a, const Vec3T<R>& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <class R>
Vec3T<R> cross(const Vec3T<R>& a, const Vec3T<R>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <class R>
R norm2(const Vec3T<R>& a) { return dot(a, a); }

template <class R>
R norm(const Vec3T<R>& a) {
  using std::sqrt;
  return sqrt(norm2(a));
}

template <class R>
R dist(const Vec3T<R>& a, const Vec3T<R>& b) { return norm(a - b); }

template <class R>
Vec3T<R> normalized(const Vec3T<R>& a) { return a / norm(a); }

// Angle between two vectors, in [0, pi].  Uses atan2 of the cross/dot pair,
// which stays accurate for nearly parallel and nearly opposite inputs.
template <class R>
R angle_between(const Vec3T<R>& a, const Vec3T<R>& b) {
  using std::atan2;
  return atan2(norm(cross(a, b)), dot(a, b));
}

using Vec3 = Vec3T<double>;

}  // namespace bellows
