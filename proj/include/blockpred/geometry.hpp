#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace blockpred {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 unit_from_angle(double a) { return {std::cos(a), std::sin(a)}; }

struct Segment {
  Vec2 a;
  Vec2 b;
  friend bool operator==(const Segment&, const Segment&) = default;
};

// Oriented rectangle: center, heading of the long axis, half extents.
struct Rect {
  Vec2 center;
  double heading = 0.0;
  double half_length = 0.0;
  double half_width = 0.0;
};

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (a > -std::numbers::pi && a <= std::numbers::pi) return a;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a <= 0.0) a += two_pi;
  return a - std::numbers::pi;
}

// Distance along a unit-speed ray to a segment, if they intersect ahead of the origin.
inline std::optional<double> ray_segment(Vec2 origin, Vec2 dir, const Segment& s) {
  const Vec2 e = s.b - s.a;
  const double denom = cross(dir, e);
  if (denom == 0.0) return std::nullopt;
  const Vec2 w = s.a - origin;
  const double t = cross(w, e) / denom;
  const double u = cross(w, dir) / denom;
  if (t <= 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return t;
}

// Slab test of a ray against an oriented rectangle. Returns the entry distance.
inline std::optional<double> ray_rect(Vec2 origin, Vec2 dir, const Rect& r) {
  const Vec2 ax = unit_from_angle(r.heading);
  const Vec2 ay{-ax.y, ax.x};
  const Vec2 rel = origin - r.center;
  const double o[2] = {dot(rel, ax), dot(rel, ay)};
  const double d[2] = {dot(dir, ax), dot(dir, ay)};
  const double h[2] = {r.half_length, r.half_width};
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 2; ++k) {
    if (d[k] == 0.0) {
      if (o[k] < -h[k] || o[k] > h[k]) return std::nullopt;
      continue;
    }
    double ta = (-h[k] - o[k]) / d[k];
    double tb = (h[k] - o[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  if (t0 <= 0.0) return std::nullopt; // origin inside the rectangle
  return t0;
}

// True iff the open segment p-q passes through the rectangle interior.
//
// Endpoints are put into a canonical order first so the result is exactly
// symmetric in (p, q) under floating point.
inline bool segment_hits_rect(Vec2 p, Vec2 q, const Rect& r) {
  if (q.x < p.x || (q.x == p.x && q.y < p.y)) std::swap(p, q);
  const Vec2 ax = unit_from_angle(r.heading);
  const Vec2 ay{-ax.y, ax.x};
  const Vec2 rel = p - r.center;
  const Vec2 dir = q - p;
  const double o[2] = {dot(rel, ax), dot(rel, ay)};
  const double d[2] = {dot(dir, ax), dot(dir, ay)};
  const double h[2] = {r.half_length, r.half_width};
  double t0 = 0.0;
  double t1 = 1.0;
  for (int k = 0; k < 2; ++k) {
    if (d[k] == 0.0) {
      if (o[k] <= -h[k] || o[k] >= h[k]) return false;
      continue;
    }
    double ta = (-h[k] - o[k]) / d[k];
    double tb = (h[k] - o[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 >= t1) return false;
  }
  return true;
}

inline bool segments_intersect(const Segment& s1, const Segment& s2) {
  const Vec2 r = s1.b - s1.a;
  const Vec2 s = s2.b - s2.a;
  const double denom = cross(r, s);
  const Vec2 w = s2.a - s1.a;
  if (denom == 0.0) {
    if (cross(w, r) != 0.0) return false; // parallel, not collinear
    const double rr = dot(r, r);
    if (rr == 0.0) return norm(w) == 0.0;
    const double t0 = dot(w, r) / rr;
    const double t1 = t0 + dot(s, r) / rr;
    return std::max(t0, t1) >= 0.0 && std::min(t0, t1) <= 1.0;
  }
  const double t = cross(w, s) / denom;
  const double u = cross(w, r) / denom;
  return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

} // namespace blockpred
