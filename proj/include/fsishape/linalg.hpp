#pragma once

#include <cmath>

namespace fsi {

struct Vec2 {
  double x = 0.0, y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }

  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::sqrt(x * x + y * y); }
  double operator[](int i) const { return i == 0 ? x : y; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

// 2x2 matrix, row major: a(i,j) = m[2*i+j].
struct Mat2 {
  double m[4] = {0.0, 0.0, 0.0, 0.0};

  Mat2() = default;
  Mat2(double a, double b, double c, double d) : m{a, b, c, d} {}

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static Mat2 outer(Vec2 a, Vec2 b) { return {a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y}; }

  double operator()(int i, int j) const { return m[2 * i + j]; }
  double& operator()(int i, int j) { return m[2 * i + j]; }

  Mat2 operator+(const Mat2& o) const { return {m[0] + o.m[0], m[1] + o.m[1], m[2] + o.m[2], m[3] + o.m[3]}; }
  Mat2 operator-(const Mat2& o) const { return {m[0] - o.m[0], m[1] - o.m[1], m[2] - o.m[2], m[3] - o.m[3]}; }
  Mat2 operator*(double s) const { return {m[0] * s, m[1] * s, m[2] * s, m[3] * s}; }
  Mat2& operator+=(const Mat2& o) { for (int i = 0; i < 4; ++i) m[i] += o.m[i]; return *this; }

  Mat2 operator*(const Mat2& o) const {
    return {m[0] * o.m[0] + m[1] * o.m[2], m[0] * o.m[1] + m[1] * o.m[3],
            m[2] * o.m[0] + m[3] * o.m[2], m[2] * o.m[1] + m[3] * o.m[3]};
  }
  Vec2 operator*(Vec2 v) const { return {m[0] * v.x + m[1] * v.y, m[2] * v.x + m[3] * v.y}; }

  Mat2 transpose() const { return {m[0], m[2], m[1], m[3]}; }
  double det() const { return m[0] * m[3] - m[1] * m[2]; }
  double trace() const { return m[0] + m[3]; }

  // cof(A) = det(A) A^{-T}
  Mat2 cof() const { return {m[3], -m[2], -m[1], m[0]}; }

  Mat2 inverse() const {
    double d = det();
    return {m[3] / d, -m[1] / d, -m[2] / d, m[0] / d};
  }

  Mat2 sym() const {
    double off = 0.5 * (m[1] + m[2]);
    return {m[0], off, off, m[3]};
  }

  // Frobenius inner product A : B
  double ddot(const Mat2& o) const { return m[0] * o.m[0] + m[1] * o.m[1] + m[2] * o.m[2] + m[3] * o.m[3]; }
  double norm() const { return std::sqrt(ddot(*this)); }
  double max_abs() const {
    double r = 0.0;
    for (double v : m) r = std::max(r, std::fabs(v));
    return r;
  }
};

inline Mat2 operator*(double s, const Mat2& a) { return a * s; }

// Directional derivatives of det, cof and A^{-1}cof(A) at A in direction B.
// ddet(A;B)   = tr(cof(A)^T B)
// dcof(A;B)   = (tr(A^{-1} B) I - A^{-T} B^T) cof(A)
// dinvcof(A;B) = cof(A)^T (tr(A^{-1} B) I - 2 (B A^{-1})^s) A^{-T}
inline double ddet(const Mat2& a, const Mat2& b) { return a.cof().ddot(b); }

inline Mat2 dcof(const Mat2& a, const Mat2& b) {
  Mat2 ainv = a.inverse();
  double tr = (ainv * b).trace();
  Mat2 lhs = Mat2::identity() * tr - ainv.transpose() * b.transpose();
  return lhs * a.cof();
}

inline Mat2 dinvcof(const Mat2& a, const Mat2& b) {
  Mat2 ainv = a.inverse();
  double tr = (ainv * b).trace();
  Mat2 mid = Mat2::identity() * tr - 2.0 * (b * ainv).sym();
  return a.cof().transpose() * mid * ainv.transpose();
}

} // namespace fsi
