#pragma once

// Shared value types and small math helpers used across the library.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bridgepot {

inline constexpr int kMaxDim = 12;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Fixed-capacity point in R^d, d <= 12. Cheap to copy, no heap.
class Point {
 public:
  Point() : dim_(0) { c_.fill(0.0); }
  explicit Point(int dim) : dim_(check_dim(dim)) { c_.fill(0.0); }
  Point(std::initializer_list<double> xs) : dim_(check_dim(static_cast<int>(xs.size()))) {
    c_.fill(0.0);
    int i = 0;
    for (double v : xs) c_[static_cast<size_t>(i++)] = v;
  }
  explicit Point(std::span<const double> xs) : dim_(check_dim(static_cast<int>(xs.size()))) {
    c_.fill(0.0);
    for (int i = 0; i < dim_; ++i) c_[static_cast<size_t>(i)] = xs[static_cast<size_t>(i)];
  }

  static Point zero(int dim) { return Point(dim); }
  static Point unit(int dim, int axis) {
    Point p(dim);
    if (axis < 0 || axis >= dim) throw std::invalid_argument("Point::unit: axis out of range");
    p[axis] = 1.0;
    return p;
  }
  // Scalar along the first axis; the common probe direction.
  static Point axis1(int dim, double v) {
    Point p(dim);
    p[0] = v;
    return p;
  }

  int dim() const { return dim_; }
  double& operator[](int i) { return c_[static_cast<size_t>(i)]; }
  double operator[](int i) const { return c_[static_cast<size_t>(i)]; }
  std::span<const double> coords() const { return {c_.data(), static_cast<size_t>(dim_)}; }

  double norm2() const {
    double s = 0;
    for (int i = 0; i < dim_; ++i) s += c_[static_cast<size_t>(i)] * c_[static_cast<size_t>(i)];
    return s;
  }
  double norm() const { return std::sqrt(norm2()); }

  Point head(int k) const {
    Point p(k);
    for (int i = 0; i < k; ++i) p[i] = (*this)[i];
    return p;
  }
  Point tail(int k) const {
    Point p(k);
    for (int i = 0; i < k; ++i) p[i] = (*this)[dim_ - k + i];
    return p;
  }

  friend Point operator+(const Point& a, const Point& b) {
    Point r(a.match(b));
    for (int i = 0; i < r.dim_; ++i) r[i] = a[i] + b[i];
    return r;
  }
  friend Point operator-(const Point& a, const Point& b) {
    Point r(a.match(b));
    for (int i = 0; i < r.dim_; ++i) r[i] = a[i] - b[i];
    return r;
  }
  friend Point operator*(double s, const Point& a) {
    Point r(a.dim_);
    for (int i = 0; i < r.dim_; ++i) r[i] = s * a[i];
    return r;
  }
  friend double dot(const Point& a, const Point& b) {
    a.match(b);
    double s = 0;
    for (int i = 0; i < a.dim_; ++i) s += a[i] * b[i];
    return s;
  }

  std::vector<double> to_vector() const { return {c_.begin(), c_.begin() + dim_}; }

 private:
  static int check_dim(int d) {
    if (d < 0 || d > kMaxDim) throw std::invalid_argument("Point: dimension must be in [0, 12]");
    return d;
  }
  int match(const Point& other) const {
    if (dim_ != other.dim_) throw std::invalid_argument("Point: dimension mismatch");
    return dim_;
  }

  std::array<double, kMaxDim> c_;
  int dim_;
};

// |x||y| - x.y without cancellation. The naive difference loses all digits
// when x and y are nearly parallel, exactly where the value matters (it is
// the exponent of a kernel that is largest there). Lagrange's identity gives
//   (|x||y|)^2 - (x.y)^2 = sum_{i<j} (x_i y_j - x_j y_i)^2,
// so divide by |x||y| + x.y, which is bounded away from 0 unless the vectors
// are antiparallel; in that case the plain difference is already stable.
inline double norm_prod_minus_dot(const Point& x, const Point& y) {
  const double nx = x.norm(), ny = y.norm();
  const double d = dot(x, y);
  if (nx == 0.0 || ny == 0.0) return 0.0;
  if (d <= 0.0) return nx * ny - d;
  double cross2 = 0;
  for (int i = 0; i < x.dim(); ++i)
    for (int j = i + 1; j < x.dim(); ++j) {
      const double c = x[i] * y[j] - x[j] * y[i];
      cross2 += c * c;
    }
  return cross2 / (nx * ny + d);
}

// A positive scalar carried in log space. Kernel values span hundreds of
// orders of magnitude across the probe ranges; the log is the primary datum.
struct KernelValue {
  double value = 0.0;
  double log_value = -kInf;

  static KernelValue from_log(double lv) { return {std::exp(lv), lv}; }
  static KernelValue zero() { return {0.0, -kInf}; }
};

// Surface area of the unit sphere S^{d-1} in R^d.
inline double unit_sphere_area(int d) {
  if (d < 1) throw std::invalid_argument("unit_sphere_area: d >= 1 required");
  return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
}

// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
  return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

inline bool approx_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace bridgepot
