#pragma once

// Geometry and configuration state shared by every other module.
//
// Positions are stored in double precision. A Configuration keeps its n
// particles in one flat row-major buffer (n * dim doubles); particle i
// occupies coordinates [i * dim, (i + 1) * dim).

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bbb {

class RngStream;

/// Violated precondition on a value the caller supplied.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A computation would exceed its configured memory or population budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point in R^d with finite coordinates.
class Point {
 public:
  Point() = default;
  explicit Point(std::vector<double> coords);
  Point(std::initializer_list<double> coords);
  explicit Point(std::span<const double> coords);

  static Point zero(std::size_t dim) { return Point(std::vector<double>(dim, 0.0)); }

  std::size_t dim() const noexcept { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  std::span<const double> coords() const noexcept { return coords_; }

  double norm() const noexcept;

  friend bool operator==(const Point&, const Point&) = default;

 private:
  std::vector<double> coords_;
};

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;
double distance(std::span<const double> a, std::span<const double> b) noexcept;

/// Up to `capacity` particles in R^dim.
class Configuration {
 public:
  Configuration() = default;
  /// Empty configuration; particles are added with push_back.
  Configuration(std::size_t dim, std::size_t capacity);

  /// Throws DomainError when `points` is empty, dimensions disagree, a
  /// coordinate is not finite, or capacity (0 means points.size()) is too small.
  static Configuration from_points(const std::vector<Point>& points, std::size_t capacity = 0);
  /// One-dimensional convenience: each value becomes a particle.
  static Configuration from_values(std::initializer_list<double> xs, std::size_t capacity = 0);

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return coords_.empty(); }
  bool full() const noexcept { return size() == capacity_; }

  std::span<const double> position(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<double> position(std::size_t i) { return {coords_.data() + i * dim_, dim_}; }
  Point point(std::size_t i) const { return Point(position(i)); }
  std::vector<Point> points() const;

  std::span<const double> raw() const noexcept { return coords_; }
  std::span<double> raw() noexcept { return coords_; }

  void push_back(std::span<const double> position);
  /// Overwrite particle `slot` with a copy of particle `source`.
  void copy_particle(std::size_t source, std::size_t slot);

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  std::size_t dim_ = 0;
  std::size_t capacity_ = 0;
  std::vector<double> coords_;
};

/// Arithmetic mean of the current particles (divisor is size(), not capacity()).
Point barycenter(const Configuration& c);

/// Largest pairwise Euclidean distance; 0 for a single particle.
double extent(const Configuration& c);

/// Every position shifted by -barycenter(c).
Configuration recenter(const Configuration& c);

/// Independent N(0, dt) increment on every coordinate of every particle.
/// Consumes size() * dim() normal draws from `rng` in particle-major order.
Configuration brownian_increment(const Configuration& c, double dt, RngStream& rng);
void brownian_increment_in_place(Configuration& c, double dt, RngStream& rng);

std::string to_string(const Point& p);

}  // namespace bbb
