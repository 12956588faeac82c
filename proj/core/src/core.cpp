#include "bbb/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bbb/rng.hpp"

namespace bbb {
namespace {

void require_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw DomainError("non-finite coordinate");
  }
}

void require_nonempty(const Configuration& c, const char* what) {
  if (c.empty()) throw DomainError(std::string(what) + ": empty configuration");
}

}  // namespace

Point::Point(std::vector<double> coords) : coords_(std::move(coords)) { require_finite(coords_); }

Point::Point(std::initializer_list<double> coords) : coords_(coords) { require_finite(coords_); }

Point::Point(std::span<const double> coords) : coords_(coords.begin(), coords.end()) {
  require_finite(coords_);
}

double Point::norm() const noexcept {
  double s = 0.0;
  for (double x : coords_) s += x * x;
  return std::sqrt(s);
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

double distance(std::span<const double> a, std::span<const double> b) noexcept {
  return std::sqrt(squared_distance(a, b));
}

Configuration::Configuration(std::size_t dim, std::size_t capacity) : dim_(dim), capacity_(capacity) {
  if (dim == 0) throw DomainError("configuration dimension must be >= 1");
  if (capacity == 0) throw DomainError("configuration capacity must be >= 1");
  coords_.reserve(dim * capacity);
}

Configuration Configuration::from_points(const std::vector<Point>& points, std::size_t capacity) {
  if (points.empty()) throw DomainError("configuration needs at least one particle");
  const std::size_t dim = points.front().dim();
  if (capacity == 0) capacity = points.size();
  if (capacity < points.size()) throw DomainError("more particles than capacity");
  Configuration c(dim, capacity);
  for (const auto& p : points) {
    if (p.dim() != dim) throw DomainError("mixed dimensions in configuration");
    c.push_back(p.coords());
  }
  return c;
}

Configuration Configuration::from_values(std::initializer_list<double> xs, std::size_t capacity) {
  std::vector<Point> pts;
  pts.reserve(xs.size());
  for (double x : xs) pts.push_back(Point{x});
  return from_points(pts, capacity);
}

std::vector<Point> Configuration::points() const {
  std::vector<Point> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(point(i));
  return out;
}

void Configuration::push_back(std::span<const double> position) {
  if (position.size() != dim_) throw DomainError("push_back: dimension mismatch");
  if (size() >= capacity_) throw DomainError("push_back: configuration at capacity");
  require_finite(position);
  coords_.insert(coords_.end(), position.begin(), position.end());
}

void Configuration::copy_particle(std::size_t source, std::size_t slot) {
  if (source >= size() || slot >= size()) throw DomainError("copy_particle: index out of range");
  std::copy_n(coords_.begin() + static_cast<std::ptrdiff_t>(source * dim_), dim_,
              coords_.begin() + static_cast<std::ptrdiff_t>(slot * dim_));
}

Point barycenter(const Configuration& c) {
  require_nonempty(c, "barycenter");
  std::vector<double> mean(c.dim(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto x = c.position(i);
    for (std::size_t k = 0; k < c.dim(); ++k) mean[k] += x[k];
  }
  const double n = static_cast<double>(c.size());
  for (double& m : mean) m /= n;
  return Point(std::move(mean));
}

double extent(const Configuration& c) {
  require_nonempty(c, "extent");
  double best = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      best = std::max(best, squared_distance(c.position(i), c.position(j)));
    }
  }
  return std::sqrt(best);
}

Configuration recenter(const Configuration& c) {
  const Point b = barycenter(c);
  Configuration out = c;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto x = out.position(i);
    for (std::size_t k = 0; k < out.dim(); ++k) x[k] -= b[k];
  }
  return out;
}

void brownian_increment_in_place(Configuration& c, double dt, RngStream& rng) {
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw DomainError("brownian_increment: dt must be >= 0");
  if (dt == 0.0) return;
  const double scale = std::sqrt(dt);
  for (double& x : c.raw()) x += scale * rng.normal();
}

Configuration brownian_increment(const Configuration& c, double dt, RngStream& rng) {
  Configuration out = c;
  brownian_increment_in_place(out, dt, rng);
  return out;
}

std::string to_string(const Point& p) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t k = 0; k < p.dim(); ++k) os << (k ? "," : "") << p[k];
  os << ')';
  return os.str();
}

}  // namespace bbb
