#include <charconv>
#include <cmath>
#include <sstream>

#include "bbb/stats.hpp"

namespace bbb {

HistogramGrid HistogramGrid::uniform(std::size_t d, double lo, double hi, std::size_t bins_per_dim) {
  if (d == 0 || bins_per_dim == 0 || !(hi > lo)) throw DomainError("histogram grid: invalid bounds");
  HistogramGrid g;
  g.lower.assign(d, lo);
  g.width.assign(d, (hi - lo) / static_cast<double>(bins_per_dim));
  g.bins.assign(d, bins_per_dim);
  return g;
}

std::size_t HistogramGrid::cells() const noexcept {
  std::size_t c = 1;
  for (auto b : bins) c *= b;
  return c;
}

std::optional<std::size_t> HistogramGrid::cell(std::span<const double> x) const {
  if (x.size() != dim()) throw DomainError("histogram: point dimension mismatch");
  std::size_t idx = 0;
  for (std::size_t k = 0; k < dim(); ++k) {
    const double u = (x[k] - lower[k]) / width[k];
    if (!(u >= 0.0) || u >= static_cast<double>(bins[k])) return std::nullopt;
    idx = idx * bins[k] + static_cast<std::size_t>(u);
  }
  return idx;
}

std::vector<double> HistogramGrid::cell_lower(std::size_t cell) const {
  std::vector<double> out(dim());
  for (std::size_t k = dim(); k-- > 0;) {
    out[k] = lower[k] + width[k] * static_cast<double>(cell % bins[k]);
    cell /= bins[k];
  }
  return out;
}

Histogram::Histogram(HistogramGrid grid) : grid_(std::move(grid)) {
  if (grid_.dim() == 0 || grid_.width.size() != grid_.dim() || grid_.bins.size() != grid_.dim())
    throw DomainError("histogram: inconsistent grid");
  for (std::size_t k = 0; k < grid_.dim(); ++k)
    if (!(grid_.width[k] > 0) || grid_.bins[k] == 0) throw DomainError("histogram: empty bins");
  counts_.assign(grid_.cells(), 0.0);
}

void Histogram::add(std::span<const double> x) {
  if (auto c = grid_.cell(x)) {
    counts_[*c] += 1.0;
    in_range_ += 1.0;
  } else {
    ++out_of_range_;
  }
}

std::vector<double> Histogram::normalized() const {
  std::vector<double> out(counts_.size(), 0.0);
  if (in_range_ == 0) return out;
  for (std::size_t i = 0; i < counts_.size(); ++i) out[i] = counts_[i] / in_range_;
  return out;
}

std::string Histogram::to_csv() const {
  std::ostringstream os;
  for (std::size_t k = 0; k < grid_.dim(); ++k) os << "lower_" << k << ',';
  os << "count,mass\n";
  const auto mass = normalized();
  char buf[64];
  auto put = [&](double v) {
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, res.ptr - buf);
  };
  for (std::size_t c = 0; c < counts_.size(); ++c) {
    for (double v : grid_.cell_lower(c)) {
      put(v);
      os << ',';
    }
    put(counts_[c]);
    os << ',';
    put(mass[c]);
    os << '\n';
  }
  return os.str();
}

double l1_distance(const Histogram& a, const Histogram& b) {
  if (a.counts().size() != b.counts().size()) throw DomainError("l1_distance: grids differ");
  const auto pa = a.normalized(), pb = b.normalized();
  double s = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) s += std::abs(pa[i] - pb[i]);
  return s;
}

MeasureResult empirical_measure(const std::vector<Configuration>& configs, const HistogramGrid& grid) {
  if (configs.empty()) throw DomainError("empirical_measure: no configurations");
  const std::size_t N = configs.front().capacity();
  for (const auto& c : configs) {
    if (c.size() != N || c.capacity() != N)
      throw DomainError("empirical_measure: every configuration must hold N particles");
    if (c.dim() != grid.dim()) throw DomainError("empirical_measure: grid dimension mismatch");
  }
  MeasureResult res{Histogram(grid), Histogram(grid), Histogram(grid), 0.0, 0, {}};
  const std::size_t half = configs.size() / 2;
  for (std::size_t r = 0; r < configs.size(); ++r) {
    const Configuration rc = recenter(configs[r]);
    Histogram& part = r < half ? res.first_half : res.second_half;
    for (std::size_t i = 0; i < rc.size(); ++i) {
      res.pooled.add(rc.position(i));
      part.add(rc.position(i));
    }
  }
  res.out_of_range = res.pooled.out_of_range();
  if (half > 0) res.split_half_l1 = l1_distance(res.first_half, res.second_half);
  if (res.out_of_range > 0) {
    const double total = res.pooled.in_range() + static_cast<double>(res.out_of_range);
    res.warnings.push_back("mass outside grid: " + std::to_string(static_cast<double>(res.out_of_range) / total));
  }
  return res;
}

}  // namespace bbb
