#include <algorithm>
#include <cmath>
#include <numeric>

#include "bbb/stats.hpp"
#include "crafted.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bbb;

namespace {

std::vector<Point> gaussian_points(std::size_t n, const std::vector<double>& sd, double rho, RngStream& rng,
                                   const std::vector<double>& mean = {}) {
  std::vector<Point> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(sd.size());
    double prev = 0;
    for (std::size_t k = 0; k < sd.size(); ++k) {
      const double z = rng.normal();
      const double c = k == 0 ? z : rho * prev + std::sqrt(1 - rho * rho) * z;
      prev = z;
      x[k] = sd[k] * c + (mean.empty() ? 0.0 : mean[k]);
    }
    out.emplace_back(std::move(x));
  }
  return out;
}

}  // namespace

TEST_CASE("normal cdf reference values") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(normal_cdf(-1.0) == doctest::Approx(0.15865525393145707).epsilon(1e-12));
  CHECK(normal_cdf(-8.0) == doctest::Approx(6.22096057427178e-16).epsilon(1e-8));
  for (double x = -6; x <= 6; x += 0.37) CHECK(normal_cdf(x) + normal_cdf(-x) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("chi-square and Kolmogorov tails") {
  CHECK(chi_square_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(chi_square_sf(5.991464547107979, 2) == doctest::Approx(0.05).epsilon(1e-9));
  for (double x : {0.1, 1.0, 4.0, 10.0}) CHECK(chi_square_sf(x, 2) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-12));
  CHECK(chi_square_sf(0.0, 3) == 1.0);
  CHECK(kolmogorov_pvalue(1.3580986393225505 / 100.0, 10000) == doctest::Approx(0.05).epsilon(0.05));
  CHECK(kolmogorov_pvalue(0.0, 50) == doctest::Approx(1.0));
  CHECK(kolmogorov_pvalue(0.9, 50) < 1e-10);
  double prev = 1.1;
  for (double D = 0.01; D < 0.5; D += 0.01) {
    const double p = kolmogorov_pvalue(D, 100);
    CHECK(p <= prev);
    prev = p;
  }
  CHECK(ks_statistic({0.5}, [](double u) { return u; }) == doctest::Approx(0.5));
  CHECK(ks_statistic({0.125, 0.375, 0.625, 0.875}, [](double u) { return u; }) == doctest::Approx(0.125));
}

TEST_CASE("ks on uniform draws accepts and on shifted draws rejects") {
  RngStream rng(300, 0);
  std::vector<double> u, v;
  for (int i = 0; i < 5000; ++i) {
    u.push_back(rng.uniform());
    v.push_back(std::min(1.0, rng.uniform() + 0.05));
  }
  const auto F = [](double x) { return std::clamp(x, 0.0, 1.0); };
  CHECK(kolmogorov_pvalue(ks_statistic(u, F), u.size()) > 0.01);
  CHECK(kolmogorov_pvalue(ks_statistic(v, F), v.size()) < 1e-6);
}

TEST_CASE("sigma2 recovers a known variance") {
  RngStream rng(301, 0);
  const double m = 5.0;
  const auto pts = gaussian_points(20000, {std::sqrt(2 * m), std::sqrt(2 * m)}, 0.0, rng);
  const auto r = estimate_sigma2(pts, m, 9);
  REQUIRE(r.estimate.size() == 3);
  CHECK(std::abs(r.estimate[0] - 2.0) <= 3 * r.std_error[0]);
  // Pooled variance over d coordinates: SE = sigma^2 sqrt(2 / (d (n - 1))).
  const double analytic = 2.0 * std::sqrt(2.0 / (2.0 * 19999.0));
  CHECK(r.std_error[0] == doctest::Approx(analytic).epsilon(0.15));
  CHECK(r.ci_lower[0] < r.estimate[0]);
  CHECK(r.ci_upper[0] > r.estimate[0]);
  CHECK(r.samples == 20000);
  CHECK(r.seed == 9);
  CHECK(r.metric("horizon") == m);
}

TEST_CASE("sigma2 is invariant under reordering and common translation") {
  RngStream rng(302, 0);
  auto pts = gaussian_points(500, {1.0, 2.0}, 0.0, rng);
  const auto a = estimate_sigma2(pts, 2.0);
  std::reverse(pts.begin(), pts.end());
  std::rotate(pts.begin(), pts.begin() + 17, pts.end());
  const auto b = estimate_sigma2(pts, 2.0);
  CHECK(b.estimate[0] == doctest::Approx(a.estimate[0]).epsilon(1e-12));
  CHECK(b.std_error[0] == doctest::Approx(a.std_error[0]).epsilon(1e-9));
  std::vector<Point> shifted;
  for (const auto& p : pts) shifted.push_back(Point{p[0] + 100.0, p[1] - 7.0});
  const auto c = estimate_sigma2(shifted, 2.0);
  CHECK(c.estimate[0] == doctest::Approx(a.estimate[0]).epsilon(1e-9));
}

TEST_CASE("sigma2 preconditions") {
  const std::vector<Point> one{Point{1.0}};
  CHECK_THROWS_AS(estimate_sigma2(one, 1.0), DomainError);
  const std::vector<Point> two{Point{1.0}, Point{2.0}};
  CHECK_THROWS_AS(estimate_sigma2(two, 0.0), DomainError);
  CHECK_NOTHROW(estimate_sigma2(two, 1.0));
}

TEST_CASE("drift and isotropy: isotropic input passes") {
  RngStream rng(303, 0);
  const auto pts = gaussian_points(10000, {1.5, 1.5, 1.5}, 0.0, rng);
  const auto r = drift_and_isotropy(pts);
  CHECK(r.check("drift_zero").passed);
  CHECK(r.check("offdiag_zero").passed);
  CHECK(r.check("homogeneity").passed);
  CHECK(r.all_passed());
  const auto j = nlohmann::json::parse(to_json(r));
  CHECK(j["checks"].size() == 3);
}

TEST_CASE("drift and isotropy: each violation is caught") {
  RngStream rng(304, 0);
  CHECK_FALSE(drift_and_isotropy(gaussian_points(10000, {1.0, 1.0}, 0.0, rng, {0.1, 0.0})).check("drift_zero").passed);
  CHECK_FALSE(drift_and_isotropy(gaussian_points(10000, {1.0, 1.0}, 0.2, rng)).check("offdiag_zero").passed);
  const auto aniso = drift_and_isotropy(gaussian_points(10000, {1.0, 1.2}, 0.0, rng));
  CHECK_FALSE(aniso.check("homogeneity").passed);
  CHECK(aniso.check("drift_zero").passed);
}

TEST_CASE("drift and isotropy in one dimension skips isotropy") {
  RngStream rng(305, 0);
  const auto r = drift_and_isotropy(gaussian_points(100, {1.0}, 0.0, rng));
  CHECK(r.has_flag("isotropy_skipped"));
  CHECK(r.has_check("drift_zero"));
  CHECK_FALSE(r.has_check("homogeneity"));
  const std::vector<Point> two{Point{1.0}, Point{2.0}};
  CHECK_THROWS_AS(drift_and_isotropy(two), DomainError);
}

TEST_CASE("tail fit recovers an exponential rate") {
  RngStream rng(306, 0);
  std::vector<double> t;
  for (int i = 0; i < 5000; ++i) t.push_back(rng.exponential(0.7));
  const auto r = fit_tail(t);
  REQUIRE_FALSE(r.has_flag("degenerate"));
  CHECK(r.estimate[0] == doctest::Approx(-0.7).epsilon(0.10));
  CHECK(r.check("negative_slope").passed);
  CHECK(r.check("not_convex").passed);
  CHECK(r.check("geometric_decay").passed);
  CHECK(r.metric("median") == doctest::Approx(std::log(2.0) / 0.7).epsilon(0.1));
}

TEST_CASE("tail fit flags heavy tails as convex") {
  RngStream rng(307, 0);
  std::vector<double> t;
  // Pareto with index 1.5: log S is concave up in t.
  for (int i = 0; i < 20000; ++i) t.push_back(std::pow(rng.uniform(), -1.0 / 1.5));
  const auto r = fit_tail(t);
  CHECK_FALSE(r.check("not_convex").passed);
}

TEST_CASE("tail fit degenerate and small inputs") {
  const std::vector<double> constant(200, 3.0);
  CHECK(fit_tail(constant).has_flag("degenerate"));
  const std::vector<double> small(99, 1.0);
  CHECK_THROWS_AS(fit_tail(small), DomainError);
}

TEST_CASE("tail fit at explicit thresholds") {
  RngStream rng(308, 0);
  std::vector<double> t;
  for (int i = 0; i < 4000; ++i) t.push_back(rng.exponential(2.0));
  const std::vector<double> thr{0.25, 0.5, 0.75, 1.0, 1.25, 1.5};
  const auto r = fit_tail(t, thr);
  CHECK(r.estimate[0] == doctest::Approx(-2.0).epsilon(0.1));
}

TEST_CASE("box masses and the minorization constant") {
  Box b{{-1.959963984540054}, {1.959963984540054}};
  CHECK(gaussian_box_mass(b) == doctest::Approx(0.95).epsilon(1e-10));
  Box b2{{0.0, -1e9}, {1e9, 0.0}};
  CHECK(gaussian_box_mass(b2) == doctest::Approx(0.25).epsilon(1e-12));
  Box flat{{0.5, 0.0}, {0.5, 1.0}};
  CHECK(gaussian_box_mass(flat) == 0.0);
  Box inverted{{1.0, 0.0}, {0.5, 1.0}};
  CHECK_THROWS_AS(gaussian_box_mass(inverted), DomainError);
  CHECK(minorization_constant(2, 1.0) == doctest::Approx(std::exp(-4.0) * std::exp(-1.0)).epsilon(1e-14));
  CHECK(minorization_constant(3, 0.0) == doctest::Approx(std::exp(-6.0)).epsilon(1e-14));
}

TEST_CASE("minorization check on a small run") {
  MinorizationParams p;
  p.start = Configuration::from_values({-0.5, 0.5});
  p.L = 1.0;
  p.t = 1.5;
  p.replicas = 20000;
  p.seed = 3;
  p.boxes = {Box{{-1, -1}, {1, 1}}, Box{{0, -2}, {2, 0}}};
  const auto r = minorization_check(p);
  CHECK(r.estimate.size() == 2);
  CHECK(r.check("box_0").passed);
  CHECK(r.check("box_1").passed);
  // No branching on [0, 2] at rate 2: probability e^{-4}.
  const double q = r.metric("quiet_fraction");
  CHECK(std::abs(q - std::exp(-4.0)) <= 4 * std::sqrt(std::exp(-4.0) / 20000.0));
  CHECK(r.metric("gamma") == doctest::Approx(minorization_constant(2, 1.0)));

  p.t = 2.5;
  CHECK_THROWS_AS(minorization_check(p), DomainError);
  p.t = 1.5;
  p.start = Configuration::from_values({-1.0, 1.0});
  CHECK_THROWS_AS(minorization_check(p), DomainError);
}

TEST_CASE("minorization results do not depend on the thread count") {
  MinorizationParams p;
  p.start = Configuration::from_values({0.0, 0.25});
  p.replicas = 3000;
  p.boxes = {Box{{-1, -1}, {1, 1}}};
  p.threads = 1;
  const auto a = minorization_check(p);
  p.threads = 3;
  const auto b = minorization_check(p);
  CHECK(a.estimate == b.estimate);
  CHECK(to_json(a) == to_json(b));
}

TEST_CASE("occupation fraction on a crafted trajectory") {
  Trajectory tr;
  tr.manifest = testing::crafted_manifest(2, 1, 3.0);
  for (int i = 0; i <= 6; ++i) {
    const double half = (i % 3 == 0) ? 0.1 : 2.0;
    tr.observations.push_back({0.5 * i, testing::line_config({5.0 - half, 5.0 + half}), true});
  }
  tr.observations.push_back({0.7, testing::line_config({0.0, 0.0}), false});
  const auto r = occupation_fraction(tr, {Point{-0.1}, Point{0.1}}, 0.05, 1.0);
  CHECK(r.estimate[0] == doctest::Approx(3.0 / 7.0));
  REQUIRE(r.series.size() == 4);
  CHECK(r.series[0] == doctest::Approx(0.5));
  CHECK(r.metric("min_block_fraction") == doctest::Approx(0.0));
  CHECK(occupation_fraction(tr, {Point{0.0}}, 0.0, 1.0).estimate[0] == 0.0);
  CHECK_THROWS_AS(occupation_fraction(tr, {Point{0.0}}, -1.0, 1.0), DomainError);
  CHECK_THROWS_AS(occupation_fraction(tr, {Point{0.0}, Point{0.0}, Point{0.0}}, 1.0, 1.0), DomainError);
}

TEST_CASE("Donsker rescaling") {
  // S(j) = j * alpha exactly: the rescaled path is identically zero.
  std::vector<Point> s;
  for (int j = 0; j <= 100; ++j) s.push_back(Point{0.5 * j, -1.0 * j});
  const auto path = donsker_rescale(s, 100, Point{0.5, -1.0}, 10);
  REQUIRE(path.size() == 11);
  for (const auto& p : path) {
    CHECK(std::abs(p[0]) < 1e-12);
    CHECK(std::abs(p[1]) < 1e-12);
  }
  // Pure random walk: the endpoint variance is one per unit step.
  RngStream rng(309, 0);
  double s2 = 0;
  const int reps = 4000;
  for (int r = 0; r < reps; ++r) {
    std::vector<Point> walk{Point{0.0}};
    double acc = 0;
    for (int j = 0; j < 64; ++j) walk.push_back(Point{acc += rng.normal()});
    const auto w = donsker_rescale(walk, 64, Point{0.0}, 4);
    CHECK(w.front()[0] == 0.0);
    s2 += w.back()[0] * w.back()[0];
  }
  CHECK(std::abs(s2 / reps - 1.0) <= 4 * std::sqrt(2.0 / reps));
  CHECK_THROWS_AS(donsker_rescale(s, 0, Point{0.0, 0.0}, 4), DomainError);
  CHECK_THROWS_AS(donsker_rescale(s, 101, Point{0.0, 0.0}, 4), DomainError);
}

TEST_CASE("renewal utilities") {
  const std::vector<double> times{1.0, 3.0, 5.0};
  CHECK(renewal_index(times, 0.5) == 0);
  CHECK(renewal_index(times, 3.0) == 2);
  CHECK(renewal_index(times, 10.0) == 3);
  const auto S = renewal_scale(4.0, {{4.0, 2.0}, {2.0, 5.0}});
  CHECK(S[0][0] == doctest::Approx(1.0));
  CHECK(S[0][1] == doctest::Approx(0.0));
  CHECK(S[1][0] == doctest::Approx(0.5));
  CHECK(S[1][1] == doctest::Approx(1.0));
  CHECK_THROWS_AS(renewal_scale(1.0, {{1.0, 2.0}, {2.0, 1.0}}), DomainError);
  CHECK(renewal_drift(Point{3.0, -6.0}, 1.5) == Point{2.0, -4.0});
  const std::vector<double> z{3, 1, 4, 1, 5};
  CHECK(scaled_block_max(z, 3, 4.0) == doctest::Approx(1.5));
  CHECK(scaled_block_max(z, 1, 4.0) == 0.0);
  CHECK_THROWS_AS(scaled_block_max(z, 7, 4.0), DomainError);
  CHECK(strictly_decreasing(std::vector<double>{3, 2, 1}));
  CHECK_FALSE(strictly_decreasing(std::vector<double>{3, 3, 1}));
  CHECK(median({5, 1, 3}) == 3.0);
  CHECK(median({4, 1, 3, 2}) == 2.5);
}

TEST_CASE("renewal diagnostics and leader gap on a crafted trajectory") {
  Trajectory tr;
  tr.manifest = testing::crafted_manifest(2, 1, 4.0);
  const double lead[] = {0.0, 2.0, 1.0, -1.0, 3.0};
  for (int i = 0; i <= 4; ++i) tr.observations.push_back({1.0 * i, testing::line_config({lead[i], 0.0}), true});
  const std::vector<double> times{0.0, 1.0, 4.0};
  const auto r = renewal_diagnostics(tr, times);
  CHECK(r.metric("mean_increment") == doctest::Approx(2.0));
  CHECK(r.metric("mean_displacement_0") == doctest::Approx(1.5));
  CHECK(r.metric("mean_sup_sq_excursion") == doctest::Approx((4.0 + 9.0) / 2.0));
  CHECK(barycenter_leader_gap(tr) == doctest::Approx(1.5));
  const std::vector<double> off{0.0, 1.5, 4.0};
  CHECK_THROWS_AS(renewal_diagnostics(tr, off), DomainError);
}

TEST_CASE("histograms") {
  const auto g = HistogramGrid::uniform(2, -1.0, 1.0, 4);
  CHECK(g.cells() == 16);
  CHECK(g.cell(std::vector<double>{-1.0, -1.0}) == 0);
  CHECK(g.cell(std::vector<double>{0.99, -1.0}) == 12);
  CHECK_FALSE(g.cell(std::vector<double>{1.0, 0.0}).has_value());
  CHECK(g.cell_lower(12) == std::vector<double>{0.5, -1.0});
  Histogram h(g);
  h.add(std::vector<double>{0.1, 0.1});
  h.add(std::vector<double>{0.1, 0.2});
  h.add(std::vector<double>{5.0, 0.0});
  CHECK(h.in_range() == 2.0);
  CHECK(h.out_of_range() == 1);
  const auto n = h.normalized();
  CHECK(std::accumulate(n.begin(), n.end(), 0.0) == doctest::Approx(1.0));
  const std::string csv = h.to_csv();
  CHECK(csv.rfind("lower_0,lower_1,count,mass\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
  CHECK_THROWS_AS(HistogramGrid::uniform(1, 1.0, 1.0, 3), DomainError);
}

TEST_CASE("empirical measure of recentered configurations") {
  std::vector<Configuration> cs;
  for (int r = 0; r < 10; ++r) cs.push_back(Configuration::from_values({10.0 * r - 1.0, 10.0 * r + 1.0}));
  const auto res = empirical_measure(cs, HistogramGrid::uniform(1, -2.0, 2.0, 4));
  CHECK(res.pooled.counts() == std::vector<double>{0, 10, 0, 10});
  CHECK(res.split_half_l1 == doctest::Approx(0.0));
  CHECK(res.out_of_range == 0);
  CHECK(res.warnings.empty());
  const auto wide = empirical_measure(cs, HistogramGrid::uniform(1, -0.5, 0.5, 2));
  CHECK(wide.out_of_range == 20);
  CHECK_FALSE(wide.warnings.empty());
  std::vector<Configuration> bad{Configuration::from_values({0.0}, 2)};
  CHECK_THROWS_AS(empirical_measure(bad, HistogramGrid::uniform(1, -1, 1, 2)), DomainError);
}
