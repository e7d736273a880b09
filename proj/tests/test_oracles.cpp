#include <doctest.h>

#include "ddeopt/errors.hpp"
#include "ddeopt/oracles.hpp"
#include "support.hpp"

using namespace ddeopt;
using testing::kPi;

TEST_SUITE("oracles") {

TEST_CASE("linear amplitude") {
  CHECK(linear_amplitude(1.7207) == doctest::Approx(0.8911).epsilon(1e-4));
  CHECK(linear_amplitude(kPi) == doctest::Approx(1.0 / kPi).epsilon(1e-14));
  CHECK(linear_amplitude(1e-9) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK_THROWS_AS(linear_amplitude(0.0), DomainFault);
  CHECK_THROWS_AS(linear_amplitude(-1.0), DomainFault);
}

TEST_CASE("linear optimum") {
  const LinearOptimum o = linear_optimum();
  CHECK(std::abs(o.omega - 1.7207) < 1e-3);
  CHECK(std::abs(o.T - 3.6516) < 1e-3);
  CHECK(std::abs(o.r - 0.8911) < 1e-4);
  CHECK(std::abs(o.t_crit - 2.24) < 1e-2);
  // stationarity of r(ω)
  const double h = 1e-5;
  CHECK(std::abs(linear_amplitude(o.omega + h) - linear_amplitude(o.omega - h)) < 1e-10);
  // the response r cos(ωt - ψ) forced by cos(ωt + φ) peaks where the phase says
  const double w = o.omega, phase = linear_response_phase(w);
  auto z = [&](double t) { return o.r * std::cos(w * t - phase); };
  auto res = [&](double t) {
    const double dz = -o.r * w * std::sin(w * t - phase);
    return dz + z(t) + z(t - 1.0) - std::cos(w * t);
  };
  for (double t : {0.0, 0.4, 2.2}) CHECK(std::abs(res(t)) < 1e-12);
}

TEST_CASE("multiple-scales peak amplitude") {
  MsParams p;
  CHECK(ms_rho_max(p, kPi / 4) == doctest::Approx(2.0710678118654755).epsilon(1e-14));
  MsParams same = p;
  same.b = same.a;
  CHECK(ms_rho_max(same, kPi / 4) == doctest::Approx(same.gamma / (2 * same.zeta)).epsilon(1e-14));
  MsParams none = p;
  none.a = none.b = 0.0;
  for (double al : {0.1, 1.0, 2.5}) CHECK(ms_rho_max(none, al) == doctest::Approx(5.0));
  MsParams res = p;
  res.zeta = 0.0;
  res.b = 0.0;
  CHECK_THROWS_AS(ms_rho_max(res, 0.0), DomainFault);
}

TEST_CASE("multiple-scales optimal delay") {
  MsParams p;
  CHECK(ms_optimal_delay(p) == doctest::Approx(kPi / 4).epsilon(1e-10));
  p.b = 0.0;
  CHECK(ms_optimal_delay(p) == doctest::Approx(kPi / 2).epsilon(1e-10));
  p.a = 0.0;
  p.b = -0.05;
  CHECK(ms_optimal_delay(p) == 0.0);
  p.b = 0.0;
  CHECK_THROWS_AS(ms_optimal_delay(p), DomainFault);
}

TEST_CASE("frequency response roots") {
  MsParams p;
  const double al = 0.9;
  const double e = p.zeta + p.a * std::sin(al) - p.b * std::cos(al);
  auto relation = [&](const MsParams& q, double sigma, double rho) {
    const double c = sigma - 3 * q.mu * rho * rho / 8 + q.a * std::cos(al) + q.b * std::sin(al);
    return rho * rho * (c * c + e * e) - q.gamma * q.gamma / 4;
  };
  for (double sigma : {-1.0, -0.2, 0.0, 0.1, 0.35, 0.6, 2.0}) {
    for (double r : ms_frequency_response(p, al, sigma)) {
      CHECK(r > 0.0);
      CHECK(std::abs(relation(p, sigma, r)) < 1e-10);
    }
  }
  MsParams lin = p;
  lin.mu = 0.0;
  const double sigma = 0.3, c = sigma + p.a * std::cos(al) + p.b * std::sin(al);
  const auto r = ms_frequency_response(lin, al, sigma);
  REQUIRE(r.size() == 1);
  CHECK(r[0] == doctest::Approx(p.gamma / 2 / std::hypot(c, e)).epsilon(1e-12));

  const double sp = ms_peak_detuning(p, al);
  const auto at_peak = ms_frequency_response(p, al, sp);
  REQUIRE_FALSE(at_peak.empty());
  CHECK(std::abs(at_peak.back() - ms_rho_max(p, al)) < 1e-10);

  double prev = INFINITY;
  for (double s : {-5.0, -20.0, -80.0}) {
    const auto rr = ms_frequency_response(p, al, s);
    REQUIRE(rr.size() == 1);
    CHECK(rr[0] < prev);
    prev = rr[0];
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("golden section") {
  CHECK(golden_max([](double x) { return -(x - 0.3) * (x - 0.3); }, 0.0, 1.0) == doctest::Approx(0.3).epsilon(1e-7));
}

}
