#include <cmath>
#include <vector>

#include "doctest.h"
#include "mcarsense/errors.hpp"
#include "mcarsense/samplers.hpp"
#include "mcarsense/sensitivity.hpp"
#include "mcarsense/special.hpp"
#include "oracles.hpp"

using namespace mcarsense;
using doctest::Approx;

namespace {

DiscreteMeasure outcomes(std::vector<std::pair<double, double>> vw) {
  std::vector<WeightedPoint> atoms;
  for (auto [v, w] : vw) atoms.push_back({Point::outcome(v), w});
  return DiscreteMeasure::normalize(std::move(atoms), Space::outcomes);
}

// Equal-weight atoms drawn from Gamma(shape, 1).
DiscreteMeasure gamma_atoms(double shape, std::size_t k, std::uint64_t seed) {
  RngStream rng(seed, 0);
  std::vector<double> v(k);
  for (auto& x : v) x = sample_gamma(shape, 1.0, rng);
  return DiscreteMeasure::empirical(v);
}

DiscreteMeasure random_measure(RngStream& rng, std::size_t k) {
  std::vector<WeightedPoint> atoms;
  for (std::size_t i = 0; i < k; ++i) atoms.push_back({Point::outcome(0.1 + 5 * rng.uniform()), rng.uniform()});
  return DiscreteMeasure::normalize(std::move(atoms), Space::outcomes);
}

DiscreteMeasure assemble_h(double p, const DiscreteMeasure& P1) {
  std::vector<WeightedPoint> atoms{{Point::star(), 1 - p}};
  for (const auto& a : P1.atoms()) atoms.push_back({a.location, p * a.weight});
  return DiscreteMeasure(std::move(atoms), Space::observations, true);
}

const FunctionalSpec id = FunctionalSpec::identity();
const double kC = 1.0 - oracle::kEuler;  // digamma(2)

}  // namespace

TEST_CASE("q evaluation") {
  CHECK(q_eval({0.0, 0.3}, 5.0) == 0.0);
  CHECK(q_eval({2.0, 0.0}, std::exp(1.0)) == Approx(2.0));
  CHECK(q_eval({2.0, 0.4228}, 1.0) == Approx(-0.8456));
  CHECK_THROWS_AS(q_eval({1.0, 0.0}, 0.0), DomainError);
  CHECK_THROWS_AS(q_eval({1.0, 0.0}, -1.0), DomainError);
}

TEST_CASE("functional spec") {
  CHECK(id(3.5) == 3.5);
  const auto ind = FunctionalSpec::indicator(2.0);
  CHECK(ind(2.0) == 1.0);
  CHECK(ind(2.1) == 0.0);
}

TEST_CASE("observed dataset validation") {
  ObservedDataset d({{1.5, 1}, {7.0, 0}, {2.0, 1}});
  CHECK(d.n() == 3);
  CHECK(d.num_observed() == 2);
  CHECK(d.num_missing() == 1);
  CHECK(d.records()[1].x == 0.0);
  CHECK(d.observed_fraction() == Approx(2.0 / 3.0));
  CHECK_THROWS_AS(ObservedDataset({{1.0, 2}}), DataError);
  CHECK_THROWS_AS(ObservedDataset({{0.0, 1}}), DataError);
  CHECK_THROWS_AS(ObservedDataset({{std::nan(""), 1}}), DataError);
}

TEST_CASE("chi functional on finite atoms") {
  const DiscreteMeasure H({{Point::star(), 0.5}, {Point::outcome(1.0), 0.25}, {Point::outcome(2.0), 0.25}},
                          Space::observations, true);
  CHECK(chi_functional(H, id, {0.0, 0.0}) == Approx(1.5).epsilon(1e-14));
  CHECK(chi_functional(H, id, {2.0, 0.0}) == Approx(2.25 * 0.5 / 1.25 + 0.75).epsilon(1e-14));
  CHECK(chi_functional(H, id, {2.0, 0.0}) == Approx(1.65).epsilon(1e-14));

  const DiscreteMeasure only_star({{Point::star(), 1.0}}, Space::observations, true);
  CHECK_THROWS_AS(chi_functional(only_star, id, {1.0, 0.0}), DegenerateMeasureError);

  // span form agrees and survives huge tilts
  const std::vector<double> vals{1.0, 2.0}, w{0.25, 0.25};
  CHECK(chi_functional(vals, w, 0.5, id, {2.0, 0.0}) == Approx(1.65).epsilon(1e-14));
  const std::vector<double> big{1e-3, 1e3};
  const double v = chi_functional(big, w, 0.5, id, {300.0, 0.0});
  CHECK(std::isfinite(v));
  CHECK(v == Approx(1e3 * 0.5 / 0.25 * 0.25 + 0.25 * (1e-3 + 1e3)).epsilon(1e-12));
}

TEST_CASE("chi functional at the scenario truth is 2.8 for any c") {
  const DiscreteMeasure P1 = gamma_atoms(2.0, 200000, 7);
  const DiscreteMeasure H = assemble_h(0.6, P1);
  for (double c : {0.0, kC, 1.3}) {
    // Monte Carlo error of P1(y e^q)/P1 e^q with q = 2 log y: about 0.02 at this size
    CHECK(std::abs(chi_functional(H, id, {2.0, c}) - 2.8) < 0.05);
  }
  CHECK(chi_functional(H, id, {2.0, 0.0}) == Approx(chi_functional(H, id, {2.0, 1.3})).epsilon(1e-12));
}

TEST_CASE("kappa functional") {
  const DiscreteMeasure P1 = outcomes({{1.0, 0.5}, {2.0, 0.5}});
  CHECK(kappa_functional(1.0, P1, id, {2.0, 0.3}) == Approx(1.5).epsilon(1e-15));
  CHECK(kappa_functional(0.6, P1, id, {0.0, 0.0}) == Approx(1.5).epsilon(1e-15));

  RngStream rng(3, 0);
  for (int t = 0; t < 50; ++t) {
    const DiscreteMeasure P = random_measure(rng, 7);
    const double p = 0.05 + 0.9 * rng.uniform();
    const SensitivitySpec spec{4 * rng.uniform() - 2, rng.uniform()};
    const double k = kappa_functional(p, P, id, spec);
    CHECK(std::abs(k - chi_functional(assemble_h(p, P), id, spec)) < 1e-12 * std::abs(k));
    // p sum g (1 + (1-p)/p e^q / P1 e^q) P1{y}
    double mexp = 0.0;
    for (const auto& a : P.atoms()) mexp += a.weight * std::exp(q_eval(spec, a.location.value));
    double alt = 0.0;
    for (const auto& a : P.atoms()) {
      const double y = a.location.value;
      alt += y * (1 + (1 - p) / p * std::exp(q_eval(spec, y)) / mexp) * a.weight;
    }
    CHECK(std::abs(k - p * alt) < 1e-12 * std::abs(k));
  }
}

TEST_CASE("eta and p are an inverse pair") {
  // analytic P1 e^q = Gamma(r + alpha) / Gamma(r) s^-alpha e^{-alpha c}
  const double eta0 = std::log(0.4 / 0.6) + 2.0 * kC - std::log(6.0);
  CHECK(eta0 == Approx(-1.3517).epsilon(1e-4));
  const DiscreteMeasure P1 = outcomes({{1.0, 0.3}, {2.0, 0.7}});
  CHECK(eta_from_p(0.3, P1, {0.0, 0.0}) == Approx(std::log(0.7 / 0.3)).epsilon(1e-14));
  CHECK_THROWS_AS(eta_from_p(0.0, P1, {1.0, 0.0}), BoundaryError);
  CHECK_THROWS_AS(eta_from_p(1.0, P1, {1.0, 0.0}), BoundaryError);

  CHECK(p_from_eta(-40.0, P1, {1.0, 0.0}) > 1 - 1e-12);
  CHECK(p_from_eta(0.0, P1, {0.0, 0.0}) == Approx(0.5).epsilon(1e-15));

  // round trip through the reassembled P
  RngStream rng(5, 0);
  for (int t = 0; t < 50; ++t) {
    const DiscreteMeasure Q1 = random_measure(rng, 6);
    const double p = 0.05 + 0.9 * rng.uniform();
    const SensitivitySpec spec{4 * rng.uniform() - 2, rng.uniform()};
    const double eta = eta_from_p(p, Q1, spec);
    // P = p P1 + (1 - p) P0 with dP0 proportional to e^q dP1
    double z = 0.0;
    for (const auto& a : Q1.atoms()) z += a.weight * std::exp(q_eval(spec, a.location.value));
    std::vector<WeightedPoint> patoms;
    for (const auto& a : Q1.atoms()) {
      const double w0 = a.weight * std::exp(q_eval(spec, a.location.value)) / z;
      patoms.push_back({a.location, p * a.weight + (1 - p) * w0});
    }
    const DiscreteMeasure P(patoms, Space::outcomes, true);
    CHECK(p_from_eta(eta, P, spec) == Approx(p).epsilon(1e-10));
  }
}

TEST_CASE("p from eta at the scenario truth") {
  // P = 0.6 Gamma(2, 1) + 0.4 Gamma(4, 1) by Monte Carlo atoms
  RngStream rng(17, 0);
  const std::size_t k = 400000;
  std::vector<double> v(k);
  for (auto& x : v) x = rng.uniform() < 0.6 ? sample_gamma(2.0, 1.0, rng) : sample_gamma(4.0, 1.0, rng);
  const DiscreteMeasure P = DiscreteMeasure::empirical(v);
  const double eta0 = std::log(0.4 / 0.6) + 2.0 * kC - std::log(6.0);
  const SensitivitySpec spec{2.0, kC};
  const double p = p_from_eta(eta0, P, spec);
  // standard error of the mean of 1 / (1 + e^{eta + q}) is below 0.0007 here
  CHECK(std::abs(p - 0.6) < 0.002);

  const DiscreteMeasure P0 = p0_reweight(P, eta0, spec);
  CHECK(std::abs(P0.integrate([](double y) { return y; }) - 4.0) < 0.03);
  const P1Reweight r = p1_reweight(P, eta0, spec);
  CHECK(std::abs(r.P1.integrate([](double y) { return y; }) - 2.0) < 0.02);
}

TEST_CASE("p0 and p1 reweighting") {
  const DiscreteMeasure P = outcomes({{1.0, 0.5}, {2.0, 0.5}});
  const DiscreteMeasure P0 = p0_reweight(P, 0.0, {1.0, 0.0});
  REQUIRE(P0.size() == 2);
  CHECK(P0.atoms()[0].weight == Approx(0.25 / (0.25 + 1.0 / 3.0)).epsilon(1e-14));
  CHECK(P0.atoms()[0].weight == Approx(0.4286).epsilon(1e-4));
  CHECK(P0.atoms()[1].weight == Approx(0.5714).epsilon(1e-4));

  const DiscreteMeasure same = p0_reweight(P, 0.7, {0.0, 0.0});
  for (std::size_t i = 0; i < 2; ++i) CHECK(same.atoms()[i].weight == Approx(P.atoms()[i].weight).epsilon(1e-15));

  const P1Reweight r = p1_reweight(P, 0.0, {0.0, 0.0});
  CHECK(r.p == Approx(0.5));
  CHECK(r.P1.atoms()[1].weight == Approx(0.5));

  RngStream rng(9, 0);
  for (int t = 0; t < 30; ++t) {
    const DiscreteMeasure Q = random_measure(rng, 8);
    const SensitivitySpec spec{4 * rng.uniform() - 2, rng.uniform()};
    const double eta = 3 * rng.uniform() - 1.5;
    const DiscreteMeasure Q0 = p0_reweight(Q, eta, spec);
    const P1Reweight q1 = p1_reweight(Q, eta, spec);
    for (std::size_t i = 0; i < Q.size(); ++i) {
      CHECK(Q0.atoms()[i].location == Q.atoms()[i].location);
      CHECK(q1.P1.atoms()[i].location == Q.atoms()[i].location);
      const double mixed = q1.p * q1.P1.atoms()[i].weight + (1 - q1.p) * Q0.atoms()[i].weight;
      CHECK(std::abs(mixed - Q.atoms()[i].weight) < 1e-12);
    }
  }
}

TEST_CASE("c invariance after re-deriving eta") {
  RngStream rng(11, 0);
  const DiscreteMeasure P1 = random_measure(rng, 9);
  const double p = 0.63;
  for (double alpha : {-1.0, 0.5, 2.0}) {
    const double ref = kappa_functional(p, P1, id, {alpha, 0.0});
    for (double c : {-2.0, 0.4, 3.0}) {
      CHECK(kappa_functional(p, P1, id, {alpha, c}) == Approx(ref).epsilon(1e-12));
      const double eta = eta_from_p(p, P1, {alpha, c});
      // P reassembled from (p, eta) gives back the same p for every c
      const double eta0 = eta_from_p(p, P1, {alpha, 0.0});
      CHECK(eta == Approx(eta0 + alpha * c).epsilon(1e-12));
    }
  }
}

TEST_CASE("propensity curve") {
  const std::vector<double> grid{0.1, 1.0, 10.0};
  for (double v : propensity_curve(0.0, {0.0, 0.0}, grid)) CHECK(v == 0.5);

  std::vector<double> fine;
  for (double y = 1e-4; y < 1e4; y *= 1.1) fine.push_back(y);
  const auto curve = propensity_curve(-1.35, {2.0, 0.42}, fine);
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i] > curve[i - 1]);
  CHECK(curve.front() < 1e-6);
  CHECK(curve.back() > 1 - 1e-6);

  const double eta0 = -1.3517;
  const double at = propensity_curve(eta0, {2.0, 0.4228}, std::vector<double>{std::exp(0.4228)})[0];
  CHECK(at == Approx(std::exp(eta0) / (1 + std::exp(eta0))).epsilon(1e-14));
  CHECK(at == Approx(0.2056).epsilon(1e-3));
}

TEST_CASE("efficiency bound reductions") {
  const DiscreteMeasure P1 = outcomes({{1.0, 0.2}, {2.0, 0.5}, {4.0, 0.3}});
  const double m = 0.2 + 1.0 + 1.2;
  const double var = 0.2 * 1 + 0.5 * 4 + 0.3 * 16 - m * m;
  CHECK(efficiency_bound(0.7, P1, id, {0.0, 0.0}) == Approx(var / 0.7).epsilon(1e-13));
  CHECK(efficiency_bound(0.7, P1, FunctionalSpec::indicator(100.0), {2.0, 0.3}) == Approx(0.0).scale(1).epsilon(1e-14));

  // MCAR, r = 1, x = 1, p = 0.5: the formula gives (r - p) * 0 + (g(x) - P1g) (e^eta + 1) = (g(x) - P1g) / p
  const double phi = efficient_influence(Point::outcome(1.0), 1, 0.5, P1, id, {0.0, 0.0});
  CHECK(phi == Approx((1.0 - m) / 0.5).epsilon(1e-14));
  CHECK(efficient_influence(Point::star(), 0, 0.5, P1, id, {0.0, 0.0}) == Approx(0.0).scale(1).epsilon(1e-14));
  CHECK_THROWS_AS(efficient_influence(Point::star(), 1, 0.5, P1, id, {0.0, 0.0}), DataError);
}

TEST_CASE("efficiency bound matches the influence function variance") {
  // dense atoms for P1 = Gamma(2, 1); (R, X) simulated from the same atoms
  const DiscreteMeasure P1 = gamma_atoms(2.0, 20000, 19);
  const SensitivitySpec spec{2.0, kC};
  const EfficientInfluence phi(0.6, P1, id, spec);
  RngStream rng(20, 0);
  const std::size_t m = 1000000;
  double s = 0.0, ss = 0.0;
  const auto& atoms = P1.atoms();
  for (std::size_t i = 0; i < m; ++i) {
    const int r = rng.uniform() < 0.6 ? 1 : 0;
    const Point x = r ? atoms[rng.next_u64() % atoms.size()].location : Point::star();
    const double v = phi(x, r);
    s += v;
    ss += v * v;
  }
  const double mean = s / m;
  const double var = ss / m - mean * mean;
  CHECK(std::abs(mean) < 3 * std::sqrt(var / m));
  CHECK(std::abs(var / phi.variance() - 1.0) < 0.01);
}
