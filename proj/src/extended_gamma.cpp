#include "mcarsense/extended_gamma.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <limits>
#include <mutex>
#include <unordered_map>

#include "mcarsense/errors.hpp"
#include "mcarsense/samplers.hpp"
#include "mcarsense/special.hpp"

namespace mcarsense {

namespace {

// the grid stops once the density is below exp(-kGridDrop) of the peak
constexpr double kGridDrop = 27.7;  // log(1e12) plus a little

std::vector<double> b_at(const EGPModel& model, const std::vector<double>& xs) {
  std::vector<double> out(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double v = model.b(xs[j]);
    if (!(v >= model.b_lower * (1.0 - 1e-12)) || !std::isfinite(v)) {
      throw DomainError("EGP: b(x) below its declared lower bound or not finite");
    }
    out[j] = v;
  }
  return out;
}

// log density of U = log(Lambda) up to a constant
double log_density_u(const EGPModel& model, const std::vector<double>& bvals,
                     const std::vector<int>& counts, std::size_t n, double u,
                     const QuadratureSpec& quad) {
  const double lambda = std::exp(u);
  double v = static_cast<double>(n) * u - egp_psi(model, lambda, quad);
  for (std::size_t j = 0; j < bvals.size(); ++j) v -= counts[j] * std::log(lambda + bvals[j]);
  return v;
}

struct Mode {
  double u;
  double value;
};

template <class F>
Mode find_mode(F&& ell) {
  double best_u = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (double u = -30.0; u <= 50.0; u += 0.5) {
    const double v = ell(u);
    if (v > best) {
      best = v;
      best_u = u;
    }
  }
  if (!std::isfinite(best)) throw NumericError("mixing density: no finite value on the search grid");
  auto neg = [&](double u) { return -ell(u); };
  auto r = boost::math::tools::brent_find_minima(neg, best_u - 0.5, best_u + 0.5, 40);
  if (-r.second > best) return {r.first, -r.second};
  return {best_u, best};
}

}  // namespace

EGPModel::EGPModel(std::function<double(double)> b_fn, double lower, BaseMeasure base_measure)
    : b(std::move(b_fn)), b_lower(lower), base(std::move(base_measure)) {
  if (!b) throw ParameterError("EGPModel: b is empty");
  if (!(b_lower > 0.0) || !std::isfinite(b_lower)) {
    throw ParameterError("EGPModel: lower bound of b must be positive and finite");
  }
  if (base.has_atoms()) throw ParameterError("EGPModel: base measure must be atomless");
  if (!(base.continuous_mass() > 0.0)) throw ParameterError("EGPModel: base measure has zero mass");
}

double egp_psi(const EGPModel& model, double lambda, const QuadratureSpec& quad) {
  if (!(lambda >= 0.0)) throw ParameterError("egp_psi: lambda must be nonnegative");
  if (lambda == 0.0) return 0.0;
  return model.base
      .integrate_continuous([&](double x) { return std::log1p(lambda / model.b(x)); }, quad)
      .value;
}

double egp_psi_derivative(const EGPModel& model, double lambda, const QuadratureSpec& quad) {
  if (!(lambda >= 0.0)) throw ParameterError("egp_psi_derivative: lambda must be nonnegative");
  return model.base
      .integrate_continuous([&](double x) { return 1.0 / (lambda + model.b(x)); }, quad)
      .value;
}

double egp_mixing_logdensity(const EGPModel& model, const GroupedSample& grouped, double lambda,
                             const QuadratureSpec& quad) {
  if (!(lambda > 0.0)) throw ParameterError("egp_mixing_logdensity: lambda must be positive");
  if (grouped.n() == 0) throw DataError("egp_mixing_logdensity: empty sample");
  const auto bvals = b_at(model, grouped.distinct());
  return log_density_u(model, bvals, grouped.multiplicities(), grouped.n(), std::log(lambda), quad) -
         std::log(lambda);
}

// ---------------------------------------------------------------------------

MixingPosterior::MixingPosterior(const EGPModel& model, const GroupedSample& grouped,
                                 const QuadratureSpec& quad, int grid_size) {
  if (grouped.n() == 0) throw DataError("MixingPosterior: empty sample");
  if (grid_size < 3) throw ParameterError("MixingPosterior: grid_size must be at least 3");
  b_values_ = b_at(model, grouped.distinct());
  const auto& counts = grouped.multiplicities();
  const std::size_t n = grouped.n();
  auto ell = [&](double u) { return log_density_u(model, b_values_, counts, n, u, quad); };

  const Mode m = find_mode(ell);
  mode_log_ = m.u;

  double lo = m.u, hi = m.u;
  for (int k = 0; k < 400 && ell(lo) > m.value - kGridDrop; ++k) lo -= 0.5;
  for (int k = 0; k < 400 && ell(hi) > m.value - kGridDrop; ++k) hi += 0.5;

  log_grid_.resize(grid_size);
  density_.resize(grid_size);
  cumulative_.assign(grid_size, 0.0);
  const double h = (hi - lo) / (grid_size - 1);
  for (int i = 0; i < grid_size; ++i) {
    log_grid_[i] = lo + h * i;
    density_[i] = std::exp(ell(log_grid_[i]) - m.value);
  }
  for (int i = 1; i < grid_size; ++i) {
    cumulative_[i] = cumulative_[i - 1] + 0.5 * h * (density_[i - 1] + density_[i]);
  }
  if (!(cumulative_.back() > 0.0) || !std::isfinite(cumulative_.back())) {
    throw NumericError("MixingPosterior: degenerate grid");
  }
}

double MixingPosterior::sample(RngStream& rng) const {
  const double target = rng.uniform() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
  if (i == 0) i = 1;
  if (i >= cumulative_.size()) i = cumulative_.size() - 1;
  --i;
  const double h = log_grid_[i + 1] - log_grid_[i];
  const double w0 = density_[i], w1 = density_[i + 1];
  const double r = std::max(0.0, target - cumulative_[i]);
  const double a = (w1 - w0) / (2.0 * h);
  const double denom = w0 + std::sqrt(std::max(0.0, w0 * w0 + 4.0 * a * r));
  const double x = denom > 0.0 ? std::clamp(2.0 * r / denom, 0.0, h) : 0.0;
  return std::exp(log_grid_[i] + x);
}

double MixingPosterior::mean() const {
  double num = 0.0;
  for (std::size_t i = 1; i < log_grid_.size(); ++i) {
    const double h = log_grid_[i] - log_grid_[i - 1];
    num += 0.5 * h * (std::exp(log_grid_[i - 1]) * density_[i - 1] + std::exp(log_grid_[i]) * density_[i]);
  }
  return num / cumulative_.back();
}

double MixingPosterior::mean_log() const {
  double num = 0.0;
  for (std::size_t i = 1; i < log_grid_.size(); ++i) {
    const double h = log_grid_[i] - log_grid_[i - 1];
    num += 0.5 * h * (log_grid_[i - 1] * density_[i - 1] + log_grid_[i] * density_[i]);
  }
  return num / cumulative_.back();
}

double MixingPosterior::probability_below(double x) const {
  if (!(x > 0.0)) return 0.0;
  const double u = std::log(x);
  if (u <= log_grid_.front()) return 0.0;
  if (u >= log_grid_.back()) return 1.0;
  auto it = std::upper_bound(log_grid_.begin(), log_grid_.end(), u);
  const std::size_t i = static_cast<std::size_t>(it - log_grid_.begin()) - 1;
  const double h = log_grid_[i + 1] - log_grid_[i];
  const double d = u - log_grid_[i];
  const double a = (density_[i + 1] - density_[i]) / (2.0 * h);
  return (cumulative_[i] + density_[i] * d + a * d * d) / cumulative_.back();
}

double egp_sample_lambda(const EGPModel& model, const GroupedSample& grouped, RngStream& rng,
                         const QuadratureSpec& quad) {
  return MixingPosterior(model, grouped, quad).sample(rng);
}

// ---------------------------------------------------------------------------

JumpSeries sample_diffuse_jumps(const EGPModel& model, double lambda, double jump_tol,
                                RngStream& rng, int max_jumps) {
  if (!(lambda >= 0.0)) throw ParameterError("sample_diffuse_jumps: lambda must be nonnegative");
  if (!(jump_tol > 0.0)) throw ParameterError("sample_diffuse_jumps: jump_tol must be positive");
  JumpSeries out;
  const double mass = model.base.continuous_mass();
  const double rate = lambda + model.b_lower;
  out.tail_bound = mass / rate;
  if (out.tail_bound < jump_tol) return out;

  const ContinuousDistribution& dist = *model.base.continuous();
  double arrival = 0.0;
  for (int k = 0;; ++k) {
    if (k >= max_jumps) {
      throw AccuracyError("sample_diffuse_jumps: jump budget exhausted", 0.0, out.tail_bound);
    }
    arrival += rng.exponential();
    const double jump = exp_integral_e1_inverse(arrival / mass) / rate;
    const double x = dist.sample(rng);
    const double bx = model.b(x);
    if (bx < model.b_lower * (1.0 - 1e-12)) {
      throw DomainError("sample_diffuse_jumps: b(x) below its declared lower bound");
    }
    if (rng.uniform() < std::exp(-jump * (bx - model.b_lower))) {
      out.jumps.push_back({Point::outcome(x), jump});
    }
    out.tail_bound = -mass * std::expm1(-rate * jump) / rate;
    if (out.tail_bound < jump_tol) break;
  }
  return out;
}

DiscreteMeasure egp_sample_posterior(const EGPModel& model, const GroupedSample& grouped,
                                     double jump_tol, RngStream& rng, const QuadratureSpec& quad) {
  const MixingPosterior mixing(model, grouped, quad);
  return egp_sample_posterior(model, grouped, mixing, jump_tol, rng);
}

DiscreteMeasure egp_sample_posterior(const EGPModel& model, const GroupedSample& grouped,
                                     const MixingPosterior& mixing, double jump_tol,
                                     RngStream& rng) {
  if (grouped.n() == 0) throw DataError("egp_sample_posterior: empty sample");
  const auto& bvals = mixing.b_values();
  if (bvals.size() != grouped.num_distinct()) {
    throw ParameterError("egp_sample_posterior: mixing posterior built for another sample");
  }
  const double lambda = mixing.sample(rng);
  const auto& xs = grouped.distinct();
  const auto& counts = grouped.multiplicities();
  std::vector<WeightedPoint> atoms;
  atoms.reserve(xs.size() + 64);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    atoms.push_back({Point::outcome(xs[j]), sample_gamma(counts[j], lambda + bvals[j], rng)});
  }
  auto series = sample_diffuse_jumps(model, lambda, jump_tol, rng);
  atoms.insert(atoms.end(), series.jumps.begin(), series.jumps.end());
  return DiscreteMeasure::normalize(std::move(atoms), Space::outcomes);
}

// ---------------------------------------------------------------------------

namespace {

// Shared state for the lambda-integrals of the posterior mean. Log weights are
// memoised because every integral revisits the same quadrature nodes.
struct PpfState {
  EGPModel model;
  std::vector<double> bvals;
  std::vector<int> counts;
  std::size_t n;
  double scale;
  double log_ref;
  QuadratureSpec quad;
  double normalizer = 1.0;
  std::mutex mu;
  std::unordered_map<double, double> log_weight_cache;
  std::unordered_map<double, double> psi_prime_cache;

  PpfState(EGPModel m, std::vector<double> b, std::vector<int> c, std::size_t n_, QuadratureSpec q)
      : model(std::move(m)), bvals(std::move(b)), counts(std::move(c)), n(n_), scale(1.0),
        log_ref(0.0), quad(q) {}

  // (n-1) log lambda - psi - sum N_j log(lambda + b_j) - log_ref
  double log_weight(double lambda) {
    {
      std::lock_guard<std::mutex> lock(mu);
      auto it = log_weight_cache.find(lambda);
      if (it != log_weight_cache.end()) return it->second;
    }
    double v = -egp_psi(model, lambda, quad) - log_ref;
    if (n > 1) v += static_cast<double>(n - 1) * std::log(lambda);
    for (std::size_t j = 0; j < bvals.size(); ++j) v -= counts[j] * std::log(lambda + bvals[j]);
    std::lock_guard<std::mutex> lock(mu);
    log_weight_cache.emplace(lambda, v);
    return v;
  }

  double psi_prime(double lambda) {
    {
      std::lock_guard<std::mutex> lock(mu);
      auto it = psi_prime_cache.find(lambda);
      if (it != psi_prime_cache.end()) return it->second;
    }
    const double v = egp_psi_derivative(model, lambda, quad);
    std::lock_guard<std::mutex> lock(mu);
    psi_prime_cache.emplace(lambda, v);
    return v;
  }

  // int_0^inf h(lambda) pi(lambda) dlambda, with lambda = scale * e^s and the
  // constant factor scale dropped since only ratios are used. The density
  // falls off like lambda^(-1 - a(X)), too slowly for the semiline map when
  // a(X) < 1, so integrate over s where both tails decay exponentially.
  double expectation(const std::function<double(double)>& h) {
    auto f = [&](double s) {
      const double lambda = scale * std::exp(s);
      if (!(lambda > 0.0) || !std::isfinite(lambda)) return 0.0;
      const double lw = log_weight(lambda) + s;
      if (lw < -745.0) return 0.0;
      return std::exp(lw) * h(lambda);
    };
    return integrate_semiline(f, quad).value + integrate_semiline([&](double s) { return f(-s); }, quad).value;
  }
};

}  // namespace

EGPPosteriorMean egp_posterior_mean(const EGPModel& model, const GroupedSample& grouped,
                                    const QuadratureSpec& quad) {
  if (grouped.n() == 0) throw DataError("egp_posterior_mean: empty sample");
  auto state = std::make_shared<PpfState>(model, b_at(model, grouped.distinct()),
                                          grouped.multiplicities(), grouped.n(), quad);
  auto ell = [&](double u) {
    return log_density_u(model, state->bvals, state->counts, state->n, u, quad);
  };
  const Mode m = find_mode(ell);
  state->scale = std::exp(m.u);
  state->log_ref = m.value - m.u;

  const double n = static_cast<double>(grouped.n());
  state->normalizer = state->expectation([](double) { return 1.0; });
  if (!(state->normalizer > 0.0) || !std::isfinite(state->normalizer)) {
    throw NumericError("egp_posterior_mean: normalising integral is not positive");
  }

  EGPPosteriorMean out;
  const auto& xs = grouped.distinct();
  std::vector<WeightedPoint> atoms;
  atoms.reserve(xs.size());
  out.per_observation.reserve(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double bj = state->bvals[j];
    const double q = state->expectation([bj](double l) { return l / (l + bj); }) /
                     (n * state->normalizer);
    out.per_observation.push_back(q);
    atoms.push_back({Point::outcome(xs[j]), state->counts[j] * q});
  }
  out.atoms = DiscreteMeasure(std::move(atoms), Space::outcomes, false);

  PpfState* s = state.get();
  out.diffuse_mass =
      s->expectation([s](double l) { return l * s->psi_prime(l); }) / (n * s->normalizer);

  const double base_mass = model.base.continuous_mass();
  out.diffuse_density = [state, base_mass, n](double x) {
    const double bx = state->model.b(x);
    return base_mass * state->expectation([bx](double l) { return l / (l + bx); }) /
           (n * state->normalizer);
  };
  return out;
}

}  // namespace mcarsense
