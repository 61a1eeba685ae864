#include "mcarsense/measures.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mcarsense/errors.hpp"
#include "mcarsense/samplers.hpp"
#include "mcarsense/special.hpp"

namespace mcarsense {

double ContinuousDistribution::support_upper() const {
  return std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------

GammaDistribution::GammaDistribution(double shape, double rate) : shape_(shape), rate_(rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw ParameterError("Gamma: shape and rate must be positive");
  log_norm_ = shape * std::log(rate) - log_gamma(shape);
}

double GammaDistribution::density(double x) const {
  if (!(x > 0.0)) return 0.0;
  return std::exp(log_norm_ + (shape_ - 1.0) * std::log(x) - rate_ * x);
}

double GammaDistribution::cdf(double x) const {
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(shape_, rate_ * x);
}

double GammaDistribution::sample(RngStream& rng) const { return sample_gamma(shape_, rate_, rng); }

std::string GammaDistribution::describe() const {
  std::ostringstream os;
  os << "Gamma(" << shape_ << ", " << rate_ << ")";
  return os.str();
}

UniformDistribution::UniformDistribution(double lower, double upper) : lower_(lower), upper_(upper) {
  if (!(lower >= 0.0) || !(upper > lower) || !std::isfinite(upper)) {
    throw ParameterError("Uniform: need 0 <= lower < upper < inf");
  }
}

double UniformDistribution::density(double x) const {
  return (x >= lower_ && x <= upper_) ? 1.0 / (upper_ - lower_) : 0.0;
}

double UniformDistribution::cdf(double x) const {
  if (x <= lower_) return 0.0;
  if (x >= upper_) return 1.0;
  return (x - lower_) / (upper_ - lower_);
}

double UniformDistribution::sample(RngStream& rng) const {
  return lower_ + (upper_ - lower_) * rng.uniform();
}

std::string UniformDistribution::describe() const {
  std::ostringstream os;
  os << "Uniform(" << lower_ << ", " << upper_ << ")";
  return os.str();
}

MixtureDistribution::MixtureDistribution(std::vector<Component> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw ParameterError("Mixture: needs at least one component");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight >= 0.0) || !c.distribution) throw ParameterError("Mixture: invalid component");
    total += c.weight;
  }
  if (!(total > 0.0)) throw ParameterError("Mixture: weights must have positive sum");
  for (auto& c : components_) c.weight /= total;
}

double MixtureDistribution::density(double x) const {
  double d = 0.0;
  for (const auto& c : components_) d += c.weight * c.distribution->density(x);
  return d;
}

double MixtureDistribution::cdf(double x) const {
  double d = 0.0;
  for (const auto& c : components_) d += c.weight * c.distribution->cdf(x);
  return d;
}

double MixtureDistribution::sample(RngStream& rng) const {
  double u = rng.uniform();
  for (const auto& c : components_) {
    if (u < c.weight) return c.distribution->sample(rng);
    u -= c.weight;
  }
  return components_.back().distribution->sample(rng);
}

double MixtureDistribution::mean() const {
  double m = 0.0;
  for (const auto& c : components_) m += c.weight * c.distribution->mean();
  return m;
}

double MixtureDistribution::support_lower() const {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& c : components_) lo = std::min(lo, c.distribution->support_lower());
  return lo;
}

double MixtureDistribution::support_upper() const {
  double hi = 0.0;
  for (const auto& c : components_) hi = std::max(hi, c.distribution->support_upper());
  return hi;
}

std::string MixtureDistribution::describe() const {
  std::ostringstream os;
  os << "Mixture(";
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (i) os << " + ";
    os << components_[i].weight << "*" << components_[i].distribution->describe();
  }
  os << ")";
  return os.str();
}

// ---------------------------------------------------------------------------

BaseMeasure::BaseMeasure(double continuous_mass,
                         std::shared_ptr<const ContinuousDistribution> continuous,
                         std::vector<WeightedPoint> atoms)
    : continuous_mass_(continuous_mass), continuous_(std::move(continuous)) {
  if (!(continuous_mass >= 0.0)) throw ParameterError("BaseMeasure: negative continuous mass");
  if (continuous_mass > 0.0 && !continuous_) {
    throw ParameterError("BaseMeasure: positive continuous mass without a distribution");
  }
  for (const auto& a : atoms) {
    if (!(a.weight >= 0.0)) throw ParameterError("BaseMeasure: negative atom mass");
    auto it = std::find_if(atoms_.begin(), atoms_.end(),
                           [&](const WeightedPoint& w) { return w.location == a.location; });
    if (it != atoms_.end()) {
      it->weight += a.weight;
    } else {
      atoms_.push_back(a);
    }
  }
}

BaseMeasure BaseMeasure::with_atom(Point location, double mass) const {
  auto atoms = atoms_;
  atoms.push_back({location, mass});
  return BaseMeasure(continuous_mass_, continuous_, std::move(atoms));
}

double BaseMeasure::total_mass() const noexcept {
  double m = continuous_mass_;
  for (const auto& a : atoms_) m += a.weight;
  return m;
}

QuadratureResult BaseMeasure::integrate_continuous(const std::function<double(double)>& f,
                                                   const QuadratureSpec& spec) const {
  if (continuous_mass_ == 0.0) return {};
  const double lo = continuous_->support_lower();
  const double hi = continuous_->support_upper();
  const auto* dist = continuous_.get();
  QuadratureResult r;
  if (std::isinf(hi)) {
    r = integrate_semiline([&](double t) { return f(lo + t) * dist->density(lo + t); }, spec);
  } else {
    r = integrate_interval([&](double x) { return f(x) * dist->density(x); }, lo, hi, spec);
  }
  r.value *= continuous_mass_;
  r.error_estimate *= continuous_mass_;
  return r;
}

double BaseMeasure::mass_up_to(double t) const {
  double m = continuous_mass_ > 0.0 ? continuous_mass_ * continuous_->cdf(t) : 0.0;
  for (const auto& a : atoms_) {
    if (!a.location.missing && a.location.value <= t) m += a.weight;
  }
  return m;
}

double BaseMeasure::mass_at(Point location) const {
  for (const auto& a : atoms_) {
    if (a.location == location) return a.weight;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

namespace {

// Neumaier summation; naive sums of 1e5+ small weights drift past 1e-12.
double weight_sum(const std::vector<WeightedPoint>& atoms) {
  double sum = 0.0, comp = 0.0;
  for (const auto& a : atoms) {
    const double t = sum + a.weight;
    comp += std::abs(sum) >= std::abs(a.weight) ? (sum - t) + a.weight : (a.weight - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(std::vector<WeightedPoint> atoms, Space space, bool normalized)
    : atoms_(std::move(atoms)), space_(space), normalized_(normalized) {
  for (const auto& a : atoms_) {
    if (!(a.weight >= 0.0) || !std::isfinite(a.weight)) {
      throw ParameterError("DiscreteMeasure: weights must be finite and nonnegative");
    }
    if (a.location.missing && space_ == Space::outcomes) {
      throw ParameterError("DiscreteMeasure: missingness atom on the outcome space");
    }
  }
  if (normalized_ && std::abs(weight_sum(atoms_) - 1.0) > 1e-12) {
    throw ParameterError("DiscreteMeasure: normalized weights must sum to one");
  }
}

DiscreteMeasure DiscreteMeasure::normalize(std::vector<WeightedPoint> atoms, Space space) {
  const double total = weight_sum(atoms);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericError("DiscreteMeasure::normalize: total weight is not positive and finite");
  }
  for (auto& a : atoms) a.weight /= total;
  // compensate the last ulp-scale residue so the invariant holds exactly enough
  const double resum = weight_sum(atoms);
  if (std::abs(resum - 1.0) > 1e-13) {
    for (auto& a : atoms) a.weight /= resum;
  }
  return DiscreteMeasure(std::move(atoms), space, true);
}

DiscreteMeasure DiscreteMeasure::empirical(std::span<const double> outcomes) {
  std::vector<WeightedPoint> atoms;
  atoms.reserve(outcomes.size());
  for (double y : outcomes) atoms.push_back({Point::outcome(y), 1.0});
  return normalize(std::move(atoms), Space::outcomes);
}

double DiscreteMeasure::total_weight() const { return weight_sum(atoms_); }

double DiscreteMeasure::missing_weight() const {
  double t = 0.0;
  for (const auto& a : atoms_) {
    if (a.location.missing) t += a.weight;
  }
  return t;
}

double DiscreteMeasure::integrate(const std::function<double(double)>& g) const {
  double t = 0.0;
  for (const auto& a : atoms_) {
    if (!a.location.missing) t += a.weight * g(a.location.value);
  }
  return t;
}

double DiscreteMeasure::weight_up_to(double t) const {
  double w = 0.0;
  for (const auto& a : atoms_) {
    if (!a.location.missing && a.location.value <= t) w += a.weight;
  }
  return w;
}

// ---------------------------------------------------------------------------

GroupedSample::GroupedSample(std::span<const double> values) : n_(values.size()) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  for (double v : sorted) {
    if (!distinct_.empty() && distinct_.back() == v) {
      ++counts_.back();
    } else {
      distinct_.push_back(v);
      counts_.push_back(1);
    }
  }
}

}  // namespace mcarsense
