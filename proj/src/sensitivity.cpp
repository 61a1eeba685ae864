#include "mcarsense/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mcarsense/errors.hpp"
#include "mcarsense/special.hpp"

namespace mcarsense {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_outcome_measure(const DiscreteMeasure& P, const char* who) {
  if (P.missing_weight() > 0.0) {
    throw ParameterError(std::string(who) + ": measure must live on the outcome space");
  }
}

void require_normalized(const DiscreteMeasure& P, const char* who) {
  if (std::abs(P.total_weight() - 1.0) > 1e-9) {
    throw ParameterError(std::string(who) + ": measure must be normalised");
  }
}

void require_probability(double p, const char* who) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError(std::string(who) + ": p must lie in [0, 1]");
}

// Sums over outcome atoms needed by chi and kappa, shifted by the largest q.
struct TiltSums {
  double shift = kNegInf;  // max q over atoms with positive weight
  double e_q = 0.0;        // sum w e^{q - shift}
  double g_e_q = 0.0;      // sum w g e^{q - shift}
  double g = 0.0;          // sum w g
  double outcome_weight = 0.0;
};

template <class Atoms>
TiltSums tilt_sums(const Atoms& atoms, const FunctionalSpec& g, const SensitivitySpec& spec) {
  TiltSums s;
  for (const auto& [y, w, logy] : atoms) {
    if (w > 0.0) s.shift = std::max(s.shift, spec.alpha * (logy - spec.c));
  }
  for (const auto& [y, w, logy] : atoms) {
    if (!(w > 0.0)) continue;
    const double gy = g(y);
    const double e = std::exp(spec.alpha * (logy - spec.c) - s.shift);
    s.e_q += w * e;
    s.g_e_q += w * gy * e;
    s.g += w * gy;
    s.outcome_weight += w;
  }
  return s;
}

struct AtomView {
  double y;
  double w;
  double logy;
};

std::vector<AtomView> outcome_atoms(const DiscreteMeasure& P) {
  std::vector<AtomView> out;
  out.reserve(P.size());
  for (const auto& a : P.atoms()) {
    if (a.location.missing) continue;
    if (!(a.location.value > 0.0)) throw DomainError("outcome atoms must be positive");
    out.push_back({a.location.value, a.weight, std::log(a.location.value)});
  }
  return out;
}

}  // namespace

double q_eval(const SensitivitySpec& spec, double y) {
  if (!(y > 0.0)) throw DomainError("q_eval: y must be positive");
  return spec.alpha * (std::log(y) - spec.c);
}

std::string FunctionalSpec::describe() const {
  if (kind_ == Kind::identity) return "identity";
  std::ostringstream os;
  os << "indicator(y <= " << threshold_ << ")";
  return os.str();
}

// ---------------------------------------------------------------------------

ObservedDataset::ObservedDataset(std::vector<Record> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    auto& rec = records_[i];
    if (rec.r != 0 && rec.r != 1) {
      throw DataError("record " + std::to_string(i) + ": r must be 0 or 1");
    }
    if (rec.r == 0) {
      rec.x = 0.0;
      continue;
    }
    if (!(rec.x > 0.0) || !std::isfinite(rec.x)) {
      throw DataError("record " + std::to_string(i) + ": observed outcome must be positive and finite");
    }
    observed_.push_back(rec.x);
  }
}

ObservedDataset ObservedDataset::fully_observed(std::span<const double> outcomes) {
  std::vector<Record> recs;
  recs.reserve(outcomes.size());
  for (double y : outcomes) recs.push_back({y, 1});
  return ObservedDataset(std::move(recs));
}

double ObservedDataset::observed_fraction() const {
  if (records_.empty()) return 0.0;
  return static_cast<double>(observed_.size()) / static_cast<double>(records_.size());
}

// ---------------------------------------------------------------------------

double chi_functional(const DiscreteMeasure& H, const FunctionalSpec& g, const SensitivitySpec& spec) {
  const auto atoms = outcome_atoms(H);
  const TiltSums s = tilt_sums(atoms, g, spec);
  if (!(s.e_q > 0.0)) throw DegenerateMeasureError("chi_functional: H(e^q) = 0");
  return s.g_e_q * H.missing_weight() / s.e_q + s.g;
}

double chi_functional(std::span<const double> values, std::span<const double> weights,
                      double star_weight, const FunctionalSpec& g, const SensitivitySpec& spec,
                      std::span<const double> log_values) {
  if (values.size() != weights.size() || (!log_values.empty() && log_values.size() != values.size())) {
    throw ParameterError("chi_functional: array lengths differ");
  }
  double shift = kNegInf;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(weights[i] > 0.0)) continue;
    const double ly = log_values.empty() ? std::log(values[i]) : log_values[i];
    shift = std::max(shift, spec.alpha * (ly - spec.c));
  }
  double e_q = 0.0, g_e_q = 0.0, hg = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = weights[i];
    if (!(w > 0.0)) continue;
    const double ly = log_values.empty() ? std::log(values[i]) : log_values[i];
    const double e = w * std::exp(spec.alpha * (ly - spec.c) - shift);
    const double gy = g(values[i]);
    e_q += e;
    g_e_q += e * gy;
    hg += w * gy;
  }
  if (!(e_q > 0.0)) throw DegenerateMeasureError("chi_functional: H(e^q) = 0");
  return g_e_q * star_weight / e_q + hg;
}

double kappa_functional(double p, const DiscreteMeasure& P1, const FunctionalSpec& g,
                        const SensitivitySpec& spec) {
  require_probability(p, "kappa_functional");
  require_outcome_measure(P1, "kappa_functional");
  const auto atoms = outcome_atoms(P1);
  const TiltSums s = tilt_sums(atoms, g, spec);
  if (!(s.e_q > 0.0)) throw DegenerateMeasureError("kappa_functional: P1 e^q = 0");
  return (1.0 - p) * s.g_e_q / s.e_q + p * s.g;
}

double log_mean_exp_q(const DiscreteMeasure& P, const SensitivitySpec& spec) {
  const auto atoms = outcome_atoms(P);
  const TiltSums s = tilt_sums(atoms, FunctionalSpec::identity(), spec);
  if (!(s.e_q > 0.0)) throw DegenerateMeasureError("P e^q = 0");
  return s.shift + std::log(s.e_q);
}

double eta_from_p(double p, const DiscreteMeasure& P1, const SensitivitySpec& spec) {
  require_probability(p, "eta_from_p");
  if (p == 0.0 || p == 1.0) throw BoundaryError("eta_from_p: p must lie strictly inside (0, 1)");
  require_outcome_measure(P1, "eta_from_p");
  return std::log1p(-p) - std::log(p) - log_mean_exp_q(P1, spec);
}

double p_from_eta(double eta, const DiscreteMeasure& P, const SensitivitySpec& spec) {
  require_outcome_measure(P, "p_from_eta");
  require_normalized(P, "p_from_eta");
  double p = 0.0;
  for (const auto& a : P.atoms()) {
    if (!(a.weight > 0.0)) continue;
    p += a.weight * logistic_complement(eta + q_eval(spec, a.location.value));
  }
  return p;
}

DiscreteMeasure p0_reweight(const DiscreteMeasure& P, double eta, const SensitivitySpec& spec) {
  require_outcome_measure(P, "p0_reweight");
  require_normalized(P, "p0_reweight");
  std::vector<double> logw(P.size(), kNegInf);
  double shift = kNegInf;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const auto& a = P.atoms()[i];
    if (!(a.weight > 0.0)) continue;
    const double q = q_eval(spec, a.location.value);
    // log(e^q / (1 + e^{eta+q})) = -eta + (eta + q) - softplus(eta + q)
    logw[i] = std::log(a.weight) + q - softplus(eta + q);
    shift = std::max(shift, logw[i]);
  }
  if (!std::isfinite(shift)) throw NumericError("p0_reweight: all weights vanish");
  std::vector<WeightedPoint> atoms;
  atoms.reserve(P.size());
  for (std::size_t i = 0; i < P.size(); ++i) {
    atoms.push_back({P.atoms()[i].location, std::exp(logw[i] - shift)});
  }
  return DiscreteMeasure::normalize(std::move(atoms), Space::outcomes);
}

P1Reweight p1_reweight(const DiscreteMeasure& P, double eta, const SensitivitySpec& spec) {
  require_outcome_measure(P, "p1_reweight");
  require_normalized(P, "p1_reweight");
  std::vector<WeightedPoint> atoms;
  atoms.reserve(P.size());
  double p = 0.0;
  for (const auto& a : P.atoms()) {
    const double w = a.weight > 0.0 ? a.weight * logistic_complement(eta + q_eval(spec, a.location.value)) : 0.0;
    atoms.push_back({a.location, w});
    p += w;
  }
  if (!(p > 0.0)) throw NumericError("p1_reweight: all weights vanish");
  return {p, DiscreteMeasure::normalize(std::move(atoms), Space::outcomes)};
}

std::vector<double> propensity_curve(double eta, const SensitivitySpec& spec,
                                     std::span<const double> y_grid) {
  std::vector<double> out;
  out.reserve(y_grid.size());
  for (double y : y_grid) {
    if (!(y > 0.0)) throw DomainError("propensity_curve: grid points must be positive");
    out.push_back(logistic_complement(-(eta + q_eval(spec, y))));
  }
  return out;
}

// ---------------------------------------------------------------------------

EfficientInfluence::EfficientInfluence(double p, const DiscreteMeasure& P1, const FunctionalSpec& g,
                                       const SensitivitySpec& spec)
    : p_(p), g_(g), spec_(spec) {
  eta_ = eta_from_p(p, P1, spec);
  require_normalized(P1, "efficiency_bound");
  const auto atoms = outcome_atoms(P1);
  const TiltSums s = tilt_sums(atoms, g, spec);
  p1g_ = s.g;
  p0g_ = s.g_e_q / s.e_q;
  double second = 0.0;
  for (const auto& [y, w, logy] : atoms) {
    if (!(w > 0.0)) continue;
    const double gy = g(y);
    const double h = (gy - p0g_) * std::exp(eta_ + spec.alpha * (logy - spec.c)) + gy - p1g_;
    second += w * h * h;
  }
  const double d = p0g_ - p1g_;
  variance_ = p * (1.0 - p) * d * d + p * second;
}

double EfficientInfluence::operator()(Point x, int r) const {
  if (r != 0 && r != 1) throw DataError("efficient_influence: r must be 0 or 1");
  if (r == 1 && x.missing) throw DataError("efficient_influence: observed record at the missingness symbol");
  double v = (r - p_) * (p0g_ - p1g_);
  if (r == 1) {
    const double gy = g_(x.value);
    v += (gy - p0g_) * std::exp(eta_ + q_eval(spec_, x.value)) + gy - p1g_;
  }
  return v;
}

double efficiency_bound(double p, const DiscreteMeasure& P1, const FunctionalSpec& g,
                        const SensitivitySpec& spec) {
  return EfficientInfluence(p, P1, g, spec).variance();
}

double efficient_influence(Point x, int r, double p, const DiscreteMeasure& P1,
                           const FunctionalSpec& g, const SensitivitySpec& spec) {
  return EfficientInfluence(p, P1, g, spec)(x, r);
}

}  // namespace mcarsense
