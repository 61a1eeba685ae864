#include "mcarsense/engines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mcarsense/dirichlet.hpp"
#include "mcarsense/errors.hpp"
#include "mcarsense/extended_gamma.hpp"
#include "mcarsense/samplers.hpp"
#include "mcarsense/special.hpp"

namespace mcarsense {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Atom arrays reused across draws: values, their logs and (unnormalised) weights.
struct AtomBuffer {
  std::vector<double> values;
  std::vector<double> logs;
  std::vector<double> weights;

  void resize(std::size_t k) {
    values.resize(k);
    logs.resize(k);
    weights.resize(k);
  }
  void push(double v, double w) {
    values.push_back(v);
    logs.push_back(std::log(v));
    weights.push_back(w);
  }
  std::size_t size() const noexcept { return values.size(); }
};

// Appends the continuous part of a DP draw with total weight Gamma(mass, 1).
void append_continuous(const BaseMeasure& base, double trunc_eps, RngStream& rng, AtomBuffer& buf) {
  const double mass = base.continuous_mass();
  if (!(mass > 0.0)) return;
  const ContinuousDistribution& dist = *base.continuous();
  const double scale = sample_gamma(mass, 1.0, rng);
  double remaining = 1.0;
  while (remaining >= trunc_eps) {
    const double v = sample_beta(1.0, mass, rng);
    buf.push(dist.sample(rng), scale * remaining * v);
    remaining *= 1.0 - v;
  }
  buf.push(dist.sample(rng), scale * remaining);
}

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

void require_observed(const ObservedDataset& data, const char* who) {
  if (data.n() == 0) throw DataError(std::string(who) + ": empty dataset");
  if (data.num_observed() == 0) throw DataError(std::string(who) + ": no observed outcomes");
}

}  // namespace

// ---------------------------------------------------------------------------

AlphaPrior AlphaPrior::fixed_at(double v) {
  AlphaPrior p;
  p.fixed = true;
  p.value = v;
  p.mean = v;
  return p;
}

AlphaPrior AlphaPrior::normal(double mean, double sd) {
  AlphaPrior p;
  p.fixed = false;
  p.mean = mean;
  p.value = mean;
  p.sd = sd;
  p.validate();
  return p;
}

double AlphaPrior::sample(RngStream& rng) const { return fixed ? value : mean + sd * rng.normal(); }

double AlphaPrior::log_density(double a) const {
  if (fixed) return 0.0;
  const double z = (a - mean) / sd;
  return -0.5 * z * z;
}

void AlphaPrior::validate() const {
  if (fixed) {
    if (!std::isfinite(value)) throw ParameterError("alpha prior: fixed value must be finite");
  } else if (!(sd > 0.0) || !std::isfinite(mean) || !std::isfinite(sd)) {
    throw ParameterError("alpha prior: need finite mean and sd > 0");
  }
}

EtaPrior EtaPrior::fixed_at(double v) {
  EtaPrior p;
  p.fixed = true;
  p.value = v;
  return p;
}

EtaPrior EtaPrior::uniform(double lo, double hi) {
  EtaPrior p;
  p.fixed = false;
  p.lo = lo;
  p.hi = hi;
  p.value = 0.5 * (lo + hi);
  p.validate();
  return p;
}

double EtaPrior::sample(RngStream& rng) const { return fixed ? value : lo + (hi - lo) * rng.uniform(); }

double EtaPrior::log_density(double e) const {
  if (fixed) return 0.0;
  return (e > lo && e < hi) ? 0.0 : kNegInf;
}

void EtaPrior::validate() const {
  if (fixed) {
    if (!std::isfinite(value)) throw ParameterError("eta prior: fixed value must be finite");
  } else if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ParameterError("eta prior: need finite lo < hi");
  }
}

void EngineConfig::validate() const {
  if (n_draws < 1) throw ParameterError("engine config: n_draws must be >= 1");
  if (burn_in < 0) throw ParameterError("engine config: burn_in must be >= 0");
  if (thinning < 1) throw ParameterError("engine config: thinning must be >= 1");
  if (!(trunc_eps > 0.0 && trunc_eps < 1.0)) throw ParameterError("engine config: trunc_eps must be in (0, 1)");
  if (!(mh_target_accept > 0.0 && mh_target_accept < 1.0)) {
    throw ParameterError("engine config: mh_target_accept must be in (0, 1)");
  }
  if (mh_adapt_window < 1) throw ParameterError("engine config: mh_adapt_window must be >= 1");
  if (!(mh_initial_scale > 0.0)) throw ParameterError("engine config: mh_initial_scale must be positive");
  quad.validate();
}

// ---------------------------------------------------------------------------

double logistic_loglik(double eta, double alpha, std::span<const Record> full_data, double c) {
  double ll = 0.0;
  for (const auto& rec : full_data) {
    if (!(rec.x > 0.0)) throw DomainError("logistic_loglik: outcomes must be positive");
    const double t = eta + alpha * (std::log(rec.x) - c);
    ll += rec.r == 1 ? -softplus(t) : t - softplus(t);
  }
  return ll;
}

double mh_adapt_step(double current_scale, double recent_accept_rate, double target, int window_index) {
  if (!(current_scale > 0.0)) throw ParameterError("mh_adapt_step: scale must be positive");
  const double gain = 2.0 / std::max(1, window_index);
  return current_scale * std::exp(gain * (recent_accept_rate - target));
}

double split_rhat(std::span<const double> chain) {
  const std::size_t half = chain.size() / 2;
  if (half < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto a = chain.subspan(chain.size() - 2 * half, half);
  const auto b = chain.subspan(chain.size() - half, half);
  auto var = [](std::span<const double> xs, double m) {
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
  };
  const double ma = mean_of(a), mb = mean_of(b);
  const double w = 0.5 * (var(a, ma) + var(b, mb));
  if (!(w > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double m = 0.5 * (ma + mb);
  const double nn = static_cast<double>(half);
  const double between = nn * ((ma - m) * (ma - m) + (mb - m) * (mb - m));  // B, with m - 1 = 1
  const double vhat = (nn - 1.0) / nn * w + between / nn;
  return std::sqrt(vhat / w);
}

// ---------------------------------------------------------------------------

PosteriorDraws run_h_engine(const ObservedDataset& data, const BaseMeasure& prior_base,
                            const PriorSpec& priors, double c, const FunctionalSpec& g,
                            const EngineConfig& cfg, RngStream& rng) {
  cfg.validate();
  priors.validate();
  require_observed(data, "run_h_engine");
  const double star_mass = prior_base.mass_at(Point::star());
  if (!(star_mass > 0.0)) {
    throw ParameterError("run_h_engine: prior base needs positive mass at the missingness symbol");
  }

  // posterior base: prior + unit atoms at the data, grouped
  const GroupedSample grouped(data.observed_values());
  AtomBuffer fixed;
  std::vector<double> shapes;
  for (std::size_t j = 0; j < grouped.num_distinct(); ++j) {
    fixed.push(grouped.distinct()[j], 0.0);
    shapes.push_back(grouped.multiplicities()[j]);
  }
  for (const auto& a : prior_base.atoms()) {
    if (a.location.missing || !(a.weight > 0.0)) continue;
    if (!(a.location.value > 0.0)) throw DomainError("run_h_engine: prior atoms must be positive");
    fixed.push(a.location.value, 0.0);
    shapes.push_back(a.weight);
  }
  const std::size_t k_fixed = fixed.size();
  const double star_shape = star_mass + static_cast<double>(data.num_missing());

  // alpha comes from its own substream so its draws never depend on the data
  RngStream alpha_rng = rng.substream(1);
  RngStream h_rng = rng.substream(2);

  PosteriorDraws out;
  out.engine = "h";
  out.seed = rng.seed();
  out.stream_id = rng.stream_id();
  out.functional.reserve(cfg.n_draws);
  out.alpha.reserve(cfg.n_draws);
  out.split_rhat = std::numeric_limits<double>::quiet_NaN();

  AtomBuffer buf = fixed;
  const long report_every = std::max(1, cfg.n_draws / 100);
  for (int it = 0; it < cfg.n_draws; ++it) {
    if (cfg.progress && it % report_every == 0) cfg.progress(static_cast<double>(it) / cfg.n_draws);
    const double alpha = priors.alpha.sample(alpha_rng);
    buf.resize(k_fixed);
    for (std::size_t j = 0; j < k_fixed; ++j) buf.weights[j] = sample_gamma(shapes[j], 1.0, h_rng);
    const double star_w = sample_gamma(star_shape, 1.0, h_rng);
    append_continuous(prior_base, cfg.trunc_eps, h_rng, buf);

    double total = star_w;
    for (double w : buf.weights) total += w;
    const SensitivitySpec spec{alpha, c};
    const double chi = chi_functional(buf.values, buf.weights, star_w, g, spec, buf.logs) / total;
    out.functional.push_back(chi);
    out.alpha.push_back(alpha);
  }
  if (cfg.progress) cfg.progress(1.0);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Full-data state of the Gibbs sampler: observed distinct values with their
// observed counts, imputed copies of observed values, and imputed values at
// other atoms of earlier draws of P.
struct FullData {
  std::vector<double> obs_values;
  std::vector<double> obs_logs;
  std::vector<int> obs_counts;
  std::vector<int> imp_at_obs;
  std::vector<double> extra_values;
  std::vector<double> extra_logs;
  std::vector<int> extra_counts;

  double loglik(double eta, double alpha, double c) const {
    double ll = 0.0;
    for (std::size_t j = 0; j < obs_values.size(); ++j) {
      const double t = eta + alpha * (obs_logs[j] - c);
      const double sp = softplus(t);
      ll -= obs_counts[j] * sp;
      if (imp_at_obs[j] > 0) ll += imp_at_obs[j] * (t - sp);
    }
    for (std::size_t k = 0; k < extra_values.size(); ++k) {
      const double t = eta + alpha * (extra_logs[k] - c);
      ll += extra_counts[k] * (t - softplus(t));
    }
    return ll;
  }
};

}  // namespace

PosteriorDraws run_peta_gibbs(const ObservedDataset& data, const BaseMeasure& prior_base,
                              const PriorSpec& priors, double c, const FunctionalSpec& g,
                              const EngineConfig& cfg, RngStream& rng) {
  cfg.validate();
  priors.validate();
  require_observed(data, "run_peta_gibbs");
  if (prior_base.mass_at(Point::star()) > 0.0) {
    throw ParameterError("run_peta_gibbs: prior base lives on outcomes; no missingness atom allowed");
  }
  if (!(prior_base.total_mass() > 0.0)) throw ParameterError("run_peta_gibbs: prior base has zero mass");

  const GroupedSample grouped(data.observed_values());
  const std::size_t k_obs = grouped.num_distinct();
  const std::size_t n_missing = data.num_missing();

  FullData full;
  full.obs_values = grouped.distinct();
  full.obs_counts = grouped.multiplicities();
  full.imp_at_obs.assign(k_obs, 0);
  for (double v : full.obs_values) full.obs_logs.push_back(std::log(v));

  std::vector<double> prior_atom_values, prior_atom_mass;
  for (const auto& a : prior_base.atoms()) {
    if (!(a.weight > 0.0)) continue;
    if (!(a.location.value > 0.0)) throw DomainError("run_peta_gibbs: prior atoms must be positive");
    prior_atom_values.push_back(a.location.value);
    prior_atom_mass.push_back(a.weight);
  }

  // start: missing outcomes resampled from the observed ones
  {
    const auto& obs = data.observed_values();
    for (std::size_t i = 0; i < n_missing; ++i) {
      const double y = obs[static_cast<std::size_t>(rng.uniform() * static_cast<double>(obs.size())) % obs.size()];
      const auto j = static_cast<std::size_t>(
          std::lower_bound(full.obs_values.begin(), full.obs_values.end(), y) - full.obs_values.begin());
      ++full.imp_at_obs[j];
    }
  }

  double eta = priors.eta.center();
  double alpha = priors.alpha.center();
  const bool run_mh = !(priors.eta.fixed && priors.alpha.fixed);
  double scale = cfg.mh_initial_scale;
  double current_ll = run_mh ? full.loglik(eta, alpha, c) : 0.0;
  int window_accepts = 0, window_count = 0, window_index = 0;
  long kept_accepts = 0, kept_count = 0;

  PosteriorDraws out;
  out.engine = "peta";
  out.seed = rng.seed();
  out.stream_id = rng.stream_id();
  out.functional.reserve(cfg.n_draws);
  out.alpha.reserve(cfg.n_draws);
  out.eta.reserve(cfg.n_draws);
  out.observed_functional.reserve(cfg.n_draws);

  AtomBuffer P;
  std::vector<double> log_p0;
  std::vector<int> picks;
  const long total_iter = static_cast<long>(cfg.burn_in) + static_cast<long>(cfg.n_draws) * cfg.thinning;

  const long report_every = std::max(1L, total_iter / 100);
  for (long it = 0; it < total_iter; ++it) {
    if (cfg.progress && it % report_every == 0) cfg.progress(static_cast<double>(it) / total_iter);
    // P | Y ~ DP(a + sum delta_{Y_i})
    P.resize(0);
    for (std::size_t j = 0; j < k_obs; ++j) {
      P.values.push_back(full.obs_values[j]);
      P.logs.push_back(full.obs_logs[j]);
      P.weights.push_back(sample_gamma(full.obs_counts[j] + full.imp_at_obs[j], 1.0, rng));
    }
    for (std::size_t k = 0; k < full.extra_values.size(); ++k) {
      P.values.push_back(full.extra_values[k]);
      P.logs.push_back(full.extra_logs[k]);
      P.weights.push_back(sample_gamma(full.extra_counts[k], 1.0, rng));
    }
    for (std::size_t k = 0; k < prior_atom_values.size(); ++k) {
      P.push(prior_atom_values[k], sample_gamma(prior_atom_mass[k], 1.0, rng));
    }
    append_continuous(prior_base, cfg.trunc_eps, rng, P);

    // (eta, alpha) | Y, R by random-walk Metropolis-Hastings
    if (run_mh) {
      const double z1 = rng.normal(), z2 = rng.normal();
      const double eta_prop = priors.eta.fixed ? eta : eta + scale * z1;
      const double alpha_prop = priors.alpha.fixed ? alpha : alpha + scale * z2;
      const double lp_prop = priors.eta.log_density(eta_prop) + priors.alpha.log_density(alpha_prop);
      bool accept = false;
      if (std::isfinite(lp_prop)) {
        const double ll_prop = full.loglik(eta_prop, alpha_prop, c);
        const double log_ratio = ll_prop + lp_prop - current_ll - priors.eta.log_density(eta) -
                                 priors.alpha.log_density(alpha);
        if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) {
          eta = eta_prop;
          alpha = alpha_prop;
          current_ll = ll_prop;
          accept = true;
        }
      }
      if (it < cfg.burn_in) {
        window_accepts += accept;
        if (++window_count == cfg.mh_adapt_window) {
          scale = mh_adapt_step(scale, static_cast<double>(window_accepts) / window_count,
                                cfg.mh_target_accept, ++window_index);
          window_accepts = 0;
          window_count = 0;
        }
      } else {
        kept_accepts += accept;
        ++kept_count;
      }
    }

    if (it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thinning == 0) {
      double total = 0.0, pg = 0.0, w1 = 0.0, w1g = 0.0;
      for (std::size_t k = 0; k < P.size(); ++k) {
        const double w = P.weights[k];
        const double gy = g(P.values[k]);
        const double r1 = w * logistic_complement(eta + alpha * (P.logs[k] - c));
        total += w;
        pg += w * gy;
        w1 += r1;
        w1g += r1 * gy;
      }
      const double functional = pg / total;
      if (!std::isfinite(functional)) throw NumericError("run_peta_gibbs: functional draw is not finite");
      out.functional.push_back(functional);
      out.alpha.push_back(alpha);
      out.eta.push_back(eta);
      out.observed_functional.push_back(w1 > 0.0 ? w1g / w1 : std::numeric_limits<double>::quiet_NaN());
    }

    // missing Y_i | P, eta, alpha ~ P0, i.i.d.
    if (n_missing > 0) {
      log_p0.resize(P.size());
      double shift = kNegInf;
      for (std::size_t k = 0; k < P.size(); ++k) {
        if (!(P.weights[k] > 0.0)) {
          log_p0[k] = kNegInf;
          continue;
        }
        const double q = alpha * (P.logs[k] - c);
        log_p0[k] = std::log(P.weights[k]) + q - softplus(eta + q);
        shift = std::max(shift, log_p0[k]);
      }
      if (!std::isfinite(shift)) throw NumericError("run_peta_gibbs: P0 weights vanish");
      for (double& v : log_p0) v = std::exp(v - shift);
      const CategoricalTable table(log_p0);
      picks.assign(P.size(), 0);
      for (std::size_t i = 0; i < n_missing; ++i) ++picks[table.sample(rng)];

      std::fill(full.imp_at_obs.begin(), full.imp_at_obs.end(), 0);
      full.extra_values.clear();
      full.extra_logs.clear();
      full.extra_counts.clear();
      for (std::size_t k = 0; k < P.size(); ++k) {
        if (picks[k] == 0) continue;
        if (k < k_obs) {
          full.imp_at_obs[k] = picks[k];
        } else {
          full.extra_values.push_back(P.values[k]);
          full.extra_logs.push_back(P.logs[k]);
          full.extra_counts.push_back(picks[k]);
        }
      }
      if (run_mh) current_ll = full.loglik(eta, alpha, c);
    }
  }

  if (run_mh) {
    out.acceptance_rate = kept_count > 0 ? static_cast<double>(kept_accepts) / kept_count : 0.0;
    out.mh_scale = scale;
    if (out.acceptance_rate < 0.01) {
      throw MixingError("run_peta_gibbs: Metropolis-Hastings acceptance below 0.01 after adaptation");
    }
  }
  out.split_rhat = split_rhat(out.functional);
  if (cfg.progress) cfg.progress(1.0);
  return out;
}

// ---------------------------------------------------------------------------

PosteriorDraws run_egp_engine(const ObservedDataset& data, double eta, const SensitivitySpec& spec,
                              const BaseMeasure& prior_base, const FunctionalSpec& g,
                              const EngineConfig& cfg, RngStream& rng) {
  cfg.validate();
  require_observed(data, "run_egp_engine");
  if (!std::isfinite(eta) || !std::isfinite(spec.alpha)) {
    throw ParameterError("run_egp_engine: eta and alpha must be finite");
  }
  const double alpha = spec.alpha, c = spec.c;
  auto b = [eta, alpha, c](double y) { return 1.0 + std::exp(eta + alpha * (std::log(y) - c)); };
  const double b_lower = alpha == 0.0 ? 1.0 + std::exp(eta) : 1.0;
  const EGPModel model(b, b_lower, prior_base);

  const GroupedSample grouped(data.observed_values());
  const MixingPosterior mixing(model, grouped, cfg.quad);
  const double jump_tol = cfg.jump_tol > 0.0 ? cfg.jump_tol : default_jump_tol(grouped.n());

  const auto& xs = grouped.distinct();
  const auto& counts = grouped.multiplicities();
  const auto& bvals = mixing.b_values();
  std::vector<double> qs(xs.size()), gs(xs.size());
  double shift = kNegInf;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    qs[j] = alpha * (std::log(xs[j]) - c);
    gs[j] = g(xs[j]);
    shift = std::max(shift, qs[j]);
  }
  std::vector<double> eq(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) eq[j] = std::exp(qs[j] - shift);

  const double n_obs = static_cast<double>(data.num_observed());
  const double n_mis = static_cast<double>(data.num_missing());

  PosteriorDraws out;
  out.engine = "egp";
  out.seed = rng.seed();
  out.stream_id = rng.stream_id();
  out.split_rhat = std::numeric_limits<double>::quiet_NaN();
  out.functional.reserve(cfg.n_draws);
  out.observed_functional.reserve(cfg.n_draws);
  out.alpha.assign(cfg.n_draws, alpha);
  out.eta.assign(cfg.n_draws, eta);

  const long report_every = std::max(1, cfg.n_draws / 100);
  for (int it = 0; it < cfg.n_draws; ++it) {
    if (cfg.progress && it % report_every == 0) cfg.progress(static_cast<double>(it) / cfg.n_draws);
    const double lambda = mixing.sample(rng);
    double total = 0.0, s_e = 0.0, s_ge = 0.0, s_g = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const double w = sample_gamma(counts[j], lambda + bvals[j], rng);
      total += w;
      s_e += w * eq[j];
      s_ge += w * eq[j] * gs[j];
      s_g += w * gs[j];
    }
    const JumpSeries series = sample_diffuse_jumps(model, lambda, jump_tol, rng);
    for (const auto& jmp : series.jumps) {
      const double y = jmp.location.value;
      const double e = std::exp(alpha * (std::log(y) - c) - shift);
      const double gy = g(y);
      total += jmp.weight;
      s_e += jmp.weight * e;
      s_ge += jmp.weight * e * gy;
      s_g += jmp.weight * gy;
    }
    if (!(s_e > 0.0) || !std::isfinite(s_ge)) throw NumericError("run_egp_engine: degenerate draw of P1");
    const double p = sample_beta(n_obs + 1.0, n_mis + 1.0, rng);
    const double p1g = s_g / total;
    out.functional.push_back((1.0 - p) * s_ge / s_e + p * p1g);
    out.observed_functional.push_back(p1g);
  }
  if (cfg.progress) cfg.progress(1.0);
  return out;
}

}  // namespace mcarsense
