#include "halo/cpo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "halo/error.hpp"

namespace halo::cpo {

LossMode parse_loss_mode(std::string_view name) {
  if (name == "full") return LossMode::kFull;
  if (name == "pref_only") return LossMode::kPrefOnly;
  if (name == "nll_only") return LossMode::kNllOnly;
  throw Error(ErrorKind::kInvalidArgument, "unknown loss mode \"" + std::string(name) + "\"");
}

std::string_view to_string(LossMode mode) {
  switch (mode) {
    case LossMode::kFull: return "full";
    case LossMode::kPrefOnly: return "pref_only";
    case LossMode::kNllOnly: return "nll_only";
  }
  return "full";
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorKind::kNonFiniteInput, std::string(what) + " is not finite");
}

void validate(const LossInputs& in) {
  require_finite(in.logp_preferred, "logp_preferred");
  require_finite(in.logp_dispreferred, "logp_dispreferred");
  require_finite(in.phi_preferred, "phi_preferred");
  require_finite(in.phi_dispreferred, "phi_dispreferred");
  require_finite(in.beta, "beta");
  if (!(in.beta > 0.0)) throw Error(ErrorKind::kInvalidArgument, "beta must be > 0");
}

void validate_phi(const LossInputs& in) {
  if (!(in.phi_preferred > 0.0) || !(in.phi_dispreferred > 0.0)) {
    throw Error(ErrorKind::kNonPositivePhi, "phi values must be strictly positive");
  }
}

// Margin inside the sigmoid of the scaled loss.
double scaled_margin(const LossInputs& in) {
  return in.beta * (in.logp_preferred - in.logp_dispreferred) +
         in.beta * (std::log(in.phi_preferred) - std::log(in.phi_dispreferred));
}

}  // namespace

double nll_loss(const LossInputs& in) {
  require_finite(in.logp_preferred, "logp_preferred");
  return -in.logp_preferred;
}

double preference_loss(const LossInputs& in) {
  validate(in);
  return softplus(-in.beta * (in.logp_preferred - in.logp_dispreferred));
}

double scaled_preference_loss(const LossInputs& in) {
  validate(in);
  validate_phi(in);
  return softplus(-scaled_margin(in));
}

double scaled_preference_loss_closed_form(const LossInputs& in) {
  validate(in);
  validate_phi(in);
  // log of ((pi_d / pi_p) * (1 / psi))^beta
  const double log_ratio = in.logp_dispreferred - in.logp_preferred;
  const double log_psi = std::log(in.phi_preferred / in.phi_dispreferred);
  const double log_term = in.beta * (log_ratio - log_psi);
  if (log_term > 0.0) return log_term + std::log1p(std::exp(-log_term));
  return std::log1p(std::exp(log_term));
}

double cpo_total_loss(const LossInputs& in, LossMode mode) {
  switch (mode) {
    case LossMode::kPrefOnly: return scaled_preference_loss(in);
    case LossMode::kNllOnly: return nll_loss(in);
    case LossMode::kFull: break;
  }
  return scaled_preference_loss(in) + nll_loss(in);
}

double cpo_loss_unscaled(const LossInputs& in) { return preference_loss(in) + nll_loss(in); }

LogProbGradient cpo_logprob_gradient(const LossInputs& in, LossMode mode) {
  validate(in);
  LogProbGradient g;
  if (mode != LossMode::kNllOnly) {
    validate_phi(in);
    // d softplus(-z)/dz = -sigmoid(-z)
    const double w = in.beta * sigmoid(-scaled_margin(in));
    g.d_logp_preferred -= w;
    g.d_logp_dispreferred += w;
  }
  if (mode != LossMode::kPrefOnly) g.d_logp_preferred -= 1.0;
  return g;
}

std::vector<double> normalize_phi(std::span<const double> scores,
                                  std::pair<double, double> source_range) {
  const auto [lo, hi] = source_range;
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
    throw Error(ErrorKind::kDegenerateRange, "normalization range needs max > min");
  }
  std::vector<double> out;
  out.reserve(scores.size());
  for (double s : scores) {
    require_finite(s, "score");
    const double t = (std::clamp(s, lo, hi) - lo) / (hi - lo);
    out.push_back(kPhiFloor + (1.0 - kPhiFloor) * t);
  }
  return out;
}

ToyPolicy::ToyPolicy(int alphabet_size)
    : ToyPolicy(alphabet_size,
                std::vector<double>(static_cast<std::size_t>(alphabet_size + 1) *
                                        std::max(alphabet_size, 0),
                                    0.0)) {}

ToyPolicy::ToyPolicy(int alphabet_size, std::vector<double> logits)
    : k_(alphabet_size), logits_(std::move(logits)) {
  if (k_ < 1 || k_ > kMaxAlphabet) {
    throw Error(ErrorKind::kInvalidArgument, "toy policy alphabet must hold 1..8 symbols");
  }
  if (logits_.size() != static_cast<std::size_t>(k_ + 1) * k_) {
    throw Error(ErrorKind::kDimensionMismatch, "toy policy needs (k+1)*k logits");
  }
  for (double v : logits_) require_finite(v, "logit");
}

ToyPolicy ToyPolicy::random(int alphabet_size, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> logits(static_cast<std::size_t>(alphabet_size + 1) * alphabet_size);
  for (double& v : logits) v = dist(rng);
  return ToyPolicy(alphabet_size, std::move(logits));
}

void ToyPolicy::check_symbol(int s) const {
  if (s < 0 || s >= k_) {
    throw Error(ErrorKind::kInvalidArgument, "symbol " + std::to_string(s) + " outside alphabet");
  }
}

std::vector<double> ToyPolicy::next_distribution(int context) const {
  if (context < 0 || context > k_) throw Error(ErrorKind::kInvalidArgument, "bad context");
  const auto row = std::span<const double>(logits_).subspan(index(context, 0), k_);
  const double m = *std::max_element(row.begin(), row.end());
  std::vector<double> p(k_);
  double z = 0.0;
  for (int i = 0; i < k_; ++i) z += p[i] = std::exp(row[i] - m);
  for (double& v : p) v /= z;
  return p;
}

double ToyPolicy::log_prob(int context, int next) const {
  check_symbol(next);
  if (context < 0 || context > k_) throw Error(ErrorKind::kInvalidArgument, "bad context");
  const auto row = std::span<const double>(logits_).subspan(index(context, 0), k_);
  const double m = *std::max_element(row.begin(), row.end());
  double z = 0.0;
  for (double v : row) z += std::exp(v - m);
  return row[next] - m - std::log(z);
}

double ToyPolicy::sequence_logprob(std::span<const int> seq) const {
  double lp = 0.0;
  int ctx = bos();
  for (int s : seq) {
    lp += log_prob(ctx, s);
    ctx = s;
  }
  return lp;
}

std::vector<double> ToyPolicy::sequence_logprob_gradient(std::span<const int> seq) const {
  std::vector<double> g(logits_.size(), 0.0);
  int ctx = bos();
  for (int s : seq) {
    check_symbol(s);
    const auto p = next_distribution(ctx);
    for (int k = 0; k < k_; ++k) g[index(ctx, k)] -= p[k];
    g[index(ctx, s)] += 1.0;
    ctx = s;
  }
  return g;
}

LossInputs make_inputs(const ToyPolicy& policy, const PolicyPair& pair, double phi_preferred,
                       double phi_dispreferred, double beta) {
  LossInputs in;
  in.logp_preferred = policy.sequence_logprob(pair.preferred);
  in.logp_dispreferred = policy.sequence_logprob(pair.dispreferred);
  in.phi_preferred = phi_preferred;
  in.phi_dispreferred = phi_dispreferred;
  in.beta = beta;
  return in;
}

std::vector<double> analytic_gradient(const ToyPolicy& policy, const PolicyPair& pair,
                                      double phi_preferred, double phi_dispreferred, double beta,
                                      LossMode mode) {
  const LossInputs in = make_inputs(policy, pair, phi_preferred, phi_dispreferred, beta);
  const LogProbGradient outer = cpo_logprob_gradient(in, mode);
  const auto gp = policy.sequence_logprob_gradient(pair.preferred);
  const auto gd = policy.sequence_logprob_gradient(pair.dispreferred);
  std::vector<double> g(policy.parameter_count());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = outer.d_logp_preferred * gp[i] + outer.d_logp_dispreferred * gd[i];
  }
  return g;
}

GradientCheckResult finite_difference_check(const ToyPolicy& policy, const PolicyPair& pair,
                                            double phi_preferred, double phi_dispreferred,
                                            double beta, double h, LossMode mode) {
  if (!(h >= 1e-7 && h <= 1e-3)) {
    throw Error(ErrorKind::kInvalidArgument, "finite-difference step must lie in [1e-7, 1e-3]");
  }
  GradientCheckResult res;
  res.analytic = analytic_gradient(policy, pair, phi_preferred, phi_dispreferred, beta, mode);
  res.numeric.resize(res.analytic.size());

  ToyPolicy probe = policy;
  const auto loss_at = [&](const ToyPolicy& p) {
    return cpo_total_loss(make_inputs(p, pair, phi_preferred, phi_dispreferred, beta), mode);
  };
  for (std::size_t i = 0; i < res.analytic.size(); ++i) {
    const double saved = probe.parameters()[i];
    probe.parameters()[i] = saved + h;
    const double up = loss_at(probe);
    probe.parameters()[i] = saved - h;
    const double down = loss_at(probe);
    probe.parameters()[i] = saved;
    res.numeric[i] = (up - down) / (2.0 * h);

    const double a = res.analytic[i];
    const double n = res.numeric[i];
    if (!std::isfinite(a) || !std::isfinite(n)) {
      throw Error(ErrorKind::kNonFiniteGradient, "parameter " + std::to_string(i));
    }
    // Gradients below 1e-4 in magnitude are compared absolutely.
    const double scale = std::max({std::abs(a), std::abs(n), 1e-4});
    const double err = std::abs(a - n) / scale;
    if (err > res.max_relative_error) {
      res.max_relative_error = err;
      res.worst_parameter = i;
    }
  }
  return res;
}

}  // namespace halo::cpo
