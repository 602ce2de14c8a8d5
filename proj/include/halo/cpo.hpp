#pragma once

// Reference kernels for the contrastive preference objective with the
// quality-ratio scaling term, plus a bigram toy policy used to verify
// analytic gradients against central differences.
//
// Kernels are per-example; averaging over a dataset is left to the caller.

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace halo::cpo {

inline constexpr double kDefaultBeta = 0.1;
inline constexpr double kPhiFloor = 1e-3;

struct LossInputs {
  double logp_preferred = 0.0;     // log pi(y_p | x), summed over tokens
  double logp_dispreferred = 0.0;  // log pi(y_d | x)
  double phi_preferred = 1.0;
  double phi_dispreferred = 1.0;
  double beta = kDefaultBeta;
};

enum class LossMode { kFull, kPrefOnly, kNllOnly };

LossMode parse_loss_mode(std::string_view name);
std::string_view to_string(LossMode mode);

// log(1 + e^x) without overflow.
double softplus(double x);
// Logistic sigmoid, stable for large |x|.
double sigmoid(double x);

double nll_loss(const LossInputs& in);
// -log sigma(beta * (logp_p - logp_d))
double preference_loss(const LossInputs& in);
// -log sigma(beta * (logp_p - logp_d) + beta * log(phi_p / phi_d))
double scaled_preference_loss(const LossInputs& in);
// log(1 + ((pi_d / pi_p) / psi)^beta), psi = phi_p / phi_d, in log space.
double scaled_preference_loss_closed_form(const LossInputs& in);

// Scaled preference + NLL, or one of the two terms alone.
double cpo_total_loss(const LossInputs& in, LossMode mode = LossMode::kFull);
// Unscaled objective: preference_loss + nll_loss.
double cpo_loss_unscaled(const LossInputs& in);

// Partial derivatives of cpo_total_loss w.r.t. the two sequence log-probs.
struct LogProbGradient {
  double d_logp_preferred = 0.0;
  double d_logp_dispreferred = 0.0;
};
LogProbGradient cpo_logprob_gradient(const LossInputs& in, LossMode mode = LossMode::kFull);

// Affine map of [min, max] onto [kPhiFloor, 1]. Scores outside the range are
// clamped to it first. Throws DegenerateRange when max <= min.
std::vector<double> normalize_phi(std::span<const double> scores,
                                  std::pair<double, double> source_range);

// First-order (bigram) policy over a small alphabet. Row `alphabet_size`
// is the start-of-sequence context.
class ToyPolicy {
 public:
  static constexpr int kMaxAlphabet = 8;

  explicit ToyPolicy(int alphabet_size);
  ToyPolicy(int alphabet_size, std::vector<double> logits);

  static ToyPolicy uniform(int alphabet_size) { return ToyPolicy(alphabet_size); }
  static ToyPolicy random(int alphabet_size, std::uint64_t seed, double scale = 1.0);

  int alphabet_size() const { return k_; }
  int bos() const { return k_; }
  std::size_t parameter_count() const { return logits_.size(); }
  std::size_t index(int context, int next) const {
    return static_cast<std::size_t>(context) * k_ + next;
  }

  std::span<double> parameters() { return logits_; }
  std::span<const double> parameters() const { return logits_; }

  std::vector<double> next_distribution(int context) const;
  double log_prob(int context, int next) const;

  // Sum of token log-probabilities, starting from the BOS context.
  double sequence_logprob(std::span<const int> seq) const;
  // d sequence_logprob / d logits, one entry per parameter.
  std::vector<double> sequence_logprob_gradient(std::span<const int> seq) const;

 private:
  void check_symbol(int s) const;

  int k_;
  std::vector<double> logits_;
};

struct PolicyPair {
  std::vector<int> preferred;
  std::vector<int> dispreferred;
};

// Builds LossInputs from the policy's sequence log-probs.
LossInputs make_inputs(const ToyPolicy& policy, const PolicyPair& pair, double phi_preferred,
                       double phi_dispreferred, double beta);

// Analytic d cpo_total_loss / d logits through the policy.
std::vector<double> analytic_gradient(const ToyPolicy& policy, const PolicyPair& pair,
                                      double phi_preferred, double phi_dispreferred, double beta,
                                      LossMode mode);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_parameter = 0;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

// Compares analytic gradients with central differences for every parameter.
// h must lie in [1e-7, 1e-3]. Throws NonFiniteGradient.
GradientCheckResult finite_difference_check(const ToyPolicy& policy, const PolicyPair& pair,
                                            double phi_preferred, double phi_dispreferred,
                                            double beta, double h, LossMode mode);

}  // namespace halo::cpo
