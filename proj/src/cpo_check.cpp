#include "halo/cpo_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "halo/error.hpp"

namespace halo::cpo {

namespace {

LossInputs random_inputs(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> logp(-60.0, 0.0);
  std::uniform_real_distribution<double> log_phi(std::log(kPhiFloor), 0.0);
  std::uniform_real_distribution<double> log_beta(std::log(0.01), std::log(2.0));
  LossInputs in;
  in.logp_preferred = logp(rng);
  in.logp_dispreferred = logp(rng);
  in.phi_preferred = std::exp(log_phi(rng));
  in.phi_dispreferred = std::exp(log_phi(rng));
  in.beta = std::exp(log_beta(rng));
  return in;
}

std::vector<int> random_sequence(std::mt19937_64& rng, int alphabet, int min_len, int max_len) {
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::uniform_int_distribution<int> sym(0, alphabet - 1);
  std::vector<int> s(static_cast<std::size_t>(len(rng)));
  for (int& x : s) x = sym(rng);
  return s;
}

CheckRow bound(std::string name, double measured, double tolerance, std::string detail = {}) {
  const bool ok = std::isfinite(measured) && measured <= tolerance;
  return {std::move(name), measured, tolerance, ok, std::move(detail)};
}

// 1 when the predicate held on every draw, measured as the failure count.
CheckRow all_of(std::string name, int failures, std::string detail = {}) {
  return {std::move(name), static_cast<double>(failures), 0.0, failures == 0, std::move(detail)};
}

}  // namespace

std::vector<CheckRow> run_check_battery(const CheckOptions& o) {
  std::vector<CheckRow> rows;
  std::mt19937_64 rng(o.seed);

  // Identities over random draws.
  double closed_err = 0.0, psi_one_err = 0.0, additivity_err = 0.0;
  int sign_failures = 0;
  for (int i = 0; i < o.draws; ++i) {
    LossInputs in = random_inputs(rng);
    closed_err = std::max(closed_err, std::abs(scaled_preference_loss(in) -
                                               scaled_preference_loss_closed_form(in)));
    additivity_err = std::max(additivity_err, std::abs(cpo_total_loss(in, LossMode::kFull) -
                                                       cpo_total_loss(in, LossMode::kPrefOnly) -
                                                       cpo_total_loss(in, LossMode::kNllOnly)));
    LossInputs flat = in;
    flat.phi_dispreferred = flat.phi_preferred;
    psi_one_err = std::max(psi_one_err,
                           std::abs(cpo_total_loss(flat, LossMode::kFull) - cpo_loss_unscaled(flat)));
    const double g1 = cpo_logprob_gradient(in, LossMode::kPrefOnly).d_logp_preferred;
    LossInputs scaled = in;
    scaled.beta *= 3.7;
    const double g2 = cpo_logprob_gradient(scaled, LossMode::kPrefOnly).d_logp_preferred;
    if (!(g1 < 0.0 && g2 < 0.0)) ++sign_failures;
  }
  const std::string draws = std::to_string(o.draws) + " random draws";
  rows.push_back(bound("scaled loss equals closed form", closed_err, 1e-9, draws));
  rows.push_back(bound("psi = 1 reduces to unscaled CPO", psi_one_err, 1e-12, draws));
  rows.push_back(bound("full = pref_only + nll_only", additivity_err, 1e-12, draws));
  rows.push_back(all_of("pressure direction invariant to beta scaling", sign_failures, draws));

  // Known values.
  auto value_row = [&](std::string name, double got, double want, double tol) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "got %.12g, want %.12g", got, want);
    rows.push_back(bound(std::move(name), std::abs(got - want), tol, buf));
  };
  value_row("equal log-probs give log 2", preference_loss({-3.0, -3.0, 1.0, 1.0, 0.1}), std::log(2.0), 1e-12);
  value_row("gap 10, beta 0.1 gives -log sigma(1)", preference_loss({-1.0, -11.0, 1.0, 1.0, 0.1}),
            0.31326168751822283405, 1e-9);
  value_row("psi 2, equal log-probs", scaled_preference_loss({-2.0, -2.0, 2.0, 1.0, 0.1}),
            0.65909026761122674037, 1e-9);
  value_row("closed form, pi_d/pi_p = e^10", scaled_preference_loss_closed_form({-11.0, -1.0, 1.0, 1.0, 0.1}),
            1.313261687518222834, 1e-9);
  value_row("total loss 0.313262 + 1", cpo_total_loss({-1.0, -11.0, 1.0, 1.0, 0.1}),
            1.313261687518222834, 1e-9);
  {
    const ToyPolicy uniform = ToyPolicy::uniform(4);
    const std::vector<int> seq{0, 1, 2};
    value_row("NLL of 3 uniform tokens is 3 log 4", -uniform.sequence_logprob(seq),
              4.1588830833596718565, 1e-12);
  }

  // Limits and monotonicity.
  {
    const double sat = preference_loss({0.0, -200.0, 1.0, 1.0, 0.1});
    rows.push_back(bound("saturation at gap 200", sat, 1e-6));
    const double div = scaled_preference_loss({-1.0, -1.0, 1e-30, 1.0, 0.1});
    char detail[64];
    std::snprintf(detail, sizeof detail, "5 / loss at psi 1e-30, loss = %.6g", div);
    rows.push_back({"divergence as psi -> 0", 5.0 / div, 1.0, div > 5.0, detail});
    int failures = 0;
    double max_abs = 0.0;
    for (double gap : {-700.0, -350.0, 0.0, 350.0, 700.0}) {
      for (double beta : {0.1, 1.0}) {
        LossInputs in{std::min(0.0, gap) - 1.0, std::min(0.0, -gap) - 1.0, 1.0, kPhiFloor, beta};
        for (double v : {scaled_preference_loss(in), scaled_preference_loss_closed_form(in),
                         cpo_total_loss(in), cpo_logprob_gradient(in).d_logp_preferred}) {
          if (!std::isfinite(v)) ++failures;
          max_abs = std::max(max_abs, std::abs(v));
        }
      }
    }
    rows.push_back(all_of("finite for gaps up to 700 nats", failures));
    int mono = 0;
    std::mt19937_64 mrng(o.seed + 1);
    for (int i = 0; i < 1000; ++i) {
      LossInputs in = random_inputs(mrng);
      const double base = scaled_preference_loss(in);
      LossInputs up = in;
      up.logp_preferred += 1e-3;
      LossInputs dn = in;
      dn.logp_dispreferred += 1e-3;
      LossInputs smaller_psi = in;
      smaller_psi.phi_preferred *= 0.5;
      // Pairs already saturated at the double floor cannot move.
      if (base > 1e-12) {
        if (!(scaled_preference_loss(up) < base)) ++mono;
        if (!(scaled_preference_loss(dn) > base)) ++mono;
        if (!(scaled_preference_loss(smaller_psi) > base)) ++mono;
      }
    }
    rows.push_back(all_of("monotone in log-probs and psi", mono, "1000 random draws"));
  }

  // Gradients through the toy policy.
  {
    double worst = 0.0;
    std::string where;
    for (LossMode mode : {LossMode::kFull, LossMode::kPrefOnly, LossMode::kNllOnly}) {
      for (std::uint64_t s = 0; s < 8; ++s) {
        const ToyPolicy policy = ToyPolicy::random(4, o.seed * 131 + s, 1.0);
        std::mt19937_64 srng(o.seed * 977 + s);
        PolicyPair pair{random_sequence(srng, 4, 1, 6), random_sequence(srng, 4, 1, 6)};
        std::uniform_real_distribution<double> phi(0.05, 1.0);
        const auto res = finite_difference_check(policy, pair, phi(srng), phi(srng), o.beta, o.fd_step, mode);
        if (res.max_relative_error > worst) {
          worst = res.max_relative_error;
          where = std::string(to_string(mode)) + " policy seed " + std::to_string(o.seed * 131 + s);
        }
      }
    }
    rows.push_back(bound("finite-difference gradient check", worst, o.grad_tolerance, where));
  }
  {
    // NLL gradient on one token is softmax(BOS row) minus one-hot(target).
    const ToyPolicy policy = ToyPolicy::random(4, o.seed + 7, 1.0);
    PolicyPair pair{{2}, {1}};
    const auto g = analytic_gradient(policy, pair, 1.0, 1.0, o.beta, LossMode::kNllOnly);
    const auto p = policy.next_distribution(policy.bos());
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      double want = 0.0;
      if (i >= policy.index(policy.bos(), 0)) {
        const int next = static_cast<int>(i - policy.index(policy.bos(), 0));
        want = p[static_cast<std::size_t>(next)] - (next == 2 ? 1.0 : 0.0);
      }
      err = std::max(err, std::abs(g[i] - want));
    }
    rows.push_back(bound("one-token NLL gradient is softmax minus one-hot", err, 1e-6));
  }
  {
    // Uniform policy, symmetric sequences: preference gradients cancel on
    // shared parameters.
    const ToyPolicy policy = ToyPolicy::uniform(4);
    const std::vector<int> yp{0, 1, 2}, yd{0, 1, 3};
    const auto g = analytic_gradient(policy, {yp, yd}, 1.0, 1.0, o.beta, LossMode::kPrefOnly);
    const auto gp = policy.sequence_logprob_gradient(yp);
    const auto gd = policy.sequence_logprob_gradient(yd);
    const LossInputs in = make_inputs(policy, {yp, yd}, 1.0, 1.0, o.beta);
    const auto d = cpo_logprob_gradient(in, LossMode::kPrefOnly);
    double err = std::abs(d.d_logp_preferred + d.d_logp_dispreferred);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (gp[i] == gd[i]) err = std::max(err, std::abs(g[i]));
    }
    rows.push_back(bound("symmetric pair gradients cancel", err, 1e-12));
  }
  {
    int failures = 0;
    try {
      normalize_phi(std::vector<double>{0.3, 0.3}, {0.3, 0.3});
      ++failures;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerateRange) ++failures;
    }
    const auto v = normalize_phi(std::vector<double>{0.0, 0.4, 0.8}, {0.0, 0.8});
    const double err = std::max({std::abs(v[0] - 1e-3), std::abs(v[1] - 0.5005), std::abs(v[2] - 1.0)});
    rows.push_back(bound("phi normalization endpoints and midpoint", err + failures, 1e-12));
  }
  return rows;
}

bool all_passed(const std::vector<CheckRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.passed; });
}

nlohmann::json to_json(const std::vector<CheckRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"name", r.name},
                   {"measured", r.measured},
                   {"tolerance", r.tolerance},
                   {"passed", r.passed},
                   {"detail", r.detail}});
  }
  return arr;
}

std::string format_table(const std::vector<CheckRow>& rows) {
  std::string out;
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-4s  %-48s  %12.3e  <= %9.1e  %s\n", r.passed ? "PASS" : "FAIL",
                  r.name.c_str(), r.measured, r.tolerance, r.detail.c_str());
    out += line;
  }
  return out;
}

}  // namespace halo::cpo
