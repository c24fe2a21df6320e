#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "declab/distribution_table.hpp"
#include "declab/language_model.hpp"

namespace declab::oracle {

/// Total variation distance, (1/2) sum |p - q|; supports are merged, missing
/// entries read as 0. Always in [0, 1].
double tv_distance(const DistributionTable& p, const DistributionTable& q);

/// Reverse KL divergence sum q log(q/p). The support of q must be contained
/// in the support of p; a violation is an input error.
double reverse_kl(const DistributionTable& q, const DistributionTable& p);

/// Exact check that the globally temperature-scaled counterexample tree is
/// out of reach of per-step temperature warps: computes the exact global
/// branch masses, scans a log-spaced grid of per-step temperature profiles,
/// and compares the grid's best TV distance against the analytic root-marginal
/// lower bound |P(first branch) - 1/2|.
struct GlobalLocalGapReport {
  double tau = 0.5;
  double branch_a_mass = 0.0;  // exact global mass of the first root branch
  double branch_b_mass = 0.0;
  double min_tv = 0.0;         // best TV over the local-temperature grid
  double root_marginal_bound = 0.0;
  std::size_t profiles = 0;
  bool pass = false;
};
GlobalLocalGapReport verify_global_local_gap(double tau = 0.5,
                                             std::size_t grid_points_per_step = 32);
std::string to_json(const GlobalLocalGapReport& report);

/// Property check that the temperature family q proportional to p^(1/tau) is
/// the reverse-KL-closest distribution to p at its own entropy level: for
/// random (p, target entropy) instances, no entropy-matched random
/// perturbation may beat the solved q by more than the tolerance.
struct EntropyKlOptimalityReport {
  std::size_t trials = 0;
  std::size_t outcomes = 0;
  std::size_t perturbations = 0;
  std::size_t violations = 0;
  double max_bisection_residual = 0.0;  // |H(q_tau) - K|, recomputed
  double worst_margin = 0.0;            // min over all (D' - D*)
  double tolerance = 1e-6;
  bool pass = false;
};
EntropyKlOptimalityReport verify_entropy_kl_optimality(
    std::size_t trials, std::size_t outcomes, std::uint64_t seed,
    std::size_t perturbations = 1000);
std::string to_json(const EntropyKlOptimalityReport& report);

/// End-to-end rejection-sampler check: picks the cutoff at a percentile of
/// presampled log-likelihoods, draws accepted samples until the target count,
/// and compares the empirical distribution against the exact global one.
struct RejectionReport {
  double tau = 0.5;
  double alpha = 0.0;
  std::size_t accepted = 0;
  std::size_t attempts = 0;
  double acceptance_rate = 0.0;
  double tv = 0.0;
  double tv_limit = 0.01;
  bool pass = false;
};
RejectionReport verify_rejection_sampling(const LanguageModel& model,
                                          std::size_t length, double tau,
                                          double alpha_percentile,
                                          std::size_t presamples,
                                          std::size_t accepted_target,
                                          std::uint64_t seed,
                                          double tv_limit = 0.01);
std::string to_json(const RejectionReport& report);

/// Monte Carlo entropy vs. exact induced entropy for the standard decoder
/// configs, plus the ordering check that random sampling has the greatest
/// entropy.
struct EntropyCheckRow {
  std::string config;
  double exact = 0.0;
  double estimate = 0.0;
  double standard_error = 0.0;
  bool pass = false;
};
struct EntropyReport {
  std::vector<EntropyCheckRow> rows;
  bool random_strictly_greatest = false;
  bool pass = false;
};
EntropyReport verify_entropy_consistency(const LanguageModel& model,
                                         std::size_t length,
                                         std::size_t samples,
                                         std::uint64_t seed);
std::string to_json(const EntropyReport& report);

}  // namespace declab::oracle
