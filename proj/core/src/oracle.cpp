#include "declab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "declab/decoders.hpp"
#include "declab/errors.hpp"
#include "declab/frontier.hpp"
#include "declab/rng.hpp"
#include "declab/selective.hpp"
#include "declab/tree_model.hpp"

namespace declab::oracle {
namespace {

using nlohmann::json;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Walks two sorted entry lists in lockstep.
template <typename Fn>
void merge_entries(const DistributionTable& p, const DistributionTable& q, Fn&& fn) {
  auto pi = p.entries().begin();
  auto qi = q.entries().begin();
  const auto pe = p.entries().end();
  const auto qe = q.entries().end();
  while (pi != pe || qi != qe) {
    if (qi == qe || (pi != pe && pi->first < qi->first)) {
      fn(pi->second, 0.0);
      ++pi;
    } else if (pi == pe || qi->first < pi->first) {
      fn(0.0, qi->second);
      ++qi;
    } else {
      fn(pi->second, qi->second);
      ++pi;
      ++qi;
    }
  }
}

// Power-warp p^(1/t), renormalized, for arbitrary positive t. The grid below
// deliberately ranges beyond the (0,1] DecoderConfig contract, so this stays
// local to the oracle.
std::vector<double> power_warp(std::span<const double> probs, double t) {
  double max_logit = kNegInf;
  std::vector<double> logits(probs.size(), kNegInf);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) {
      logits[i] = std::log(probs[i]) / t;
      max_logit = std::max(max_logit, logits[i]);
    }
  }
  std::vector<double> out(probs.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (logits[i] != kNegInf) {
      out[i] = std::exp(logits[i] - max_logit);
      sum += out[i];
    }
  }
  for (auto& x : out) x /= sum;
  return out;
}

std::vector<double> log_spaced_grid(double lo, double hi, std::size_t points) {
  std::vector<double> grid;
  grid.reserve(points);
  const double log_lo = std::log(lo);
  const double log_hi = std::log(hi);
  for (std::size_t i = 0; i < points; ++i) {
    const double f = points == 1 ? 0.0
                                 : static_cast<double>(i) /
                                       static_cast<double>(points - 1);
    grid.push_back(std::exp(log_lo + f * (log_hi - log_lo)));
  }
  return grid;
}

double entropy_of(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

double reverse_kl_dense(std::span<const double> q, std::span<const double> p) {
  double kl = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] > 0.0) kl += q[i] * std::log(q[i] / p[i]);
  }
  return kl;
}

}  // namespace

double tv_distance(const DistributionTable& p, const DistributionTable& q) {
  double l1 = 0.0;
  merge_entries(p, q, [&](double a, double b) { l1 += std::abs(a - b); });
  return std::min(0.5 * l1, 1.0);
}

double reverse_kl(const DistributionTable& q, const DistributionTable& p) {
  double kl = 0.0;
  merge_entries(p, q, [&](double pv, double qv) {
    if (qv > 0.0) {
      if (pv <= 0.0) {
        throw InputError("reverse_kl: q has mass outside the support of p");
      }
      kl += qv * std::log(qv / pv);
    }
  });
  return std::max(kl, 0.0);
}

GlobalLocalGapReport verify_global_local_gap(double tau,
                                             std::size_t grid_points_per_step) {
  const TreeModel model = counterexample_model();
  const Context empty;
  const auto global =
      selective::global_temperature_exact(model, empty, tau, 0.0, 2);

  GlobalLocalGapReport report;
  report.tau = tau;
  for (const auto& [seq, p] : global.table.entries()) {
    (seq.ids[0] == 0 ? report.branch_a_mass : report.branch_b_mass) += p;
  }
  report.root_marginal_bound = std::abs(report.branch_a_mass - 0.5);

  // Per-step temperature profiles (t_root, t_branch): the root conditional is
  // tied at (0.5, 0.5), so every profile keeps the root split even while the
  // branch step can be reshaped freely.
  const auto root = model.next(empty, {});
  const auto node_a = model.next(empty, TokenSequence{0});
  const auto node_b = model.next(empty, TokenSequence{1});
  const auto grid = log_spaced_grid(0.01, 100.0, grid_points_per_step);

  double min_tv = std::numeric_limits<double>::infinity();
  for (double t_root : grid) {
    const auto root_w = power_warp(root.probs(), t_root);
    for (double t_branch : grid) {
      const auto a_w = power_warp(node_a.probs(), t_branch);
      const auto b_w = power_warp(node_b.probs(), t_branch);
      std::vector<DistributionTable::Entry> entries;
      entries.reserve(4);
      for (TokenId second = 0; second < 2; ++second) {
        entries.emplace_back(TokenSequence{0, second},
                             root_w[0] * a_w[static_cast<std::size_t>(second)]);
        entries.emplace_back(TokenSequence{1, second},
                             root_w[1] * b_w[static_cast<std::size_t>(second)]);
      }
      min_tv = std::min(
          min_tv, tv_distance(DistributionTable(std::move(entries)), global.table));
    }
  }
  report.min_tv = min_tv;
  report.profiles = grid.size() * grid.size();
  report.pass = std::abs(report.branch_a_mass - 0.5763) <= 1e-4 &&
                std::abs(report.branch_b_mass - 0.4237) <= 1e-4 &&
                report.min_tv >= report.root_marginal_bound - 1e-6 &&
                report.min_tv > 0.07;
  return report;
}

std::string to_json(const GlobalLocalGapReport& r) {
  json doc;
  doc["check"] = "global_local_gap";
  doc["tau"] = r.tau;
  doc["branch_a_mass"] = r.branch_a_mass;
  doc["branch_b_mass"] = r.branch_b_mass;
  doc["min_tv"] = r.min_tv;
  doc["root_marginal_bound"] = r.root_marginal_bound;
  doc["profiles"] = r.profiles;
  doc["pass"] = r.pass;
  return doc.dump(2);
}

EntropyKlOptimalityReport verify_entropy_kl_optimality(std::size_t trials,
                                                       std::size_t outcomes,
                                                       std::uint64_t seed,
                                                       std::size_t perturbations) {
  if (outcomes < 2) throw InputError("optimality check needs >= 2 outcomes");
  EntropyKlOptimalityReport report;
  report.trials = trials;
  report.outcomes = outcomes;
  report.perturbations = perturbations;
  report.worst_margin = std::numeric_limits<double>::infinity();

  auto engine = rng::SeedDeriver(seed).mix("kl_optimality").engine();
  constexpr double kTauMin = 1e-3;
  const double sigmas[] = {0.05, 0.2, 0.5};

  for (std::size_t trial = 0; trial < trials; ++trial) {
    // Random full-support p: Dirichlet(1) mixed with 1% uniform to keep the
    // log-probabilities well conditioned.
    std::vector<double> p(outcomes);
    double sum = 0.0;
    for (auto& x : p) {
      x = -std::log(rng::uniform_unit_positive(engine));
      sum += x;
    }
    for (auto& x : p) {
      x = 0.99 * (x / sum) + 0.01 / static_cast<double>(outcomes);
    }

    std::vector<double> log_p(outcomes);
    for (std::size_t i = 0; i < outcomes; ++i) log_p[i] = std::log(p[i]);

    const double h_full = entropy_of(p);
    const double h_min = entropy_of(power_warp(p, kTauMin));
    const double k =
        h_min + rng::uniform_unit(engine) * (h_full - h_min);

    const auto solution = frontier::solve_temperature_for_entropy(p, k, kTauMin);
    const auto q = power_warp(p, solution.tau);
    report.max_bisection_residual =
        std::max(report.max_bisection_residual, std::abs(entropy_of(q) - k));
    const double d_star = reverse_kl_dense(q, p);

    std::vector<double> log_q(outcomes);
    for (std::size_t i = 0; i < outcomes; ++i) log_q[i] = std::log(q[i]);

    for (std::size_t pert = 0; pert < perturbations; ++pert) {
      // Perturb in log space, then project back onto the entropy-K shell by
      // bisecting a power exponent (entropy is monotone in it).
      std::vector<double> candidate;
      bool projected = false;
      for (int attempt = 0; attempt < 100 && !projected; ++attempt) {
        const double sigma = sigmas[pert % std::size(sigmas)];
        std::vector<double> noisy(outcomes);
        double norm = 0.0;
        for (std::size_t i = 0; i < outcomes; ++i) {
          noisy[i] = std::exp(log_q[i] + sigma * rng::standard_normal(engine));
          norm += noisy[i];
        }
        for (auto& x : noisy) x /= norm;

        double lo = 1e-4;
        double hi = 1e4;
        if (entropy_of(power_warp(noisy, lo)) > k ||
            entropy_of(power_warp(noisy, hi)) < k) {
          continue;  // this perturbation cannot reach entropy K; redraw
        }
        for (int iter = 0; iter < 200; ++iter) {
          const double mid = std::sqrt(lo * hi);
          const double h = entropy_of(power_warp(noisy, mid));
          if (std::abs(h - k) <= 1e-7) {
            candidate = power_warp(noisy, mid);
            projected = true;
            break;
          }
          if (h < k) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
      }
      if (!projected) {
        throw InternalError("entropy projection failed to converge");
      }
      const double margin = reverse_kl_dense(candidate, p) - d_star;
      report.worst_margin = std::min(report.worst_margin, margin);
      if (margin < -report.tolerance) ++report.violations;
    }
  }
  report.pass = report.violations == 0 && report.max_bisection_residual <= 1e-9;
  return report;
}

std::string to_json(const EntropyKlOptimalityReport& r) {
  json doc;
  doc["check"] = "entropy_kl_optimality";
  doc["trials"] = r.trials;
  doc["outcomes"] = r.outcomes;
  doc["perturbations"] = r.perturbations;
  doc["violations"] = r.violations;
  doc["max_bisection_residual"] = r.max_bisection_residual;
  doc["worst_margin"] = r.worst_margin;
  doc["tolerance"] = r.tolerance;
  doc["pass"] = r.pass;
  return doc.dump(2);
}

RejectionReport verify_rejection_sampling(const LanguageModel& model,
                                          std::size_t length, double tau,
                                          double alpha_percentile,
                                          std::size_t presamples,
                                          std::size_t accepted_target,
                                          std::uint64_t seed, double tv_limit) {
  const Context empty;
  auto engine = rng::SeedDeriver(seed).mix("rejection").engine();

  std::vector<double> logps;
  logps.reserve(presamples);
  for (std::size_t i = 0; i < presamples; ++i) {
    logps.push_back(
        decoders::sample_sequence(model, empty, decoders::Random{}, length, engine)
            .model_log_likelihood);
  }
  const double alpha = selective::choose_alpha_percentile(logps, alpha_percentile);

  const auto exact =
      selective::global_temperature_exact(model, empty, tau, alpha, length);

  selective::SelectiveConfig config{tau, alpha, 1'000'000};
  RejectionReport report;
  report.tau = tau;
  report.alpha = alpha;
  report.tv_limit = tv_limit;

  std::unordered_map<std::vector<TokenId>, std::size_t, TokenVectorHash> counts;
  while (report.accepted < accepted_target) {
    const auto outcome = selective::sample(model, empty, config, length, engine);
    report.attempts += outcome.attempts;
    if (!outcome.sample) {
      throw InternalError("rejection check exhausted 1e6 attempts per sample");
    }
    ++report.accepted;
    ++counts[outcome.sample->sequence.ids];
  }
  report.acceptance_rate = static_cast<double>(report.accepted) /
                           static_cast<double>(report.attempts);

  std::vector<DistributionTable::Entry> entries;
  entries.reserve(counts.size());
  for (const auto& [ids, count] : counts) {
    entries.emplace_back(TokenSequence{ids}, static_cast<double>(count) /
                                                 static_cast<double>(report.accepted));
  }
  report.tv = tv_distance(DistributionTable(std::move(entries)), exact.table);
  report.pass = report.tv <= tv_limit;
  return report;
}

std::string to_json(const RejectionReport& r) {
  json doc;
  doc["check"] = "rejection_sampling";
  doc["tau"] = r.tau;
  doc["alpha"] = r.alpha;
  doc["accepted"] = r.accepted;
  doc["attempts"] = r.attempts;
  doc["acceptance_rate"] = r.acceptance_rate;
  doc["tv"] = r.tv;
  doc["tv_limit"] = r.tv_limit;
  doc["pass"] = r.pass;
  return doc.dump(2);
}

EntropyReport verify_entropy_consistency(const LanguageModel& model,
                                         std::size_t length,
                                         std::size_t samples,
                                         std::uint64_t seed) {
  const Context empty;
  const char* config_names[] = {"random", "temperature:0.7", "topk:2",
                                "topp:0.9", "greedy"};
  EntropyReport report;
  double random_entropy = 0.0;
  double max_other = kNegInf;

  for (const char* name : config_names) {
    const auto config = decoders::parse_decoder_config(name);
    const double exact = frontier::entropy_exact(
        decoders::induced_distribution_exact(model, empty, config, length));
    auto engine = rng::SeedDeriver(seed).mix("entropy").mix(name).engine();
    const auto estimate = frontier::entropy_monte_carlo(
        [&](rng::Engine& e) {
          return decoders::sample_sequence(model, empty, config, length, e)
              .decoder_log_prob;
        },
        samples, engine);

    EntropyCheckRow row;
    row.config = name;
    row.exact = exact;
    row.estimate = estimate.value;
    row.standard_error = estimate.standard_error;
    row.pass = estimate.standard_error > 0.0
                   ? std::abs(estimate.value - exact) <=
                         3.0 * estimate.standard_error
                   : std::abs(estimate.value - exact) <= 1e-12;
    if (std::string_view(name) == "random") {
      random_entropy = estimate.value;
    } else {
      max_other = std::max(max_other, estimate.value);
    }
    report.rows.push_back(std::move(row));
  }
  report.random_strictly_greatest = random_entropy > max_other;
  report.pass = report.random_strictly_greatest;
  for (const auto& row : report.rows) report.pass = report.pass && row.pass;
  return report;
}

std::string to_json(const EntropyReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json j;
    j["config"] = row.config;
    j["exact"] = row.exact;
    j["estimate"] = row.estimate;
    j["standard_error"] = row.standard_error;
    j["pass"] = row.pass;
    rows.push_back(std::move(j));
  }
  json doc;
  doc["check"] = "entropy_consistency";
  doc["rows"] = std::move(rows);
  doc["random_strictly_greatest"] = r.random_strictly_greatest;
  doc["pass"] = r.pass;
  return doc.dump(2);
}

}  // namespace declab::oracle
