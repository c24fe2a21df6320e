#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace declab::ratings {

/// Recorded agreement statistics from the original crowdworker experiments
/// (2,968 and 14,760 pairwise ratings respectively). The raw rating data is
/// not redistributable; these are reference constants only.
inline constexpr double kRecordedCohensKappa = 0.1957;
inline constexpr double kRecordedFleissKappa = 0.1964;

/// One absolute judgment on the 5-point Terrible(1)..High Quality(5) scale.
struct AbsoluteRating {
  std::string task_id;
  std::string item_id;   // decoding-config label
  std::string rater_id;
  int label = 0;         // 1..5
};

/// Ordered pairwise record derived from two absolute ratings in one task:
/// +1 if `first` was rated higher, -1 if lower, 0 on ties. The mirrored
/// record always exists with the negated score.
struct PairwisePreference {
  std::string task_id;
  std::string first;
  std::string second;
  int score = 0;  // -1, 0, +1
};

/// Expands one rater's pass over one task (one rating per item, m >= 2 items)
/// into m(m-1) ordered pairwise records.
std::vector<PairwisePreference> pairwise_from_task(
    std::span<const AbsoluteRating> task_ratings);

/// Groups ratings by (task_id, rater_id) in order of first appearance and
/// expands every group.
std::vector<PairwisePreference> pairwise_preferences(
    std::span<const AbsoluteRating> ratings);

struct PreferenceSummary {
  double mean = 0.0;
  double ci_lo = 0.0;   // 2.5th percentile of bootstrap resample means
  double ci_hi = 0.0;   // 97.5th percentile
  std::size_t n = 0;    // records with the item in first position
};

/// Mean score of the records where `item` appears first, with a percentile
/// bootstrap confidence interval over B resamples.
PreferenceSummary mean_preference(std::span<const PairwisePreference> prefs,
                                  std::string_view item,
                                  std::size_t bootstrap_resamples = 10'000,
                                  std::uint64_t seed = 0);

struct KappaResult {
  double kappa = 0.0;
  /// Chance agreement is exactly 1 (both raters constant and identical);
  /// kappa is defined as 1 there since observed agreement is also 1.
  bool degenerate = false;
};

/// Cohen's kappa for two raters over the same items. Labels are arbitrary
/// integers; categories are the union of observed labels.
KappaResult cohens_kappa(std::span<const int> rater_a, std::span<const int> rater_b);

/// Items-by-categories count matrix for Fleiss's kappa; every row must sum to
/// the same rater count n >= 2.
class AgreementTable {
public:
  AgreementTable(std::size_t items, std::size_t categories);
  void set(std::size_t item, std::size_t category, std::uint64_t count);
  void add(std::size_t item, std::size_t category, std::uint64_t count = 1);

  std::size_t items() const { return items_; }
  std::size_t categories() const { return categories_; }
  std::uint64_t at(std::size_t item, std::size_t category) const;

  /// Raters per item; throws if rows disagree or any row sums below 2.
  std::size_t raters_per_item() const;

private:
  std::size_t items_;
  std::size_t categories_;
  std::vector<std::uint64_t> counts_;
};

KappaResult fleiss_kappa(const AgreementTable& table);

/// Cohen's kappa over the absolute labels of exactly two raters, computed on
/// the (task, item) cells both of them rated.
KappaResult cohens_kappa_from_ratings(std::span<const AbsoluteRating> ratings);

/// Fleiss's kappa over (task, item) cells with a constant rater count per
/// cell; categories are the labels 1..5.
KappaResult fleiss_kappa_from_ratings(std::span<const AbsoluteRating> ratings);

struct MatchedPair {
  std::size_t index_a = 0;
  std::size_t index_b = 0;
  double logp_a = 0.0;
  double logp_b = 0.0;
};

/// Greedy matching of two sample sets on sorted log-likelihood: walk both
/// sorted lists, pair when within tolerance, otherwise advance the smaller.
/// Each sample is used at most once. May return empty.
std::vector<MatchedPair> equal_likelihood_pairs(std::span<const double> logps_a,
                                                std::span<const double> logps_b,
                                                double tolerance = 0.5);

/// CSV with header task_id,item_id,rater_id,label.
std::vector<AbsoluteRating> read_ratings_csv(std::istream& in);
void write_pairwise_csv(std::ostream& out,
                        std::span<const PairwisePreference> prefs);
/// CSV with header item_id,mean,ci_lo,ci_hi,n, one row per distinct item in
/// order of first appearance.
void write_means_csv(std::ostream& out, std::span<const PairwisePreference> prefs,
                     std::size_t bootstrap_resamples = 10'000,
                     std::uint64_t seed = 0);

}  // namespace declab::ratings
