#include "declab/ratings.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <tuple>
#include <unordered_map>

#include "declab/csv.hpp"
#include "declab/errors.hpp"
#include "declab/rng.hpp"

namespace declab::ratings {
namespace {

void check_label(int label) {
  if (label < 1 || label > 5) {
    throw InputError("rating label " + std::to_string(label) +
                     " outside [1,5]");
  }
}

int sign(int x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }

// Nearest-rank percentile of a sorted vector, q in (0,100).
double nearest_rank(const std::vector<double>& sorted, double q) {
  auto rank = static_cast<std::size_t>(
      std::ceil(q / 100.0 * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

}  // namespace

std::vector<PairwisePreference> pairwise_from_task(
    std::span<const AbsoluteRating> task_ratings) {
  if (task_ratings.size() < 2) {
    throw InputError("a task needs at least 2 rated items, got " +
                     std::to_string(task_ratings.size()));
  }
  const std::string& task = task_ratings.front().task_id;
  std::set<std::string> items;
  for (const auto& r : task_ratings) {
    if (r.task_id != task) {
      throw InputError("ratings from different tasks: \"" + task + "\" and \"" +
                       r.task_id + "\"");
    }
    check_label(r.label);
    if (!items.insert(r.item_id).second) {
      throw InputError("duplicate item \"" + r.item_id + "\" in task \"" + task +
                       "\"");
    }
  }
  std::vector<PairwisePreference> out;
  out.reserve(task_ratings.size() * (task_ratings.size() - 1));
  for (std::size_t i = 0; i < task_ratings.size(); ++i) {
    for (std::size_t j = 0; j < task_ratings.size(); ++j) {
      if (i == j) continue;
      out.push_back({task, task_ratings[i].item_id, task_ratings[j].item_id,
                     sign(task_ratings[i].label - task_ratings[j].label)});
    }
  }
  return out;
}

std::vector<PairwisePreference> pairwise_preferences(
    std::span<const AbsoluteRating> ratings) {
  // One rater's pass over one task is the expansion unit: each rater assigns
  // one label per item, and their labels are compared only with each other.
  std::vector<std::string> group_order;
  std::unordered_map<std::string, std::vector<AbsoluteRating>> groups;
  for (const auto& r : ratings) {
    const std::string key = r.task_id + '\x1f' + r.rater_id;
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) group_order.push_back(key);
    it->second.push_back(r);
  }
  std::vector<PairwisePreference> out;
  for (const auto& key : group_order) {
    auto expanded = pairwise_from_task(groups.at(key));
    out.insert(out.end(), expanded.begin(), expanded.end());
  }
  return out;
}

PreferenceSummary mean_preference(std::span<const PairwisePreference> prefs,
                                  std::string_view item,
                                  std::size_t bootstrap_resamples,
                                  std::uint64_t seed) {
  std::vector<double> scores;
  for (const auto& p : prefs) {
    if (p.first == item) scores.push_back(static_cast<double>(p.score));
  }
  if (scores.empty()) {
    throw InputError("no pairwise records with item \"" + std::string(item) +
                     "\" in first position");
  }
  double sum = 0.0;
  for (double s : scores) sum += s;
  const double mean = sum / static_cast<double>(scores.size());

  if (bootstrap_resamples == 0) {
    return {mean, mean, mean, scores.size()};
  }
  auto engine = rng::SeedDeriver(seed).mix("bootstrap").mix(item).engine();
  std::vector<double> means;
  means.reserve(bootstrap_resamples);
  for (std::size_t b = 0; b < bootstrap_resamples; ++b) {
    double resum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const auto pick = static_cast<std::size_t>(
          rng::uniform_unit(engine) * static_cast<double>(scores.size()));
      resum += scores[std::min(pick, scores.size() - 1)];
    }
    means.push_back(resum / static_cast<double>(scores.size()));
  }
  std::sort(means.begin(), means.end());
  return {mean, nearest_rank(means, 2.5), nearest_rank(means, 97.5),
          scores.size()};
}

KappaResult cohens_kappa(std::span<const int> rater_a,
                         std::span<const int> rater_b) {
  if (rater_a.empty() || rater_a.size() != rater_b.size()) {
    throw InputError("cohens_kappa needs two equal-length nonempty label lists");
  }
  const double n = static_cast<double>(rater_a.size());
  std::map<int, double> marg_a;
  std::map<int, double> marg_b;
  double agree = 0.0;
  for (std::size_t i = 0; i < rater_a.size(); ++i) {
    marg_a[rater_a[i]] += 1.0;
    marg_b[rater_b[i]] += 1.0;
    if (rater_a[i] == rater_b[i]) agree += 1.0;
  }
  const double p_o = agree / n;
  double p_e = 0.0;
  for (const auto& [label, count_a] : marg_a) {
    auto it = marg_b.find(label);
    if (it != marg_b.end()) p_e += (count_a / n) * (it->second / n);
  }
  if (p_e >= 1.0) {
    // Both raters constant on the same label; p_o is necessarily 1.
    return {1.0, true};
  }
  return {(p_o - p_e) / (1.0 - p_e), false};
}

AgreementTable::AgreementTable(std::size_t items, std::size_t categories)
    : items_(items), categories_(categories), counts_(items * categories, 0) {
  if (items == 0 || categories == 0) {
    throw InputError("agreement table needs >= 1 item and >= 1 category");
  }
}

void AgreementTable::set(std::size_t item, std::size_t category,
                         std::uint64_t count) {
  counts_.at(item * categories_ + category) = count;
}

void AgreementTable::add(std::size_t item, std::size_t category,
                         std::uint64_t count) {
  counts_.at(item * categories_ + category) += count;
}

std::uint64_t AgreementTable::at(std::size_t item, std::size_t category) const {
  return counts_.at(item * categories_ + category);
}

std::size_t AgreementTable::raters_per_item() const {
  std::uint64_t raters = 0;
  for (std::size_t c = 0; c < categories_; ++c) raters += at(0, c);
  for (std::size_t i = 1; i < items_; ++i) {
    std::uint64_t row = 0;
    for (std::size_t c = 0; c < categories_; ++c) row += at(i, c);
    if (row != raters) {
      throw InputError("agreement table row " + std::to_string(i) + " sums to " +
                       std::to_string(row) + ", expected " +
                       std::to_string(raters));
    }
  }
  if (raters < 2) {
    throw InputError("fleiss_kappa needs >= 2 raters per item");
  }
  return static_cast<std::size_t>(raters);
}

KappaResult fleiss_kappa(const AgreementTable& table) {
  const double n = static_cast<double>(table.raters_per_item());
  const double items = static_cast<double>(table.items());

  double p_bar = 0.0;
  std::vector<double> category_share(table.categories(), 0.0);
  for (std::size_t i = 0; i < table.items(); ++i) {
    double agree = 0.0;
    for (std::size_t c = 0; c < table.categories(); ++c) {
      const double count = static_cast<double>(table.at(i, c));
      agree += count * count;
      category_share[c] += count;
    }
    p_bar += (agree - n) / (n * (n - 1.0));
  }
  p_bar /= items;

  double p_e = 0.0;
  for (double share : category_share) {
    const double p = share / (items * n);
    p_e += p * p;
  }
  if (p_e >= 1.0) {
    return {1.0, true};
  }
  return {(p_bar - p_e) / (1.0 - p_e), false};
}

KappaResult cohens_kappa_from_ratings(std::span<const AbsoluteRating> ratings) {
  std::set<std::string> raters;
  for (const auto& r : ratings) raters.insert(r.rater_id);
  if (raters.size() != 2) {
    throw InputError("cohens_kappa needs exactly 2 raters, got " +
                     std::to_string(raters.size()));
  }
  const std::string& rater_a = *raters.begin();
  std::map<std::pair<std::string, std::string>, int> labels_a;
  std::map<std::pair<std::string, std::string>, int> labels_b;
  for (const auto& r : ratings) {
    auto& dest = r.rater_id == rater_a ? labels_a : labels_b;
    dest[{r.task_id, r.item_id}] = r.label;
  }
  std::vector<int> a;
  std::vector<int> b;
  for (const auto& [cell, label] : labels_a) {
    auto it = labels_b.find(cell);
    if (it != labels_b.end()) {
      a.push_back(label);
      b.push_back(it->second);
    }
  }
  if (a.empty()) {
    throw InputError("the two raters share no (task,item) cells");
  }
  return cohens_kappa(a, b);
}

KappaResult fleiss_kappa_from_ratings(std::span<const AbsoluteRating> ratings) {
  std::map<std::pair<std::string, std::string>, std::size_t> cell_index;
  for (const auto& r : ratings) {
    cell_index.emplace(std::make_pair(r.task_id, r.item_id), cell_index.size());
  }
  if (cell_index.empty()) throw InputError("no ratings supplied");
  AgreementTable table(cell_index.size(), 5);
  for (const auto& r : ratings) {
    check_label(r.label);
    table.add(cell_index.at({r.task_id, r.item_id}),
              static_cast<std::size_t>(r.label - 1));
  }
  return fleiss_kappa(table);
}

std::vector<MatchedPair> equal_likelihood_pairs(std::span<const double> logps_a,
                                                std::span<const double> logps_b,
                                                double tolerance) {
  if (!(tolerance > 0.0)) throw InputError("matching tolerance must be > 0");
  std::vector<std::size_t> order_a(logps_a.size());
  std::vector<std::size_t> order_b(logps_b.size());
  std::iota(order_a.begin(), order_a.end(), 0);
  std::iota(order_b.begin(), order_b.end(), 0);
  std::stable_sort(order_a.begin(), order_a.end(),
                   [&](std::size_t x, std::size_t y) { return logps_a[x] < logps_a[y]; });
  std::stable_sort(order_b.begin(), order_b.end(),
                   [&](std::size_t x, std::size_t y) { return logps_b[x] < logps_b[y]; });

  std::vector<MatchedPair> pairs;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < order_a.size() && j < order_b.size()) {
    const double a = logps_a[order_a[i]];
    const double b = logps_b[order_b[j]];
    if (std::abs(a - b) <= tolerance) {
      pairs.push_back({order_a[i], order_b[j], a, b});
      ++i;
      ++j;
    } else if (a < b) {
      ++i;
    } else {
      ++j;
    }
  }
  return pairs;
}

std::vector<AbsoluteRating> read_ratings_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("ratings CSV is empty");
  }
  const auto header = csv::parse_line(line);
  const std::vector<std::string> expected = {"task_id", "item_id", "rater_id",
                                             "label"};
  if (header != expected) {
    throw ParseError("ratings CSV header must be task_id,item_id,rater_id,label");
  }
  std::vector<AbsoluteRating> ratings;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = csv::parse_line(line);
    if (fields.size() != 4) {
      throw ParseError("ratings CSV line " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields, expected 4");
    }
    int label = 0;
    try {
      label = std::stoi(fields[3]);
    } catch (const std::exception&) {
      throw ParseError("ratings CSV line " + std::to_string(line_no) +
                       ": bad label \"" + fields[3] + "\"");
    }
    check_label(label);
    if (!seen.insert({fields[0], fields[1], fields[2]}).second) {
      throw ParseError("duplicate rating for (task,item,rater) = (" + fields[0] +
                       "," + fields[1] + "," + fields[2] + ")");
    }
    ratings.push_back({fields[0], fields[1], fields[2], label});
  }
  return ratings;
}

void write_pairwise_csv(std::ostream& out,
                        std::span<const PairwisePreference> prefs) {
  csv::write_row(out, {"task_id", "first", "second", "score"});
  for (const auto& p : prefs) {
    csv::write_row(out, {p.task_id, p.first, p.second, std::to_string(p.score)});
  }
}

void write_means_csv(std::ostream& out, std::span<const PairwisePreference> prefs,
                     std::size_t bootstrap_resamples, std::uint64_t seed) {
  std::vector<std::string> item_order;
  std::set<std::string> seen;
  for (const auto& p : prefs) {
    if (seen.insert(p.first).second) item_order.push_back(p.first);
  }
  csv::write_row(out, {"item_id", "mean", "ci_lo", "ci_hi", "n"});
  for (const auto& item : item_order) {
    const auto summary = mean_preference(prefs, item, bootstrap_resamples, seed);
    csv::write_row(out, {item, csv::format_double(summary.mean),
                         csv::format_double(summary.ci_lo),
                         csv::format_double(summary.ci_hi),
                         std::to_string(summary.n)});
  }
}

}  // namespace declab::ratings
