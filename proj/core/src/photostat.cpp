#include "pnr/photostat.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <boost/math/special_functions/gamma.hpp>

#include "json_util.hpp"
#include "pnr/errors.hpp"
#include "pnr/numeric.hpp"

namespace pnr {

using detail::json;

std::uint64_t NumberDistribution::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

double NumberDistribution::mean() const {
  const auto t = total();
  if (t == 0) return 0.0;
  double s = 0.0;
  for (std::size_t n = 0; n < counts.size(); ++n) s += static_cast<double>(n) * static_cast<double>(counts[n]);
  return s / static_cast<double>(t);
}

NumberDistribution number_distribution(std::span<const PhotonRecord> records, int n_max, bool aggregate_top) {
  if (n_max < 1) throw DomainError("n_max must be >= 1");
  NumberDistribution d;
  d.aggregate_top = aggregate_top;
  d.counts.assign(static_cast<std::size_t>(n_max) + 1, 0);
  for (const auto& r : records) {
    if (r.n > n_max && !aggregate_top) {
      throw DomainError("photon number " + std::to_string(r.n) + " exceeds n_max without top aggregation");
    }
    ++d.counts[static_cast<std::size_t>(std::min(r.n, n_max))];
  }
  return d;
}

double poisson_pmf(int n, double mu) {
  if (n < 0) return 0.0;
  if (mu == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(-mu + n * std::log(mu) - std::lgamma(n + 1.0));
}

double poisson_upper_tail(int n, double mu) {
  if (n <= 0) return 1.0;
  if (mu == 0.0) return 0.0;
  // P(N >= n) equals the regularized lower incomplete gamma P(n, mu).
  return boost::math::gamma_p(static_cast<double>(n), mu);
}

namespace {

std::vector<double> category_probs(double mu, int top) {
  std::vector<double> p(static_cast<std::size_t>(top) + 1);
  for (int c = 0; c < top; ++c) p[c] = poisson_pmf(c, mu);
  p[top] = poisson_upper_tail(top, mu);
  return p;
}

double log_likelihood(const std::vector<double>& obs, double mu, int top) {
  const auto p = category_probs(mu, top);
  double ll = 0.0;
  for (std::size_t c = 0; c < obs.size(); ++c) {
    if (obs[c] == 0.0) continue;
    if (!(p[c] > 0.0)) return -std::numeric_limits<double>::infinity();
    ll += obs[c] * std::log(p[c]);
  }
  return ll;
}

}  // namespace

std::string PoissonFit::to_json() const {
  return json{{"mu", mu},
              {"std_error", std_error},
              {"ci95", {ci_low, ci_high}},
              {"log_likelihood", log_likelihood},
              {"top_category", top_category},
              {"observed", observed},
              {"expected", expected},
              {"chi_square_pearson", chi_square_pearson},
              {"chi_square_neyman", chi_square_neyman},
              {"degrees_of_freedom", degrees_of_freedom},
              {"reduced_chi_square", reduced_chi_square}}
      .dump(2);
}

PoissonFit fit_poisson_mu(const NumberDistribution& dist, int top_category) {
  const int top = top_category;
  if (top < 1) throw DomainError("top category must be >= 1");
  if (dist.aggregate_top && dist.n_max() < top) {
    throw DomainError("distribution aggregates above n=" + std::to_string(dist.n_max()) +
                      ", below the top category " + std::to_string(top));
  }
  PoissonFit fit;
  fit.top_category = top;
  fit.observed.assign(static_cast<std::size_t>(top) + 1, 0.0);
  for (std::size_t n = 0; n < dist.counts.size(); ++n) {
    fit.observed[std::min<std::size_t>(n, static_cast<std::size_t>(top))] += static_cast<double>(dist.counts[n]);
  }
  const double total = std::accumulate(fit.observed.begin(), fit.observed.end(), 0.0);
  if (total < 100.0) {
    throw InsufficientDataError("Poisson fit needs at least 100 counts (have " +
                                std::to_string(static_cast<std::uint64_t>(total)) + ")");
  }
  if (fit.observed[top] == total) {
    throw UnboundedEstimateError("all counts fall in the top category; the likelihood grows without bound");
  }
  fit.degrees_of_freedom = top - 1;

  if (fit.observed[0] == total) {
    fit.mu = 0.0;
  } else {
    double m = 0.0;
    for (int c = 0; c <= top; ++c) m += c * fit.observed[c];
    m /= total;
    auto nll = [&](double mu) { return -log_likelihood(fit.observed, mu, top); };
    double lo = m / 4.0, hi = 4.0 * m;
    ScalarMinimum best = golden_section_minimize(nll, lo, hi, 1e-11 * hi);
    // The censored mean underestimates mu; widen if the optimum sits on the edge.
    for (int i = 0; i < 20 && hi - best.x < 1e-6 * hi; ++i) {
      lo = best.x;
      hi *= 4.0;
      best = golden_section_minimize(nll, lo, hi, 1e-11 * hi);
    }
    fit.mu = best.x;
    const double h = 1e-4 * fit.mu;
    const double curv = (nll(fit.mu + h) - 2.0 * nll(fit.mu) + nll(fit.mu - h)) / (h * h);
    fit.std_error = curv > 0.0 ? 1.0 / std::sqrt(curv) : std::numeric_limits<double>::infinity();
  }
  fit.ci_low = std::max(0.0, fit.mu - 1.959963984540054 * fit.std_error);
  fit.ci_high = fit.mu + 1.959963984540054 * fit.std_error;
  fit.log_likelihood = log_likelihood(fit.observed, fit.mu, top);

  const auto p = category_probs(fit.mu, top);
  fit.expected.resize(p.size());
  for (std::size_t c = 0; c < p.size(); ++c) {
    const double e = total * p[c];
    const double o = fit.observed[c];
    fit.expected[c] = e;
    if (e > 0.0) fit.chi_square_pearson += (o - e) * (o - e) / e;
    if (o > 0.0) fit.chi_square_neyman += (o - e) * (o - e) / o;
  }
  fit.reduced_chi_square = fit.chi_square_pearson / std::max(1, fit.degrees_of_freedom);
  return fit;
}

std::uint64_t JointDistribution::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), std::uint64_t{0});
  return t;
}

NumberDistribution JointDistribution::marginal_a() const {
  NumberDistribution d;
  d.counts.assign(static_cast<std::size_t>(n_max) + 1, 0);
  for (int a = 0; a <= n_max; ++a) {
    for (int b = 0; b <= n_max; ++b) d.counts[a] += counts[a][b];
  }
  return d;
}

NumberDistribution JointDistribution::marginal_b() const {
  NumberDistribution d;
  d.counts.assign(static_cast<std::size_t>(n_max) + 1, 0);
  for (int a = 0; a <= n_max; ++a) {
    for (int b = 0; b <= n_max; ++b) d.counts[b] += counts[a][b];
  }
  return d;
}

std::string JointDistribution::to_json() const {
  return json{{"n_max", n_max},
              {"top_aggregated", true},
              {"coincidence_window_ps", coincidence_window_ps},
              {"total", total()},
              {"counts", counts},
              {"two_photon",
               {{"2,0", counts[2][0]}, {"1,1", counts[1][1]}, {"0,2", counts[0][2]}}}}
      .dump(2);
}

void JointDistribution::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "n_a\\n_b";
  for (int b = 0; b <= n_max; ++b) out << ',' << b;
  out << '\n';
  for (int a = 0; a <= n_max; ++a) {
    out << a;
    for (auto v : counts[a]) out << ',' << v;
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

JointDistribution build_jpnd(std::span<const PhotonRecord> records_a, std::span<const PhotonRecord> records_b,
                             double window_ps, int n_max) {
  if (n_max < 2) throw DomainError("joint distribution needs n_max >= 2");
  std::unordered_map<std::uint64_t, int> b_by_trigger;
  b_by_trigger.reserve(records_b.size());
  for (const auto& r : records_b) {
    if (!b_by_trigger.emplace(r.trigger_index, r.n).second) {
      throw AlignmentError("duplicate trigger index " + std::to_string(r.trigger_index) + " in second record set",
                           {r.trigger_index});
    }
  }
  JointDistribution j;
  j.n_max = n_max;
  j.coincidence_window_ps = window_ps;
  j.counts.assign(n_max + 1, std::vector<std::uint64_t>(n_max + 1, 0));
  std::vector<std::uint64_t> missing;
  std::size_t matched = 0;
  for (const auto& r : records_a) {
    const auto it = b_by_trigger.find(r.trigger_index);
    if (it == b_by_trigger.end()) {
      missing.push_back(r.trigger_index);
      continue;
    }
    ++matched;
    ++j.counts[std::min(r.n, n_max)][std::min(it->second, n_max)];
  }
  if (matched != records_b.size()) {
    std::unordered_map<std::uint64_t, bool> in_a;
    for (const auto& r : records_a) in_a[r.trigger_index] = true;
    for (const auto& r : records_b) {
      if (!in_a.count(r.trigger_index)) missing.push_back(r.trigger_index);
    }
  }
  if (!missing.empty() || records_a.size() != records_b.size()) {
    std::sort(missing.begin(), missing.end());
    std::string msg = "record sets cover different triggers: " + std::to_string(missing.size()) + " unmatched";
    if (!missing.empty()) msg += " (first " + std::to_string(missing.front()) + ")";
    throw AlignmentError(msg, missing);
  }
  return j;
}

std::string EfficiencyEstimate::to_json() const {
  return json{{"eta_a", eta_a},           {"eta_b", eta_b},         {"eta_a_error", eta_a_error},
              {"eta_b_error", eta_b_error}, {"coincidences", coincidences}, {"singles_a", singles_a},
              {"singles_b", singles_b}}
      .dump(2);
}

EfficiencyEstimate estimate_efficiency(const JointDistribution& split) {
  EfficiencyEstimate e;
  e.coincidences = split.at(1, 1);
  for (int a = 0; a <= split.n_max; ++a) {
    for (int b = 0; b <= split.n_max; ++b) {
      if (a >= 1) e.singles_a += split.at(a, b);
      if (b >= 1) e.singles_b += split.at(a, b);
    }
  }
  if (e.singles_a == 0 || e.singles_b == 0) {
    throw InsufficientDataError("efficiency estimate needs detections on both channels");
  }
  const double c = static_cast<double>(e.coincidences);
  const double sa = static_cast<double>(e.singles_a), sb = static_cast<double>(e.singles_b);
  e.eta_a = c / sb;
  e.eta_b = c / sa;
  e.eta_a_error = std::sqrt(e.eta_a * (1.0 - e.eta_a) / sb);
  e.eta_b_error = std::sqrt(e.eta_b * (1.0 - e.eta_b) / sa);
  return e;
}

std::string HomContrast::to_json() const {
  return json{{"noon", {{"2,0", noon_20}, {"0,2", noon_02}, {"1,1", noon_11}, {"triggers", noon_triggers}}},
              {"split", {{"2,0", split_20}, {"0,2", split_02}, {"1,1", split_11}, {"triggers", split_triggers}}},
              {"suppression_ratio", ratio},
              {"suppression_ratio_error", ratio_error}}
      .dump(2);
}

HomContrast hom_contrast(const JointDistribution& noon, const JointDistribution& split) {
  if (noon.n_max != split.n_max) throw DomainError("joint distributions use different n_max");
  HomContrast h;
  h.noon_20 = noon.at(2, 0);
  h.noon_02 = noon.at(0, 2);
  h.noon_11 = noon.at(1, 1);
  h.split_20 = split.at(2, 0);
  h.split_02 = split.at(0, 2);
  h.split_11 = split.at(1, 1);
  h.noon_triggers = noon.total();
  h.split_triggers = split.total();
  if (h.split_11 == 0) throw UndefinedRatioError("split configuration has no (1,1) events");
  const double rn = static_cast<double>(h.noon_11) / static_cast<double>(h.noon_triggers);
  const double rs = static_cast<double>(h.split_11) / static_cast<double>(h.split_triggers);
  h.ratio = rn / rs;
  h.ratio_error = h.ratio * std::sqrt(1.0 / std::max<double>(1.0, static_cast<double>(h.noon_11)) +
                                      1.0 / static_cast<double>(h.split_11));
  if (h.noon_11 == 0) h.ratio_error = (1.0 / static_cast<double>(h.noon_triggers)) / rs;
  return h;
}

void write_distribution_csv(const std::string& path, const NumberDistribution& dist, const PoissonFit* fit) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.precision(10);
  out << "n,count,fraction" << (fit ? ",poisson_expected" : "") << '\n';
  const double total = static_cast<double>(dist.total());
  for (int n = 0; n <= dist.n_max(); ++n) {
    out << n << ',' << dist.counts[n] << ',' << (total > 0 ? dist.counts[n] / total : 0.0);
    if (fit) {
      const bool tail = dist.aggregate_top && n == dist.n_max();
      out << ',' << total * (tail ? poisson_upper_tail(n, fit->mu) : poisson_pmf(n, fit->mu));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace pnr
