// Sentence- and corpus-level BLEU.
#pragma once

#include "seqot/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

namespace seqot {

/// Floor for zero n-gram precisions in sentence BLEU (n >= 2).
inline constexpr double kBleuSmoothing = 1e-9;

namespace detail {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

inline NgramCounts count_ngrams(const std::vector<std::string>& toks, std::size_t n) {
  NgramCounts counts;
  if (toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i)
    ++counts[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                      toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

struct NgramStats {
  std::size_t matched = 0;
  std::size_t total = 0;
};

// Clipped n-gram matches: each hypothesis n-gram counts at most as often as
// its maximum count in any single reference.
inline NgramStats clipped_matches(const std::vector<std::string>& hyp,
                                  const std::vector<std::vector<std::string>>& refs, std::size_t n) {
  const NgramCounts h = count_ngrams(hyp, n);
  NgramCounts max_ref;
  for (const auto& r : refs)
    for (const auto& [g, c] : count_ngrams(r, n)) max_ref[g] = std::max(max_ref[g], c);
  NgramStats s;
  for (const auto& [g, c] : h) {
    s.total += c;
    auto it = max_ref.find(g);
    if (it != max_ref.end()) s.matched += std::min(c, it->second);
  }
  return s;
}

// Reference length closest to the hypothesis length, shorter on ties.
inline std::size_t closest_ref_length(std::size_t hyp_len, const std::vector<std::vector<std::string>>& refs) {
  std::size_t best = refs.front().size();
  for (const auto& r : refs) {
    const auto d = std::llabs(static_cast<long long>(r.size()) - static_cast<long long>(hyp_len));
    const auto bd = std::llabs(static_cast<long long>(best) - static_cast<long long>(hyp_len));
    if (d < bd || (d == bd && r.size() < best)) best = r.size();
  }
  return best;
}

inline double brevity_penalty(double hyp_len, double ref_len) {
  if (hyp_len <= 0) return 0.0;
  return std::exp(std::min(0.0, 1.0 - ref_len / hyp_len));
}

}  // namespace detail

/// Sentence BLEU with n-gram orders 1..max_n and uniform weights. Zero
/// unigram overlap gives 0; zero higher-order precisions are floored at
/// kBleuSmoothing.
inline double bleu_n(const std::vector<std::string>& hypothesis,
                     const std::vector<std::vector<std::string>>& references, int max_n = 4) {
  detail::require(max_n >= 1, "bleu_n: max_n must be >= 1");
  detail::require(!references.empty(), "bleu_n: at least one reference is required");
  if (hypothesis.empty()) return 0.0;

  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const detail::NgramStats s = detail::clipped_matches(hypothesis, references, static_cast<std::size_t>(n));
    if (s.matched == 0) {
      if (n == 1) return 0.0;
      log_sum += std::log(kBleuSmoothing);
    } else {
      log_sum += std::log(static_cast<double>(s.matched) / static_cast<double>(s.total));
    }
  }
  const double r = static_cast<double>(detail::closest_ref_length(hypothesis.size(), references));
  const double bp = detail::brevity_penalty(static_cast<double>(hypothesis.size()), r);
  return std::clamp(bp * std::exp(log_sum / max_n), 0.0, 1.0);
}

/// Corpus BLEU: n-gram statistics and lengths pooled over all segments, no smoothing.
inline double corpus_bleu(const std::vector<std::vector<std::string>>& hypotheses,
                          const std::vector<std::vector<std::vector<std::string>>>& references, int max_n = 4) {
  detail::require(max_n >= 1, "corpus_bleu: max_n must be >= 1");
  detail::require(hypotheses.size() == references.size(), "corpus_bleu: hypothesis/reference count mismatch");
  std::vector<std::size_t> matched(static_cast<std::size_t>(max_n), 0), total(static_cast<std::size_t>(max_n), 0);
  double hyp_len = 0.0, ref_len = 0.0;
  for (std::size_t k = 0; k < hypotheses.size(); ++k) {
    detail::require(!references[k].empty(), "corpus_bleu: segment without reference");
    hyp_len += static_cast<double>(hypotheses[k].size());
    ref_len += static_cast<double>(detail::closest_ref_length(hypotheses[k].size(), references[k]));
    for (int n = 1; n <= max_n; ++n) {
      const auto s = detail::clipped_matches(hypotheses[k], references[k], static_cast<std::size_t>(n));
      matched[static_cast<std::size_t>(n - 1)] += s.matched;
      total[static_cast<std::size_t>(n - 1)] += s.total;
    }
  }
  double log_sum = 0.0;
  for (std::size_t n = 0; n < static_cast<std::size_t>(max_n); ++n) {
    if (matched[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched[n]) / static_cast<double>(total[n]));
  }
  return std::clamp(detail::brevity_penalty(hyp_len, ref_len) * std::exp(log_sum / max_n), 0.0, 1.0);
}

}  // namespace seqot
