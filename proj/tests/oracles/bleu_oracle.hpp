#pragma once

// Brute-force sentence BLEU over code-point sequences, written without maps:
// an n-gram occurrence in the hypothesis matches when its running count is
// within the reference's count of the same n-gram.

#include <cmath>
#include <cstddef>
#include <string>

namespace oracle {

struct BleuParts {
  double score = 0.0;
  double p[4] = {0, 0, 0, 0};
  double bp = 1.0;
};

inline bool same_gram(const std::u32string& a, std::size_t i, const std::u32string& b, std::size_t j,
                      std::size_t n) {
  for (std::size_t t = 0; t < n; ++t) {
    if (a[i + t] != b[j + t]) return false;
  }
  return true;
}

inline std::size_t occurrences(const std::u32string& hay, const std::u32string& gram_src, std::size_t at,
                               std::size_t n, std::size_t limit) {
  std::size_t c = 0;
  for (std::size_t j = 0; j + n <= hay.size() && j < limit; ++j) {
    if (same_gram(hay, j, gram_src, at, n)) ++c;
  }
  return c;
}

inline BleuParts bleu(const std::u32string& hyp, const std::u32string& ref, double eps) {
  BleuParts out;
  bool zero = false;
  double product = 1.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::size_t matched = 0;
    for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
      const std::size_t seen_so_far = occurrences(hyp, hyp, i, n, i + 1);
      const std::size_t in_ref = occurrences(ref, hyp, i, n, ref.size());
      if (seen_so_far <= in_ref) ++matched;
    }
    const std::size_t denom = hyp.size() + 1 > n ? hyp.size() + 1 - n : 1;
    if (matched == 0 && n == 1) {
      zero = true;
      continue;
    }
    const double num = matched == 0 ? eps : static_cast<double>(matched);
    out.p[n - 1] = num / static_cast<double>(denom);
    product *= out.p[n - 1];
  }
  const double c = hyp.empty() ? 1.0 : static_cast<double>(hyp.size());
  const double r = static_cast<double>(ref.size());
  out.bp = hyp.size() >= ref.size() ? 1.0 : std::exp(1.0 - r / c);
  out.score = zero ? 0.0 : 100.0 * out.bp * std::pow(product, 0.25);
  return out;
}

}  // namespace oracle
