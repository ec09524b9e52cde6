#include "ragmt/bleu.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "ragmt/error.hpp"
#include "ragmt/text.hpp"

namespace ragmt {

using json = nlohmann::json;

TokenSeq tokenize_chars(std::string_view input) {
  TokenSeq out;
  for (char32_t c : text::to_u32(text::nfc(input))) {
    if (!text::is_space(c)) out.push_back(c);
  }
  return out;
}

json BleuScore::to_json() const {
  return {{"score", score},
          {"precisions", precisions},
          {"matches", matches},
          {"totals", totals},
          {"bp", bp},
          {"hyp_len", hyp_len},
          {"ref_len", ref_len},
          {"smoothing_applied", smoothing_applied},
          {"epsilon", epsilon}};
}

BleuScore BleuScore::from_json(const json& j) {
  BleuScore s;
  s.score = j.at("score").get<double>();
  s.precisions = j.at("precisions").get<std::array<double, kBleuMaxOrder>>();
  s.matches = j.value("matches", s.matches);
  s.totals = j.value("totals", s.totals);
  s.bp = j.at("bp").get<double>();
  s.hyp_len = j.at("hyp_len").get<std::size_t>();
  s.ref_len = j.at("ref_len").get<std::size_t>();
  s.smoothing_applied = j.value("smoothing_applied", false);
  s.epsilon = j.value("epsilon", kDefaultSmoothingEpsilon);
  return s;
}

BleuScore sentence_bleu(const TokenSeq& hyp, const TokenSeq& ref, double epsilon) {
  if (ref.empty()) throw InvalidArgument("sentence_bleu: empty reference");
  if (!(epsilon > 0.0)) throw InvalidArgument("sentence_bleu: epsilon must be > 0");

  BleuScore s;
  s.hyp_len = hyp.size();
  s.ref_len = ref.size();
  s.epsilon = epsilon;

  const std::u32string_view h(hyp);
  const std::u32string_view r(ref);
  double log_sum = 0.0;
  bool zero_unigram = false;
  for (int n = 1; n <= kBleuMaxOrder; ++n) {
    const auto order = static_cast<std::size_t>(n);
    const std::size_t idx = order - 1;
    std::map<std::u32string_view, std::size_t> ref_counts;
    for (std::size_t i = 0; i + order <= r.size(); ++i) ++ref_counts[r.substr(i, order)];
    std::map<std::u32string_view, std::size_t> hyp_counts;
    for (std::size_t i = 0; i + order <= h.size(); ++i) ++hyp_counts[h.substr(i, order)];

    std::size_t clipped = 0;
    for (const auto& [gram, count] : hyp_counts) {
      if (auto it = ref_counts.find(gram); it != ref_counts.end()) {
        clipped += std::min(count, it->second);
      }
    }
    const std::size_t total = h.size() >= order ? h.size() - order + 1 : 1;
    s.matches[idx] = clipped;
    s.totals[idx] = total;

    if (clipped == 0 && n == 1) {
      zero_unigram = true;
      s.precisions[idx] = 0.0;
      continue;
    }
    double numerator = static_cast<double>(clipped);
    if (clipped == 0) {
      numerator = epsilon;
      s.smoothing_applied = true;
    }
    s.precisions[idx] = numerator / static_cast<double>(total);
    log_sum += std::log(s.precisions[idx]);
  }

  // Empty hypotheses use c = 1, matching the floored denominators.
  const double c = static_cast<double>(std::max<std::size_t>(s.hyp_len, 1));
  const double rl = static_cast<double>(s.ref_len);
  s.bp = s.hyp_len >= s.ref_len ? 1.0 : std::exp(1.0 - rl / c);
  s.score = zero_unigram ? 0.0 : 100.0 * s.bp * std::exp(log_sum / kBleuMaxOrder);
  return s;
}

double macro_average(std::span<const double> scores) {
  if (scores.empty()) throw InvalidArgument("macro_average: empty score list");
  double sum = 0.0;
  for (double v : scores) sum += v;
  return sum / static_cast<double>(scores.size());
}

Gain gains(double mean, double baseline_mean) {
  if (!(baseline_mean > 0.0)) throw InvalidArgument("gains: baseline mean must be > 0");
  const double abs = mean - baseline_mean;
  return Gain{abs, abs / baseline_mean * 100.0};
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  std::string out(buf);
  if (out.find_first_not_of("-0.") == std::string::npos && out.front() == '-') out.erase(0, 1);
  return out;
}

std::string format_abs_gain(double v) {
  const std::string s = format_fixed(v, 2);
  return s.front() == '-' ? s : "+" + s;
}

std::string format_rel_gain(double pct) {
  const std::string s = format_fixed(pct, 1);
  return (s.front() == '-' ? s : "+" + s) + "%";
}

}  // namespace ragmt
