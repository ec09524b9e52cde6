#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace ragmt {

/// Character tokens (code points), whitespace excluded.
using TokenSeq = std::u32string;

inline constexpr int kBleuMaxOrder = 4;
inline constexpr double kDefaultSmoothingEpsilon = 0.1;

/// NFC-normalizes and emits every non-whitespace code point, case preserved.
TokenSeq tokenize_chars(std::string_view text);

struct BleuScore {
  double score = 0.0;  ///< 0..100
  std::array<double, kBleuMaxOrder> precisions{};
  std::array<std::size_t, kBleuMaxOrder> matches{};
  std::array<std::size_t, kBleuMaxOrder> totals{};  ///< floored denominators
  double bp = 1.0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
  bool smoothing_applied = false;
  double epsilon = kDefaultSmoothingEpsilon;

  nlohmann::json to_json() const;
  static BleuScore from_json(const nlohmann::json& j);
};

/// Sentence BLEU over orders 1-4 with clipped counts and brevity penalty.
/// The denominator for order n is max(|hyp| - n + 1, 1). A zero match count
/// for n >= 2 is replaced by `epsilon`; a zero unigram match gives score 0.
/// Throws if `ref` is empty.
BleuScore sentence_bleu(const TokenSeq& hyp, const TokenSeq& ref,
                        double epsilon = kDefaultSmoothingEpsilon);

/// Arithmetic mean; throws on an empty list.
double macro_average(std::span<const double> scores);

struct Gain {
  double absolute = 0.0;
  double relative_pct = 0.0;
};

/// Change of `mean` against a positive `baseline_mean`.
Gain gains(double mean, double baseline_mean);

/// One row of the size sweep table. The baseline row carries no gains.
struct GainRow {
  std::size_t size = 0;
  double mean_bleu = 0.0;
  std::optional<double> abs_gain;
  std::optional<double> rel_gain_pct;
};

/// "+5.68" / "-0.40"
std::string format_abs_gain(double v);
/// "+23.4%" rounded to one decimal place
std::string format_rel_gain(double pct);
std::string format_fixed(double v, int decimals);

}  // namespace ragmt
