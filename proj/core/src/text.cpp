#include "ragmt/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace ragmt::text {
namespace {

const icu::Normalizer2& nfc_instance() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) {
    throw std::runtime_error("ICU NFC normalizer unavailable");
  }
  return *n;
}

template <class Fn>
void for_each_code_point(std::string_view s, Fn&& fn) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const auto length = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    fn(c < 0 ? char32_t{0xFFFD} : static_cast<char32_t>(c));
  }
}

}  // namespace

bool is_valid_utf8(std::string_view s) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const auto length = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    if (c < 0) return false;
  }
  return true;
}

std::string nfc(std::string_view s) {
  const auto& normalizer = nfc_instance();
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString in = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  if (normalizer.isNormalized(in, status) && U_SUCCESS(status)) {
    std::string out;
    return in.toUTF8String(out);
  }
  status = U_ZERO_ERROR;
  icu::UnicodeString normalized = normalizer.normalize(in, status);
  if (U_FAILURE(status)) {
    throw std::runtime_error(std::string("NFC normalization failed: ") +
                             u_errorName(status));
  }
  std::string out;
  return normalized.toUTF8String(out);
}

std::string normalize(std::string_view s) {
  const std::string composed = nfc(s);
  std::u32string out;
  bool pending_space = false;
  for_each_code_point(composed, [&](char32_t c) {
    if (is_space(c)) {
      pending_space = !out.empty();
      return;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(c);
  });
  return to_utf8(out);
}

std::string trim(std::string_view s) {
  std::u32string chars = to_u32(s);
  std::size_t begin = 0;
  std::size_t end = chars.size();
  while (begin < end && is_space(chars[begin])) ++begin;
  while (end > begin && is_space(chars[end - 1])) --end;
  return to_utf8(std::u32string_view(chars).substr(begin, end - begin));
}

std::u32string to_u32(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for_each_code_point(s, [&](char32_t c) { out.push_back(c); });
  return out;
}

std::string to_utf8(char32_t c) {
  char buf[U8_MAX_LENGTH];
  int32_t len = 0;
  UBool error = false;
  U8_APPEND(reinterpret_cast<uint8_t*>(buf), len, U8_MAX_LENGTH,
            static_cast<UChar32>(c), error);
  if (error) return "\xEF\xBF\xBD";
  return std::string(buf, static_cast<std::size_t>(len));
}

std::string to_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size() * 3);
  for (char32_t c : s) out += to_utf8(c);
  return out;
}

bool is_space(char32_t c) {
  return u_isUWhiteSpace(static_cast<UChar32>(c)) != 0;
}

bool is_punct(char32_t c) { return u_ispunct(static_cast<UChar32>(c)) != 0; }

std::string strip_space(std::string_view s) {
  std::u32string out;
  for_each_code_point(nfc(s), [&](char32_t c) {
    if (!is_space(c)) out.push_back(c);
  });
  return to_utf8(out);
}

std::string strip_space_and_punct(std::string_view s) {
  std::u32string out;
  for_each_code_point(nfc(s), [&](char32_t c) {
    if (!is_space(c) && !is_punct(c)) out.push_back(c);
  });
  return to_utf8(out);
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace ragmt::text
