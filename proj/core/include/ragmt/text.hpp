#pragma once

#include <string>
#include <string_view>

// Unicode helpers shared by corpus cleaning, BLEU tokenization and the mock
// encoder. All strings are UTF-8.
namespace ragmt::text {

bool is_valid_utf8(std::string_view s);

/// Canonical composition (NFC). Invalid sequences become U+FFFD.
std::string nfc(std::string_view s);

/// NFC, trim, and collapse every run of Unicode whitespace to one ASCII space.
std::string normalize(std::string_view s);

/// Trims Unicode whitespace from both ends without other changes.
std::string trim(std::string_view s);

std::u32string to_u32(std::string_view s);
std::string to_utf8(std::u32string_view s);
std::string to_utf8(char32_t c);

bool is_space(char32_t c);
bool is_punct(char32_t c);

/// NFC text with all whitespace removed.
std::string strip_space(std::string_view s);
/// NFC text with all whitespace and Unicode punctuation removed.
std::string strip_space_and_punct(std::string_view s);

std::string ascii_lower(std::string_view s);

}  // namespace ragmt::text
