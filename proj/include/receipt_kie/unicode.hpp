#pragma once

// Thin ICU wrappers: NFC normalization and currency-symbol classification.

#include <string>
#include <string_view>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "document.hpp"

namespace receipt_kie::unicode {

inline std::string nfc(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    throw Error(std::string("ICU NFC normalizer unavailable: ") +
                u_errorName(status));
  }
  const icu::UnicodeString in = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  icu::UnicodeString out = norm->normalize(in, status);
  if (U_FAILURE(status)) {
    throw Error(std::string("NFC normalization failed: ") +
                u_errorName(status));
  }
  std::string result;
  out.toUTF8String(result);
  return result;
}

// One decoded code point and the byte range it occupied.
struct CodePoint {
  UChar32 value;
  std::size_t begin;
  std::size_t end;
};

// Decodes the first code point at or after `pos`. Ill-formed sequences decode
// to U+FFFD-like negative values, which are never currency symbols.
inline CodePoint decode_at(std::string_view s, std::size_t pos) {
  int32_t i = static_cast<int32_t>(pos);
  const auto len = static_cast<int32_t>(s.size());
  UChar32 c = 0;
  U8_NEXT(reinterpret_cast<const uint8_t*>(s.data()), i, len, c);
  return {c, pos, static_cast<std::size_t>(i)};
}

// Decodes the code point that ends right before `end`.
inline CodePoint decode_before(std::string_view s, std::size_t end) {
  int32_t i = static_cast<int32_t>(end);
  UChar32 c = 0;
  U8_PREV(reinterpret_cast<const uint8_t*>(s.data()), 0, i, c);
  return {c, static_cast<std::size_t>(i), end};
}

inline bool is_currency_symbol(UChar32 c) {
  return c >= 0 && u_charType(c) == U_CURRENCY_SYMBOL;
}

inline bool is_alphabetic(UChar32 c) { return c >= 0 && u_isalpha(c); }

inline std::size_t code_point_count(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < s.size(); pos = decode_at(s, pos).end) ++n;
  return n;
}

}  // namespace receipt_kie::unicode
