#pragma once

// Lexical number parsing for OCR words. These are the `integer(...)` and
// `float(...)` operators the correction rules apply to untagged words.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "unicode.hpp"

namespace receipt_kie {

struct NumericParseConfig {
  std::vector<char> decimal_separators{'.', ','};
  bool strip_currency = true;        // strip Unicode Sc characters at the ends
  std::string strip_chars = "*#:";   // extra ASCII characters stripped at the ends
  int max_integer_digits = 18;

  void validate() const {
    if (decimal_separators.empty()) {
      throw ContractError("NumericParseConfig: at least one decimal separator required");
    }
    if (max_integer_digits < 1 || max_integer_digits > 18) {
      throw ContractError("NumericParseConfig: max_integer_digits must be in [1,18]");
    }
  }
};

namespace detail {

inline bool strippable(const unicode::CodePoint& cp, const NumericParseConfig& cfg) {
  if (cfg.strip_currency && unicode::is_currency_symbol(cp.value)) return true;
  return cp.value >= 0 && cp.value < 0x80 &&
         cfg.strip_chars.find(static_cast<char>(cp.value)) != std::string::npos;
}

inline std::string_view strip_affixes(std::string_view text, const NumericParseConfig& cfg) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end) {
    const auto cp = unicode::decode_at(text, begin);
    if (!strippable(cp, cfg)) break;
    begin = cp.end;
  }
  while (end > begin) {
    const auto cp = unicode::decode_before(text, end);
    if (!strippable(cp, cfg)) break;
    end = cp.begin;
  }
  return text.substr(begin, end - begin);
}

inline bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace detail

// The integer value iff the (stripped) word is a pure digit string.
inline std::optional<std::int64_t> parse_integer(std::string_view text,
                                                 const NumericParseConfig& cfg = {}) {
  const std::string_view core = detail::strip_affixes(text, cfg);
  if (!detail::all_digits(core) ||
      core.size() > static_cast<std::size_t>(cfg.max_integer_digits)) {
    return std::nullopt;
  }
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(core.data(), core.data() + core.size(), value);
  if (ec != std::errc{} || ptr != core.data() + core.size()) return std::nullopt;
  return value;
}

// The value iff the (stripped) word is digits, exactly one decimal separator,
// and at least one fractional digit. Pure integers are not floats.
inline std::optional<double> parse_float(std::string_view text,
                                         const NumericParseConfig& cfg = {}) {
  const std::string_view core = detail::strip_affixes(text, cfg);
  std::size_t sep_pos = std::string_view::npos;
  for (std::size_t i = 0; i < core.size(); ++i) {
    const bool is_sep = std::find(cfg.decimal_separators.begin(),
                                  cfg.decimal_separators.end(),
                                  core[i]) != cfg.decimal_separators.end();
    if (!is_sep) continue;
    if (sep_pos != std::string_view::npos) return std::nullopt;
    sep_pos = i;
  }
  if (sep_pos == std::string_view::npos) return std::nullopt;
  const std::string_view whole = core.substr(0, sep_pos);
  const std::string_view frac = core.substr(sep_pos + 1);
  if (!detail::all_digits(whole) || !detail::all_digits(frac) ||
      whole.size() > static_cast<std::size_t>(cfg.max_integer_digits)) {
    return std::nullopt;
  }
  std::string canonical;
  canonical.reserve(core.size());
  canonical.append(whole).push_back('.');
  canonical.append(frac);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(canonical.data(), canonical.data() + canonical.size(), value);
  if (ec != std::errc{} || ptr != canonical.data() + canonical.size()) return std::nullopt;
  return value;
}

}  // namespace receipt_kie
