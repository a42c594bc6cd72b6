#pragma once

// Thin ICU wrappers over UTF-8 std::string.

#include <cstddef>
#include <string>
#include <string_view>

#include <unicode/normalizer2.h>
#include <unicode/stringpiece.h>
#include <unicode/unistr.h>

#include "helea/error.hpp"

namespace helea::unicode {

namespace detail {

inline std::string apply(const icu::Normalizer2* norm, std::string_view utf8) {
    UErrorCode status = U_ZERO_ERROR;
    if (norm == nullptr) throw Error("ICU normalizer unavailable");
    const icu::UnicodeString in =
        icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
    icu::UnicodeString out = norm->normalize(in, status);
    if (U_FAILURE(status)) throw Error(std::string("ICU normalization failed: ") + u_errorName(status));
    std::string result;
    out.toUTF8String(result);
    return result;
}

} // namespace detail

// Unicode compatibility composition (NFKC).
inline std::string nfkc(std::string_view utf8) {
    UErrorCode status = U_ZERO_ERROR;
    return detail::apply(icu::Normalizer2::getNFKCInstance(status), utf8);
}

// NFKC followed by full case folding (NFKC_Casefold). Used as the grouping key.
inline std::string nfkc_casefold(std::string_view utf8) {
    UErrorCode status = U_ZERO_ERROR;
    return detail::apply(icu::Normalizer2::getNFKCCasefoldInstance(status), utf8);
}

// Number of code points in a UTF-8 string. Continuation bytes are not counted,
// so invalid sequences degrade to a byte-ish count instead of throwing.
inline std::size_t codepoint_length(std::string_view utf8) {
    std::size_t n = 0;
    for (unsigned char c : utf8) {
        if ((c & 0xC0) != 0x80) ++n;
    }
    return n;
}

} // namespace helea::unicode
