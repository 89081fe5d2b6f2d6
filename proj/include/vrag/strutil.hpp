#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vrag {

// ---------------------------------------------------------------------------
// Hashing / deterministic generation
// ---------------------------------------------------------------------------

/// FNV-1a over the raw bytes. Stable across platforms and runs.
std::uint64_t fnv1a64(std::string_view bytes);

/// SplitMix64 stream; used to derive reproducible mock embeddings.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64();

    /// Uniform double in [0, 1), exact (53 mantissa bits).
    double next_unit();
};

// ---------------------------------------------------------------------------
// Text normalization
// ---------------------------------------------------------------------------

std::string to_lower_ascii(std::string_view s);

/// Collapse runs of ASCII whitespace to a single space and trim both ends.
std::string collapse_whitespace(std::string_view s);

/// Shared answer normalization: case-fold, collapse/trim whitespace and,
/// when strip_trailing_punct is set, drop trailing '.', '!', '?' characters.
std::string normalize_answer(std::string_view s, bool strip_trailing_punct);

/// Decode UTF-8 into code points. Lenient: an invalid byte stands for itself,
/// so arbitrary byte strings still round into a deterministic sequence.
std::vector<char32_t> utf8_decode(std::string_view s);

bool is_valid_utf8(std::string_view s);

/// Split into tokens of alphanumeric code points (ASCII case-folded;
/// non-ASCII code points count as word characters and pass through).
std::vector<std::string> tokenize(std::string_view text);

/// First token of `raw` after case-folding and punctuation-stripping,
/// or "" when there is none.
std::string first_token(std::string_view raw);

bool starts_with_ci(std::string_view s, std::string_view prefix);

/// Case-insensitive (ASCII) substring test.
bool contains_ci(std::string_view haystack, std::string_view needle);

/// Replace every occurrence of `from` with `to`.
std::string replace_all(std::string s, std::string_view from, std::string_view to);

// ---------------------------------------------------------------------------
// Binary <-> text
// ---------------------------------------------------------------------------

std::string base64_encode(const std::uint8_t* data, std::size_t len);
std::string base64_encode(std::string_view bytes);

/// Throws ParseError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Locale-independent formatting with 17 significant digits; the same double
/// always produces the same bytes on every platform.
std::string format_double17(double v);

/// Filesystem-safe name: alphanumerics, '-', '_' kept; everything else -> '_'.
std::string sanitize_filename(std::string_view s);

} // namespace vrag
