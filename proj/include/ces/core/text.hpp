#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ces::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool is_blank(std::string_view s);
// Splits on runs of ASCII whitespace; no empty tokens.
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool iequals(std::string_view a, std::string_view b);
std::string replace_all(std::string s, std::string_view from, std::string_view to);

// 64-bit FNV-1a; stable across platforms, used for seeding and fingerprints.
std::uint64_t fnv1a(std::string_view s, std::uint64_t basis = 14695981039346656037ULL);

}  // namespace ces::text
