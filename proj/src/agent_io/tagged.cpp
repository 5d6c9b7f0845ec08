#include "ces/agent_io/tagged.hpp"

#include <array>

#include "ces/core/error.hpp"
#include "ces/core/text.hpp"

namespace ces {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

bool has_any_tag(std::string_view body) {
  constexpr std::array<std::string_view, 4> tags{kThinkOpen, kThinkClose, kAnswerOpen,
                                                 kAnswerClose};
  for (auto tag : tags) {
    if (body.find(tag) != std::string_view::npos) return true;
  }
  return false;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// Consumes "<open>body</close>" from the front of s; body must be non-blank
// and tag-free.
bool take_block(std::string_view& s, std::string_view open, std::string_view close) {
  if (!starts_with(s, open)) return false;
  s.remove_prefix(open.size());
  const auto end = s.find(close);
  if (end == std::string_view::npos) return false;
  const auto body = s.substr(0, end);
  if (text::is_blank(body) || has_any_tag(body)) return false;
  s.remove_prefix(end + close.size());
  return true;
}

std::string extract(std::string_view raw, std::string_view open, std::string_view close,
                    const char* which) {
  const auto start = raw.find(open);
  if (start == std::string_view::npos) {
    throw Error(Errc::MissingTag, std::string("missing <") + which + "> block");
  }
  const auto body_start = start + open.size();
  const auto end = raw.find(close, body_start);
  if (end == std::string_view::npos) {
    throw Error(Errc::MissingTag, std::string("missing </") + which + "> closing tag");
  }
  const auto body = text::trim(raw.substr(body_start, end - body_start));
  if (body.empty()) throw Error(Errc::EmptyBody, std::string("empty <") + which + "> body");
  return std::string(body);
}

}  // namespace

int check_format(std::string_view raw) {
  std::string_view s = text::trim(raw);
  if (!take_block(s, kThinkOpen, kThinkClose)) return 0;
  s = text::trim(s);
  if (!take_block(s, kAnswerOpen, kAnswerClose)) return 0;
  return s.empty() ? 1 : 0;
}

TaggedOutput parse_tagged(std::string_view raw) {
  TaggedOutput out;
  out.think = extract(raw, kThinkOpen, kThinkClose, "think");
  out.answer = extract(raw, kAnswerOpen, kAnswerClose, "answer");
  return out;
}

std::string wrap_tagged(std::string_view think, std::string_view answer) {
  std::string out;
  out.append(kThinkOpen).append(think).append(kThinkClose);
  out.append(kAnswerOpen).append(answer).append(kAnswerClose);
  return out;
}

}  // namespace ces
