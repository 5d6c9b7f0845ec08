#pragma once

#include <string>
#include <string_view>

namespace ces {

struct TaggedOutput {
  std::string think;
  std::string answer;
  bool operator==(const TaggedOutput&) const = default;
};

// 1 iff the trimmed text is exactly one non-blank <think> block followed by
// exactly one non-blank <answer> block, with nothing else around them.
int check_format(std::string_view raw);

// Lenient: bodies of the first think and first answer blocks, trimmed.
// Throws Error(MissingTag) / Error(EmptyBody); the message names the block.
TaggedOutput parse_tagged(std::string_view raw);

std::string wrap_tagged(std::string_view think, std::string_view answer);

}  // namespace ces
