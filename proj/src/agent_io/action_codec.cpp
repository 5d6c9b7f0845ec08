#include "ces/agent_io/action_codec.hpp"

#include <cctype>
#include <cmath>
#include <map>
#include <sstream>
#include <variant>
#include <vector>

#include "ces/agent_io/tagged.hpp"
#include "ces/core/error.hpp"
#include "ces/core/text.hpp"

namespace ces {

namespace {

// Values in the answer record: strings, numbers, bare words, and lists.
struct Value;
using ValueList = std::vector<Value>;
struct Value {
  enum class Kind { String, Number, Word, List } kind = Kind::String;
  std::string text;
  double number = 0.0;
  ValueList items;
};

[[noreturn]] void malformed(const std::string& what) {
  throw Error(Errc::MalformedRecord, "answer record: " + what);
}

class RecordParser {
 public:
  explicit RecordParser(std::string_view src) : s_(src) {}

  std::map<std::string, Value> parse() {
    skip_ws();
    char close = 0;
    if (peek() == '[' || peek() == '{') {
      close = peek() == '[' ? ']' : '}';
      ++pos_;
    }
    std::map<std::string, Value> out;
    skip_ws();
    while (!at_end() && peek() != close) {
      std::string key = text::to_lower(parse_key());
      skip_ws();
      if (peek() != ':') malformed("expected ':' after key '" + key + "'");
      ++pos_;
      skip_ws();
      Value v = parse_value();
      if (key == "text") key = "input_text";
      if (!out.emplace(key, std::move(v)).second) malformed("duplicate key '" + key + "'");
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        skip_ws();
      } else {
        break;
      }
    }
    skip_ws();
    if (close) {
      if (peek() != close) malformed(std::string("expected '") + close + "'");
      ++pos_;
      skip_ws();
    }
    if (!at_end()) malformed("trailing characters");
    return out;
  }

 private:
  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return at_end() ? '\0' : s_[pos_]; }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  static bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  std::string parse_string() {
    const char quote = s_[pos_++];
    std::string out;
    while (!at_end()) {
      const char c = s_[pos_++];
      if (c == quote) return out;
      if (c == '\\') {
        if (at_end()) break;
        const char e = s_[pos_++];
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          default: out.push_back(e); break;
        }
      } else {
        out.push_back(c);
      }
    }
    malformed("unterminated string");
  }

  std::string parse_key() {
    if (peek() == '\'' || peek() == '"') return parse_string();
    const auto start = pos_;
    while (!at_end() && is_word_char(peek())) ++pos_;
    if (pos_ == start) malformed("expected key");
    return std::string(s_.substr(start, pos_ - start));
  }

  Value parse_value() {
    Value v;
    const char c = peek();
    if (c == '\'' || c == '"') {
      v.kind = Value::Kind::String;
      v.text = parse_string();
    } else if (c == '[') {
      ++pos_;
      v.kind = Value::Kind::List;
      skip_ws();
      while (!at_end() && peek() != ']') {
        v.items.push_back(parse_value());
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          skip_ws();
        } else {
          break;
        }
      }
      if (peek() != ']') malformed("unterminated list");
      ++pos_;
    } else if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c))) {
      const auto start = pos_;
      ++pos_;
      while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.' ||
                           peek() == 'e' || peek() == 'E')) {
        ++pos_;
      }
      const std::string num(s_.substr(start, pos_ - start));
      try {
        std::size_t used = 0;
        v.number = std::stod(num, &used);
        if (used != num.size()) malformed("bad number '" + num + "'");
      } catch (const std::logic_error&) {
        malformed("bad number '" + num + "'");
      }
      v.kind = Value::Kind::Number;
    } else if (is_word_char(c)) {
      const auto start = pos_;
      while (!at_end() && (is_word_char(peek()) || peek() == ' ')) ++pos_;
      v.kind = Value::Kind::Word;
      v.text = std::string(text::trim(s_.substr(start, pos_ - start)));
    } else {
      malformed(std::string("unexpected character '") + c + "'");
    }
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string normalize_action_name(std::string_view name) {
  std::string out;
  for (char c : text::to_lower(text::trim(name))) {
    if (c == '_' || c == '-') c = ' ';
    if (c == ' ' && (out.empty() || out.back() == ' ')) continue;
    out.push_back(c);
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::optional<ActionType> action_from_prompt_name(std::string_view name) {
  const std::string n = normalize_action_name(name);
  for (ActionType t : kAllActionTypes) {
    if (action_prompt_name(t) == n) return t;
  }
  if (n == "longpress") return ActionType::LongPress;
  if (n == "type text") return ActionType::TypeText;
  if (n == "press enter") return ActionType::Enter;
  if (n == "status complete" || n == "status task complete") return ActionType::Complete;
  if (n == "status impossible" || n == "status task impossible") return ActionType::Close;
  return std::nullopt;
}

std::optional<std::string> text_value(const std::map<std::string, Value>& rec, const char* key) {
  auto it = rec.find(key);
  if (it == rec.end()) return std::nullopt;
  const Value& v = it->second;
  if (v.kind == Value::Kind::String || v.kind == Value::Kind::Word) return v.text;
  if (v.kind == Value::Kind::Number) {
    std::ostringstream os;
    os << v.number;
    return os.str();
  }
  malformed(std::string("'") + key + "' must be text");
}

int as_int(const Value& v) {
  if (v.kind != Value::Kind::Number) malformed("point coordinates must be numbers");
  if (v.number != std::floor(v.number) || std::abs(v.number) > 1e9) {
    malformed("point coordinates must be integers");
  }
  return static_cast<int>(v.number);
}

[[noreturn]] void missing(ActionType kind, const char* param) {
  throw Error(Errc::MissingParam, std::string(to_string(kind)) + " requires " + param);
}

void quote_into(std::ostringstream& os, std::string_view s) {
  os << '\'';
  for (char c : s) {
    if (c == '\'' || c == '\\') os << '\\';
    if (c == '\n') {
      os << "\\n";
      continue;
    }
    if (c == '\t') {
      os << "\\t";
      continue;
    }
    os << c;
  }
  os << '\'';
}

}  // namespace

std::string_view action_prompt_name(ActionType type) {
  switch (type) {
    case ActionType::Complete: return "complete";
    case ActionType::Close: return "close";
    case ActionType::PressHome: return "press home";
    case ActionType::Click: return "click";
    case ActionType::PressBack: return "press back";
    case ActionType::TypeText: return "type";
    case ActionType::Select: return "select";
    case ActionType::Scroll: return "scroll";
    case ActionType::Enter: return "enter";
    case ActionType::LongPress: return "long press";
  }
  return "complete";
}

std::optional<ActionType> parse_action_name(std::string_view name) {
  return action_from_prompt_name(name);
}

Action parse_executor_answer(std::string_view answer, ScreenSize screen) {
  const auto rec = RecordParser(answer).parse();
  const auto name = text_value(rec, "action");
  if (!name) malformed("missing 'action'");
  const auto kind = action_from_prompt_name(*name);
  if (!kind) throw Error(Errc::UnknownAction, "unknown action '" + *name + "'");

  std::optional<std::string> input = text_value(rec, "input_text");
  if (input && text::iequals(text::trim(*input), kNoInputText)) input.reset();

  Action a = Action::simple(*kind);
  if (is_point_bearing(*kind)) {
    auto it = rec.find("point");
    if (it == rec.end()) missing(*kind, "point");
    const Value& v = it->second;
    if (v.kind != Value::Kind::List || v.items.size() != 2) malformed("point must be [x, y]");
    const Point p{as_int(v.items[0]), as_int(v.items[1])};
    if (p.x < 0 || p.y < 0 || (screen.known() && (p.x >= screen.width || p.y >= screen.height))) {
      std::ostringstream os;
      os << "point (" << p.x << ", " << p.y << ") outside screen";
      throw Error(Errc::PointOutOfBounds, os.str());
    }
    a.point = p;
  } else if (*kind == ActionType::TypeText) {
    if (!input) missing(*kind, "input_text");
    a.input_text = *input;
  } else if (*kind == ActionType::Scroll) {
    std::optional<std::string> dir_text = text_value(rec, "direction");
    if (!dir_text) dir_text = input;
    if (!dir_text) missing(*kind, "direction");
    const auto dir = direction_from_string(*dir_text);
    if (!dir) missing(*kind, "direction (up/down/left/right)");
    a.direction = *dir;
  }
  return a;
}

Action parse_executor_answer(std::string_view answer, const Observation& screen) {
  return parse_executor_answer(answer, screen.size());
}

std::string format_executor_answer(const Action& a) {
  std::ostringstream os;
  os << "['action': '" << action_prompt_name(a.kind) << "'";
  if (a.point) os << ", 'point': [" << a.point->x << ", " << a.point->y << "]";
  os << ", 'input_text': ";
  if (a.kind == ActionType::TypeText && a.input_text) {
    quote_into(os, *a.input_text);
  } else if (a.kind == ActionType::Scroll && a.direction) {
    quote_into(os, to_string(*a.direction));
  } else {
    quote_into(os, kNoInputText);
  }
  os << "]";
  return os.str();
}

ExecutorOutput parse_executor_output(std::string_view raw, ScreenSize screen) {
  ExecutorOutput out;
  out.raw = std::string(raw);
  try {
    const auto tagged = parse_tagged(raw);
    out.think = tagged.think;
    out.action = parse_executor_answer(tagged.answer, screen);
    out.parse_ok = true;
  } catch (const Error& e) {
    out.action.reset();
    out.parse_ok = false;
    out.error = e.what();
  }
  return out;
}

std::string canonical_executor_output(std::string_view instruction, const Action& action) {
  std::string think = "The command is '" + std::string(instruction) + "'. I will perform " +
                      describe(action) + ".";
  return wrap_tagged(think, format_executor_answer(action));
}

}  // namespace ces
