#include <cctype>
#include <cstdint>
#include <string>
#include <vector>

#include "kbts/agent.hpp"
#include "kbts/text.hpp"

namespace kbts::agent {

namespace {

constexpr std::string_view kRulesClass = "kb-rules";

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

int digit_value(char c, bool hex) {
  const auto u = static_cast<unsigned char>(c);
  if (std::isdigit(u)) return c - '0';
  if (hex && std::isxdigit(u)) return std::tolower(u) - 'a' + 10;
  return -1;
}

struct Tag {
  std::string name;  // lower-case
  bool closing = false;
  std::string class_attr;
};

// Parses the tag starting at html[pos] == '<'. On success returns the index
// just past '>' (or the end of input for a truncated tag).
std::optional<std::size_t> parse_tag(std::string_view html, std::size_t pos, Tag& tag) {
  std::size_t i = pos + 1;
  if (i < html.size() && html[i] == '/') {
    tag.closing = true;
    ++i;
  }
  const std::size_t name_start = i;
  while (i < html.size() && (std::isalnum(static_cast<unsigned char>(html[i])) ||
                             html[i] == '-' || html[i] == ':')) {
    ++i;
  }
  if (i == name_start || !std::isalpha(static_cast<unsigned char>(html[name_start]))) {
    return std::nullopt;
  }
  tag.name = lower(html.substr(name_start, i - name_start));

  while (i < html.size() && html[i] != '>') {
    if (is_space(html[i]) || html[i] == '/') {
      ++i;
      continue;
    }
    const std::size_t attr_start = i;
    while (i < html.size() && !is_space(html[i]) && html[i] != '=' && html[i] != '>' &&
           html[i] != '/') {
      ++i;
    }
    const std::string_view attr = html.substr(attr_start, i - attr_start);
    while (i < html.size() && is_space(html[i])) ++i;
    std::string_view value;
    if (i < html.size() && html[i] == '=') {
      ++i;
      while (i < html.size() && is_space(html[i])) ++i;
      if (i < html.size() && (html[i] == '"' || html[i] == '\'')) {
        const char quote = html[i++];
        const std::size_t v0 = i;
        while (i < html.size() && html[i] != quote) ++i;
        value = html.substr(v0, i - v0);
        if (i < html.size()) ++i;
      } else {
        const std::size_t v0 = i;
        while (i < html.size() && !is_space(html[i]) && html[i] != '>') ++i;
        value = html.substr(v0, i - v0);
      }
    }
    if (iequals(attr, "class")) tag.class_attr = std::string(value);
  }
  return i < html.size() ? i + 1 : html.size();
}

bool has_class_token(std::string_view classes, std::string_view token) {
  std::size_t i = 0;
  while (i < classes.size()) {
    while (i < classes.size() && is_space(classes[i])) ++i;
    const std::size_t start = i;
    while (i < classes.size() && !is_space(classes[i])) ++i;
    if (classes.substr(start, i - start) == token) return true;
  }
  return false;
}

class TableState {
 public:
  explicit TableState(bool rules_table) : rules_table_(rules_table) {}

  bool rules_table() const { return rules_table_; }

  void open_row(Extraction& out) {
    close_row(out);
    in_row_ = true;
  }

  void open_cell(Extraction& out) {
    if (!in_row_) open_row(out);
    close_cell();
    in_cell_ = true;
  }

  void close_cell() {
    if (!in_cell_) return;
    cells_.push_back(normalize(decode_entities(cell_text_)));
    cell_text_.clear();
    in_cell_ = false;
  }

  void close_row(Extraction& out) {
    if (!in_row_) return;
    close_cell();
    in_row_ = false;
    std::vector<std::string> cells = std::move(cells_);
    cells_.clear();
    if (!rules_table_ || rows_seen_++ == 0) return;
    if (cells.size() < 4) {
      ++out.malformed;
      return;
    }
    for (std::size_t i = 0; i < 4; ++i) {
      if (cells[i].empty()) {
        ++out.malformed;
        return;
      }
    }
    out.candidates.push_back(Candidate{cells[0], cells[1], cells[2], cells[3]});
  }

  void text(std::string_view t) {
    if (in_cell_) cell_text_.append(t);
  }

 private:
  bool rules_table_;
  bool in_row_ = false;
  bool in_cell_ = false;
  std::size_t rows_seen_ = 0;
  std::vector<std::string> cells_;
  std::string cell_text_;
};

}  // namespace

std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '&') {
      out.push_back(text[i++]);
      continue;
    }
    const std::size_t semi = text.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back(text[i++]);
      continue;
    }
    const std::string_view body = text.substr(i + 1, semi - i - 1);
    bool decoded = true;
    if (body == "amp") {
      out.push_back('&');
    } else if (body == "lt") {
      out.push_back('<');
    } else if (body == "gt") {
      out.push_back('>');
    } else if (body == "quot") {
      out.push_back('"');
    } else if (body == "apos") {
      out.push_back('\'');
    } else if (body == "nbsp") {
      out.push_back(' ');
    } else if (body.size() > 1 && body[0] == '#') {
      const bool hex = body[1] == 'x' || body[1] == 'X';
      const std::string_view digits = body.substr(hex ? 2 : 1);
      std::uint32_t cp = 0;
      decoded = !digits.empty();
      for (char c : digits) {
        const int v = digit_value(c, hex);
        if (v < 0) {
          decoded = false;
          break;
        }
        cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(v);
        if (cp > 0x10FFFF) cp = 0x110000;  // saturate; replaced below
      }
      if (decoded) append_utf8(out, cp);
    } else {
      decoded = false;
    }
    if (decoded) {
      i = semi + 1;
    } else {
      out.push_back(text[i++]);
    }
  }
  return out;
}

Extraction extract_rules(std::string_view html) {
  Extraction out;
  std::vector<TableState> tables;
  std::size_t i = 0;

  auto flush_text = [&](std::string_view t) {
    if (!tables.empty()) tables.back().text(t);
  };

  while (i < html.size()) {
    if (html[i] != '<') {
      const std::size_t next = html.find('<', i);
      const std::size_t end = next == std::string_view::npos ? html.size() : next;
      flush_text(html.substr(i, end - i));
      i = end;
      continue;
    }
    if (html.substr(i, 4) == "<!--") {
      const std::size_t close = html.find("-->", i + 4);
      i = close == std::string_view::npos ? html.size() : close + 3;
      continue;
    }
    if (i + 1 < html.size() && (html[i + 1] == '!' || html[i + 1] == '?')) {
      const std::size_t close = html.find('>', i);
      i = close == std::string_view::npos ? html.size() : close + 1;
      continue;
    }
    Tag tag;
    auto after = parse_tag(html, i, tag);
    if (!after) {
      flush_text(html.substr(i, 1));
      ++i;
      continue;
    }
    i = *after;

    if (!tag.closing && (tag.name == "script" || tag.name == "style")) {
      const std::string closer = "</" + tag.name;
      std::size_t j = i;
      while (j < html.size() && !iequals(html.substr(j, closer.size()), closer)) ++j;
      const std::size_t gt = html.find('>', j);
      i = gt == std::string_view::npos ? html.size() : gt + 1;
      continue;
    }

    if (tag.name == "table") {
      if (!tag.closing) {
        tables.emplace_back(has_class_token(tag.class_attr, kRulesClass));
      } else if (!tables.empty()) {
        tables.back().close_row(out);
        tables.pop_back();
      }
      continue;
    }
    if (tables.empty()) continue;
    TableState& table = tables.back();
    if (tag.name == "tr") {
      if (tag.closing) {
        table.close_row(out);
      } else {
        table.open_row(out);
      }
    } else if (tag.name == "td" || tag.name == "th") {
      if (tag.closing) {
        table.close_cell();
      } else {
        table.open_cell(out);
      }
    } else if (tag.name == "br" || tag.name == "p" || tag.name == "div" ||
               tag.name == "li") {
      table.text(" ");
    }
  }
  while (!tables.empty()) {
    tables.back().close_row(out);
    tables.pop_back();
  }
  return out;
}

}  // namespace kbts::agent
