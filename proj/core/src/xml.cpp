#include "xml.hpp"

#include "spherepack/errors.hpp"

#include <cctype>
#include <charconv>

namespace spherepack::xml {

const std::string* Element::attribute(std::string_view key) const {
  for (const Attribute& a : attributes) {
    if (a.name == key) return &a.value;
  }
  return nullptr;
}

std::vector<const Element*> Element::children_named(std::string_view key) const {
  std::vector<const Element*> out;
  for (const Element& c : children) {
    if (c.name == key) out.push_back(&c);
  }
  return out;
}

const Element* Element::first_child(std::string_view key) const {
  for (const Element& c : children) {
    if (c.name == key) return &c;
  }
  return nullptr;
}

namespace {

bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':';
}
bool is_name_char(char c) {
  return is_name_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.';
}

void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Element document() {
    if (s_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;
    skip_misc();
    if (pos_ >= s_.size() || s_[pos_] != '<') fail("expected root element");
    Element root = element();
    skip_misc();
    if (pos_ != s_.size()) fail("unexpected content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i) line += s_[i] == '\n' ? 1 : 0;
    throw XmlError("line " + std::to_string(line) + ": " + what);
  }

  bool starts_with(std::string_view p) const { return s_.substr(pos_, p.size()) == p; }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  void skip_past(std::string_view terminator) {
    const auto at = s_.find(terminator, pos_);
    if (at == std::string_view::npos) fail("unterminated construct, expected '" + std::string(terminator) + "'");
    pos_ = at + terminator.size();
  }

  // Whitespace, comments, processing instructions and DOCTYPE outside the root.
  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<?")) skip_past("?>");
      else if (starts_with("<!--")) skip_past("-->");
      else if (starts_with("<!DOCTYPE")) skip_doctype();
      else return;
    }
  }

  void skip_doctype() {
    int depth = 0;
    for (; pos_ < s_.size(); ++pos_) {
      if (s_[pos_] == '[') ++depth;
      else if (s_[pos_] == ']') --depth;
      else if (s_[pos_] == '>' && depth == 0) {
        ++pos_;
        return;
      }
    }
    fail("unterminated DOCTYPE");
  }

  std::string name() {
    if (pos_ >= s_.size() || !is_name_start(s_[pos_])) fail("expected a name");
    const auto start = pos_;
    while (pos_ < s_.size() && is_name_char(s_[pos_])) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string decode(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out += raw[i];
        continue;
      }
      const auto semi = raw.find(';', i);
      if (semi == std::string_view::npos) fail("unterminated entity reference");
      const auto ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "lt") out += '<';
      else if (ent == "gt") out += '>';
      else if (ent == "amp") out += '&';
      else if (ent == "quot") out += '"';
      else if (ent == "apos") out += '\'';
      else if (ent.size() > 1 && ent[0] == '#') {
        unsigned long cp = 0;
        const bool hex = ent[1] == 'x' || ent[1] == 'X';
        const auto digits = ent.substr(hex ? 2 : 1);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp, hex ? 16 : 10);
        if (ec != std::errc() || ptr != digits.data() + digits.size()) fail("bad character reference");
        append_utf8(out, cp);
      } else {
        fail("unknown entity '&" + std::string(ent) + ";'");
      }
      i = semi;
    }
    return out;
  }

  Element element() {
    Element el;
    el.begin = pos_;
    ++pos_;  // '<'
    el.name = name();
    for (;;) {
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated start tag <" + el.name + ">");
      if (starts_with("/>")) {
        pos_ += 2;
        el.self_closing = true;
        el.content_begin = el.content_end = el.end = pos_;
        return el;
      }
      if (s_[pos_] == '>') {
        ++pos_;
        break;
      }
      Attribute attr;
      attr.name = name();
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != '=') fail("expected '=' after attribute " + attr.name);
      ++pos_;
      skip_ws();
      if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) fail("expected quoted attribute value");
      const char quote = s_[pos_++];
      const auto close = s_.find(quote, pos_);
      if (close == std::string_view::npos) fail("unterminated attribute value");
      attr.value = decode(s_.substr(pos_, close - pos_));
      pos_ = close + 1;
      for (const Attribute& a : el.attributes) {
        if (a.name == attr.name) fail("duplicate attribute " + attr.name);
      }
      el.attributes.push_back(std::move(attr));
    }
    el.content_begin = pos_;
    for (;;) {
      if (pos_ >= s_.size()) fail("missing end tag </" + el.name + ">");
      if (starts_with("</")) {
        el.content_end = pos_;
        pos_ += 2;
        const std::string closing = name();
        if (closing != el.name) fail("mismatched end tag </" + closing + "> for <" + el.name + ">");
        skip_ws();
        if (pos_ >= s_.size() || s_[pos_] != '>') fail("malformed end tag");
        ++pos_;
        el.end = pos_;
        return el;
      }
      if (starts_with("<!--")) skip_past("-->");
      else if (starts_with("<![CDATA[")) skip_past("]]>");
      else if (starts_with("<?")) skip_past("?>");
      else if (s_[pos_] == '<') el.children.push_back(element());
      else {
        const auto next = s_.find('<', pos_);
        decode(s_.substr(pos_, next == std::string_view::npos ? std::string_view::npos : next - pos_));
        pos_ = next == std::string_view::npos ? s_.size() : next;
      }
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

Element parse(std::string_view text) { return Parser(text).document(); }

std::string escape_attribute(std::string_view value) {
  std::string out;
  for (char c : value) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace spherepack::xml
