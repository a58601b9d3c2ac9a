#pragma once

// Minimal XML reader for feed payloads: elements, attributes, character data,
// CDATA, comments, numeric/named entities, prolog and DOCTYPE skipping.
// Non-goals: DTD expansion, processing instructions beyond skip, encodings
// other than UTF-8. Errors carry the byte offset of the offending input.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chaff/text.hpp"

namespace chaff::xml {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct Node {
  std::string name;  // as written, prefix included
  std::vector<std::pair<std::string, std::string>> attrs;
  std::vector<Node> children;
  std::string text;  // concatenated character data of this element only

  const std::string* attr(std::string_view key) const {
    for (auto& [k, v] : attrs)
      if (k == key) return &v;
    return nullptr;
  }
  const Node* child(std::string_view local) const {
    for (auto& c : children)
      if (local_name(c.name) == local) return &c;
    return nullptr;
  }
  std::vector<const Node*> children_named(std::string_view local) const {
    std::vector<const Node*> out;
    for (auto& c : children)
      if (local_name(c.name) == local) out.push_back(&c);
    return out;
  }
  static std::string_view local_name(std::string_view name) {
    std::size_t colon = name.rfind(':');
    return colon == std::string_view::npos ? name : name.substr(colon + 1);
  }
};

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  Node parse_document() {
    skip_misc();
    if (pos_ >= s_.size() || s_[pos_] != '<')
      throw ParseError("expected root element", pos_);
    Node root = parse_element();
    skip_misc();
    if (pos_ < s_.size()) throw ParseError("trailing content after root element", pos_);
    return root;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) { throw ParseError(what, pos_); }

  bool starts(std::string_view lit) const { return s_.compare(pos_, lit.size(), lit) == 0; }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r'))
      ++pos_;
  }

  void expect(char c) {
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_until(std::string_view terminator, const char* what) {
    std::size_t end = s_.find(terminator, pos_);
    if (end == std::string_view::npos) fail(std::string("unterminated ") + what);
    pos_ = end + terminator.size();
  }

  // Whitespace, comments, PIs and DOCTYPE between top-level constructs.
  void skip_misc() {
    while (true) {
      skip_ws();
      if (starts("<?")) {
        skip_until("?>", "processing instruction");
      } else if (starts("<!--")) {
        skip_until("-->", "comment");
      } else if (starts("<!DOCTYPE") || starts("<!doctype")) {
        skip_doctype();
      } else {
        return;
      }
    }
  }

  void skip_doctype() {
    // Tolerates an internal subset by bracket counting.
    int depth = 0;
    while (pos_ < s_.size()) {
      char c = s_[pos_++];
      if (c == '[') ++depth;
      if (c == ']') --depth;
      if (c == '>' && depth <= 0) return;
    }
    fail("unterminated DOCTYPE");
  }

  std::string parse_name() {
    std::size_t start = pos_;
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      bool namechar = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c == ':' || c == '_' || c == '-' || c == '.' ||
                      static_cast<unsigned char>(c) >= 0x80;
      if (!namechar) break;
      ++pos_;
    }
    if (pos_ == start) fail("expected name");
    return std::string(s_.substr(start, pos_ - start));
  }

  void append_entity(std::string& out) {
    std::size_t amp = pos_;
    ++pos_;  // '&'
    std::size_t semi = s_.find(';', pos_);
    if (semi == std::string_view::npos || semi - pos_ > 10) {
      pos_ = amp;
      fail("unterminated entity reference");
    }
    std::string_view body = s_.substr(pos_, semi - pos_);
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
    } else if (!body.empty() && body[0] == '#') {
      char32_t cp = 0;
      bool ok = body.size() > 1;
      if (body.size() > 2 && (body[1] == 'x' || body[1] == 'X')) {
        for (std::size_t i = 2; i < body.size() && ok; ++i) {
          char c = body[i];
          int v = c >= '0' && c <= '9'   ? c - '0'
                  : c >= 'a' && c <= 'f' ? c - 'a' + 10
                  : c >= 'A' && c <= 'F' ? c - 'A' + 10
                                         : -1;
          if (v < 0) ok = false;
          else cp = cp * 16 + static_cast<char32_t>(v);
        }
      } else {
        for (std::size_t i = 1; i < body.size() && ok; ++i) {
          if (body[i] < '0' || body[i] > '9') ok = false;
          else cp = cp * 10 + static_cast<char32_t>(body[i] - '0');
        }
      }
      if (!ok || cp == 0 || cp > 0x10FFFF) {
        pos_ = amp;
        fail("bad character reference");
      }
      append_utf8(out, cp);
    } else {
      pos_ = amp;
      fail("unknown entity '" + std::string(body) + "'");
    }
    pos_ = semi + 1;
  }

  std::string parse_attr_value() {
    if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) fail("expected quoted attribute value");
    char quote = s_[pos_++];
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != quote) {
      if (s_[pos_] == '&') {
        append_entity(out);
      } else if (s_[pos_] == '<') {
        fail("'<' in attribute value");
      } else {
        out.push_back(s_[pos_++]);
      }
    }
    if (pos_ >= s_.size()) fail("unterminated attribute value");
    ++pos_;
    return out;
  }

  Node parse_element() {
    expect('<');
    Node node;
    node.name = parse_name();
    while (true) {
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated start tag");
      if (s_[pos_] == '/') {
        ++pos_;
        expect('>');
        return node;  // self-closing
      }
      if (s_[pos_] == '>') {
        ++pos_;
        break;
      }
      std::string key = parse_name();
      skip_ws();
      expect('=');
      skip_ws();
      node.attrs.emplace_back(std::move(key), parse_attr_value());
    }
    parse_content(node);
    return node;
  }

  void parse_content(Node& node) {
    while (true) {
      if (pos_ >= s_.size()) fail("unterminated element <" + node.name + ">");
      if (s_[pos_] == '<') {
        if (starts("<![CDATA[")) {
          pos_ += 9;
          std::size_t end = s_.find("]]>", pos_);
          if (end == std::string_view::npos) fail("unterminated CDATA section");
          node.text.append(s_.substr(pos_, end - pos_));
          pos_ = end + 3;
        } else if (starts("<!--")) {
          skip_until("-->", "comment");
        } else if (starts("<?")) {
          skip_until("?>", "processing instruction");
        } else if (starts("</")) {
          pos_ += 2;
          std::size_t name_at = pos_;
          std::string close = parse_name();
          if (close != node.name) {
            pos_ = name_at;
            fail("mismatched close tag </" + close + "> for <" + node.name + ">");
          }
          skip_ws();
          expect('>');
          return;
        } else {
          node.children.push_back(parse_element());
        }
      } else if (s_[pos_] == '&') {
        append_entity(node.text);
      } else {
        node.text.push_back(s_[pos_++]);
      }
    }
  }
};

}  // namespace detail

inline Node parse(std::string_view raw) {
  // Byte-order mark is tolerated.
  if (raw.size() >= 3 && raw.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    detail::Parser p(raw.substr(3));
    return p.parse_document();
  }
  detail::Parser p(raw);
  return p.parse_document();
}

}  // namespace chaff::xml
