#pragma once

// Tokenization and small string utilities shared by corpus extraction, topic
// classification and the CLI. UTF-8 aware where it matters (whitespace split,
// prefix enumeration); case logic covers ASCII plus Latin-1.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace chaff {

struct Utf8Char {
  char32_t cp = 0xFFFD;
  int len = 1;  // bytes consumed, >= 1 even for invalid sequences
};

inline Utf8Char decode_utf8(std::string_view s, std::size_t i) {
  unsigned char b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1};
  auto cont = [&](std::size_t k) {
    return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  auto cb = [&](std::size_t k) { return static_cast<char32_t>(static_cast<unsigned char>(s[i + k]) & 0x3F); };
  if ((b0 & 0xE0) == 0xC0 && cont(1)) return {((b0 & 0x1Fu) << 6) | cb(1), 2};
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) return {((b0 & 0x0Fu) << 12) | (cb(1) << 6) | cb(2), 3};
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3))
    return {((b0 & 0x07u) << 18) | (cb(1) << 12) | (cb(2) << 6) | cb(3), 4};
  return {0xFFFD, 1};
}

inline void append_utf8(std::string& out, char32_t cp) {
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

inline bool is_space_cp(char32_t cp) {
  switch (cp) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029: case 0x202F:
    case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

inline bool is_control_cp(char32_t cp) { return cp < 0x20 || cp == 0x7F; }

// Uppercase detection: ASCII A-Z plus Latin-1 uppercase letters (sufficient for
// the feed corpora this targets; other scripts count as caseless).
inline bool is_upper_cp(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return true;
  return cp >= 0xC0 && cp <= 0xDE && cp != 0xD7;
}

inline bool is_alnum_cp(char32_t cp) {
  if (cp < 0x80)
    return (cp >= U'0' && cp <= U'9') || (cp >= U'A' && cp <= U'Z') || (cp >= U'a' && cp <= U'z');
  return !is_space_cp(cp) && !is_control_cp(cp);  // non-ASCII treated as word material
}

inline char32_t fold_cp(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  return cp;
}

inline std::string fold_case(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    Utf8Char c = decode_utf8(s, i);
    append_utf8(out, fold_cp(c.cp));
    i += static_cast<std::size_t>(c.len);
  }
  return out;
}

inline bool starts_with_uppercase(std::string_view word) {
  if (word.empty()) return false;
  return is_upper_cp(decode_utf8(word, 0).cp);
}

// Split on Unicode whitespace and control characters; no empty pieces.
inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < s.size();) {
    Utf8Char c = decode_utf8(s, i);
    if (is_space_cp(c.cp) || is_control_cp(c.cp)) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur.append(s.substr(i, static_cast<std::size_t>(c.len)));
    }
    i += static_cast<std::size_t>(c.len);
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Strip leading/trailing non-alphanumeric codepoints; interior punctuation
// (hyphens, apostrophes) survives.
inline std::string strip_edge_punct(std::string_view w) {
  std::size_t b = 0;
  while (b < w.size()) {
    Utf8Char c = decode_utf8(w, b);
    if (is_alnum_cp(c.cp)) break;
    b += static_cast<std::size_t>(c.len);
  }
  // Walk codepoints recording the end of the last alnum one.
  std::size_t e = b;
  for (std::size_t i = b; i < w.size();) {
    Utf8Char c = decode_utf8(w, i);
    i += static_cast<std::size_t>(c.len);
    if (is_alnum_cp(c.cp)) e = i;
  }
  return std::string(w.substr(b, e - b));
}

// Query/term tokenizer: whitespace split, edge punctuation stripped, empties dropped.
inline std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  for (auto& w : split_words(s)) {
    std::string t = strip_edge_punct(w);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (static_cast<unsigned char>(s[b]) <= ' ')) ++b;
  while (e > b && (static_cast<unsigned char>(s[e - 1]) <= ' ')) --e;
  return std::string(s.substr(b, e - b));
}

inline std::size_t codepoint_count(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); n++) i += static_cast<std::size_t>(decode_utf8(s, i).len);
  return n;
}

// First n codepoints as bytes.
inline std::string codepoint_prefix(std::string_view s, std::size_t n) {
  std::size_t i = 0;
  for (std::size_t k = 0; k < n && i < s.size(); ++k) i += static_cast<std::size_t>(decode_utf8(s, i).len);
  return std::string(s.substr(0, i));
}

inline std::string url_encode(std::string_view s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    bool keep = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                c == '-' || c == '_' || c == '.' || c == '~';
    if (keep) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xF]);
    }
  }
  return out;
}

inline std::string url_decode(std::string_view s) {
  auto hexv = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && hexv(s[i + 1]) >= 0 && hexv(s[i + 2]) >= 0) {
      out.push_back(static_cast<char>(hexv(s[i + 1]) * 16 + hexv(s[i + 2])));
      i += 2;
    } else if (s[i] == '+') {
      out.push_back(' ');
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

// Query-string parameters in order of appearance; later duplicates kept.
inline std::vector<std::pair<std::string, std::string>> parse_query_string(std::string_view qs) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t i = 0;
  while (i < qs.size()) {
    std::size_t amp = qs.find('&', i);
    if (amp == std::string_view::npos) amp = qs.size();
    std::string_view kv = qs.substr(i, amp - i);
    if (!kv.empty()) {
      std::size_t eq = kv.find('=');
      if (eq == std::string_view::npos)
        out.emplace_back(url_decode(kv), "");
      else
        out.emplace_back(url_decode(kv.substr(0, eq)), url_decode(kv.substr(eq + 1)));
    }
    i = amp + 1;
  }
  return out;
}

}  // namespace chaff
