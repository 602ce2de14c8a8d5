#include "halo/text.hpp"

namespace halo::text {

std::u32string decode_utf8(std::string_view s, bool* valid) {
  std::u32string out;
  out.reserve(s.size());
  if (valid) *valid = true;
  const auto fail = [&] {
    out.push_back(U'�');
    if (valid) *valid = false;
  };
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
      out.push_back(b0);
      ++i;
      continue;
    }
    int extra = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((b0 & 0xE0) == 0xC0) {
      extra = 1, cp = b0 & 0x1F, min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
      extra = 2, cp = b0 & 0x0F, min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
      extra = 3, cp = b0 & 0x07, min = 0x10000;
    } else {
      fail();
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      if (i + k >= s.size()) {
        ok = false;
        break;
      }
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok || cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      fail();
      ++i;
      continue;
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
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

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) append_utf8(out, cp);
  return out;
}

bool is_valid_utf8(std::string_view s) {
  bool valid = true;
  decode_utf8(s, &valid);
  return valid;
}

std::size_t codepoint_length(std::string_view s) { return decode_utf8(s).size(); }

bool is_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool contains_space(std::string_view s) {
  for (char32_t cp : decode_utf8(s)) {
    if (is_space(cp)) return true;
  }
  return false;
}

std::string_view trim(std::string_view s) {
  const std::u32string cps = decode_utf8(s);
  std::size_t lead = 0;
  std::size_t lead_bytes = 0;
  std::string tmp;
  while (lead < cps.size() && is_space(cps[lead])) {
    tmp.clear();
    append_utf8(tmp, cps[lead]);
    lead_bytes += tmp.size();
    ++lead;
  }
  std::size_t tail = cps.size();
  std::size_t tail_bytes = 0;
  while (tail > lead && is_space(cps[tail - 1])) {
    tmp.clear();
    append_utf8(tmp, cps[tail - 1]);
    tail_bytes += tmp.size();
    --tail;
  }
  if (lead_bytes + tail_bytes >= s.size()) return {};
  return s.substr(lead_bytes, s.size() - lead_bytes - tail_bytes);
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char32_t cp : decode_utf8(s)) {
    if (is_space(cp)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      append_utf8(cur, cp);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string encode_newlines(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\r' && i + 1 < s.size() && s[i + 1] == '\n') {
      out += kNewlineToken;
      ++i;
    } else if (s[i] == '\n') {
      out += kNewlineToken;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

std::string decode_newlines(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s.substr(i, kNewlineToken.size()) == kNewlineToken) {
      out.push_back('\n');
      i += kNewlineToken.size();
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace halo::text
