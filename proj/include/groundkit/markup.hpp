#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "groundkit/errors.hpp"

namespace groundkit {

/// One grounded noun phrase: `<p>TEXT</p> [SEG] (IMAGEk)`.
/// char_span covers TEXT, group_span the whole construct, both as [start,end)
/// byte offsets into the owning response's raw_text.
struct GroundedPhrase {
  std::string text;
  std::size_t image_index = 0;        // 1-based
  std::size_t within_image_order = 0; // 1-based appearance order inside its image
  std::pair<std::size_t, std::size_t> char_span{0, 0};
  std::pair<std::size_t, std::size_t> group_span{0, 0};

  bool operator==(const GroundedPhrase&) const = default;
};

/// A model response with its grounded phrases extracted in appearance order.
struct GroundedResponse {
  std::string raw_text;
  std::size_t num_images = 1;
  std::vector<GroundedPhrase> phrases;

  bool operator==(const GroundedResponse&) const = default;
};

namespace detail {
inline std::size_t skip_ws(std::string_view s, std::size_t pos) {
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  return pos;
}
}  // namespace detail

/// Extract every `<p>…</p> [SEG] (IMAGEk)` group from `text`. Whitespace is
/// allowed between `</p>`, `[SEG]` and the image tag; nothing else is.
/// Strict mode additionally requires at least one phrase overall and image
/// indices within [1, num_images]. A bare `(IMAGEk)` in prose is plain text;
/// stray `</p>` or `[SEG]` tokens are errors.
inline GroundedResponse parse_response(std::string_view text, std::size_t num_images,
                                       bool strict = true) {
  if (num_images < 1) throw MarkupError("num_images must be >= 1", 0);
  GroundedResponse response;
  response.raw_text.assign(text);
  response.num_images = num_images;
  std::vector<std::size_t> per_image_count(num_images + 1, 0);

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t open = text.find("<p>", pos);
    std::size_t close = text.find("</p>", pos);
    std::size_t seg = text.find("[SEG]", pos);
    std::size_t next = std::min({open, close, seg});
    if (next == std::string_view::npos) break;
    if (next == close && close < open)
      throw MarkupError("stray </p> without matching <p>", close);
    if (next == seg && seg < open)
      throw MarkupError("[SEG] outside a grounded group", seg);

    // A group starts here.
    std::size_t text_begin = open + 3;
    std::size_t inner_open = text.find("<p>", text_begin);
    std::size_t text_end = text.find("</p>", text_begin);
    if (text_end == std::string_view::npos)
      throw MarkupError("unclosed <p>", open);
    if (inner_open != std::string_view::npos && inner_open < text_end)
      throw MarkupError("<p> nested inside <p>", inner_open);
    if (text_end == text_begin) throw MarkupError("empty phrase", open);

    std::size_t cursor = detail::skip_ws(text, text_end + 4);
    if (text.compare(cursor, 5, "[SEG]") != 0)
      throw MarkupError("expected [SEG] after </p>", cursor);
    cursor = detail::skip_ws(text, cursor + 5);
    if (text.compare(cursor, 6, "(IMAGE") != 0)
      throw MarkupError("expected (IMAGEk) after [SEG]", cursor);
    std::size_t digits_begin = cursor + 6;
    std::size_t digits_end = digits_begin;
    while (digits_end < text.size() &&
           std::isdigit(static_cast<unsigned char>(text[digits_end])))
      ++digits_end;
    if (digits_end == digits_begin)
      throw MarkupError("image tag missing index", digits_begin);
    if (digits_end - digits_begin > 9)
      throw MarkupError("image index out of range", digits_begin);
    if (digits_end >= text.size() || text[digits_end] != ')')
      throw MarkupError("unterminated image tag", digits_end);
    std::size_t k = 0;
    for (std::size_t i = digits_begin; i < digits_end; ++i)
      k = k * 10 + static_cast<std::size_t>(text[i] - '0');
    if (k == 0) throw MarkupError("image index 0 (indices are 1-based)", digits_begin);
    if (strict && k > num_images)
      throw MarkupError("image index " + std::to_string(k) + " exceeds num_images " +
                            std::to_string(num_images),
                        digits_begin);

    GroundedPhrase phrase;
    phrase.text.assign(text.substr(text_begin, text_end - text_begin));
    phrase.image_index = k;
    if (k >= per_image_count.size()) per_image_count.resize(k + 1, 0);
    phrase.within_image_order = ++per_image_count[k];
    phrase.char_span = {text_begin, text_end};
    phrase.group_span = {open, digits_end + 1};
    response.phrases.push_back(std::move(phrase));
    pos = digits_end + 1;
  }

  if (strict && response.phrases.empty())
    throw MarkupError("no grounded phrases in strict mode", 0);
  return response;
}

/// The canonical surface form of one grounded phrase.
inline std::string canonical_group(std::string_view text, std::size_t image_index) {
  std::string out;
  out.reserve(text.size() + 24);
  out += "<p>";
  out += text;
  out += "</p> [SEG] (IMAGE";
  out += std::to_string(image_index);
  out += ")";
  return out;
}

/// Re-emit the response with every grounded group in canonical form and all
/// surrounding prose preserved via the group spans.
inline std::string serialize_response(const GroundedResponse& r) {
  std::string out;
  out.reserve(r.raw_text.size() + 16 * r.phrases.size());
  std::size_t cursor = 0;
  for (const auto& p : r.phrases) {
    if (p.group_span.first < cursor || p.group_span.second > r.raw_text.size() ||
        p.group_span.first > p.group_span.second)
      throw MarkupError("phrase group spans out of order", p.group_span.first);
    out.append(r.raw_text, cursor, p.group_span.first - cursor);
    out += canonical_group(p.text, p.image_index);
    cursor = p.group_span.second;
  }
  out.append(r.raw_text, cursor, r.raw_text.size() - cursor);
  return out;
}

}  // namespace groundkit
