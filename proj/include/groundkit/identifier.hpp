#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "groundkit/errors.hpp"

namespace groundkit {

/// One (image, object[, part]) coordinate decoded from an identifier token.
struct ImageRef {
  std::size_t image_index = 0;  // 1-based, single digit in the grammar
  unsigned object_id = 0;       // two digits
  std::optional<unsigned> part_id;

  bool operator==(const ImageRef&) const = default;
};

/// Decoded identifier token: NAME_XYY (object) or NAME_XYYZZ (part), with
/// further _XYY / _XYYZZ groups for entities visible in several images,
/// e.g. rocket_101_202.
struct EntityIdentifier {
  std::string name;
  std::size_t image_index = 0;
  unsigned object_id = 0;
  std::optional<unsigned> part_id;
  std::vector<ImageRef> extra_refs;

  std::vector<ImageRef> all_refs() const {
    std::vector<ImageRef> refs;
    refs.push_back({image_index, object_id, part_id});
    refs.insert(refs.end(), extra_refs.begin(), extra_refs.end());
    return refs;
  }

  bool operator==(const EntityIdentifier&) const = default;
};

namespace detail {
/// True if `token` has the surface shape name(_digits)+ with every digit
/// group of length 3 or 5. Shape only — image digit 0 still parses as an
/// identifier attempt and fails later with a diagnostic.
inline bool identifier_shaped(std::string_view token) {
  std::size_t pos = token.find('_');
  if (pos == 0 || pos == std::string_view::npos) return false;
  for (std::size_t i = 0; i < pos; ++i)
    if (!std::islower(static_cast<unsigned char>(token[i]))) return false;
  bool any_group = false;
  while (pos < token.size()) {
    // pos sits on '_'
    std::size_t start = pos + 1;
    std::size_t end = start;
    while (end < token.size() && std::isdigit(static_cast<unsigned char>(token[end]))) ++end;
    std::size_t len = end - start;
    if (len != 3 && len != 5) return false;
    if (end < token.size() && token[end] != '_') return false;
    any_group = true;
    pos = end;
  }
  return any_group;
}
}  // namespace detail

/// Decode an identifier token. Throws IdentifierError on malformed group
/// lengths, empty / non-lowercase names, or an image digit of 0.
inline EntityIdentifier parse_identifier(std::string_view token) {
  std::size_t underscore = token.find('_');
  if (underscore == std::string_view::npos)
    throw IdentifierError("identifier \"" + std::string(token) + "\" has no digit group");
  if (underscore == 0)
    throw IdentifierError("identifier \"" + std::string(token) + "\" has an empty name");
  EntityIdentifier id;
  id.name.assign(token.substr(0, underscore));
  for (char c : id.name)
    if (!std::islower(static_cast<unsigned char>(c)))
      throw IdentifierError("identifier name \"" + id.name + "\" must be lowercase letters");

  std::vector<ImageRef> refs;
  std::size_t pos = underscore;
  while (pos < token.size()) {
    std::size_t start = pos + 1;
    std::size_t end = start;
    while (end < token.size() && std::isdigit(static_cast<unsigned char>(token[end]))) ++end;
    std::size_t len = end - start;
    if (len != 3 && len != 5)
      throw IdentifierError("identifier \"" + std::string(token) + "\" has a digit group of length " +
                            std::to_string(len) + " (expected 3 or 5)");
    if (end < token.size() && token[end] != '_')
      throw IdentifierError("identifier \"" + std::string(token) + "\" has trailing characters");
    ImageRef ref;
    ref.image_index = static_cast<std::size_t>(token[start] - '0');
    if (ref.image_index == 0)
      throw IdentifierError("identifier \"" + std::string(token) + "\" uses image digit 0 (1-based)");
    ref.object_id = static_cast<unsigned>((token[start + 1] - '0') * 10 + (token[start + 2] - '0'));
    if (len == 5)
      ref.part_id = static_cast<unsigned>((token[start + 3] - '0') * 10 + (token[start + 4] - '0'));
    refs.push_back(ref);
    pos = end;
  }
  if (refs.empty())
    throw IdentifierError("identifier \"" + std::string(token) + "\" has no digit group");
  id.image_index = refs[0].image_index;
  id.object_id = refs[0].object_id;
  id.part_id = refs[0].part_id;
  id.extra_refs.assign(refs.begin() + 1, refs.end());
  return id;
}

/// Annotation tables resolve_references runs against: one object list per
/// image, parts nested under their object.
struct PartAnnotation {
  std::string name;
  unsigned part_id = 0;
  bool has_mask = false;
};

struct ObjectAnnotation {
  std::string name;
  unsigned object_id = 0;
  bool has_mask = false;
  std::vector<PartAnnotation> parts;
};

/// tables[j] holds the objects of image j+1.
using AnnotationTables = std::vector<std::vector<ObjectAnnotation>>;

/// One identifier reference resolved against the annotation tables.
struct ResolvedTarget {
  std::string token;            // the identifier token as written
  std::string name;             // name embedded in the token
  std::string annotation_name;  // name recorded in the annotations
  std::size_t image_index = 0;  // 1-based
  unsigned object_id = 0;
  std::optional<unsigned> part_id;
  bool has_mask = false;

  bool operator==(const ResolvedTarget&) const = default;
};

struct ResolveResult {
  std::vector<ResolvedTarget> targets;
  std::vector<std::string> unresolved_tokens;  // tokens with no matching annotation
};

namespace detail {
inline const ObjectAnnotation* find_object(const AnnotationTables& tables,
                                           std::size_t image_index, unsigned object_id) {
  if (image_index == 0 || image_index > tables.size()) return nullptr;
  for (const auto& obj : tables[image_index - 1])
    if (obj.object_id == object_id) return &obj;
  return nullptr;
}
}  // namespace detail

/// Scan `answer` for identifier-shaped tokens and resolve each reference
/// against the tables. Lookup is by (image, object_id[, part_id]); the name
/// inside the token is informational. Duplicate references to the same
/// coordinate are kept once (first occurrence). Unresolvable tokens are
/// collected, not thrown — the dataset filter charges them to its own rule.
inline ResolveResult scan_references(std::string_view answer, const AnnotationTables& tables) {
  ResolveResult result;
  std::vector<ImageRef> seen;
  std::size_t pos = 0;
  while (pos < answer.size()) {
    unsigned char c = static_cast<unsigned char>(answer[pos]);
    if (!std::isalnum(c) && c != '_') {
      ++pos;
      continue;
    }
    std::size_t end = pos;
    while (end < answer.size()) {
      unsigned char e = static_cast<unsigned char>(answer[end]);
      if (!std::isalnum(e) && e != '_') break;
      ++end;
    }
    std::string_view word = answer.substr(pos, end - pos);
    pos = end;
    if (!detail::identifier_shaped(word)) continue;

    EntityIdentifier id;
    try {
      id = parse_identifier(word);
    } catch (const IdentifierError&) {
      result.unresolved_tokens.emplace_back(word);
      continue;
    }
    bool all_found = true;
    std::vector<ResolvedTarget> pending;
    for (const ImageRef& ref : id.all_refs()) {
      const ObjectAnnotation* obj = detail::find_object(tables, ref.image_index, ref.object_id);
      if (!obj) {
        all_found = false;
        break;
      }
      ResolvedTarget target;
      target.token.assign(word);
      target.name = id.name;
      target.image_index = ref.image_index;
      target.object_id = ref.object_id;
      target.part_id = ref.part_id;
      if (ref.part_id) {
        const PartAnnotation* part = nullptr;
        for (const auto& p : obj->parts)
          if (p.part_id == *ref.part_id) { part = &p; break; }
        if (!part) {
          all_found = false;
          break;
        }
        target.annotation_name = part->name;
        target.has_mask = part->has_mask;
      } else {
        target.annotation_name = obj->name;
        target.has_mask = obj->has_mask;
      }
      pending.push_back(std::move(target));
    }
    if (!all_found) {
      result.unresolved_tokens.emplace_back(word);
      continue;
    }
    for (auto& target : pending) {
      ImageRef coord{target.image_index, target.object_id, target.part_id};
      bool duplicate = false;
      for (const auto& s : seen)
        if (s == coord) { duplicate = true; break; }
      if (duplicate) continue;
      seen.push_back(coord);
      result.targets.push_back(std::move(target));
    }
  }
  return result;
}

/// Strict form: every identifier token must resolve; the first failure is
/// reported by token.
inline std::vector<ResolvedTarget> resolve_references(std::string_view answer,
                                                      const AnnotationTables& tables) {
  ResolveResult result = scan_references(answer, tables);
  if (!result.unresolved_tokens.empty())
    throw IdentifierError("unresolved reference \"" + result.unresolved_tokens.front() + "\"");
  return std::move(result.targets);
}

}  // namespace groundkit
