#pragma once

// Minimal XML reader that records byte offsets for every element so callers
// can splice edits into the original text and leave everything else intact.
// Supports elements, attributes, text, comments, CDATA, processing
// instructions and a DOCTYPE prolog; no namespaces or DTD processing.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace spherepack::xml {

struct Attribute {
  std::string name;
  std::string value;  // entity-decoded
};

struct Element {
  std::string name;
  std::vector<Attribute> attributes;
  std::vector<Element> children;
  std::size_t begin = 0;          // offset of '<'
  std::size_t end = 0;            // one past the final '>'
  std::size_t content_begin = 0;  // one past the start tag
  std::size_t content_end = 0;    // offset of "</" (== end for self-closing)
  bool self_closing = false;

  const std::string* attribute(std::string_view key) const;
  std::vector<const Element*> children_named(std::string_view key) const;
  const Element* first_child(std::string_view key) const;
};

/// Parses a document and returns its root element. Throws XmlError.
Element parse(std::string_view text);

std::string escape_attribute(std::string_view value);

}  // namespace spherepack::xml
