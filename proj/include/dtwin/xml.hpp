#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dtwin::xml {

/// Minimal element tree. Names are stored without namespace prefix; text is
/// the element's own character data with surrounding whitespace trimmed.
struct Node {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::string text;
  std::vector<Node> children;
  int line = 0;

  std::optional<std::string> attribute(std::string_view key) const;
  const Node* child(std::string_view child_name) const;

  // Source line is location metadata, not content.
  bool operator==(const Node& o) const {
    return name == o.name && attributes == o.attributes && text == o.text && children == o.children;
  }
};

/// Throws Error(kXmlParse) with the offending line on malformed input.
Node parse(std::string_view text);

std::string serialize(const Node& root);

std::string_view local_name(std::string_view qualified);

}  // namespace dtwin::xml
