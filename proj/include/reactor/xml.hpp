#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace reactor {

class XmlError : public std::runtime_error {
 public:
  XmlError(std::size_t pos, const std::string& what)
      : std::runtime_error("malformed XML at offset " + std::to_string(pos) + ": " + what),
        position(pos) {}
  std::size_t position;
};

/// Minimal XML 1.0 element tree: elements, attributes, character data.
/// Enough for the Reaction RuleML interchange subset; no namespaces
/// processing (prefixed names kept verbatim), no DTD.
struct XmlNode {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::vector<XmlNode> children;
  std::string text;  // concatenated character data directly under this node

  const std::string* attr(const std::string& key) const {
    for (const auto& [k, v] : attrs)
      if (k == key) return &v;
    return nullptr;
  }
  const XmlNode* child(const std::string& tag) const {
    for (const auto& c : children)
      if (c.name == tag) return &c;
    return nullptr;
  }
  std::vector<const XmlNode*> children_named(const std::string& tag) const {
    std::vector<const XmlNode*> out;
    for (const auto& c : children)
      if (c.name == tag) out.push_back(&c);
    return out;
  }
};

XmlNode xml_parse(const std::string& text);
std::string xml_write(const XmlNode& root, bool pretty = true);
std::string xml_escape(const std::string& s);

}  // namespace reactor
