#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fieldpipe {

/// Minimal XML element tree with source line numbers.
struct XmlElement {
  std::string name;
  int line = 0;
  std::vector<std::pair<std::string, std::string>> attributes;
  /// Concatenated character data, trimmed.
  std::string text;
  std::vector<XmlElement> children;

  const std::string* attribute(std::string_view key) const;
  const XmlElement* child(std::string_view child_name) const;
  std::vector<const XmlElement*> children_named(std::string_view child_name) const;
};

/// Parses a complete document; throws ValidationError with the line of the
/// first syntax error. `source_name` prefixes error messages.
XmlElement parse_xml(std::string_view text, const std::string& source_name);
XmlElement parse_xml_file(const std::filesystem::path& path);

}  // namespace fieldpipe
