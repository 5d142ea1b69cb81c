#include "fieldpipe/xml_document.hpp"

#include "fieldpipe/error.hpp"

#include <expat.h>

#include <fstream>
#include <memory>
#include <sstream>

namespace fieldpipe {

namespace {

struct BuildState {
  XML_Parser parser = nullptr;
  std::vector<XmlElement*> stack;
  XmlElement root;
  bool have_root = false;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void XMLCALL on_start(void* data, const XML_Char* name, const XML_Char** attrs) {
  auto* st = static_cast<BuildState*>(data);
  XmlElement e;
  e.name = name;
  e.line = static_cast<int>(XML_GetCurrentLineNumber(st->parser));
  for (int i = 0; attrs[i] != nullptr; i += 2) e.attributes.emplace_back(attrs[i], attrs[i + 1]);
  if (st->stack.empty()) {
    st->root = std::move(e);
    st->have_root = true;
    st->stack.push_back(&st->root);
  } else {
    auto& kids = st->stack.back()->children;
    kids.push_back(std::move(e));
    st->stack.push_back(&kids.back());
  }
}

void XMLCALL on_end(void* data, const XML_Char*) {
  auto* st = static_cast<BuildState*>(data);
  st->stack.back()->text = trim(st->stack.back()->text);
  st->stack.pop_back();
}

void XMLCALL on_text(void* data, const XML_Char* s, int len) {
  auto* st = static_cast<BuildState*>(data);
  if (!st->stack.empty()) st->stack.back()->text.append(s, static_cast<std::size_t>(len));
}

}  // namespace

const std::string* XmlElement::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return &v;
  }
  return nullptr;
}

const XmlElement* XmlElement::child(std::string_view child_name) const {
  for (const auto& c : children) {
    if (c.name == child_name) return &c;
  }
  return nullptr;
}

std::vector<const XmlElement*> XmlElement::children_named(std::string_view child_name) const {
  std::vector<const XmlElement*> out;
  for (const auto& c : children) {
    if (c.name == child_name) out.push_back(&c);
  }
  return out;
}

XmlElement parse_xml(std::string_view text, const std::string& source_name) {
  std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(XML_ParserCreate(nullptr),
                                                                                        &XML_ParserFree);
  if (!parser) throw Error("cannot create XML parser");
  BuildState st;
  st.parser = parser.get();
  // Stack pointers stay valid: only the innermost open element's children
  // vector ever grows.
  XML_SetUserData(parser.get(), &st);
  XML_SetElementHandler(parser.get(), on_start, on_end);
  XML_SetCharacterDataHandler(parser.get(), on_text);
  if (XML_Parse(parser.get(), text.data(), static_cast<int>(text.size()), XML_TRUE) == XML_STATUS_ERROR) {
    throw ValidationError(source_name + " line " + std::to_string(XML_GetCurrentLineNumber(parser.get())) +
                          ": XML error: " + XML_ErrorString(XML_GetErrorCode(parser.get())));
  }
  if (!st.have_root) throw ValidationError(source_name + ": empty XML document");
  return std::move(st.root);
}

XmlElement parse_xml_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_xml(ss.str(), path.string());
}

}  // namespace fieldpipe
