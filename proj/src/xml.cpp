#include "dtwin/xml.hpp"

#include <memory>
#include <sstream>

#include <expat.h>

#include "dtwin/error.hpp"

namespace dtwin::xml {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

struct Builder {
  XML_Parser parser = nullptr;
  std::vector<Node*> stack;
  std::vector<std::string> raw_text;
  Node root;
  bool have_root = false;
};

void on_start(void* user, const XML_Char* name, const XML_Char** atts) {
  auto* b = static_cast<Builder*>(user);
  Node node;
  node.name = std::string(local_name(name));
  node.line = static_cast<int>(XML_GetCurrentLineNumber(b->parser));
  for (int i = 0; atts[i] != nullptr; i += 2) {
    node.attributes.emplace_back(atts[i], atts[i + 1]);
  }
  if (b->stack.empty()) {
    b->root = std::move(node);
    b->have_root = true;
    b->stack.push_back(&b->root);
  } else {
    auto& siblings = b->stack.back()->children;
    siblings.push_back(std::move(node));
    b->stack.push_back(&siblings.back());
  }
  b->raw_text.emplace_back();
}

void on_end(void* user, const XML_Char*) {
  auto* b = static_cast<Builder*>(user);
  b->stack.back()->text = trim(b->raw_text.back());
  b->raw_text.pop_back();
  b->stack.pop_back();
}

void on_text(void* user, const XML_Char* s, int len) {
  auto* b = static_cast<Builder*>(user);
  if (!b->raw_text.empty()) b->raw_text.back().append(s, static_cast<std::size_t>(len));
}

void escape_into(std::string& out, std::string_view s, bool attribute) {
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) { out += "&quot;"; break; }
        out += c;
        break;
      default: out += c;
    }
  }
}

void write_node(std::string& out, const Node& n, int depth) {
  out.append(static_cast<std::size_t>(depth) * 2, ' ');
  out += '<';
  out += n.name;
  for (const auto& [k, v] : n.attributes) {
    out += ' ';
    out += k;
    out += "=\"";
    escape_into(out, v, true);
    out += '"';
  }
  if (n.children.empty() && n.text.empty()) {
    out += " />\n";
    return;
  }
  out += '>';
  if (n.children.empty()) {
    escape_into(out, n.text, false);
  } else {
    out += '\n';
    if (!n.text.empty()) {
      out.append(static_cast<std::size_t>(depth + 1) * 2, ' ');
      escape_into(out, n.text, false);
      out += '\n';
    }
    for (const auto& c : n.children) write_node(out, c, depth + 1);
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
  }
  out += "</";
  out += n.name;
  out += ">\n";
}

}  // namespace

std::string_view local_name(std::string_view qualified) {
  const auto colon = qualified.rfind(':');
  return colon == std::string_view::npos ? qualified : qualified.substr(colon + 1);
}

std::optional<std::string> Node::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (local_name(k) == key) return v;
  }
  return std::nullopt;
}

const Node* Node::child(std::string_view child_name) const {
  for (const auto& c : children) {
    if (c.name == child_name) return &c;
  }
  return nullptr;
}

Node parse(std::string_view text) {
  std::unique_ptr<XML_ParserStruct, decltype(&XML_ParserFree)> parser(XML_ParserCreate("UTF-8"),
                                                                     &XML_ParserFree);
  Builder b;
  b.parser = parser.get();
  XML_SetUserData(parser.get(), &b);
  XML_SetElementHandler(parser.get(), &on_start, &on_end);
  XML_SetCharacterDataHandler(parser.get(), &on_text);
  if (XML_Parse(parser.get(), text.data(), static_cast<int>(text.size()), XML_TRUE) ==
      XML_STATUS_ERROR) {
    const int line = static_cast<int>(XML_GetCurrentLineNumber(parser.get()));
    std::ostringstream msg;
    msg << "line " << line << ": " << XML_ErrorString(XML_GetErrorCode(parser.get()));
    throw Error(ErrorCode::kXmlParse, msg.str(), line);
  }
  if (!b.have_root) throw Error(ErrorCode::kXmlParse, "line 1: no root element", 1);
  return std::move(b.root);
}

std::string serialize(const Node& root) {
  std::string out = "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n";
  write_node(out, root, 0);
  return out;
}

}  // namespace dtwin::xml
