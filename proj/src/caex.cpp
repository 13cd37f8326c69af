#include "dtwin/caex.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "dtwin/error.hpp"

namespace dtwin::caex {

namespace {

std::string require_attr(const xml::Node& n, std::string_view key) {
  auto v = n.attribute(key);
  if (!v) {
    std::ostringstream msg;
    msg << "line " << n.line << ": <" << n.name << "> lacks required attribute " << key;
    throw Error(ErrorCode::kStructural, msg.str(), n.line);
  }
  return *v;
}

std::optional<std::string> child_text(const xml::Node& n, std::string_view child) {
  if (const auto* c = n.child(child)) return c->text;
  return std::nullopt;
}

AttributeDef read_attribute(const xml::Node& n) {
  AttributeDef a;
  a.name = require_attr(n, "Name");
  a.data_type = n.attribute("AttributeDataType");
  for (const auto& c : n.children) {
    if (c.name == "Description") a.description = c.text;
    else if (c.name == "DefaultValue") a.default_value = c.text;
    else if (c.name == "Value") a.value = c.text;
    else if (c.name == "Attribute") a.attributes.push_back(read_attribute(c));
    else a.extras.push_back(c);
  }
  return a;
}

ExternalInterface read_interface(const xml::Node& n) {
  ExternalInterface e;
  e.name = require_attr(n, "Name");
  e.ref_base_class_path = n.attribute("RefBaseClassPath").value_or("");
  e.id = n.attribute("ID").value_or("");
  for (const auto& c : n.children) {
    if (c.name == "Attribute") e.attributes.push_back(read_attribute(c));
  }
  return e;
}

InternalElement read_element(const xml::Node& n) {
  InternalElement e;
  e.name = require_attr(n, "Name");
  e.id = require_attr(n, "ID");
  e.ref_system_unit_path = n.attribute("RefBaseSystemUnitPath");
  e.line = n.line;
  for (const auto& c : n.children) {
    if (c.name == "Attribute") e.attributes.push_back(read_attribute(c));
    else if (c.name == "ExternalInterface") e.external_interfaces.push_back(read_interface(c));
    else if (c.name == "InternalElement") e.children.push_back(read_element(c));
    else if (c.name == "InternalLink") {
      e.internal_links.push_back(InternalLink{require_attr(c, "Name"),
                                              require_attr(c, "RefPartnerSideA"),
                                              require_attr(c, "RefPartnerSideB")});
    } else {
      e.extras.push_back(c);
    }
  }
  return e;
}

SystemUnitClass read_system_unit(const xml::Node& n) {
  SystemUnitClass s;
  s.name = require_attr(n, "Name");
  for (const auto& c : n.children) {
    if (c.name == "Attribute") s.attributes.push_back(read_attribute(c));
    else if (c.name == "ExternalInterface") s.external_interfaces.push_back(read_interface(c));
    else s.extras.push_back(c);
  }
  return s;
}

// --- serialization -------------------------------------------------------

xml::Node text_node(std::string name, std::string text) {
  xml::Node n;
  n.name = std::move(name);
  n.text = std::move(text);
  return n;
}

xml::Node to_node(const AttributeDef& a) {
  xml::Node n;
  n.name = "Attribute";
  n.attributes.emplace_back("Name", a.name);
  if (a.data_type) n.attributes.emplace_back("AttributeDataType", *a.data_type);
  if (a.description) n.children.push_back(text_node("Description", *a.description));
  if (a.default_value) n.children.push_back(text_node("DefaultValue", *a.default_value));
  if (a.value) n.children.push_back(text_node("Value", *a.value));
  for (const auto& c : a.attributes) n.children.push_back(to_node(c));
  for (const auto& x : a.extras) n.children.push_back(x);
  return n;
}

xml::Node to_node(const ExternalInterface& e) {
  xml::Node n;
  n.name = "ExternalInterface";
  n.attributes.emplace_back("Name", e.name);
  n.attributes.emplace_back("RefBaseClassPath", e.ref_base_class_path);
  n.attributes.emplace_back("ID", e.id);
  for (const auto& a : e.attributes) n.children.push_back(to_node(a));
  return n;
}

xml::Node to_node(const InternalElement& e) {
  xml::Node n;
  n.name = "InternalElement";
  n.attributes.emplace_back("Name", e.name);
  n.attributes.emplace_back("ID", e.id);
  if (e.ref_system_unit_path) n.attributes.emplace_back("RefBaseSystemUnitPath", *e.ref_system_unit_path);
  for (const auto& a : e.attributes) n.children.push_back(to_node(a));
  for (const auto& i : e.external_interfaces) n.children.push_back(to_node(i));
  for (const auto& c : e.children) n.children.push_back(to_node(c));
  for (const auto& l : e.internal_links) {
    xml::Node ln;
    ln.name = "InternalLink";
    ln.attributes = {{"Name", l.name}, {"RefPartnerSideA", l.ref_partner_a}, {"RefPartnerSideB", l.ref_partner_b}};
    n.children.push_back(std::move(ln));
  }
  for (const auto& x : e.extras) n.children.push_back(x);
  return n;
}

void add_lib_header(xml::Node& n, const std::string& name, const std::optional<std::string>& version) {
  n.attributes.emplace_back("Name", name);
  if (version) n.children.push_back(text_node("Version", *version));
}

void collect(const InternalElement& e, std::vector<const InternalElement*>& out) {
  out.push_back(&e);
  for (const auto& c : e.children) collect(c, out);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

const AttributeDef* SystemUnitClass::find_attribute(std::string_view attr) const {
  for (const auto& a : attributes) {
    if (a.name == attr) return &a;
  }
  return nullptr;
}

const ExternalInterface* SystemUnitClass::find_interface(std::string_view iface) const {
  for (const auto& e : external_interfaces) {
    if (e.name == iface) return &e;
  }
  return nullptr;
}

const AttributeDef* InternalElement::find_attribute(std::string_view attr) const {
  for (const auto& a : attributes) {
    if (a.name == attr) return &a;
  }
  return nullptr;
}

std::vector<const InternalElement*> CaexDocument::all_elements() const {
  std::vector<const InternalElement*> out;
  for (const auto& ih : instance_hierarchies) {
    for (const auto& e : ih.elements) collect(e, out);
  }
  return out;
}

const InternalElement* CaexDocument::find_element(std::string_view id) const {
  for (const auto* e : all_elements()) {
    if (e->id == id) return e;
  }
  return nullptr;
}

const SystemUnitClass* CaexDocument::find_system_unit(std::string_view path) const {
  const auto slash = path.find('/');
  if (slash == std::string_view::npos) return nullptr;
  const auto lib_name = path.substr(0, slash);
  const auto cls_name = path.substr(slash + 1);
  for (const auto& lib : system_unit_libs) {
    if (lib.name != lib_name) continue;
    for (const auto& cls : lib.classes) {
      if (cls.name == cls_name) return &cls;
    }
  }
  return nullptr;
}

std::vector<const InternalLink*> CaexDocument::all_links() const {
  std::vector<const InternalLink*> out;
  for (const auto* e : all_elements()) {
    for (const auto& l : e->internal_links) out.push_back(&l);
  }
  return out;
}

CaexDocument parse_caex(std::string_view xml_text) {
  const xml::Node root = xml::parse(xml_text);
  if (root.name != "CAEXFile") {
    throw Error(ErrorCode::kStructural, "root element is <" + root.name + ">, expected <CAEXFile>", root.line);
  }
  CaexDocument doc;
  doc.root_attributes = root.attributes;
  for (const auto& section : root.children) {
    if (section.name == "InterfaceClassLib") {
      InterfaceClassLib lib;
      lib.name = require_attr(section, "Name");
      lib.version = child_text(section, "Version");
      for (const auto& c : section.children) {
        if (c.name != "InterfaceClass") continue;
        InterfaceClass ic{require_attr(c, "Name"), c.attribute("RefBaseClassPath"), c.children};
        lib.classes.push_back(std::move(ic));
      }
      doc.interface_libs.push_back(std::move(lib));
    } else if (section.name == "RoleClassLib") {
      doc.role_libs.push_back(RoleClassLib{require_attr(section, "Name"), section});
    } else if (section.name == "SystemUnitClassLib") {
      SystemUnitClassLib lib;
      lib.name = require_attr(section, "Name");
      lib.version = child_text(section, "Version");
      for (const auto& c : section.children) {
        if (c.name == "SystemUnitClass") lib.classes.push_back(read_system_unit(c));
      }
      doc.system_unit_libs.push_back(std::move(lib));
    } else if (section.name == "InstanceHierarchy") {
      InstanceHierarchy ih;
      ih.name = require_attr(section, "Name");
      ih.version = child_text(section, "Version");
      for (const auto& c : section.children) {
        if (c.name == "InternalElement") ih.elements.push_back(read_element(c));
      }
      doc.instance_hierarchies.push_back(std::move(ih));
    } else {
      doc.extras.push_back(section);
    }
  }

  std::map<std::string, int> seen;
  for (const auto* e : doc.all_elements()) {
    auto [it, inserted] = seen.emplace(e->id, e->line);
    if (!inserted) {
      std::ostringstream msg;
      msg << "line " << e->line << ": duplicate InternalElement ID " << e->id << " (first at line "
          << it->second << ")";
      throw Error(ErrorCode::kStructural, msg.str(), e->line);
    }
  }
  return doc;
}

std::string write_caex(const CaexDocument& doc) {
  xml::Node root;
  root.name = "CAEXFile";
  root.attributes = doc.root_attributes;
  for (const auto& x : doc.extras) root.children.push_back(x);
  for (const auto& lib : doc.interface_libs) {
    xml::Node n;
    n.name = "InterfaceClassLib";
    add_lib_header(n, lib.name, lib.version);
    for (const auto& ic : lib.classes) {
      xml::Node c;
      c.name = "InterfaceClass";
      c.attributes.emplace_back("Name", ic.name);
      if (ic.ref_base_class_path) c.attributes.emplace_back("RefBaseClassPath", *ic.ref_base_class_path);
      c.children = ic.extras;
      n.children.push_back(std::move(c));
    }
    root.children.push_back(std::move(n));
  }
  for (const auto& lib : doc.role_libs) root.children.push_back(lib.raw);
  for (const auto& lib : doc.system_unit_libs) {
    xml::Node n;
    n.name = "SystemUnitClassLib";
    add_lib_header(n, lib.name, lib.version);
    for (const auto& cls : lib.classes) {
      xml::Node c;
      c.name = "SystemUnitClass";
      c.attributes.emplace_back("Name", cls.name);
      for (const auto& a : cls.attributes) c.children.push_back(to_node(a));
      for (const auto& i : cls.external_interfaces) c.children.push_back(to_node(i));
      for (const auto& x : cls.extras) c.children.push_back(x);
      n.children.push_back(std::move(c));
    }
    root.children.push_back(std::move(n));
  }
  for (const auto& ih : doc.instance_hierarchies) {
    xml::Node n;
    n.name = "InstanceHierarchy";
    add_lib_header(n, ih.name, ih.version);
    for (const auto& e : ih.elements) n.children.push_back(to_node(e));
    root.children.push_back(std::move(n));
  }
  return xml::serialize(root);
}

LinkEndpoint resolve_link_endpoint(const CaexDocument& doc, std::string_view ref) {
  const auto colon = ref.find(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::kBadReference, "link partner '" + std::string(ref) + "' has no ':' separator");
  }
  LinkEndpoint ep{std::string(ref.substr(0, colon)), std::string(ref.substr(colon + 1))};
  const InternalElement* el = doc.find_element(ep.element_id);
  if (!el) {
    throw Error(ErrorCode::kDanglingLink, "link partner '" + std::string(ref) + "' names unknown element id");
  }
  const bool on_instance = std::any_of(el->external_interfaces.begin(), el->external_interfaces.end(),
                                       [&](const auto& i) { return i.name == ep.interface_name; });
  const SystemUnitClass* cls = el->ref_system_unit_path ? doc.find_system_unit(*el->ref_system_unit_path) : nullptr;
  if (!on_instance && !(cls && cls->find_interface(ep.interface_name))) {
    throw Error(ErrorCode::kInterfaceMismatch,
                "element '" + el->name + "' declares no external interface '" + ep.interface_name + "'");
  }
  return ep;
}

std::optional<Point3> parse_coordinate(std::string_view text) {
  Point3 out;
  std::size_t pos = 0;
  for (int axis = 0; axis < 3; ++axis) {
    const auto comma = text.find(',', pos);
    if ((axis < 2) == (comma == std::string_view::npos)) return std::nullopt;
    const std::string token = trim(text.substr(pos, axis < 2 ? comma - pos : std::string_view::npos));
    if (token.empty()) return std::nullopt;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    // from_chars rejects a leading '+'; the grammar allows only '-'.
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v, std::chars_format::fixed);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v)) return std::nullopt;
    out[axis] = v;
    pos = comma + 1;
  }
  return out;
}

bool is_valid_uuid(std::string_view id) {
  if (id.size() != 36) return false;
  for (std::size_t i = 0; i < id.size(); ++i) {
    const bool dash = i == 8 || i == 13 || i == 18 || i == 23;
    if (dash ? id[i] != '-' : !std::isxdigit(static_cast<unsigned char>(id[i]))) return false;
  }
  return true;
}

bool is_presentation_attribute(std::string_view name) {
  return name == "color" || name == "orientation";
}

bool is_coordinate_attribute(const SystemUnitClass& cls, const AttributeDef& attr) {
  if (is_presentation_attribute(attr.name) || !attr.default_value) return false;
  return cls.find_interface(attr.name) != nullptr || attr.default_value->find(',') != std::string::npos;
}

std::vector<Diagnostic> validate_caex(const CaexDocument& doc) {
  std::vector<Diagnostic> out;
  auto report = [&](Severity s, std::string code, std::string msg, int line = 0) {
    out.push_back(Diagnostic{s, std::move(code), std::move(msg), line});
  };

  for (const auto& lib : doc.system_unit_libs) {
    for (const auto& cls : lib.classes) {
      for (const auto& attr : cls.attributes) {
        if (is_coordinate_attribute(cls, attr) && !parse_coordinate(*attr.default_value)) {
          report(Severity::kError, "malformed-coordinate",
                 lib.name + "/" + cls.name + "." + attr.name + ": DefaultValue '" + *attr.default_value +
                     "' is not an x,y,z triple");
        }
      }
      for (const auto& iface : cls.external_interfaces) {
        const auto matches = std::count_if(cls.attributes.begin(), cls.attributes.end(),
                                           [&](const auto& a) { return a.name == iface.name; });
        const AttributeDef* attr = cls.find_attribute(iface.name);
        if (matches == 0 || !attr->default_value) {
          report(Severity::kError, "interface-without-coordinate",
                 lib.name + "/" + cls.name + ": ExternalInterface '" + iface.name +
                     "' has no attribute carrying its coordinate");
        } else if (matches > 1) {
          report(Severity::kError, "ambiguous-interface-coordinate",
                 lib.name + "/" + cls.name + ": ExternalInterface '" + iface.name +
                     "' matches several attributes");
        }
      }
    }
  }

  std::vector<const InternalElement*> parts;
  for (const auto* e : doc.all_elements()) {
    if (!is_valid_uuid(e->id)) {
      report(Severity::kError, "invalid-uuid", "InternalElement '" + e->name + "' ID '" + e->id + "' is not an RFC 4122 UUID", e->line);
    }
    if (e->ref_system_unit_path) {
      if (!doc.find_system_unit(*e->ref_system_unit_path)) {
        report(Severity::kError, "unresolved-system-unit-path",
               "InternalElement '" + e->name + "' references unknown class '" + *e->ref_system_unit_path + "'", e->line);
      } else if (e->children.empty()) {
        parts.push_back(e);
      }
    } else if (e->children.empty()) {
      report(Severity::kWarning, "missing-system-unit-path",
             "leaf InternalElement '" + e->name + "' has no RefBaseSystemUnitPath", e->line);
    }
  }

  // Union-find over parts for the connectivity warning.
  std::map<std::string, std::string> parent;
  for (const auto* p : parts) parent[p->id] = p->id;
  std::function<std::string(const std::string&)> find = [&](const std::string& x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };

  for (const auto* e : doc.all_elements()) {
    for (const auto& link : e->internal_links) {
      std::optional<LinkEndpoint> ends[2];
      const std::string* refs[2] = {&link.ref_partner_a, &link.ref_partner_b};
      for (int side = 0; side < 2; ++side) {
        try {
          ends[side] = resolve_link_endpoint(doc, *refs[side]);
        } catch (const Error& err) {
          const char* code = err.code() == ErrorCode::kInterfaceMismatch ? "interface-mismatch" : "dangling-link";
          report(Severity::kError, code, "InternalLink '" + link.name + "': " + err.what(), e->line);
        }
      }
      if (ends[0] && ends[1] && parent.count(ends[0]->element_id) && parent.count(ends[1]->element_id)) {
        parent[find(ends[0]->element_id)] = find(ends[1]->element_id);
      }
    }
  }
  std::set<std::string> roots;
  for (const auto* p : parts) roots.insert(find(p->id));
  if (roots.size() > 1) {
    report(Severity::kWarning, "disconnected-graph",
           "connection graph has " + std::to_string(roots.size()) + " components");
  }
  return out;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(), [](const auto& d) { return d.severity == Severity::kError; });
}

}  // namespace dtwin::caex
