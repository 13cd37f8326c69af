#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dtwin/geom.hpp"
#include "dtwin/xml.hpp"

namespace dtwin::caex {

struct AttributeDef {
  std::string name;
  std::optional<std::string> data_type;
  std::optional<std::string> description;
  std::optional<std::string> default_value;
  std::optional<std::string> value;
  std::vector<AttributeDef> attributes;  // nested
  std::vector<xml::Node> extras;

  /// Instance Value wins over class DefaultValue.
  const std::optional<std::string>& effective_value() const {
    return value ? value : default_value;
  }

  bool operator==(const AttributeDef&) const = default;
};

struct ExternalInterface {
  std::string name;
  std::string ref_base_class_path;
  std::string id;
  std::vector<AttributeDef> attributes;

  bool operator==(const ExternalInterface&) const = default;
};

struct InterfaceClass {
  std::string name;
  std::optional<std::string> ref_base_class_path;
  std::vector<xml::Node> extras;

  bool operator==(const InterfaceClass&) const = default;
};

struct InterfaceClassLib {
  std::string name;
  std::optional<std::string> version;
  std::vector<InterfaceClass> classes;

  bool operator==(const InterfaceClassLib&) const = default;
};

// Retained verbatim; never interpreted.
struct RoleClassLib {
  std::string name;
  xml::Node raw;

  bool operator==(const RoleClassLib&) const = default;
};

struct SystemUnitClass {
  std::string name;
  std::vector<AttributeDef> attributes;
  std::vector<ExternalInterface> external_interfaces;
  std::vector<xml::Node> extras;

  const AttributeDef* find_attribute(std::string_view attr) const;
  const ExternalInterface* find_interface(std::string_view iface) const;

  bool operator==(const SystemUnitClass&) const = default;
};

struct SystemUnitClassLib {
  std::string name;
  std::optional<std::string> version;
  std::vector<SystemUnitClass> classes;

  bool operator==(const SystemUnitClassLib&) const = default;
};

struct InternalLink {
  std::string name;
  std::string ref_partner_a;
  std::string ref_partner_b;

  bool operator==(const InternalLink&) const = default;
};

struct InternalElement {
  std::string name;
  std::string id;
  std::optional<std::string> ref_system_unit_path;
  std::vector<AttributeDef> attributes;
  std::vector<ExternalInterface> external_interfaces;
  std::vector<InternalElement> children;
  std::vector<InternalLink> internal_links;
  std::vector<xml::Node> extras;
  int line = 0;

  const AttributeDef* find_attribute(std::string_view attr) const;

  bool operator==(const InternalElement& o) const {
    return name == o.name && id == o.id && ref_system_unit_path == o.ref_system_unit_path &&
           attributes == o.attributes && external_interfaces == o.external_interfaces &&
           children == o.children && internal_links == o.internal_links && extras == o.extras;
  }
};

struct InstanceHierarchy {
  std::string name;
  std::optional<std::string> version;
  std::vector<InternalElement> elements;

  bool operator==(const InstanceHierarchy&) const = default;
};

struct CaexDocument {
  std::vector<std::pair<std::string, std::string>> root_attributes;
  std::vector<InterfaceClassLib> interface_libs;
  std::vector<RoleClassLib> role_libs;
  std::vector<SystemUnitClassLib> system_unit_libs;
  std::vector<InstanceHierarchy> instance_hierarchies;
  std::vector<xml::Node> extras;

  /// Depth-first, document order.
  std::vector<const InternalElement*> all_elements() const;
  const InternalElement* find_element(std::string_view id) const;
  /// "Lib/Class" lookup; nullptr when unresolvable.
  const SystemUnitClass* find_system_unit(std::string_view path) const;
  /// All InternalLinks with the element that owns them, document order.
  std::vector<const InternalLink*> all_links() const;

  bool operator==(const CaexDocument&) const = default;
};

CaexDocument parse_caex(std::string_view xml_text);

std::string write_caex(const CaexDocument& doc);

struct LinkEndpoint {
  std::string element_id;
  std::string interface_name;

  bool operator==(const LinkEndpoint&) const = default;
};

/// Splits at the first ':' and checks that the element exists and declares
/// the interface (on its class or on the instance itself).
LinkEndpoint resolve_link_endpoint(const CaexDocument& doc, std::string_view ref);

enum class Severity { kWarning, kError };

struct Diagnostic {
  Severity severity;
  std::string code;
  std::string message;
  int line = 0;
};

std::vector<Diagnostic> validate_caex(const CaexDocument& doc);

bool has_errors(const std::vector<Diagnostic>& diags);

/// Strict "x,y,z" grammar: three decimal reals, optional whitespace.
std::optional<Point3> parse_coordinate(std::string_view text);

/// RFC 4122 textual form (8-4-4-4-12 hex digits).
bool is_valid_uuid(std::string_view id);

/// Attributes holding presentation metadata rather than interface points.
bool is_presentation_attribute(std::string_view name);

/// True if a class attribute carries an interface coordinate.
bool is_coordinate_attribute(const SystemUnitClass& cls, const AttributeDef& attr);

}  // namespace dtwin::caex
