#include "dtwin/items.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "dtwin/error.hpp"

namespace dtwin::items {

namespace {

constexpr std::size_t arity(Kind k) {
  switch (k) {
    case Kind::kParameter: return 5;
    case Kind::kCreate: return 4;
    case Kind::kConnection: return 4;
  }
  return 0;
}

bool is_token(std::string_view s) {
  return !s.empty() && s.find_first_of(" \t\r\n") == std::string_view::npos;
}

std::optional<double> parse_real(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string type_of(const std::string& path) {
  const auto slash = path.rfind('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

std::string presentation_value(const caex::CaexDocument& doc, const caex::InternalElement& el,
                               std::string_view attr, std::string_view fallback) {
  if (const auto* a = el.find_attribute(attr); a && a->effective_value() && !a->effective_value()->empty()) {
    return *a->effective_value();
  }
  if (const auto* cls = doc.find_system_unit(*el.ref_system_unit_path)) {
    if (const auto* a = cls->find_attribute(attr); a && a->default_value && !a->default_value->empty()) {
      return *a->default_value;
    }
  }
  return std::string(fallback);
}

[[noreturn]] void invariant(const std::string& msg) { throw Error(ErrorCode::kStreamInvariant, msg); }

}  // namespace

const char* to_string(Kind k) {
  switch (k) {
    case Kind::kParameter: return "parameter";
    case Kind::kCreate: return "create";
    case Kind::kConnection: return "connection";
  }
  return "?";
}

std::string format_real(double v) {
  if (v == 0.0) return "0";
  std::array<char, 64> buf{};
  const auto fmt = std::abs(v) < 1e6 ? std::chars_format::fixed : std::chars_format::general;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, fmt);
  return std::string(buf.data(), ptr);
}

std::optional<Orientation> parse_orientation(std::string_view text) {
  const auto comma = text.find(',');
  if (comma == std::string_view::npos) return std::nullopt;
  auto yaw = parse_real(text.substr(0, comma));
  auto pitch = parse_real(text.substr(comma + 1));
  if (!yaw || !pitch) return std::nullopt;
  return Orientation(*yaw, *pitch);
}

void check_stream(const ItemStream& stream) {
  std::set<std::string> params;          // "Type.param"
  std::map<std::string, std::string> instances;  // name -> type
  Kind last = Kind::kParameter;
  for (std::size_t i = 0; i < stream.items.size(); ++i) {
    const Item& it = stream.items[i];
    const std::string where = "item " + std::to_string(i + 1) + " (" + to_string(it.kind) + ")";
    if (it.fields.size() != arity(it.kind)) invariant(where + ": wrong field count");
    for (const auto& f : it.fields) {
      if (!is_token(f)) invariant(where + ": empty or whitespace-bearing field");
    }
    if (static_cast<int>(it.kind) < static_cast<int>(last)) {
      invariant(where + ": parameters must precede creates, which precede connections");
    }
    last = it.kind;
    switch (it.kind) {
      case Kind::kParameter:
        for (int a = 2; a < 5; ++a) {
          if (!parse_real(it.fields[a])) invariant(where + ": '" + it.fields[a] + "' is not a real");
        }
        params.insert(it.fields[0] + "." + it.fields[1]);
        break;
      case Kind::kCreate:
        if (!parse_orientation(it.fields[3])) invariant(where + ": bad orientation '" + it.fields[3] + "'");
        if (!instances.emplace(it.fields[1], it.fields[0]).second) {
          invariant(where + ": duplicate instance '" + it.fields[1] + "'");
        }
        break;
      case Kind::kConnection:
        for (int side = 0; side < 2; ++side) {
          const auto& inst = it.fields[side * 2];
          const auto& point = it.fields[side * 2 + 1];
          auto found = instances.find(inst);
          if (found == instances.end()) invariant(where + ": unknown instance '" + inst + "'");
          if (!params.count(found->second + "." + point)) {
            invariant(where + ": no parameter " + found->second + "." + point);
          }
        }
        break;
    }
  }
}

ItemStream extract_items(const caex::CaexDocument& doc) {
  ItemStream out;
  for (const auto& lib : doc.system_unit_libs) {
    for (const auto& cls : lib.classes) {
      for (const auto& attr : cls.attributes) {
        if (!caex::is_coordinate_attribute(cls, attr)) continue;
        auto p = caex::parse_coordinate(*attr.default_value);
        if (!p) {
          throw Error(ErrorCode::kStructural, cls.name + "." + attr.name + ": malformed coordinate '" +
                                                  *attr.default_value + "'");
        }
        out.items.push_back(Item{Kind::kParameter,
                                 {cls.name, attr.name, format_real((*p)[0]), format_real((*p)[1]),
                                  format_real((*p)[2])}});
      }
    }
  }

  std::map<std::string, std::string> names;  // id -> instance name
  for (const auto* el : doc.all_elements()) {
    if (!el->ref_system_unit_path || !el->children.empty()) continue;
    const std::string color = presentation_value(doc, *el, "color", kDefaultColor);
    const std::string orient_text = presentation_value(doc, *el, "orientation", kDefaultOrientation);
    auto orient = parse_orientation(orient_text);
    if (!orient) {
      throw Error(ErrorCode::kStructural, "element '" + el->name + "': bad orientation '" + orient_text + "'");
    }
    names[el->id] = el->name;
    out.items.push_back(Item{Kind::kCreate,
                             {type_of(*el->ref_system_unit_path), el->name, color,
                              format_real(orient->yaw) + "," + format_real(orient->pitch)}});
  }

  for (const auto* link : doc.all_links()) {
    const auto a = caex::resolve_link_endpoint(doc, link->ref_partner_a);
    const auto b = caex::resolve_link_endpoint(doc, link->ref_partner_b);
    if (!names.count(a.element_id) || !names.count(b.element_id)) {
      throw Error(ErrorCode::kBadReference, "InternalLink '" + link->name + "' joins a non-part element");
    }
    out.items.push_back(Item{Kind::kConnection,
                             {names[a.element_id], a.interface_name, names[b.element_id], b.interface_name}});
  }
  check_stream(out);
  return out;
}

std::string write_items(const ItemStream& stream) {
  std::string out;
  for (const auto& it : stream.items) {
    out += to_string(it.kind);
    for (const auto& f : it.fields) {
      out += ' ';
      out += f;
    }
    out += '\n';
  }
  return out;
}

ItemStream read_items(std::string_view text) {
  ItemStream out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::vector<std::string> tokens;
    std::istringstream ss{std::string(line)};
    for (std::string tok; ss >> tok;) tokens.push_back(tok);
    if (tokens.empty() || tokens.front().front() == '#') continue;

    auto fail = [&](const std::string& msg) -> void {
      throw Error(ErrorCode::kItemFormat, "line " + std::to_string(line_no) + ": " + msg, line_no);
    };
    Item item{};
    if (tokens[0] == "parameter") item.kind = Kind::kParameter;
    else if (tokens[0] == "create") item.kind = Kind::kCreate;
    else if (tokens[0] == "connection") item.kind = Kind::kConnection;
    else fail("unknown item kind '" + tokens[0] + "'");

    item.fields.assign(tokens.begin() + 1, tokens.end());
    if (item.fields.size() != arity(item.kind)) {
      fail(std::string(to_string(item.kind)) + " expects " + std::to_string(arity(item.kind)) + " fields, got " +
           std::to_string(item.fields.size()));
    }
    if (item.kind == Kind::kParameter) {
      for (int a = 2; a < 5; ++a) {
        if (!parse_real(item.fields[a])) fail("'" + item.fields[a] + "' is not a real");
      }
    } else if (item.kind == Kind::kCreate && !parse_orientation(item.fields[3])) {
      fail("'" + item.fields[3] + "' is not a yaw,pitch orientation");
    }
    out.items.push_back(std::move(item));
  }
  return out;
}

}  // namespace dtwin::items
