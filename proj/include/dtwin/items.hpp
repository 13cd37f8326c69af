#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dtwin/caex.hpp"

namespace dtwin::items {

enum class Kind { kParameter, kCreate, kConnection };

const char* to_string(Kind k);

// parameter:  [type_name, param_name, x, y, z]
// create:     [type_name, instance_name, color, orientation]
// connection: [instance_a, point_a, instance_b, point_b]
struct Item {
  Kind kind;
  std::vector<std::string> fields;

  bool operator==(const Item&) const = default;
};

struct ItemStream {
  std::vector<Item> items;

  bool operator==(const ItemStream&) const = default;
};

inline constexpr std::string_view kDefaultColor = "gray";
inline constexpr std::string_view kDefaultOrientation = "0,0";

/// Renders a real with '.' and no exponent below 1e6, shortest round-trip.
std::string format_real(double v);

/// Parses "yaw,pitch" in degrees.
std::optional<Orientation> parse_orientation(std::string_view text);

/// Throws Error(kStreamInvariant) on ordering, arity, or reference
/// violations.
void check_stream(const ItemStream& stream);

ItemStream extract_items(const caex::CaexDocument& doc);

std::string write_items(const ItemStream& stream);

/// Throws Error(kItemFormat) carrying the 1-based line number.
ItemStream read_items(std::string_view text);

}  // namespace dtwin::items
