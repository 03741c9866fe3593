#pragma once

#include <string>
#include <string_view>

namespace tactwin {

/// Parses numbers with an optional SI suffix: "15.6M", "967k", "120n", "5u".
/// A trailing unit such as "Hz" or "F" is ignored. Throws ParseError.
double parseQuantity(std::string_view text);

std::string trim(std::string_view text);

}  // namespace tactwin
