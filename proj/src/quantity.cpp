#include "tactwin/quantity.hpp"

#include <cctype>
#include <string>

#include "tactwin/error.hpp"

namespace tactwin {

std::string trim(std::string_view text) {
  std::size_t a = 0;
  std::size_t b = text.size();
  while (a < b && std::isspace(static_cast<unsigned char>(text[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(text[b - 1]))) --b;
  return std::string(text.substr(a, b - a));
}

double parseQuantity(std::string_view text) {
  const std::string s = trim(text);
  if (s.empty()) throw Error(Errc::ParseError, "empty quantity");
  double value = 0.0;
  std::size_t used = 0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error(Errc::ParseError, "not a number: '" + s + "'");
  }
  std::string_view rest = std::string_view(s).substr(used);
  if (!rest.empty()) {
    double scale = 1.0;
    switch (rest.front()) {
      case 'p': scale = 1e-12; break;
      case 'n': scale = 1e-9; break;
      case 'u': scale = 1e-6; break;
      case 'm': scale = 1e-3; break;
      case 'k': case 'K': scale = 1e3; break;
      case 'M': scale = 1e6; break;
      case 'G': scale = 1e9; break;
      default: scale = 0.0;
    }
    if (scale != 0.0) {
      value *= scale;
      rest.remove_prefix(1);
    }
    for (char c : rest) {
      if (!std::isalpha(static_cast<unsigned char>(c))) {
        throw Error(Errc::ParseError, "bad suffix in '" + s + "'");
      }
    }
  }
  return value;
}

}  // namespace tactwin
