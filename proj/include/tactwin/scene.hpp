#pragma once

// Scene description files.
//
//   format = 1
//   [scenario pilot]
//   seed = 7
//   bounds = 0 0 400 300        # x y w h, mm
//   start = 200 150             # initial mouse position, mm
//   [area rough]
//   model = velocity-scaled
//   rect = 20 20 80 60          # explicit placement
//   image = surfaces/rough.png
//   neutral = true
//   params.gain = 25
//   [area fine]
//   model = constant
//   random = 60 40              # size only; placed from the scenario seed
//
// Areas belong to the scenario declared above them.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tactwin::scene {

struct Rect {
  double x = 0.0;  // mm
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool contains(double px, double py) const { return px >= x && px < x + w && py >= y && py < y + h; }
  bool overlaps(const Rect& o) const {
    return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct Area {
  std::string id;
  std::string model = "silent";
  std::map<std::string, std::string> params;
  Rect rect;
  bool randomized = false;
  std::string image;
  bool neutral = false;
  int line = 0;

  double param(const std::string& key, double fallback) const;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  Rect bounds{0.0, 0.0, 400.0, 300.0};
  double startX = 0.0;
  double startY = 0.0;
  std::vector<Area> areas;

  /// First area containing the point, if any.
  const Area* locate(double x, double y) const;
};

struct Scene {
  int format = 1;
  std::vector<Scenario> scenarios;
  std::vector<std::string> warnings;

  const Scenario& scenario(const std::string& name) const;
};

inline constexpr std::string_view kNeutralImage = "<neutral>";

/// Throws ParseError (with line number), DuplicateId and OverlapError.
Scene parseScene(std::string_view text);
Scene loadScene(const std::string& path);

/// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
double unitInterval(std::uint64_t bits);

}  // namespace tactwin::scene
