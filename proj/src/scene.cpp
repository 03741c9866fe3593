#include "tactwin/scene.hpp"

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "tactwin/error.hpp"
#include "tactwin/quantity.hpp"

namespace tactwin::scene {

namespace {

constexpr int kPlacementAttempts = 10000;

[[noreturn]] void fail(int line, const std::string& msg) {
  throw Error(Errc::ParseError, "line " + std::to_string(line) + ": " + msg);
}

std::vector<double> numbers(const std::string& value, std::size_t count, int line) {
  std::istringstream in(value);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      out.push_back(parseQuantity(tok));
    } catch (const Error&) {
      fail(line, "not a number: " + tok);
    }
  }
  if (out.size() != count) fail(line, "expected " + std::to_string(count) + " numbers");
  return out;
}

bool boolean(const std::string& value, int line) {
  if (value == "true" || value == "yes" || value == "1") return true;
  if (value == "false" || value == "no" || value == "0") return false;
  fail(line, "expected true or false");
}

void resolve(Scenario& s) {
  for (std::size_t i = 0; i < s.areas.size(); ++i) {
    const Area& a = s.areas[i];
    if (a.randomized) continue;
    for (std::size_t j = 0; j < i; ++j) {
      if (!s.areas[j].randomized && a.rect.overlaps(s.areas[j].rect)) {
        throw Error(Errc::OverlapError, "line " + std::to_string(a.line) + ": area '" + a.id +
                                            "' overlaps '" + s.areas[j].id + "'");
      }
    }
  }

  std::mt19937_64 rng(s.seed);
  std::vector<const Rect*> placed;
  for (const Area& a : s.areas) {
    if (!a.randomized) placed.push_back(&a.rect);
  }
  for (Area& a : s.areas) {
    if (!a.randomized) continue;
    if (a.rect.w > s.bounds.w || a.rect.h > s.bounds.h) {
      throw Error(Errc::OverlapError, "area '" + a.id + "' does not fit in the scenario bounds");
    }
    bool ok = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !ok; ++attempt) {
      a.rect.x = s.bounds.x + unitInterval(rng()) * (s.bounds.w - a.rect.w);
      a.rect.y = s.bounds.y + unitInterval(rng()) * (s.bounds.h - a.rect.h);
      ok = true;
      for (const Rect* r : placed) ok = ok && !a.rect.overlaps(*r);
    }
    if (!ok) throw Error(Errc::OverlapError, "no free slot for area '" + a.id + "'");
    placed.push_back(&a.rect);
  }
}

}  // namespace

double unitInterval(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

double Area::param(const std::string& key, double fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : parseQuantity(it->second);
}

const Area* Scenario::locate(double x, double y) const {
  for (const Area& a : areas) {
    if (a.rect.contains(x, y)) return &a;
  }
  return nullptr;
}

const Scenario& Scene::scenario(const std::string& name) const {
  for (const auto& s : scenarios) {
    if (s.name == name) return s;
  }
  throw Error(Errc::InvalidArgument, "no scenario named '" + name + "'");
}

Scene parseScene(std::string_view text) {
  Scene scene;
  std::set<std::string> scenarioNames;
  std::set<std::string> areaIds;
  Scenario* scenario = nullptr;
  Area* area = nullptr;
  bool sawStart = false;

  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string l = trim(raw);
    if (l.empty()) continue;

    if (l.front() == '[') {
      if (l.back() != ']') fail(line, "unterminated section header");
      std::istringstream head(l.substr(1, l.size() - 2));
      std::string kind, name, extra;
      head >> kind >> name;
      if (name.empty() || (head >> extra)) fail(line, "section needs exactly one name");
      if (kind == "scenario") {
        if (!scenarioNames.insert(name).second) {
          throw Error(Errc::DuplicateId, "line " + std::to_string(line) + ": scenario '" + name + "'");
        }
        scene.scenarios.push_back({});
        scenario = &scene.scenarios.back();
        scenario->name = name;
        scenario->startX = scenario->bounds.x + scenario->bounds.w / 2.0;
        scenario->startY = scenario->bounds.y + scenario->bounds.h / 2.0;
        area = nullptr;
        sawStart = false;
      } else if (kind == "area") {
        if (!scenario) fail(line, "area outside a scenario");
        if (!areaIds.insert(name).second) {
          throw Error(Errc::DuplicateId, "line " + std::to_string(line) + ": area '" + name + "'");
        }
        scenario->areas.push_back({});
        area = &scenario->areas.back();
        area->id = name;
        area->line = line;
      } else {
        fail(line, "unknown section '" + kind + "'");
      }
      continue;
    }

    const auto eq = l.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    const std::string key = trim(l.substr(0, eq));
    const std::string value = trim(l.substr(eq + 1));
    if (key.empty()) fail(line, "empty key");

    if (!scenario) {
      if (key == "format") {
        const auto v = numbers(value, 1, line);
        if (v[0] != 1.0) fail(line, "unsupported format " + value);
        scene.format = 1;
      } else {
        scene.warnings.push_back("line " + std::to_string(line) + ": unknown key '" + key + "'");
      }
      continue;
    }

    if (!area) {
      if (key == "seed") {
        try {
          std::size_t used = 0;
          if (value.empty() || value.front() == '-') throw std::invalid_argument(value);
          scenario->seed = std::stoull(value, &used);
          if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
          fail(line, "seed must be a non-negative integer");
        }
      } else if (key == "bounds") {
        const auto v = numbers(value, 4, line);
        if (!(v[2] > 0.0 && v[3] > 0.0)) fail(line, "bounds need positive size");
        scenario->bounds = {v[0], v[1], v[2], v[3]};
        if (!sawStart) {
          scenario->startX = v[0] + v[2] / 2.0;
          scenario->startY = v[1] + v[3] / 2.0;
        }
      } else if (key == "start") {
        const auto v = numbers(value, 2, line);
        scenario->startX = v[0];
        scenario->startY = v[1];
        sawStart = true;
      } else {
        scene.warnings.push_back("line " + std::to_string(line) + ": unknown key '" + key + "'");
      }
      continue;
    }

    if (key == "model") {
      if (value.empty()) fail(line, "empty model name");
      area->model = value;
    } else if (key == "rect") {
      if (area->randomized) fail(line, "area has both rect and random");
      const auto v = numbers(value, 4, line);
      if (!(v[2] > 0.0 && v[3] > 0.0)) fail(line, "rect needs positive size");
      area->rect = {v[0], v[1], v[2], v[3]};
    } else if (key == "random") {
      if (area->rect.w > 0.0 && !area->randomized) fail(line, "area has both rect and random");
      const auto v = numbers(value, 2, line);
      if (!(v[0] > 0.0 && v[1] > 0.0)) fail(line, "random needs positive size");
      area->rect = {0.0, 0.0, v[0], v[1]};
      area->randomized = true;
    } else if (key == "image") {
      area->image = value;
    } else if (key == "neutral") {
      area->neutral = boolean(value, line);
    } else if (key.rfind("params.", 0) == 0 && key.size() > 7) {
      area->params[key.substr(7)] = value;
    } else {
      scene.warnings.push_back("line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }

  for (auto& s : scene.scenarios) {
    for (const auto& a : s.areas) {
      if (!a.randomized && !(a.rect.w > 0.0)) fail(a.line, "area '" + a.id + "' has no placement");
    }
    resolve(s);
  }
  return scene;
}

Scene loadScene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parseScene(buf.str());
}

}  // namespace tactwin::scene
