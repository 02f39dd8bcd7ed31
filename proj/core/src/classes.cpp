#include "det6d/classes.hpp"

#include <array>
#include <utility>

namespace det6d {

namespace {

constexpr std::array<std::pair<int, std::string_view>, 9> kNames{{
    {kBackground, "Background"},
    {kCar, "Car"},
    {kPedestrian, "Pedestrian"},
    {kCyclist, "Cyclist"},
    {kVan, "Van"},
    {kTruck, "Truck"},
    {kPersonSitting, "Person_sitting"},
    {kTram, "Tram"},
    {kMisc, "Misc"},
}};

}  // namespace

std::string class_name(int id) {
  for (const auto& [k, name] : kNames) {
    if (k == id) return std::string(name);
  }
  return "Class" + std::to_string(id);
}

std::optional<int> class_from_name(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

}  // namespace det6d
