#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace det6d {

/// Class ids shared by every format. 0 is background.
enum ClassId : int {
  kBackground = 0,
  kCar = 1,
  kPedestrian = 2,
  kCyclist = 3,
  kVan = 4,
  kTruck = 5,
  kPersonSitting = 6,
  kTram = 7,
  kMisc = 8,
};

std::string class_name(int id);
std::optional<int> class_from_name(std::string_view name);

}  // namespace det6d
