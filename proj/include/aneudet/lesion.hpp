#pragma once

#include <map>
#include <string>

#include "aneudet/geometry.hpp"

namespace aneudet {

// Free-form stratification labels (size_class, location, site, sah, ...).
using Labels = std::map<std::string, std::string>;

struct Lesion {
  BoundingBox box;
  Labels labels;

  friend bool operator==(const Lesion&, const Lesion&) = default;
};

}  // namespace aneudet
