#pragma once

#include <string>
#include <vector>

#include "mpa/core/types.hpp"

namespace mpa::core {

/// Scans `<root>/images/*.png` (ids = file stems, sorted) and pairs each
/// with `<root>/masks/<id>.png` when that file exists. Throws
/// std::runtime_error if the images directory is missing or empty.
std::vector<SampleRecord> list_dataset(const std::string& root);

}  // namespace mpa::core
