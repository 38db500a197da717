#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pdf/object.hpp"

namespace citeassist::pdf {

// One decoding stage: filter name plus its (already resolved) parameters.
struct FilterStage {
  std::string name;
  Dict params;
};

// Applies each stage in order. Throws MalformedPdf for corrupt data and for
// filters that only carry image data (DCT, JPX, JBIG2, CCITT).
std::string apply_filters(std::string data, const std::vector<FilterStage>& stages);

std::string flate_decode(std::string_view data);
std::string flate_encode(std::string_view data);

}  // namespace citeassist::pdf
