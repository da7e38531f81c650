#ifndef DNSREFL_RENDER_HPP
#define DNSREFL_RENDER_HPP

#include <cstdint>
#include <vector>

#include "dnsrefl/matrix.hpp"

namespace dnsrefl {

/// Binary PGM (P5) image of a feature matrix: 0 renders black, 1 white,
/// each cell becomes a scale x scale block, timestamp row on top. Output is
/// byte-exact for a given matrix and scale.
std::vector<uint8_t> render_pgm(const FeatureMatrix& m, int scale = 4);

} // namespace dnsrefl

#endif
