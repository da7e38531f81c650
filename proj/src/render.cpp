#include "dnsrefl/render.hpp"

#include <cmath>
#include <string>

namespace dnsrefl {

std::vector<uint8_t> render_pgm(const FeatureMatrix& m, int scale) {
    if (scale < 1)
        throw Error("scale must be at least 1");
    const size_t w = kWindowCols * static_cast<size_t>(scale);
    const size_t h = kFeatureRows * static_cast<size_t>(scale);

    const std::string header =
        "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    std::vector<uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + w * h);

    for (size_t r = 0; r < kFeatureRows; ++r) {
        for (int sy = 0; sy < scale; ++sy) {
            for (size_t c = 0; c < kWindowCols; ++c) {
                const auto px = static_cast<uint8_t>(std::lround(m.cell(r, c) * 255.0));
                for (int sx = 0; sx < scale; ++sx)
                    out.push_back(px);
            }
        }
    }
    return out;
}

} // namespace dnsrefl
