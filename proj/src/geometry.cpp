#include "sipm/geometry.hpp"

#include <stdexcept>

namespace sipm {

Geometry::Geometry(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("Geometry: rows and cols must be >= 1");
    nbr_.resize(static_cast<std::size_t>(rows) * cols);
    degree_.resize(nbr_.size());
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int cell = cell_index(r, c);
            auto& n = nbr_[cell];
            n[0] = r > 0 ? cell - cols : -1;
            n[1] = r < rows - 1 ? cell + cols : -1;
            n[2] = c > 0 ? cell - 1 : -1;
            n[3] = c < cols - 1 ? cell + 1 : -1;
            int deg = 0;
            for (int d : n)
                if (d >= 0) ++deg;
            degree_[cell] = static_cast<std::uint8_t>(deg);
        }
    }
}

long long Geometry::directed_pair_count() const noexcept {
    long long total = 0;
    for (auto d : degree_) total += d;
    return total;
}

} // namespace sipm
