#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace sipm {

/// Rectangular cell array with 4-neighbour (von Neumann) connectivity and
/// open boundaries. Corner cells have 2 neighbours, edge cells 3,
/// interior cells 4.
class Geometry {
public:
    Geometry(int rows, int cols);

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    int cell_count() const noexcept { return rows_ * cols_; }

    /// Neighbour in direction d (0=up, 1=down, 2=left, 3=right); -1 outside.
    int neighbour(int cell, int dir) const noexcept { return nbr_[cell][dir]; }
    int degree(int cell) const noexcept { return degree_[cell]; }

    int cell_index(int row, int col) const noexcept { return row * cols_ + col; }
    int row_of(int cell) const noexcept { return cell / cols_; }
    int col_of(int cell) const noexcept { return cell % cols_; }

    long long directed_pair_count() const noexcept;

    static constexpr int kDirections = 4;

private:
    int rows_;
    int cols_;
    std::vector<std::array<int, 4>> nbr_;
    std::vector<std::uint8_t> degree_;
};

} // namespace sipm
