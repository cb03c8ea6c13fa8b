#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "compsnn/trajectory.hpp"

namespace compsnn {

/// Row-major 2D array.
template <typename T>
struct Raster {
  std::size_t rows{0};
  std::size_t cols{0};
  std::vector<T> values;

  Raster() = default;
  Raster(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), values(r * c, fill) {}

  T& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

struct Cell {
  std::size_t row{0};
  std::size_t col{0};

  friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct GridBounds {
  double x_min{0.0};
  double x_max{0.0};
  double y_min{0.0};
  double y_max{0.0};
};

/// Occupancy counts of a trajectory set. Row index grows with y, column
/// index with x.
struct DensityGrid {
  GridBounds bounds;
  double cell_size{1.0};
  Raster<double> counts;

  [[nodiscard]] std::size_t rows() const noexcept { return counts.rows; }
  [[nodiscard]] std::size_t cols() const noexcept { return counts.cols; }

  /// Cell containing (x, y), or nullopt outside the bounds.
  [[nodiscard]] std::optional<Cell> cell_of(double x, double y) const noexcept;
  /// Nearest cell, clamping positions outside the bounds onto the border.
  [[nodiscard]] Cell clamped_cell_of(double x, double y) const noexcept;
  [[nodiscard]] double center_x(std::size_t col) const noexcept;
  [[nodiscard]] double center_y(std::size_t row) const noexcept;
};

/// Cell size giving roughly `target_cells` cells along the longer side of
/// the samples' bounding box.
double default_cell_size(std::span<const RawTrajectory> trajectories, double target_cells = 100.0);

/// Counts samples per cell. Bounds are the samples' bounding box padded by
/// one cell on every side.
DensityGrid build_density_grid(std::span<const RawTrajectory> trajectories, double cell_size);

/// Elementwise 1 / (counts + 1).
Raster<double> invert_density(const DensityGrid& grid);

/// Cells with positive count that are >= each of their 8 neighbours. The
/// candidates are visited by decreasing count, ties by (row, col), and a
/// candidate is dropped when an already kept maximum lies at Chebyshev
/// distance < `min_separation`.
std::vector<Cell> find_local_maxima(const DensityGrid& grid, std::size_t min_separation = 3);

inline constexpr std::int32_t kUnassigned = -1;

struct SegmentLabels {
  Raster<std::int32_t> labels;
  std::vector<Cell> seeds;

  [[nodiscard]] std::size_t node_count() const noexcept { return seeds.size(); }
};

/// Seeded priority-flood over 4-connected masked cells. Cells are expanded in
/// ascending surface value (ties by insertion order); a cell takes the label
/// of the first front that reaches it. Seed i gets id i. Masked cells not
/// connected to any seed stay kUnassigned.
SegmentLabels watershed(const Raster<double>& surface, std::span<const Cell> seeds, const Raster<std::uint8_t>& mask);

/// Cells with positive count.
Raster<std::uint8_t> occupancy_mask(const DensityGrid& grid);

/// Full segmentation: local maxima, plus one extra seed (the highest-count
/// cell) for every 4-connected component of the mask that holds no maximum,
/// flooded over the inverse density. Every occupied cell ends up labelled.
SegmentLabels segment_density(const DensityGrid& grid, std::size_t min_separation = 3);

nlohmann::json density_to_json(const DensityGrid& grid, const SegmentLabels* labels = nullptr);
DensityGrid density_grid_from_json(const nlohmann::json& doc);
SegmentLabels segment_labels_from_json(const nlohmann::json& doc);

}  // namespace compsnn
