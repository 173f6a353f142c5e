#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lidomaug/random.hpp"
#include "lidomaug/sensor_model.hpp"

namespace lidomaug {

/// Half-open azimuth arc [begin, end) measured from the scan start (column 0)
/// in radians, owned by input map `source`.
struct Sector {
  double begin = 0.0;
  double end = kTwoPi;
  std::size_t source = 0;

  bool operator==(const Sector&) const = default;
};

/// Tolerance for the sectors-cover-[0, 2π) check.
inline constexpr double kSectorTolerance = 1e-12;

/// Throws unless `sectors` are contiguous, non-overlapping and cover
/// [0, 2π) (within kSectorTolerance) and every source is < n_sources.
void validate_sectors(std::span<const Sector> sectors, std::size_t n_sources);

/// Index of the sector owning column `col`, decided by the column's center
/// azimuth (col + ½)·2π/W.
std::size_t sector_of_column(std::span<const Sector> sectors, int col, int width);

/// Scene/sensor-level mix: every output pixel is copied unchanged from the map
/// owning its column. All maps must share one config.
RangeMap mix(std::span<const RangeMap> maps, std::span<const Sector> sectors);

/// Arcs [0, c₀), [c₀, c₁), …, [c_last, 2π); arc i goes to source i mod
/// n_sources. Cuts must be sorted and lie in [0, 2π].
std::vector<Sector> sectors_from_cuts(std::span<const double> cuts, std::size_t n_sources);

/// n_sources − 1 uniform cuts in [0, 2π), sorted; arc i goes to source
/// i mod n_sources.
std::vector<Sector> sample_sectors(UniformSource& rng, std::size_t n_sources = 2);

}  // namespace lidomaug
