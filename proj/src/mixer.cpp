#include "lidomaug/mixer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lidomaug/error.hpp"

namespace lidomaug {

void validate_sectors(std::span<const Sector> sectors, std::size_t n_sources) {
  require(!sectors.empty(), "sector list is empty");
  require(std::abs(sectors.front().begin) <= kSectorTolerance, "sectors must start at azimuth 0");
  require(std::abs(sectors.back().end - kTwoPi) <= kSectorTolerance, "sectors must end at azimuth 2*pi");
  for (std::size_t i = 0; i < sectors.size(); ++i) {
    const auto& s = sectors[i];
    require(std::isfinite(s.begin) && std::isfinite(s.end) && s.begin <= s.end,
            "sector " + std::to_string(i) + " is inverted");
    require(s.source < n_sources, "sector " + std::to_string(i) + " refers to a missing source");
    if (i > 0) {
      require(std::abs(s.begin - sectors[i - 1].end) <= kSectorTolerance,
              "sectors " + std::to_string(i - 1) + " and " + std::to_string(i) + " overlap or leave a gap");
    }
  }
}

std::size_t sector_of_column(std::span<const Sector> sectors, int col, int width) {
  const double azimuth = (col + 0.5) * kTwoPi / width;
  for (std::size_t i = 0; i < sectors.size(); ++i) {
    if (azimuth < sectors[i].end || i + 1 == sectors.size()) return i;
  }
  return sectors.size() - 1;
}

RangeMap mix(std::span<const RangeMap> maps, std::span<const Sector> sectors) {
  require(!maps.empty(), "mix needs at least one map");
  for (const auto& m : maps) {
    require(m.config == maps.front().config, "mix: all range maps must share one sensor config");
  }
  validate_sectors(sectors, maps.size());

  RangeMap out(maps.front().config);
  const int width = out.width();
  for (int col = 0; col < width; ++col) {
    const RangeMap& from = maps[sectors[sector_of_column(sectors, col, width)].source];
    for (int row = 0; row < out.height(); ++row) {
      const std::size_t i = out.index(row, col);
      out.copy_pixel(from, i, i);
    }
  }
  return out;
}

std::vector<Sector> sectors_from_cuts(std::span<const double> cuts, std::size_t n_sources) {
  require(n_sources >= 1, "sectors need at least one source");
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    require(cuts[i] >= 0.0 && cuts[i] <= kTwoPi, "sector cuts must lie in [0, 2pi]");
    require(i == 0 || cuts[i - 1] <= cuts[i], "sector cuts must be sorted");
  }
  std::vector<Sector> sectors;
  double begin = 0.0;
  for (std::size_t i = 0; i <= cuts.size(); ++i) {
    const double end = i < cuts.size() ? cuts[i] : kTwoPi;
    sectors.push_back({begin, end, i % n_sources});
    begin = end;
  }
  return sectors;
}

std::vector<Sector> sample_sectors(UniformSource& rng, std::size_t n_sources) {
  require(n_sources >= 1, "sample_sectors needs at least one source");
  std::vector<double> cuts;
  cuts.reserve(n_sources - 1);
  for (std::size_t i = 0; i + 1 < n_sources; ++i) cuts.push_back(rng.next_unit() * kTwoPi);
  std::sort(cuts.begin(), cuts.end());
  return sectors_from_cuts(cuts, n_sources);
}

}  // namespace lidomaug
