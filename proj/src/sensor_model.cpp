#include "lidomaug/sensor_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "lidomaug/error.hpp"
#include "lidomaug/keyvalue.hpp"

namespace lidomaug {

void LidarConfig::validate() const {
  require(channels >= 1, "channels must be >= 1");
  require(width >= 1, "width must be >= 1");
  require(std::isfinite(fov_up) && std::isfinite(fov_down), "field of view must be finite");
  require(fov_up >= 0.0 && fov_up <= kPi / 2, "fov_up must lie in [0, pi/2]");
  require(fov_down <= 0.0 && fov_down >= -kPi / 2, "fov_down must lie in [-pi/2, 0]");
  require(fov_up > fov_down && fov() > 0.0, "vertical field of view must be non-empty");
  require(max_range > 0.0 && std::isfinite(max_range), "max_range must be positive");
  require(spin_rate_hz > 0.0 && std::isfinite(spin_rate_hz), "spin rate must be positive");
}

namespace {

struct PresetRow {
  const char* name;
  int channels;
  int width;
  double fov_up_deg;
  double fov_down_deg;
  double max_range;
  double spin_hz;
};

// Velodyne HDL-64E / HDL-32E / VLP-16, Ouster OS-1 64 / 128.
constexpr std::array<PresetRow, 5> kPresets{{
    {"V64", 64, 2048, 2.0, -24.9, 120.0, 20.0},
    {"V32", 32, 2048, 10.67, -30.67, 100.0, 20.0},
    {"V16", 16, 2048, 15.0, -15.0, 100.0, 20.0},
    {"O64", 64, 1024, 22.5, -22.5, 120.0, 20.0},
    {"O128", 128, 1024, 22.5, -22.5, 120.0, 20.0},
}};

}  // namespace

LidarConfig preset(std::string_view name) {
  for (const auto& row : kPresets) {
    if (name == row.name) {
      LidarConfig c;
      c.channels = row.channels;
      c.width = row.width;
      c.fov_up = deg_to_rad(row.fov_up_deg);
      c.fov_down = deg_to_rad(row.fov_down_deg);
      c.max_range = row.max_range;
      c.spin_rate_hz = row.spin_hz;
      return c;
    }
  }
  fail(ErrorKind::kInvalidArgument, "unknown sensor preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& row : kPresets) names.emplace_back(row.name);
  return names;
}

LidarConfig parse_sensor_description(std::string_view text) {
  const auto kv = KeyValueText::parse(text);
  kv.check_keys({"channels", "width", "fov_up_deg", "fov_down_deg", "max_range_m", "spin_hz"});
  LidarConfig c;
  const long long channels = kv.get_int("channels");
  const long long width = kv.get_int("width");
  require(channels >= 1 && channels <= 1 << 16, "channels out of range");
  require(width >= 1 && width <= 1 << 20, "width out of range");
  c.channels = static_cast<int>(channels);
  c.width = static_cast<int>(width);
  c.fov_up = deg_to_rad(kv.get_double("fov_up_deg"));
  c.fov_down = deg_to_rad(kv.get_double("fov_down_deg"));
  if (kv.has("max_range_m")) c.max_range = kv.get_double("max_range_m");
  if (kv.has("spin_hz")) c.spin_rate_hz = kv.get_double("spin_hz");
  c.validate();
  return c;
}

LidarConfig load_sensor_description(const std::string& path) { return parse_sensor_description(read_text_file(path)); }

std::string format_sensor_description(const LidarConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "channels = " << c.channels << "\n"
     << "width = " << c.width << "\n"
     << "fov_up_deg = " << rad_to_deg(c.fov_up) << "\n"
     << "fov_down_deg = " << rad_to_deg(c.fov_down) << "\n"
     << "max_range_m = " << c.max_range << "\n"
     << "spin_hz = " << c.spin_rate_hz << "\n";
  return os.str();
}

namespace {

inline double column_of(double azimuth, double width) { return 0.5 * (1.0 - azimuth / kPi) * width; }

inline double row_of(double elevation, double fov_down, double fov, double height) {
  return (1.0 - (elevation - fov_down) / fov) * height;
}

}  // namespace

Projection project(const Vec3& p, const LidarConfig& config) {
  const double r = norm_of(p);
  require(r > 0.0, "cannot project the sensor origin");
  const double width = config.width;
  double u = column_of(std::atan2(p.y(), p.x()), width);
  if (u >= width) u -= width;
  const double v = row_of(std::asin(p.z() / r), config.fov_down, config.fov(), config.channels);
  return {u, v, r};
}

Vec3 back_project(double u, double v, double r, const LidarConfig& config) {
  require(r > 0.0, "back-projection needs a positive range");
  require(v >= 0.0 && v <= config.channels, "row outside the vertical field of view");
  const double azimuth = kPi * (1.0 - 2.0 * u / config.width);
  const double elevation = config.fov_down + (1.0 - v / config.channels) * config.fov();
  const double ce = std::cos(elevation);
  return Vec3(r * ce * std::cos(azimuth), r * ce * std::sin(azimuth), r * std::sin(elevation));
}

namespace {

inline double atan_poly(double q) {
  const double q2 = q * q;
  // Odd minimax fit of atan on [0, 1], |error| < 6e-9.
  double a = 0.0024567254290276536;
  a = a * q2 - 0.014401361605119947;
  a = a * q2 + 0.03978123021353994;
  a = a * q2 - 0.07234858004448598;
  a = a * q2 + 0.10498946424840516;
  a = a * q2 - 0.1416122930170707;
  a = a * q2 + 0.1998590678407478;
  a = a * q2 - 0.333325970294672;
  a = a * q2 + 0.9999998863833145;
  return a * q;
}

inline double asin_poly(double s) {
  const double s2 = s * s;
  // Odd minimax fit of asin on [0, 0.5], |error| < 1.2e-9.
  double a = 0.04506129932756193;
  a = a * s2 + 0.02218533462452666;
  a = a * s2 + 0.045970012322826576;
  a = a * s2 + 0.07489820242819453;
  a = a * s2 + 0.16666997455538407;
  a = a * s2 + 0.999999969433614;
  return a * s;
}

// Branch-free so that loops over it vectorize.
inline double atan2_poly(double y, double x) {
  const double ax = std::abs(x);
  const double ay = std::abs(y);
  const double mx = std::max(ax, ay);
  const double mn = std::min(ax, ay);
  const double q = mn / (mx > 0.0 ? mx : 1.0);
  double a = atan_poly(q);
  a = ay > ax ? kPi / 2 - a : a;
  a = x < 0.0 ? kPi - a : a;
  return std::copysign(a, y);
}

struct ApproxParams {
  double width, height, inv_fov, fov_down;
  double col_margin, row_margin, sin_min, sin_max;
};

constexpr double kCulled = -1.0;
constexpr double kNeedsExact = -2.0;

// Pixel code of one point: row * W + col when the fast path is certain,
// kCulled or kNeedsExact otherwise. Branch-free so that loops over it
// vectorize; the polynomial values only feed margin-checked floors, so the
// instruction set picked at load time cannot change the output.
inline double pixel_code(double x, double y, double z, double rr, const ApproxParams& k) {
  const double ss = z / rr;
  const double v = (1.0 - (asin_poly(ss) - k.fov_down) * k.inv_fov) * k.height;
  const double u = 0.5 * (1.0 - atan2_poly(y, x) * (1.0 / kPi)) * k.width;
  const double row = std::floor(v - k.row_margin);
  const double col = std::floor(u - k.col_margin);
  const bool culled = !(rr > 0.0) | (ss < k.sin_min) | (ss > k.sin_max);
  const bool row_exact = (std::abs(ss) > 0.5) | ((x == 0.0) & (y == 0.0)) | (row != std::floor(v + k.row_margin));
  const bool row_out = (row < 0.0) | (row >= k.height);
  const bool col_exact = (col != std::floor(u + k.col_margin)) | (col < 0.0) | (col >= k.width);
  double c = row * k.width + col;
  c = col_exact ? kNeedsExact : c;
  c = row_out ? kCulled : c;
  c = row_exact ? kNeedsExact : c;
  return culled ? kCulled : c;
}

// `p` holds n interleaved xyz triples. Writes the (transformed) coordinates,
// ranges and pixel codes.
__attribute__((target_clones("avx2", "default"))) void approx_block(std::size_t n, const double* __restrict p,
                                                                    double* __restrict x, double* __restrict y,
                                                                    double* __restrict z, double* __restrict r,
                                                                    double* __restrict code, ApproxParams k) {
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = p[3 * i];
    y[i] = p[3 * i + 1];
    z[i] = p[3 * i + 2];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double rr = std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
    r[i] = rr;
    code[i] = pixel_code(x[i], y[i], z[i], rr, k);
  }
}

// As approx_block after applying the row-major [R|t] in `m`, with the same
// operation order as Pose::apply.
__attribute__((target_clones("avx2", "default"))) void approx_block_posed(std::size_t n, const double* __restrict p,
                                                                          const double* __restrict m,
                                                                          double* __restrict x, double* __restrict y,
                                                                          double* __restrict z, double* __restrict r,
                                                                          double* __restrict code, ApproxParams k) {
  for (std::size_t i = 0; i < n; ++i) {
    const double px = p[3 * i], py = p[3 * i + 1], pz = p[3 * i + 2];
    x[i] = m[0] * px + m[1] * py + m[2] * pz + m[3];
    y[i] = m[4] * px + m[5] * py + m[6] * pz + m[7];
    z[i] = m[8] * px + m[9] * py + m[10] * pz + m[11];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double rr = std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
    r[i] = rr;
    code[i] = pixel_code(x[i], y[i], z[i], rr, k);
  }
}

}  // namespace

double fast_atan2(double y, double x) { return atan2_poly(y, x); }

double fast_asin(double s) { return asin_poly(s); }

PixelLocator::PixelLocator(const LidarConfig& config) : config_(config) {
  config_.validate();
  require(config_.pixel_count() < kNoPixel, "range map too large for 32-bit pixel indices");
  width_ = config_.width;
  height_ = config_.channels;
  fov_ = config_.fov();
  col_margin_ = kAngleErrorBound * width_ / kTwoPi + 1e-9;
  row_margin_ = kAngleErrorBound * height_ / fov_ + 1e-9;
  // Conservative cull on z/r: anything outside is certainly out of the FOV.
  sin_min_ = std::sin(config_.fov_down) - 1e-6;
  sin_max_ = std::sin(config_.fov_up) + 1e-6;
}

std::optional<PixelHit> PixelLocator::locate_exact(const Vec3& p) const {
  const Projection pr = project(p, config_);
  const double row = std::floor(pr.v);
  if (!(row >= 0.0 && row < height_)) return std::nullopt;
  int col = static_cast<int>(std::floor(pr.u));
  if (col >= config_.width) col -= config_.width;
  return PixelHit{static_cast<int>(row), col, pr.r};
}

std::optional<PixelHit> PixelLocator::locate(const Vec3& p) const {
  const double r = norm_of(p);
  if (r == 0.0) return std::nullopt;
  const double s = p.z() / r;
  if (s < sin_min_ || s > sin_max_) return std::nullopt;
  if (std::abs(s) > 0.5 || (p.x() == 0.0 && p.y() == 0.0)) return locate_exact(p);

  const double v = row_of(asin_poly(s), config_.fov_down, fov_, height_);
  const double row = std::floor(v - row_margin_);
  if (row != std::floor(v + row_margin_)) return locate_exact(p);
  if (row < 0.0 || row >= height_) return std::nullopt;

  const double u = column_of(atan2_poly(p.y(), p.x()), width_);
  const double col = std::floor(u - col_margin_);
  if (col != std::floor(u + col_margin_) || col < 0.0 || col >= width_) return locate_exact(p);

  return PixelHit{static_cast<int>(row), static_cast<int>(col), r};
}

void PixelLocator::locate_batch(std::span<const Vec3> points, const Pose* pose, std::uint32_t* pixel,
                                double* range) const {
  static_assert(sizeof(Vec3) == 3 * sizeof(double));
  constexpr std::size_t kBlock = 256;
  alignas(64) double x[kBlock], y[kBlock], z[kBlock], code[kBlock];
  const ApproxParams params{width_, height_, 1.0 / fov_, config_.fov_down, col_margin_, row_margin_, sin_min_, sin_max_};
  const auto width = static_cast<std::uint32_t>(config_.width);

  double m[12];
  if (pose) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) m[4 * i + j] = pose->rotation()(i, j);
      m[4 * i + 3] = pose->translation()(i);
    }
  }

  for (std::size_t base = 0; base < points.size(); base += kBlock) {
    const std::size_t n = std::min(kBlock, points.size() - base);
    const double* xyz = points[base].data();
    double* out_range = range + base;
    if (pose) {
      approx_block_posed(n, xyz, m, x, y, z, out_range, code, params);
    } else {
      approx_block(n, xyz, x, y, z, out_range, code, params);
    }

    std::uint32_t* out_pixel = pixel + base;
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::int64_t>(code[i]);
      out_pixel[i] = c >= 0 ? static_cast<std::uint32_t>(c) : kNoPixel;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (code[i] != kNeedsExact) [[likely]]
        continue;
      const auto hit = locate_exact(Vec3(x[i], y[i], z[i]));
      if (hit) out_pixel[i] = static_cast<std::uint32_t>(hit->row) * width + static_cast<std::uint32_t>(hit->col);
    }
  }
}

PixelRays::PixelRays(const LidarConfig& config) {
  config.validate();
  cos_az_.resize(config.width);
  sin_az_.resize(config.width);
  for (int c = 0; c < config.width; ++c) {
    const double azimuth = kPi * (1.0 - 2.0 * (c + 0.5) / config.width);
    cos_az_[c] = std::cos(azimuth);
    sin_az_[c] = std::sin(azimuth);
  }
  cos_el_.resize(config.channels);
  sin_el_.resize(config.channels);
  for (int r = 0; r < config.channels; ++r) {
    const double elevation = config.fov_down + (1.0 - (r + 0.5) / config.channels) * config.fov();
    cos_el_[r] = std::cos(elevation);
    sin_el_[r] = std::sin(elevation);
  }
}

RangeMap::RangeMap(const LidarConfig& cfg) : config(cfg) {
  config.validate();
  const std::size_t n = config.pixel_count();
  range.assign(n, kInvalidRange);
  label.assign(n, kUnlabeled);
  intensity.assign(n, 0.0f);
  source.assign(n, kNoSource);
  point.assign(n, kNoPoint);
  valid.assign(n, 0);
}

std::size_t RangeMap::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

void RangeMap::clear_pixel(std::size_t i) {
  range[i] = kInvalidRange;
  label[i] = kUnlabeled;
  intensity[i] = 0.0f;
  source[i] = kNoSource;
  point[i] = kNoPoint;
  valid[i] = 0;
}

void RangeMap::check_invariants() const {
  const std::size_t n = config.pixel_count();
  require(range.size() == n && label.size() == n && intensity.size() == n && source.size() == n &&
              point.size() == n && valid.size() == n,
          "range map channels do not match H*W");
  for (std::size_t i = 0; i < n; ++i) {
    const bool in_range = range[i] > 0.0 && range[i] <= config.max_range;
    require((valid[i] != 0) == in_range, "range map pixel " + std::to_string(i) + " violates valid <=> range invariant");
  }
}

}  // namespace lidomaug
