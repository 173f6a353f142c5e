#include "lidomaug/dataset_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "lidomaug/error.hpp"
#include "lidomaug/keyvalue.hpp"

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace lidomaug {
namespace fs = std::filesystem;

namespace {

std::vector<char> read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path);
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<char> bytes(size);
  if (size > 0 && !in.read(bytes.data(), static_cast<std::streamsize>(size))) {
    fail(ErrorKind::kIo, "failed reading " + path);
  }
  return bytes;
}

void write_binary(const std::string& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot open " + path + " for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) fail(ErrorKind::kIo, "failed writing " + path);
}

void write_text(const std::string& path, const std::string& text) { write_binary(path, text.data(), text.size()); }

template <typename T>
void put(std::vector<char>& buf, const T& v) {
  const auto* p = reinterpret_cast<const char*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

template <typename T>
void put_array(std::vector<char>& buf, const std::vector<T>& v) {
  const auto* p = reinterpret_cast<const char*>(v.data());
  buf.insert(buf.end(), p, p + v.size() * sizeof(T));
}

/// Bounds-checked little-endian reader over a byte buffer.
class Reader {
 public:
  Reader(const std::vector<char>& bytes, std::string path) : bytes_(bytes), path_(std::move(path)) {}

  template <typename T>
  T get() {
    T v;
    take(&v, sizeof(T));
    return v;
  }

  template <typename T>
  std::vector<T> get_array(std::uint64_t count) {
    if (count > (bytes_.size() - pos_) / sizeof(T)) truncated();
    std::vector<T> v(static_cast<std::size_t>(count));
    take(v.data(), v.size() * sizeof(T));
    return v;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void take(void* out, std::size_t n) {
    if (n > bytes_.size() - pos_) truncated();
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  [[noreturn]] void truncated() const { fail(ErrorKind::kFormat, path_ + ": truncated file"); }

  const std::vector<char>& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    fn(line_no, line);
  }
}

}  // namespace

// ---------------------------------------------------------------------------

PointCloud read_scan(const std::string& path) {
  const auto bytes = read_binary(path);
  if (bytes.size() % 16 != 0) {
    fail(ErrorKind::kFormat, path + ": size " + std::to_string(bytes.size()) +
                                 " is not a multiple of 16 bytes (x, y, z, intensity float32 records)");
  }
  const std::size_t n = bytes.size() / 16;
  PointCloud cloud;
  cloud.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    float rec[4];
    std::memcpy(rec, bytes.data() + i * 16, 16);
    cloud.push_back(Vec3(rec[0], rec[1], rec[2]), rec[3], kUnlabeled, 0);
  }
  return cloud;
}

void write_scan(const PointCloud& cloud, const std::string& path) {
  cloud.check_consistent();
  std::vector<float> data;
  data.reserve(cloud.size() * 4);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    data.push_back(static_cast<float>(cloud.points[i].x()));
    data.push_back(static_cast<float>(cloud.points[i].y()));
    data.push_back(static_cast<float>(cloud.points[i].z()));
    data.push_back(cloud.intensity[i]);
  }
  write_binary(path, data.data(), data.size() * sizeof(float));
}

std::vector<std::uint32_t> read_labels(const std::string& path, std::optional<std::size_t> expected_count) {
  const auto bytes = read_binary(path);
  if (bytes.size() % 4 != 0) {
    fail(ErrorKind::kFormat, path + ": size " + std::to_string(bytes.size()) + " is not a multiple of 4 bytes");
  }
  std::vector<std::uint32_t> raw(bytes.size() / 4);
  if (!raw.empty()) std::memcpy(raw.data(), bytes.data(), bytes.size());
  if (expected_count && raw.size() != *expected_count) {
    fail(ErrorKind::kFormat, path + ": " + std::to_string(raw.size()) + " labels for a scan of " +
                                 std::to_string(*expected_count) + " points");
  }
  return raw;
}

void write_labels(std::span<const std::uint32_t> raw, const std::string& path) {
  write_binary(path, raw.data(), raw.size() * sizeof(std::uint32_t));
}

std::vector<Label> semantic_classes(std::span<const std::uint32_t> raw) {
  std::vector<Label> out(raw.size());
  std::transform(raw.begin(), raw.end(), out.begin(), semantic_class);
  return out;
}

// ---------------------------------------------------------------------------

Mat3 nearest_rotation(const Mat3& m) {
  const Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

PoseFile parse_poses(std::string_view text) {
  PoseFile file;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto fields = split_fields(line);
    if (fields.empty()) return;
    const std::string where = "pose line " + std::to_string(line_no);
    if (fields.size() != 12) {
      fail(ErrorKind::kFormat, where + ": expected 12 values, found " + std::to_string(fields.size()));
    }
    double v[12];
    for (int i = 0; i < 12; ++i) v[i] = parse_double(fields[static_cast<std::size_t>(i)], where);
    Mat3 r;
    r << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    const Vec3 t(v[3], v[7], v[11]);
    if (!r.allFinite() || !t.allFinite()) fail(ErrorKind::kFormat, where + ": non-finite value");

    const double drift = std::max(Pose::orthonormality_error(r), std::abs(r.determinant() - 1.0));
    if (drift > kPoseRejectThreshold) {
      fail(ErrorKind::kFormat, where + ": rotation block is not a rotation (drift " + std::to_string(drift) + ")");
    }
    if (drift > 1e-12) {
      r = nearest_rotation(r);
      if (drift > kPoseRepairThreshold) file.repairs.push_back({line_no, drift});
    }
    file.poses.emplace_back(r, t);
  });
  return file;
}

PoseFile read_poses(const std::string& path) {
  try {
    return parse_poses(read_text_file(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void write_poses(std::span<const Pose> poses, const std::string& path) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& p : poses) {
    const Mat3& r = p.rotation();
    const Vec3& t = p.translation();
    os << r(0, 0) << ' ' << r(0, 1) << ' ' << r(0, 2) << ' ' << t.x() << ' ' << r(1, 0) << ' ' << r(1, 1) << ' '
       << r(1, 2) << ' ' << t.y() << ' ' << r(2, 0) << ' ' << r(2, 1) << ' ' << r(2, 2) << ' ' << t.z() << '\n';
  }
  write_text(path, os.str());
}

std::vector<BoxTrack> parse_tracks(std::string_view text) {
  std::map<std::int64_t, BoxTrack> by_id;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto fields = split_fields(line);
    if (fields.empty()) return;
    const std::string where = "track line " + std::to_string(line_no);
    if (fields.size() != 21) {
      fail(ErrorKind::kFormat, where + ": expected 21 values, found " + std::to_string(fields.size()));
    }
    const auto id = parse_int(fields[0], where);
    TrackEntry e;
    e.frame = parse_int(fields[1], where);
    double v[19];
    for (int i = 0; i < 19; ++i) v[i] = parse_double(fields[static_cast<std::size_t>(i + 2)], where);
    e.box.center = Vec3(v[0], v[1], v[2]);
    e.box.half_extents = Vec3(v[3], v[4], v[5]) * 0.5;
    e.box.yaw = v[6];
    double m[12];
    std::copy(v + 7, v + 19, m);
    try {
      e.motion = Pose::from_row_major(m);
    } catch (const Error& err) {
      fail(ErrorKind::kFormat, where + ": " + err.what());
    }
    auto& track = by_id[id];
    track.object_id = id;
    track.entries.push_back(e);
  });

  std::vector<BoxTrack> tracks;
  for (auto& [id, track] : by_id) {
    std::stable_sort(track.entries.begin(), track.entries.end(),
                     [](const TrackEntry& a, const TrackEntry& b) { return a.frame < b.frame; });
    try {
      track.validate();
    } catch (const Error& err) {
      fail(ErrorKind::kFormat, err.what());
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

std::vector<BoxTrack> read_tracks(const std::string& path) {
  try {
    return parse_tracks(read_text_file(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

std::string format_tracks(std::span<const BoxTrack> tracks) {
  std::ostringstream os;
  os.precision(17);
  os << "# object_id frame cx cy cz l w h yaw m00 m01 m02 m03 m10 m11 m12 m13 m20 m21 m22 m23\n";
  for (const auto& track : tracks) {
    for (const auto& e : track.entries) {
      const Vec3 size = e.box.half_extents * 2.0;
      os << track.object_id << ' ' << e.frame << ' ' << e.box.center.x() << ' ' << e.box.center.y() << ' '
         << e.box.center.z() << ' ' << size.x() << ' ' << size.y() << ' ' << size.z() << ' ' << e.box.yaw;
      const Mat3& r = e.motion.rotation();
      const Vec3& t = e.motion.translation();
      for (int row = 0; row < 3; ++row) {
        os << ' ' << r(row, 0) << ' ' << r(row, 1) << ' ' << r(row, 2) << ' ' << t(row);
      }
      os << '\n';
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kPlyRecord = 4 * sizeof(float) + sizeof(std::uint16_t);

std::string ply_header(std::size_t n) {
  return "ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(n) +
         "\nproperty float x\nproperty float y\nproperty float z\nproperty float intensity\n"
         "property ushort label\nend_header\n";
}

}  // namespace

void write_ply(const PointCloud& cloud, const std::string& path) {
  cloud.check_consistent();
  const std::string header = ply_header(cloud.size());
  std::vector<char> buf(header.begin(), header.end());
  buf.reserve(header.size() + cloud.size() * kPlyRecord);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    put(buf, static_cast<float>(cloud.points[i].x()));
    put(buf, static_cast<float>(cloud.points[i].y()));
    put(buf, static_cast<float>(cloud.points[i].z()));
    put(buf, cloud.intensity[i]);
    put(buf, static_cast<std::uint16_t>(cloud.labels[i]));
  }
  write_binary(path, buf.data(), buf.size());
}

PointCloud read_ply(const std::string& path) {
  const auto bytes = read_binary(path);
  const std::string_view all(bytes.data(), bytes.size());
  constexpr std::string_view kEnd = "end_header\n";
  const auto end = all.find(kEnd);
  if (end == std::string_view::npos) fail(ErrorKind::kFormat, path + ": missing PLY end_header");
  const std::string_view header = all.substr(0, end + kEnd.size());

  constexpr std::string_view kCountTag = "element vertex ";
  const auto at = header.find(kCountTag);
  if (at == std::string_view::npos) fail(ErrorKind::kFormat, path + ": missing vertex element");
  const auto eol = header.find('\n', at);
  const auto count = parse_int(header.substr(at + kCountTag.size(), eol - at - kCountTag.size()), path);
  if (count < 0 || header != ply_header(static_cast<std::size_t>(count))) {
    fail(ErrorKind::kFormat, path + ": unsupported PLY layout (expected x, y, z, intensity, label)");
  }
  const std::size_t n = static_cast<std::size_t>(count);
  if (bytes.size() - header.size() != n * kPlyRecord) {
    fail(ErrorKind::kFormat, path + ": vertex data size does not match the header count");
  }

  PointCloud cloud;
  cloud.reserve(n);
  const char* p = bytes.data() + header.size();
  for (std::size_t i = 0; i < n; ++i, p += kPlyRecord) {
    float f[4];
    std::uint16_t label;
    std::memcpy(f, p, sizeof f);
    std::memcpy(&label, p + sizeof f, sizeof label);
    cloud.push_back(Vec3(f[0], f[1], f[2]), f[3], label, 0);
  }
  return cloud;
}

// ---------------------------------------------------------------------------

std::uint16_t range_to_millimeters(double range, bool valid) {
  if (!valid) return 0;
  const double mm = std::round(range * 1000.0);
  if (mm >= 65535.0) return 65535;
  if (mm < 1.0) return 1;
  return static_cast<std::uint16_t>(mm);
}

namespace {

struct PngWriteHandle {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* file = nullptr;
  ~PngWriteHandle() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (file) std::fclose(file);
  }
};

struct PngReadHandle {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* file = nullptr;
  ~PngReadHandle() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (file) std::fclose(file);
  }
};

}  // namespace

void write_range_png(const RangeMap& map, const std::string& path) {
  const int w = map.width(), h = map.height();
  std::vector<std::uint16_t> pixels(map.config.pixel_count());
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = range_to_millimeters(map.range[i], map.valid[i] != 0);

  PngWriteHandle hd;
  hd.file = std::fopen(path.c_str(), "wb");
  if (!hd.file) fail(ErrorKind::kIo, "cannot open " + path + " for writing");
  hd.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (hd.png) hd.info = png_create_info_struct(hd.png);
  if (!hd.png || !hd.info) fail(ErrorKind::kIo, "libpng initialisation failed");
  if (setjmp(png_jmpbuf(hd.png))) fail(ErrorKind::kIo, "libpng failed writing " + path);

  png_init_io(hd.png, hd.file);
  png_set_IHDR(hd.png, hd.info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(hd.png, hd.info);
  png_set_swap(hd.png);  // PNG stores 16-bit samples big-endian
  for (int row = 0; row < h; ++row) {
    png_write_row(hd.png, reinterpret_cast<png_const_bytep>(pixels.data() + static_cast<std::size_t>(row) * w));
  }
  png_write_end(hd.png, nullptr);
}

Gray16Image read_png16(const std::string& path) {
  PngReadHandle hd;
  hd.file = std::fopen(path.c_str(), "rb");
  if (!hd.file) fail(ErrorKind::kIo, "cannot open " + path);
  hd.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (hd.png) hd.info = png_create_info_struct(hd.png);
  if (!hd.png || !hd.info) fail(ErrorKind::kIo, "libpng initialisation failed");
  if (setjmp(png_jmpbuf(hd.png))) fail(ErrorKind::kFormat, "libpng failed reading " + path);

  png_init_io(hd.png, hd.file);
  png_read_info(hd.png, hd.info);
  if (png_get_bit_depth(hd.png, hd.info) != 16 || png_get_color_type(hd.png, hd.info) != PNG_COLOR_TYPE_GRAY) {
    fail(ErrorKind::kFormat, path + ": not a 16-bit grayscale PNG");
  }
  png_set_swap(hd.png);
  Gray16Image img;
  img.width = static_cast<int>(png_get_image_width(hd.png, hd.info));
  img.height = static_cast<int>(png_get_image_height(hd.png, hd.info));
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (int row = 0; row < img.height; ++row) {
    png_read_row(hd.png, reinterpret_cast<png_bytep>(img.pixels.data() + static_cast<std::size_t>(row) * img.width),
                 nullptr);
  }
  png_read_end(hd.png, nullptr);
  return img;
}

// ---------------------------------------------------------------------------

void Fnv1a::update(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    state_ ^= p[i];
    state_ *= 0x100000001b3ULL;
  }
}

namespace {

constexpr char kWorldMagic[8] = {'L', 'D', 'M', 'W', 'O', 'R', 'L', 'D'};

std::vector<char> encode_world(const WorldModel& world, std::uint64_t config_hash) {
  world.cloud.check_consistent();
  const PointCloud& c = world.cloud;
  const VoxelIndex& v = world.voxels;
  require(v.member_ids().size() == c.size(), "world model voxel index is stale");

  std::vector<char> buf;
  buf.reserve(64 + c.size() * (24 + 4 + 2 + 4 + 4) + v.size() * (12 + 2 + 8));
  buf.insert(buf.end(), std::begin(kWorldMagic), std::end(kWorldMagic));
  put(buf, kWorldCacheVersion);
  put(buf, std::uint8_t{0});
  put(buf, std::uint16_t{0});
  put(buf, config_hash);
  put(buf, v.voxel_size());
  put(buf, static_cast<std::uint64_t>(c.size()));
  put(buf, static_cast<std::uint64_t>(v.size()));
  for (const auto& p : c.points) {
    put(buf, p.x());
    put(buf, p.y());
    put(buf, p.z());
  }
  put_array(buf, c.intensity);
  put_array(buf, c.labels);
  put_array(buf, c.sources);
  for (const auto& k : v.keys()) {
    put(buf, k.x);
    put(buf, k.y);
    put(buf, k.z);
  }
  put_array(buf, v.representatives());
  put_array(buf, v.offsets());
  put_array(buf, v.member_ids());
  return buf;
}

}  // namespace

void cache_world(const WorldModel& world, std::uint64_t config_hash, const std::string& path) {
  auto buf = encode_world(world, config_hash);
  Fnv1a h;
  h.update(buf.data(), buf.size());
  put(buf, h.digest());
  write_binary(path, buf.data(), buf.size());
}

CachedWorld load_world(const std::string& path) {
  const auto bytes = read_binary(path);
  Reader in(bytes, path);
  char magic[8];
  for (char& m : magic) m = in.get<char>();
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kWorldMagic))) {
    fail(ErrorKind::kFormat, path + ": not a world cache (bad magic bytes)");
  }
  const auto version = in.get<std::uint8_t>();
  if (version != kWorldCacheVersion) {
    fail(ErrorKind::kVersion, path + ": world cache version " + std::to_string(version) + ", expected " +
                                  std::to_string(kWorldCacheVersion));
  }
  in.get<std::uint8_t>();
  in.get<std::uint16_t>();

  if (bytes.size() < sizeof(std::uint64_t)) fail(ErrorKind::kFormat, path + ": truncated file");
  Fnv1a h;
  h.update(bytes.data(), bytes.size() - sizeof(std::uint64_t));
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - sizeof stored, sizeof stored);

  CachedWorld out;
  out.config_hash = in.get<std::uint64_t>();
  const auto voxel_size = in.get<double>();
  const auto n = in.get<std::uint64_t>();
  const auto nv = in.get<std::uint64_t>();
  const auto coords = in.get_array<double>(n <= SIZE_MAX / 3 ? n * 3 : SIZE_MAX);
  PointCloud& c = out.world.cloud;
  c.points.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < c.points.size(); ++i) c.points[i] = Vec3(coords[3 * i], coords[3 * i + 1], coords[3 * i + 2]);
  c.intensity = in.get_array<float>(n);
  c.labels = in.get_array<Label>(n);
  c.sources = in.get_array<std::uint32_t>(n);
  const auto raw_keys = in.get_array<std::int32_t>(nv <= SIZE_MAX / 3 ? nv * 3 : SIZE_MAX);
  std::vector<VoxelKey> keys(static_cast<std::size_t>(nv));
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = {raw_keys[3 * i], raw_keys[3 * i + 1], raw_keys[3 * i + 2]};
  auto reps = in.get_array<Label>(nv);
  auto offsets = in.get_array<std::uint64_t>(nv + 1);
  auto members = in.get_array<std::uint32_t>(n);
  if (in.remaining() != sizeof(std::uint64_t)) fail(ErrorKind::kFormat, path + ": unexpected trailing bytes");
  if (stored != h.digest()) fail(ErrorKind::kFormat, path + ": checksum mismatch (corrupt cache)");

  try {
    out.world.voxels = VoxelIndex::from_parts(voxel_size, std::move(keys), std::move(reps), std::move(offsets),
                                              std::move(members), static_cast<std::size_t>(n));
  } catch (const Error& e) {
    fail(ErrorKind::kFormat, path + ": " + e.what());
  }
  return out;
}

std::uint64_t content_hash(const WorldModel& world) {
  const auto buf = encode_world(world, 0);
  Fnv1a h;
  h.update(buf.data(), buf.size());
  return h.digest();
}

std::uint64_t content_hash(const PointCloud& cloud) {
  cloud.check_consistent();
  Fnv1a h;
  h.update_value(static_cast<std::uint64_t>(cloud.size()));
  for (const auto& p : cloud.points) {
    h.update_value(p.x());
    h.update_value(p.y());
    h.update_value(p.z());
  }
  h.update(cloud.intensity.data(), cloud.intensity.size() * sizeof(float));
  h.update(cloud.labels.data(), cloud.labels.size() * sizeof(Label));
  h.update(cloud.sources.data(), cloud.sources.size() * sizeof(std::uint32_t));
  return h.digest();
}

std::uint64_t content_hash(const RangeMap& map) {
  Fnv1a h;
  h.update_value(map.config.channels);
  h.update_value(map.config.width);
  h.update_value(map.config.fov_up);
  h.update_value(map.config.fov_down);
  h.update_value(map.config.max_range);
  h.update_value(map.config.spin_rate_hz);
  h.update(map.range.data(), map.range.size() * sizeof(double));
  h.update(map.label.data(), map.label.size() * sizeof(Label));
  h.update(map.intensity.data(), map.intensity.size() * sizeof(float));
  h.update(map.source.data(), map.source.size() * sizeof(std::uint32_t));
  h.update(map.point.data(), map.point.size() * sizeof(std::uint32_t));
  h.update(map.valid.data(), map.valid.size());
  return h.digest();
}

std::uint64_t file_hash(const std::string& path) {
  const auto bytes = read_binary(path);
  Fnv1a h;
  h.update(bytes.data(), bytes.size());
  return h.digest();
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

// ---------------------------------------------------------------------------

LoadedSequence load_sequence(const std::string& dir, const SequenceLoadOptions& options) {
  std::vector<std::string> problems;
  LoadedSequence seq;

  const fs::path root(dir);
  const fs::path scan_dir = root / "velodyne";
  const fs::path label_dir = root / "labels";
  const fs::path pose_path = root / "poses.txt";

  std::vector<fs::path> scans;
  if (!fs::is_directory(scan_dir)) {
    problems.push_back(scan_dir.string() + ": missing scan directory");
  } else {
    for (const auto& entry : fs::directory_iterator(scan_dir)) {
      if (entry.path().extension() == ".bin") scans.push_back(entry.path());
    }
    std::sort(scans.begin(), scans.end());
    if (scans.empty()) problems.push_back(scan_dir.string() + ": no .bin scans");
  }

  std::vector<Pose> poses;
  if (!fs::exists(pose_path)) {
    problems.push_back(pose_path.string() + ": missing pose file");
  } else {
    try {
      const auto file = read_poses(pose_path.string());
      poses = file.poses;
      for (const auto& r : file.repairs) {
        seq.warnings.push_back(pose_path.string() + ": line " + std::to_string(r.line) +
                               " re-orthonormalized (drift " + std::to_string(r.orthonormality_error) + ")");
      }
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
    if (!scans.empty() && poses.size() < scans.size()) {
      problems.push_back(pose_path.string() + ": " + std::to_string(poses.size()) + " poses for " +
                         std::to_string(scans.size()) + " scans");
    }
  }

  for (std::size_t i = 0; i < scans.size(); ++i) {
    LabeledFrame frame;
    const std::string stem = scans[i].stem().string();
    try {
      frame.time_index = parse_int(stem, scans[i].string());
    } catch (const Error&) {
      frame.time_index = static_cast<std::int64_t>(i);
    }
    try {
      frame.cloud = read_scan(scans[i].string());
    } catch (const Error& e) {
      problems.push_back(e.what());
      continue;
    }
    const fs::path label_path = label_dir / (stem + ".label");
    if (fs::exists(label_path)) {
      try {
        frame.cloud.labels = semantic_classes(read_labels(label_path.string(), frame.cloud.size()));
      } catch (const Error& e) {
        problems.push_back(e.what());
      }
    } else if (options.allow_missing_labels) {
      seq.warnings.push_back(label_path.string() + ": missing, frame treated as unlabeled");
    } else {
      problems.push_back(label_path.string() + ": missing label file");
    }
    if (i < poses.size()) frame.pose = poses[i];
    seq.frames.push_back(std::move(frame));
  }

  if (!problems.empty()) {
    std::string message = "cannot load sequence " + dir + ":";
    for (const auto& p : problems) message += "\n  " + p;
    fail(ErrorKind::kIo, message);
  }
  return seq;
}

}  // namespace lidomaug
