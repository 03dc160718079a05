#include "mrfuse/tensor_io.hpp"

#include <png.h>

#include "json.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mrfuse {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::vector<unsigned char>& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[offset + i]) << (8 * i);
  return v;
}

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::vector<unsigned char>& bytes, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// RAII wrapper over libpng's simplified read API.
struct PngReader {
  png_image image{};

  explicit PngReader(const fs::path& path) {
    if (!fs::exists(path)) throw std::runtime_error("cannot open " + path.string());
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
      throw FormatError(path.string() + ": " + image.message);
  }
  ~PngReader() { png_image_free(&image); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  bool is_color() const { return (image.format & PNG_FORMAT_FLAG_COLOR) != 0; }
  bool is_plain_gray8() const {
    return (image.format & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_ALPHA | PNG_FORMAT_FLAG_LINEAR)) == 0;
  }

  std::vector<png_byte> finish(png_uint_32 format, const fs::path& path) {
    image.format = format;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr))
      throw FormatError(path.string() + ": " + image.message);
    return buffer;
  }
};

void write_gray_png(const std::vector<png_byte>& pixels, Index height, Index width, const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw std::runtime_error("cannot write " + path.string() + ": " + message);
  }
}

struct PngSize {
  Index height;
  Index width;
};

PngSize png_size(const fs::path& path) {
  PngReader reader(path);
  return {static_cast<Index>(reader.image.height), static_cast<Index>(reader.image.width)};
}

bool has_soft_map_magic(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  return in && std::memcmp(magic, kSoftMapMagic, 4) == 0;
}

}  // namespace

std::vector<unsigned char> encode_soft_map(const SoftMapT<float>& map) {
  const auto& v = map.values();
  for (Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v.data()[i]))
      throw DomainError("write_soft_map: non-finite value at element " + std::to_string(i));
  std::vector<unsigned char> out(kSoftMapMagic, kSoftMapMagic + 4);
  out.reserve(kSoftMapHeaderBytes + 4 * static_cast<std::size_t>(v.size()));
  put_u32(out, static_cast<std::uint32_t>(map.height()));
  put_u32(out, static_cast<std::uint32_t>(map.width()));
  put_u32(out, static_cast<std::uint32_t>(map.classes()));
  for (Index i = 0; i < v.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(v.data()[i]));
  return out;
}

SoftMapT<float> decode_soft_map(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kSoftMapHeaderBytes)
    throw FormatError("MRT1: truncated header at offset " + std::to_string(bytes.size()));
  if (std::memcmp(bytes.data(), kSoftMapMagic, 4) != 0) throw FormatError("MRT1: bad magic at offset 0");
  const std::uint64_t height = get_u32(bytes, 4);
  const std::uint64_t width = get_u32(bytes, 8);
  const std::uint64_t classes = get_u32(bytes, 12);
  const std::uint64_t expected = kSoftMapHeaderBytes + 4 * height * width * classes;
  if (bytes.size() < expected)
    throw FormatError("MRT1: truncated payload at offset " + std::to_string(bytes.size()) + ", expected " +
                      std::to_string(expected) + " bytes");
  if (bytes.size() > expected)
    throw FormatError("MRT1: trailing bytes at offset " + std::to_string(expected));

  SoftMapT<float> map(static_cast<Index>(height), static_cast<Index>(width), static_cast<Index>(classes));
  float* data = map.values().data();
  for (std::uint64_t i = 0; i < height * width * classes; ++i) {
    const std::size_t offset = kSoftMapHeaderBytes + 4 * i;
    data[i] = std::bit_cast<float>(get_u32(bytes, offset));
    if (!std::isfinite(data[i])) throw FormatError("MRT1: non-finite value at offset " + std::to_string(offset));
  }
  return map;
}

SoftMapT<float> read_soft_map(const fs::path& path) {
  try {
    return decode_soft_map(read_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_soft_map(const SoftMapT<float>& map, const fs::path& path) { write_bytes(encode_soft_map(map), path); }

HardLabelMap read_hard_labels(const fs::path& path, Index classes) {
  PngReader reader(path);
  if (!reader.is_plain_gray8()) throw FormatError(path.string() + ": label map must be 8-bit single-channel PNG");
  const Index H = reader.image.height;
  const Index W = reader.image.width;
  const auto buffer = reader.finish(PNG_FORMAT_GRAY, path);
  HardLabelMap::vector_type labels(H * W);
  for (Index p = 0; p < H * W; ++p) {
    if (buffer[p] >= classes)
      throw DomainError(path.string() + ": value " + std::to_string(buffer[p]) + " at pixel (row " +
                        std::to_string(p / W) + ", col " + std::to_string(p % W) + ") is not below " +
                        std::to_string(classes) + " classes");
    labels[p] = buffer[p];
  }
  return HardLabelMap(H, W, classes, std::move(labels));
}

void write_hard_labels(const HardLabelMap& labels, const fs::path& path) {
  if (labels.classes() > 256) throw DomainError("write_hard_labels: more than 256 classes");
  std::vector<png_byte> pixels(static_cast<std::size_t>(labels.pixels()));
  for (Index p = 0; p < labels.pixels(); ++p) pixels[p] = static_cast<png_byte>(labels[p]);
  write_gray_png(pixels, labels.height(), labels.width(), path);
}

RawImage read_raw_image(const fs::path& path) {
  PngReader reader(path);
  const Index H = reader.image.height;
  const Index W = reader.image.width;
  RawImage out{ImageMatrix<double>(H, W)};
  if (reader.is_color()) {
    const auto buffer = reader.finish(PNG_FORMAT_RGB, path);
    for (Index p = 0; p < H * W; ++p)
      out.intensity(p / W, p % W) =
          (0.299 * buffer[3 * p] + 0.587 * buffer[3 * p + 1] + 0.114 * buffer[3 * p + 2]) / 255.0;
  } else {
    const auto buffer = reader.finish(PNG_FORMAT_GRAY, path);
    for (Index p = 0; p < H * W; ++p) out.intensity(p / W, p % W) = buffer[p] / 255.0;
  }
  out.intensity = out.intensity.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

void write_raw_image(const RawImage& image, const fs::path& path) {
  const Index H = image.height();
  const Index W = image.width();
  std::vector<png_byte> pixels(static_cast<std::size_t>(H * W));
  for (Index p = 0; p < H * W; ++p)
    pixels[p] = static_cast<png_byte>(std::lround(std::clamp(image.intensity(p / W, p % W), 0.0, 1.0) * 255.0));
  write_gray_png(pixels, H, W, path);
}

SoftMap read_ground_truth(const fs::path& path, Index classes) {
  if (has_soft_map_magic(path)) {
    const auto map = read_soft_map(path);
    if (map.classes() != classes)
      throw ShapeError(path.string() + ": ground truth has " + std::to_string(map.classes()) + " classes, expected " +
                       std::to_string(classes));
    return SoftMap(map.height(), map.width(), map.values().cast<double>());
  }
  return read_hard_labels(path, classes).one_hot();
}

std::vector<CaseManifest> load_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw std::runtime_error("manifest not found: " + path.string());
  std::ifstream in(path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("cases") || !doc["cases"].is_array())
    throw FormatError(path.string() + ": expected an object with a \"cases\" array");

  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  std::vector<CaseManifest> out;
  for (const auto& entry : doc["cases"]) {
    CaseManifest m;
    try {
      m.case_id = entry.at("case_id").get<std::string>();
      m.image = resolve(entry.at("image").get<std::string>());
      for (const auto& r : entry.at("raters")) m.raters.push_back(resolve(r.get<std::string>()));
      if (entry.contains("ground_truth") && !entry["ground_truth"].is_null())
        m.ground_truth = resolve(entry["ground_truth"].get<std::string>());
      m.num_classes = entry.at("num_classes").get<Index>();
      if (entry.contains("rater_ids"))
        for (const auto& id : entry["rater_ids"]) m.rater_ids.push_back(id.get<std::string>());
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ": case " + (m.case_id.empty() ? "?" : m.case_id) + ": " + e.what());
    }
    const std::string where = "case " + m.case_id;
    if (m.num_classes < 1) throw FormatError(where + ": num_classes must be positive");
    if (m.raters.empty()) throw FormatError(where + ": no raters");
    if (!m.rater_ids.empty() && m.rater_ids.size() != m.raters.size())
      throw FormatError(where + ": rater_ids and raters differ in length");
    if (m.rater_ids.empty())
      for (std::size_t i = 0; i < m.raters.size(); ++i) m.rater_ids.push_back("r" + std::to_string(i + 1));

    const PngSize size = png_size(m.image);
    for (std::size_t i = 0; i < m.raters.size(); ++i) {
      const auto labels = read_hard_labels(m.raters[i], m.num_classes);
      if (!labels.same_grid(size.height, size.width))
        throw ShapeError(where + ", rater " + m.rater_ids[i] + ": " + std::to_string(labels.height()) + "x" +
                         std::to_string(labels.width()) + " does not match image " + std::to_string(size.height) +
                         "x" + std::to_string(size.width));
    }
    if (m.ground_truth) {
      if (!fs::exists(*m.ground_truth))
        throw std::runtime_error(where + ": ground truth not found: " + m.ground_truth->string());
      const SoftMap gt = read_ground_truth(*m.ground_truth, m.num_classes);
      if (gt.height() != size.height || gt.width() != size.width)
        throw ShapeError(where + ": ground truth does not match image size");
    }
    out.push_back(std::move(m));
  }
  return out;
}

void save_manifest(const std::vector<CaseManifest>& cases, const fs::path& path) {
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  auto rel = [&](const fs::path& p) {
    const auto r = fs::proximate(p, base);
    return r.generic_string();
  };
  json doc;
  doc["cases"] = json::array();
  for (const auto& m : cases) {
    json entry;
    entry["case_id"] = m.case_id;
    entry["image"] = rel(m.image);
    entry["raters"] = json::array();
    for (const auto& r : m.raters) entry["raters"].push_back(rel(r));
    entry["ground_truth"] = m.ground_truth ? json(rel(*m.ground_truth)) : json(nullptr);
    entry["num_classes"] = m.num_classes;
    if (!m.rater_ids.empty()) entry["rater_ids"] = m.rater_ids;
    doc["cases"].push_back(std::move(entry));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

LoadedCase load_case(const CaseManifest& manifest) {
  LoadedCase out;
  out.case_id = manifest.case_id;
  out.image = read_raw_image(manifest.image);
  out.panel.rater_ids = manifest.rater_ids;
  if (out.panel.rater_ids.empty())
    for (std::size_t i = 0; i < manifest.raters.size(); ++i) out.panel.rater_ids.push_back("r" + std::to_string(i + 1));
  for (const auto& r : manifest.raters) {
    auto labels = read_hard_labels(r, manifest.num_classes);
    if (!labels.same_grid(out.image.height(), out.image.width()))
      throw ShapeError("case " + manifest.case_id + ": rater map " + r.string() + " does not match image size");
    out.panel.labels.push_back(std::move(labels));
  }
  if (manifest.ground_truth) out.ground_truth = read_ground_truth(*manifest.ground_truth, manifest.num_classes);
  return out;
}

}  // namespace mrfuse
