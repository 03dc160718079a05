#ifndef MRFUSE_TENSOR_IO_HPP
#define MRFUSE_TENSOR_IO_HPP

// On-disk formats.
//
// MRT1 soft map: "MRT1" | u32 height | u32 width | u32 classes | f32 payload,
// all little-endian, payload row-major with the class index fastest.
//
// Hard labels: 8-bit single-channel PNG, pixel value = class index.
//
// Manifest: {"cases":[{"case_id","image","raters":[...],"ground_truth","num_classes"}]}
// with paths relative to the manifest's directory.

#include "mrfuse/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mrfuse {

inline constexpr char kSoftMapMagic[4] = {'M', 'R', 'T', '1'};
inline constexpr std::size_t kSoftMapHeaderBytes = 16;

/// Reads an MRT1 file. Values are returned verbatim.
SoftMapT<float> read_soft_map(const std::filesystem::path& path);

/// Writes an MRT1 file; rejects non-finite values before touching the file.
void write_soft_map(const SoftMapT<float>& map, const std::filesystem::path& path);

template <typename Scalar>
void write_soft_map(const SoftMapT<Scalar>& map, const std::filesystem::path& path) {
  write_soft_map(SoftMapT<float>(map.height(), map.width(), map.values().template cast<float>()), path);
}

/// Encodes/decodes the MRT1 byte layout without touching the filesystem.
std::vector<unsigned char> encode_soft_map(const SoftMapT<float>& map);
SoftMapT<float> decode_soft_map(const std::vector<unsigned char>& bytes);

HardLabelMap read_hard_labels(const std::filesystem::path& path, Index classes);
void write_hard_labels(const HardLabelMap& labels, const std::filesystem::path& path);

/// 8-bit gray or RGB PNG; RGB is reduced by Rec.601 luma.
RawImage read_raw_image(const std::filesystem::path& path);
/// Quantizes to 8 bits.
void write_raw_image(const RawImage& image, const std::filesystem::path& path);

struct CaseManifest {
  std::string case_id;
  std::filesystem::path image;
  std::vector<std::filesystem::path> raters;
  std::optional<std::filesystem::path> ground_truth;
  Index num_classes = 2;
  /// Optional; defaults to r1..rM.
  std::vector<std::string> rater_ids;
};

/// Parses and validates a manifest: every referenced file must exist, every
/// rater map must match the image size and hold values below num_classes.
/// Returned paths are resolved against the manifest directory.
std::vector<CaseManifest> load_manifest(const std::filesystem::path& path);

/// Writes a manifest; paths are stored relative to the manifest directory
/// when they lie inside it.
void save_manifest(const std::vector<CaseManifest>& cases, const std::filesystem::path& path);

struct LoadedCase {
  std::string case_id;
  RawImage image;
  RaterPanel panel;
  std::optional<SoftMap> ground_truth;
};

LoadedCase load_case(const CaseManifest& manifest);

/// Ground truth as a soft map: a class-index PNG (one-hot) or an MRT1 file.
SoftMap read_ground_truth(const std::filesystem::path& path, Index classes);

}  // namespace mrfuse

#endif  // MRFUSE_TENSOR_IO_HPP
