#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eocl {

using Label = std::uint32_t;

/// One utterance: t frames by d feature dims. Always t >= 1, d >= 1, finite.
class FeatureSequence {
 public:
  /// Throws std::invalid_argument on an empty or non-finite matrix.
  explicit FeatureSequence(Eigen::MatrixXd data);

  Eigen::Index frames() const { return data_.rows(); }
  Eigen::Index dims() const { return data_.cols(); }
  const Eigen::MatrixXd& data() const { return data_; }

  friend bool operator==(const FeatureSequence& a, const FeatureSequence& b) {
    return a.data_.rows() == b.data_.rows() && a.data_.cols() == b.data_.cols() &&
           a.data_ == b.data_;
  }

 private:
  Eigen::MatrixXd data_;
};

struct Record {
  FeatureSequence sequence;
  Label label;
};

// EOF1 container: "EOF1", u16 version, u16 dtype, u32 d, u64 count, then per
// record { u32 label; u32 t; t*d float32, time-major }. Little-endian.
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::uint16_t kContainerDtypeF32 = 1;
inline constexpr std::size_t kContainerHeaderSize = 20;

/// Serializes records. `d` is only consulted when `records` is empty and
/// must then be >= 1. Throws std::invalid_argument on mixed d.
std::vector<std::uint8_t> encode_container(std::span<const Record> records, std::uint32_t d = 0);

/// Parses a container; throws FormatError on bad magic, version, dtype,
/// truncation, or a d mismatch against `expected_d`.
std::vector<Record> decode_container(std::span<const std::uint8_t> bytes,
                                     std::optional<std::uint32_t> expected_d = std::nullopt);

void write_container(std::span<const Record> records, const std::filesystem::path& path,
                     std::uint32_t d = 0);
std::vector<Record> read_container(const std::filesystem::path& path,
                                   std::optional<std::uint32_t> expected_d = std::nullopt);

/// Reads only the fixed header: returns d and the declared record count.
struct ContainerHeader {
  std::uint32_t d = 0;
  std::uint64_t record_count = 0;
};
ContainerHeader read_container_header(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

struct DatasetManifest {
  std::vector<std::string> class_names;
  std::uint32_t d = 0;
  /// Split name to container paths. Relative paths resolve against the
  /// manifest's directory.
  std::map<std::string, std::vector<std::string>> splits;
  std::string backbone_tag;
  std::uint64_t backbone_param_count = 0;
};

std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const std::string& text);
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

/// A fully loaded dataset: manifest plus the records of every split.
struct Dataset {
  std::string name;
  DatasetManifest manifest;
  std::map<std::string, std::vector<Record>> splits;

  std::size_t num_classes() const { return manifest.class_names.size(); }
  const std::vector<Record>& split(const std::string& name) const;
};

/// Loads and validates every container listed by the manifest: files exist
/// and parse, d matches, labels are below the class count.
Dataset load_dataset(const std::filesystem::path& manifest_path);

}  // namespace eocl
