#include "eocl/featio.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "eocl/byte_io.hpp"
#include "eocl/error.hpp"

namespace eocl {

namespace fs = std::filesystem;

FeatureSequence::FeatureSequence(Eigen::MatrixXd data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 1)
    throw std::invalid_argument("feature sequence needs t >= 1 and d >= 1");
  if (!data_.allFinite()) throw std::invalid_argument("feature sequence has non-finite entries");
}

std::vector<std::uint8_t> encode_container(std::span<const Record> records, std::uint32_t d) {
  if (!records.empty()) d = static_cast<std::uint32_t>(records.front().sequence.dims());
  if (d == 0) throw std::invalid_argument("an empty container needs an explicit d >= 1");
  ByteWriter w;
  w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("EOF1"), 4));
  w.u16(kContainerVersion);
  w.u16(kContainerDtypeF32);
  w.u32(d);
  w.u64(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& m = records[i].sequence.data();
    if (static_cast<std::uint32_t>(m.cols()) != d)
      throw std::invalid_argument("record " + std::to_string(i) + " has d=" +
                                  std::to_string(m.cols()) + ", expected " + std::to_string(d));
    w.u32(records[i].label);
    w.u32(static_cast<std::uint32_t>(m.rows()));
    for (Eigen::Index t = 0; t < m.rows(); ++t)
      for (Eigen::Index j = 0; j < m.cols(); ++j) w.f32(static_cast<float>(m(t, j)));
  }
  return std::move(w).take();
}

ContainerHeader read_container_header(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.require(4);
  if (std::memcmp(bytes.data(), "EOF1", 4) != 0) throw FormatError("bad magic, expected EOF1", 0);
  r.u32();
  const auto version = r.u16();
  if (version != kContainerVersion)
    throw FormatError("unsupported container version " + std::to_string(version), 4);
  const auto dtype = r.u16();
  if (dtype != kContainerDtypeF32)
    throw FormatError("unsupported dtype " + std::to_string(dtype), 6);
  ContainerHeader h;
  h.d = r.u32();
  h.record_count = r.u64();
  if (h.d == 0) throw FormatError("feature dimension is zero", 8);
  return h;
}

std::vector<Record> decode_container(std::span<const std::uint8_t> bytes,
                                     std::optional<std::uint32_t> expected_d) {
  const ContainerHeader h = read_container_header(bytes);
  if (expected_d && *expected_d != h.d)
    throw FormatError("container d=" + std::to_string(h.d) + " does not match expected d=" +
                          std::to_string(*expected_d),
                      8);
  ByteReader r(bytes.subspan(kContainerHeaderSize));
  std::vector<Record> out;
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(h.record_count, 1u << 20)));
  for (std::uint64_t i = 0; i < h.record_count; ++i) {
    const std::uint64_t start = kContainerHeaderSize + r.offset();
    if (r.remaining() < 8) throw FormatError("truncated record header", start, i);
    const Label label = r.u32();
    const std::uint32_t t = r.u32();
    if (t == 0) throw FormatError("record with zero frames", start, i);
    const std::uint64_t payload = std::uint64_t{t} * h.d * 4;
    if (r.remaining() < payload) throw FormatError("truncated record payload", start, i);
    Eigen::MatrixXd m(t, h.d);
    for (std::uint32_t ti = 0; ti < t; ++ti)
      for (std::uint32_t j = 0; j < h.d; ++j) m(ti, j) = static_cast<double>(r.f32());
    if (!m.allFinite()) throw FormatError("record has non-finite values", start, i);
    out.push_back(Record{FeatureSequence(std::move(m)), label});
  }
  if (!r.at_end())
    throw FormatError("trailing bytes after last record", kContainerHeaderSize + r.offset());
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_container(std::span<const Record> records, const fs::path& path, std::uint32_t d) {
  const auto bytes = encode_container(records, d);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<Record> read_container(const fs::path& path, std::optional<std::uint32_t> expected_d) {
  return decode_container(read_file_bytes(path), expected_d);
}

std::string manifest_to_json(const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["class_names"] = m.class_names;
  j["d"] = m.d;
  nlohmann::ordered_json splits = nlohmann::ordered_json::object();
  for (const auto& [name, files] : m.splits) splits[name] = files;
  j["splits"] = splits;
  j["backbone_tag"] = m.backbone_tag;
  j["backbone_param_count"] = m.backbone_param_count;
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  DatasetManifest m;
  try {
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.d = j.at("d").get<std::uint32_t>();
    m.splits = j.at("splits").get<std::map<std::string, std::vector<std::string>>>();
    m.backbone_tag = j.value("backbone_tag", std::string{});
    m.backbone_param_count = j.value("backbone_param_count", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest schema error: ") + e.what());
  }
  if (m.d == 0) throw ConfigError("manifest d must be >= 1");
  if (m.class_names.empty()) throw ConfigError("manifest lists no classes");
  return m;
}

void save_manifest(const DatasetManifest& m, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << manifest_to_json(m);
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return manifest_from_json(text);
}

const std::vector<Record>& Dataset::split(const std::string& split_name) const {
  auto it = splits.find(split_name);
  if (it == splits.end()) throw ConfigError("dataset has no split '" + split_name + "'");
  return it->second;
}

Dataset load_dataset(const fs::path& manifest_path) {
  Dataset ds;
  ds.manifest = load_manifest(manifest_path);
  ds.name = manifest_path.stem().string();
  if (ds.name == "manifest" && manifest_path.has_parent_path())
    ds.name = fs::absolute(manifest_path).parent_path().filename().string();
  const fs::path base = manifest_path.parent_path();
  for (const auto& [split, files] : ds.manifest.splits) {
    auto& records = ds.splits[split];
    for (const auto& f : files) {
      fs::path p(f);
      if (p.is_relative()) p = base / p;
      if (!fs::exists(p)) throw ConfigError("manifest lists missing file " + p.string());
      auto part = read_container(p, ds.manifest.d);
      for (std::size_t i = 0; i < part.size(); ++i)
        if (part[i].label >= ds.manifest.class_names.size())
          throw ConfigError(p.string() + ": record " + std::to_string(i) + " has label " +
                            std::to_string(part[i].label) + " >= class count");
      records.insert(records.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
    }
  }
  return ds;
}

}  // namespace eocl
