// SPDX-License-Identifier: Apache-2.0
#include "emofuse/feature_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

#include "emofuse/error.hpp"

namespace emofuse {
namespace {

constexpr const char* kMagic = "EMOFUSE-FEATURES";

}  // namespace

const FeatureRecord* FeatureFile::find(const std::string& id) const {
  for (const auto& r : records) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

void write_feature_file(const std::filesystem::path& path, const FeatureFile& file) {
  nlohmann::json header;
  header["format_version"] = FeatureFile::kFormatVersion;
  header["kind"] = file.kind;
  header["dim"] = file.dim();
  header["feature_names"] = file.feature_names;
  header["params"] = file.params;
  header["value_type"] = "float32le";
  nlohmann::json index = nlohmann::json::array();
  std::set<std::string> seen;
  std::size_t offset = 0;
  for (const auto& r : file.records) {
    if (!seen.insert(r.id).second) throw InvalidArgument("duplicate feature record id '" + r.id + "'");
    if (r.values.cols() != file.dim()) {
      throw ShapeError("record '" + r.id + "' has " + std::to_string(r.values.cols()) +
                       " columns, header declares " + std::to_string(file.dim()));
    }
    index.push_back({{"id", r.id}, {"rows", r.values.rows()}, {"offset", offset}});
    offset += static_cast<std::size_t>(r.values.size()) * sizeof(float);
  }
  header["records"] = std::move(index);
  header["payload_bytes"] = offset;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write feature file '" + path.string() + "'");
  out << kMagic << ' ' << FeatureFile::kFormatVersion << '\n' << header.dump() << '\n';
  std::vector<char> buffer;
  for (const auto& r : file.records) {
    buffer.resize(static_cast<std::size_t>(r.values.size()) * sizeof(float));
    std::size_t pos = 0;
    for (Eigen::Index i = 0; i < r.values.rows(); ++i) {
      for (Eigen::Index j = 0; j < r.values.cols(); ++j) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(r.values(i, j)));
        std::memcpy(buffer.data() + pos, &bits, sizeof bits);
        pos += sizeof bits;
      }
    }
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  }
  if (!out) throw IoError("short write on feature file '" + path.string() + "'");
}

FeatureFile read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file '" + path.string() + "'");
  std::string magic_line, header_line;
  if (!std::getline(in, magic_line) || !std::getline(in, header_line)) {
    throw FormatError("feature file '" + path.string() + "' is truncated before the header ends");
  }
  const std::string expected = std::string(kMagic) + ' ';
  if (magic_line.rfind(expected, 0) != 0) {
    throw FormatError("'" + path.string() + "' is not a feature file");
  }
  const int version = std::stoi(magic_line.substr(expected.size()));
  if (version != FeatureFile::kFormatVersion) {
    throw FormatError("feature file '" + path.string() + "' has unsupported format version " +
                      std::to_string(version));
  }

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad feature header in '" + path.string() + "': " + e.what());
  }

  FeatureFile file;
  try {
    file.kind = header.at("kind").get<std::string>();
    file.feature_names = header.at("feature_names").get<std::vector<std::string>>();
    file.params = header.at("params").get<std::map<std::string, double>>();
    if (header.at("dim").get<Eigen::Index>() != file.dim()) {
      throw FormatError("feature header dim disagrees with feature_names in '" + path.string() + "'");
    }
    const std::vector<char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (payload.size() != header.at("payload_bytes").get<std::size_t>()) {
      throw FormatError("feature payload in '" + path.string() + "' has " + std::to_string(payload.size()) +
                        " bytes, header declares " + std::to_string(header.at("payload_bytes").get<std::size_t>()));
    }
    for (const auto& entry : header.at("records")) {
      FeatureRecord r;
      r.id = entry.at("id").get<std::string>();
      const auto rows = entry.at("rows").get<Eigen::Index>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto bytes = static_cast<std::size_t>(rows * file.dim()) * sizeof(float);
      if (offset + bytes > payload.size()) {
        throw FormatError("record '" + r.id + "' overruns the payload of '" + path.string() + "'");
      }
      r.values.resize(rows, file.dim());
      std::size_t pos = offset;
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < file.dim(); ++j) {
          std::uint32_t bits;
          std::memcpy(&bits, payload.data() + pos, sizeof bits);
          r.values(i, j) = std::bit_cast<float>(bits);
          pos += sizeof bits;
        }
      }
      file.records.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad feature header in '" + path.string() + "': " + e.what());
  }
  return file;
}

}  // namespace emofuse
