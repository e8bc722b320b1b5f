// SPDX-License-Identifier: Apache-2.0
#include "emofuse/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "emofuse/error.hpp"

namespace emofuse {
namespace {

constexpr const char* kMagic = "EMOFUSE-CHECKPOINT";

}  // namespace

void Checkpoint::add(std::string name, Eigen::MatrixXd value) {
  if (has(name)) throw InvalidArgument("duplicate checkpoint tensor '" + name + "'");
  tensors.emplace_back(std::move(name), std::move(value));
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& [n, _] : tensors) {
    if (n == name) return true;
  }
  return false;
}

const Eigen::MatrixXd& Checkpoint::tensor(const std::string& name, Eigen::Index rows, Eigen::Index cols) const {
  for (const auto& [n, m] : tensors) {
    if (n != name) continue;
    if ((rows >= 0 && m.rows() != rows) || (cols >= 0 && m.cols() != cols)) {
      throw FormatError("checkpoint tensor '" + name + "' is " + shape_string(m.rows(), m.cols()) +
                        ", architecture expects " + shape_string(rows, cols));
    }
    return m;
  }
  throw FormatError("checkpoint lacks tensor '" + name + "'");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  nlohmann::json header;
  header["format_version"] = Checkpoint::kFormatVersion;
  header["kind"] = checkpoint.kind;
  header["meta"] = checkpoint.meta;
  header["value_type"] = "float64le";
  nlohmann::json index = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, m] : checkpoint.tensors) {
    index.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}});
    offset += static_cast<std::size_t>(m.size()) * sizeof(double);
  }
  header["tensors"] = std::move(index);
  header["payload_bytes"] = offset;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  out << kMagic << ' ' << Checkpoint::kFormatVersion << '\n' << header.dump() << '\n';
  for (const auto& [name, m] : checkpoint.tensors) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const auto bits = std::bit_cast<std::uint64_t>(m.data()[i]);
      char bytes[8];
      for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
      out.write(bytes, 8);
    }
  }
  if (!out) throw IoError("short write on checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::string magic_line, header_line;
  if (!std::getline(in, magic_line)) throw FormatError("checkpoint '" + path.string() + "' is empty");
  const std::string expected = std::string(kMagic) + ' ';
  if (magic_line.rfind(expected, 0) != 0) throw FormatError("'" + path.string() + "' is not a checkpoint");
  int version = 0;
  try {
    version = std::stoi(magic_line.substr(expected.size()));
  } catch (const std::exception&) {
    throw FormatError("checkpoint '" + path.string() + "' has an unreadable version");
  }
  if (version > Checkpoint::kFormatVersion) {
    throw FormatError("checkpoint '" + path.string() + "' has format version " + std::to_string(version) +
                      ", newer than supported version " + std::to_string(Checkpoint::kFormatVersion));
  }
  if (version != Checkpoint::kFormatVersion) {
    throw FormatError("checkpoint '" + path.string() + "' has unsupported format version " + std::to_string(version));
  }
  if (!std::getline(in, header_line) || in.eof()) {
    throw FormatError("checkpoint '" + path.string() + "' is truncated inside the header");
  }

  Checkpoint ck;
  try {
    const auto header = nlohmann::json::parse(header_line);
    if (header.at("format_version").get<int>() != version) {
      throw FormatError("checkpoint '" + path.string() + "' header version disagrees with signature");
    }
    ck.kind = header.at("kind").get<std::string>();
    ck.meta = header.at("meta");
    const std::vector<char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto declared = header.at("payload_bytes").get<std::size_t>();
    if (payload.size() != declared) {
      throw FormatError("checkpoint '" + path.string() + "' payload has " + std::to_string(payload.size()) +
                        " bytes, header declares " + std::to_string(declared) + " (truncated or corrupt)");
    }
    for (const auto& t : header.at("tensors")) {
      const auto rows = t.at("rows").get<Eigen::Index>();
      const auto cols = t.at("cols").get<Eigen::Index>();
      const auto offset = t.at("offset").get<std::size_t>();
      const auto bytes = static_cast<std::size_t>(rows * cols) * sizeof(double);
      if (rows < 0 || cols < 0 || offset + bytes > payload.size()) {
        throw FormatError("checkpoint tensor overruns payload in '" + path.string() + "'");
      }
      Eigen::MatrixXd m(rows, cols);
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
          bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(payload[offset + 8 * static_cast<std::size_t>(i) + static_cast<std::size_t>(b)])) << (8 * b);
        }
        m.data()[i] = std::bit_cast<double>(bits);
      }
      ck.add(t.at("name").get<std::string>(), std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad checkpoint header in '" + path.string() + "': " + e.what());
  }
  return ck;
}

}  // namespace emofuse
