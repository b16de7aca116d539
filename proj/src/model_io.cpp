// Copyright 2026 The mpnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mpnn/model_io.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "mpnn/hash.hpp"
#include "mpnn/io_util.hpp"

namespace mpnn {

namespace {

constexpr const char* kMagic = "MPNN-MODEL 1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class PayloadReader {
 public:
  explicit PayloadReader(std::string_view data) : data_(data) {}

  std::uint64_t take(int bytes) {
    if (pos_ + bytes > data_.size()) throw ValidationError("model payload truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += bytes;
    return v;
  }
  double f64() { return std::bit_cast<double>(take(8)); }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::uint64_t checksum(std::string_view payload) {
  Fnv1a h;
  h.update(payload);
  return h.digest();
}

}  // namespace

std::string serialize_model(const Model& model) {
  std::string payload;
  model.params.for_each_block([&](const std::string&, const Matrix<double>& b) {
    put_u32(payload, static_cast<std::uint32_t>(b.rows()));
    put_u32(payload, static_cast<std::uint32_t>(b.cols()));
    for (Eigen::Index i = 0; i < b.size(); ++i) put_f64(payload, b.data()[i]);
  });
  std::string out = std::string(kMagic) + "\n";
  out += format_config(model.config);
  out += "fingerprint=" + hex16(model.config.data_fingerprint()) + "\n";
  out += "steps=" + std::to_string(model.params.num_steps()) + "\n";
  out += "payload=" + std::to_string(payload.size()) + " checksum=" + hex16(checksum(payload)) +
         "\n";
  out += "END\n";
  out += payload;
  return out;
}

Model deserialize_model(const std::string& bytes) {
  const std::string head_end = "\nEND\n";
  const auto end = bytes.find(head_end);
  if (bytes.rfind(std::string(kMagic) + "\n", 0) != 0 || end == std::string::npos)
    throw ValidationError("not a model file (bad magic or missing END)");
  const std::string head = bytes.substr(0, end + 1);
  const std::string_view payload(bytes.data() + end + head_end.size(),
                                 bytes.size() - end - head_end.size());

  std::istringstream in(head);
  std::string line, config_text, fingerprint, checksum_hex;
  long steps = -1, payload_size = -1;
  std::getline(in, line);  // magic
  while (std::getline(in, line)) {
    if (line.rfind("fingerprint=", 0) == 0) {
      fingerprint = line.substr(12);
    } else if (line.rfind("steps=", 0) == 0) {
      steps = std::strtol(line.c_str() + 6, nullptr, 10);
    } else if (line.rfind("payload=", 0) == 0) {
      char hex[32] = {0};
      if (std::sscanf(line.c_str(), "payload=%ld checksum=%16s", &payload_size, hex) != 2)
        throw ValidationError("malformed payload line in model file");
      checksum_hex = hex;
    } else {
      config_text += line + "\n";
    }
  }
  if (steps < 0 || payload_size < 0) throw ValidationError("model file head incomplete");
  if (static_cast<long>(payload.size()) != payload_size)
    throw ValidationError("model payload size " + std::to_string(payload.size()) +
                          " does not match header " + std::to_string(payload_size));
  if (hex16(checksum(payload)) != checksum_hex)
    throw ValidationError("model checksum mismatch (file corrupted)");

  Model model;
  model.config = parse_config(config_text);
  if (hex16(model.config.data_fingerprint()) != fingerprint)
    throw ValidationError("model fingerprint does not match its config");

  model.params = NetworkParams<double>::zeros(model.config, static_cast<int>(steps));
  PayloadReader rd(payload);
  model.params.for_each_block([&](const std::string& path, Matrix<double>& b) {
    const auto rows = static_cast<Eigen::Index>(rd.take(4));
    const auto cols = static_cast<Eigen::Index>(rd.take(4));
    if (rows != b.rows() || cols != b.cols())
      throw ValidationError("model block " + path + " has shape " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", config expects " +
                            std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rd.f64();
  });
  if (!rd.done()) throw ValidationError("trailing bytes in model payload");
  return model;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

Model load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace mpnn
