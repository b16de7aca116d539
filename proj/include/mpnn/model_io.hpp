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

#pragma once

#include <filesystem>
#include <string>

#include "mpnn/config.hpp"
#include "mpnn/network.hpp"

namespace mpnn {

/// Model file: a text head echoing the config, followed by little-endian binary
/// parameter blocks and an FNV-1a checksum of that payload.
///
///   MPNN-MODEL 1
///   <config as key=value lines>
///   fingerprint=<16 hex digits>
///   steps=<K>
///   payload=<bytes> checksum=<16 hex digits>
///   END
///   <payload>
///
/// Payload: per step, blocks alpha, beta, w_phi, w_psi, each as u32 rows, u32 cols and
/// rows*cols f64 in column-major order.
struct Model {
  ModelConfig config;
  NetworkParams<double> params;
};

std::string serialize_model(const Model& model);
Model deserialize_model(const std::string& bytes);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace mpnn
