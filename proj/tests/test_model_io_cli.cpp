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

#include <chrono>
#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

#include <doctest.h>

#include "mpnn/cli.hpp"
#include "mpnn/evaluation.hpp"
#include "mpnn/io_util.hpp"
#include "mpnn/model_io.hpp"
#include "mpnn/training.hpp"
#include "test_util.hpp"

using namespace mpnn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "mpnn_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const std::string kTiny = std::string(MPNN_SOURCE_DIR) + "/configs/tiny.cfg";

bool bitwise_equal(const NetworkParams<double>& a, const NetworkParams<double>& b) {
  std::vector<Matrix<double>> blocks;
  b.for_each_block([&](const std::string&, const Matrix<double>& m) { blocks.push_back(m); });
  std::size_t i = 0;
  bool same = a.num_steps() == b.num_steps();
  a.for_each_block([&](const std::string&, const Matrix<double>& m) {
    if (!same || i >= blocks.size()) return;
    const auto& o = blocks[i++];
    same = m.rows() == o.rows() && m.cols() == o.cols() &&
           std::memcmp(m.data(), o.data(), sizeof(double) * m.size()) == 0;
  });
  return same;
}

}  // namespace

TEST_CASE("model file round trip") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const ModelConfig cfg = test::random_config(rng);
    Model m{cfg, test::random_params(cfg, rng, 3.0)};
    m.params.steps[0].alpha(0, 0) = -0.0;
    m.params.steps[0].alpha(0, 1) = std::numeric_limits<double>::denorm_min();
    const Model back = deserialize_model(serialize_model(m));
    CHECK(back.config == cfg);
    CHECK(bitwise_equal(back.params, m.params));
    CHECK(serialize_model(back) == serialize_model(m));
  }

  const ModelConfig cfg = test::make_config(2, 2, 2, 2, 2, 2);
  std::string bytes = serialize_model({cfg, test::random_params(cfg, rng)});
  SUBCASE("flipped payload byte") {
    bytes[bytes.size() - 3] ^= 0x10;
    CHECK_THROWS_WITH_AS(deserialize_model(bytes), doctest::Contains("checksum"),
                         ValidationError);
  }
  SUBCASE("truncated payload") {
    CHECK_THROWS_AS(deserialize_model(bytes.substr(0, bytes.size() - 8)), ValidationError);
  }
  SUBCASE("wrong magic") {
    bytes[0] = 'X';
    CHECK_THROWS_AS(deserialize_model(bytes), ValidationError);
  }
  SUBCASE("trailing bytes") { CHECK_THROWS_AS(deserialize_model(bytes + "x"), ValidationError); }
  SUBCASE("file save and load") {
    const auto path = scratch("m.model");
    const Model m = deserialize_model(bytes);
    save_model(m, path);
    CHECK(read_file(path) == bytes);
    CHECK(bitwise_equal(load_model(path).params, m.params));
    CHECK_FALSE(fs::exists(path.string() + ".tmp"));
  }
}

TEST_CASE("cli generate") {
  const auto data = scratch("gen.mpds");
  auto r = invoke({"generate", "--config", kTiny, "--out", data.string(), "--seed", "3",
                "--instances", "7"});
  REQUIRE(r.code == 0);
  const std::string first = read_file(data);
  CHECK(first.rfind("MPDS1 G=2 H=2 Z=2 M=2 N=7\n", 0) == 0);
  CHECK(invoke({"generate", "--config", kTiny, "--out", data.string(), "--seed", "3",
             "--instances", "7"})
            .code == 0);
  CHECK(read_file(data) == first);

  r = invoke({"generate", "--config", kTiny, "--out", scratch("bad.mpds").string(),
           "--persons-max", "5"});
  CHECK(r.code == cli::kValidationFailure);
  CHECK(r.err.find("5") != std::string::npos);
  CHECK(r.err.find("2") != std::string::npos);
  CHECK_FALSE(fs::exists(scratch("bad.mpds")));

  CHECK(invoke({"generate", "--out", data.string()}).code == cli::kUsageError);
  CHECK(invoke({"bogus"}).code == cli::kUsageError);
  CHECK(invoke({}).code == cli::kUsageError);
}

TEST_CASE("cli train and eval") {
  const auto data = scratch("train.mpds");
  const auto model = scratch("tiny.model");
  const auto log = scratch("tiny.log");
  REQUIRE(invoke({"generate", "--config", kTiny, "--out", data.string(), "--seed", "11",
               "--instances", "4"})
              .code == 0);

  const auto t0 = std::chrono::steady_clock::now();
  auto r = invoke({"train", "--config", kTiny, "--data", data.string(), "--model-out",
                model.string(), "--log", log.string()});
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  REQUIRE(r.code == 0);
  CHECK(secs < 10.0);
  const std::string log_text = read_file(log);
  CHECK(log_text.rfind(format_log_header() + "\n", 0) == 0);
  CHECK(std::count(log_text.begin(), log_text.end(), '\n') == 1 + 2 * (5 + 5));

  const std::string bytes = read_file(model);
  CHECK(invoke({"train", "--config", kTiny, "--data", data.string(), "--model-out",
             model.string(), "--log", log.string()})
            .code == 0);
  CHECK(read_file(model) == bytes);

  SUBCASE("training failures") {
    r = invoke({"train", "--config", kTiny, "--data", scratch("missing.mpds").string(),
             "--model-out", scratch("x.model").string()});
    CHECK(r.code == cli::kValidationFailure);
    const auto other = scratch("other.mpds");
    save_dataset(empty_dataset(test::make_config(3, 2, 2, 2, 2, 2)), other);
    r = invoke({"train", "--config", kTiny, "--data", other.string(), "--model-out",
             scratch("x.model").string()});
    CHECK(r.code == cli::kValidationFailure);
    CHECK(r.err.find("G=3") != std::string::npos);
  }
  SUBCASE("eval per step and feature export") {
    r = invoke({"eval", "--model", model.string(), "--data", data.string(), "--per-step"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("1\t") != std::string::npos);
    CHECK(r.out.find("\n2\t") != std::string::npos);
    CHECK(r.out.find("\n3\t") == std::string::npos);

    const auto feats = scratch("f.mpfv");
    r = invoke({"eval", "--model", model.string(), "--data", data.string(), "--export-features",
             feats.string(), "--step", "1"});
    REQUIRE(r.code == 0);
    const std::string text = read_file(feats);
    CHECK(text.rfind("MPFV1 ", 0) == 0);
    CHECK(text.find("STEP=1") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 4);
  }
  SUBCASE("fingerprint mismatch") {
    const auto other = scratch("other3.mpds");
    const ModelConfig c3 = test::make_config(3, 2, 2, 2, 2, 2);
    save_dataset(generate_synthetic(SynthSpec::standard(c3, 2, 1, 2, 0.5), c3, 1), other);
    r = invoke({"eval", "--model", model.string(), "--data", other.string()});
    CHECK(r.code == cli::kValidationFailure);
  }
  SUBCASE("corrupted model file") {
    std::string bad = bytes;
    bad[bad.size() - 1] ^= 0x01;
    const auto path = scratch("bad.model");
    write_file_atomic(path, bad);
    r = invoke({"eval", "--model", path.string(), "--data", data.string()});
    CHECK(r.code == cli::kValidationFailure);
    CHECK(r.err.find("checksum") != std::string::npos);
  }
}

TEST_CASE("cli eval of a zero-parameter model matches the unary baseline") {
  const ModelConfig cfg = test::make_config(3, 2, 2, 3, 2, 2);
  const auto model = scratch("zero.model");
  const auto data = scratch("zero.mpds");
  save_model({cfg, NetworkParams<double>::zeros(cfg)}, model);
  const Dataset ds = generate_synthetic(SynthSpec::standard(cfg, 50, 0, 3, 1.0), cfg, 2);
  save_dataset(ds, data);
  const auto r = invoke({"eval", "--model", model.string(), "--data", data.string()});
  REQUIRE(r.code == 0);
  // Baseline recomputed here straight from the unary scores.
  long hits = 0;
  for (const auto& inst : ds.instances) {
    Eigen::Index best;
    inst.scene_unary.maxCoeff(&best);
    hits += best == inst.truth_scene;
  }
  char expect[64];
  std::snprintf(expect, sizeof expect, "%.4f", hits / 50.0);
  CHECK(r.out.find(expect) != std::string::npos);
}

TEST_CASE("cli gradcheck") {
  auto r = invoke({"gradcheck", "--config", kTiny});
  CHECK(r.code == 0);
  CHECK(r.out.find("0 failures") != std::string::npos);

  r = invoke({"gradcheck", "--config", kTiny, "--tol", "1e-12"});
  CHECK(r.code == cli::kValidationFailure);
  CHECK(r.err.find("trial0.") != std::string::npos);

  r = invoke({"gradcheck", "--config", kTiny, "--trials", "0"});
  CHECK(r.code != 0);
  CHECK(r.err.find("trials must be >= 1") != std::string::npos);
}
