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

#include "mpnn/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "mpnn/config.hpp"
#include "mpnn/evaluation.hpp"
#include "mpnn/grad_check.hpp"
#include "mpnn/io_util.hpp"
#include "mpnn/model_io.hpp"
#include "mpnn/scene_data.hpp"
#include "mpnn/training.hpp"

namespace mpnn::cli {

namespace {

struct GenerateArgs {
  std::string config, out;
  std::uint64_t seed = 0;
  int instances = 100;
  int persons_min = 1;
  int persons_max = -1;  // defaults to M_max
  double noise = 1.0;
  double strength = 1.0;
  double peak = 0.7;
  double coherence_hi = 0.9;
  double coherence_lo = 0.1;
};

struct TrainArgs {
  std::string config, data, model_out, log;
  std::optional<std::uint64_t> seed;
};

struct EvalArgs {
  std::string model, data, export_path, layout = "both";
  bool per_step = false;
  int step = 0;
  std::optional<std::uint64_t> seed;
};

struct GradcheckArgs {
  std::string config;
  double eps = 1e-5;
  double tol = 1e-4;
  int trials = 1;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const ModelConfig cfg = load_config(a.config);
  SynthSpec spec = SynthSpec::standard(cfg, a.instances, a.persons_min,
                                       a.persons_max < 0 ? cfg.max_persons : a.persons_max,
                                       a.noise, a.peak, a.coherence_hi, a.coherence_lo);
  spec.dependency_strength = a.strength;
  const Dataset ds = generate_synthetic(spec, cfg, a.seed);
  save_dataset(ds, a.out);
  out << "wrote " << ds.instances.size() << " instances to " << a.out << "\n";
  return kSuccess;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  ModelConfig cfg = load_config(a.config);
  if (a.seed) cfg.rng_seed = *a.seed;
  const Dataset ds = load_dataset(a.data);
  ds.check_matches(cfg);
  for (const auto& inst : ds.instances) check_instance(inst, cfg);

  std::string log = format_log_header() + "\n";
  const TrainState state = train(ds, cfg, Schedule::alternating(cfg), [&](const EpochLog& e) {
    log += format_log_line(e) + "\n";
  });
  save_model({cfg, state.params}, a.model_out);
  if (a.log.empty())
    out << log;
  else
    write_file_atomic(a.log, log);
  out << "wrote model with " << state.params.num_steps() << " steps to " << a.model_out << "\n";
  return kSuccess;
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const Model model = load_model(a.model);
  const Dataset ds = load_dataset(a.data);
  if (ds.fingerprint() != model.config.data_fingerprint()) {
    ds.check_matches(model.config);
    throw ValidationError("dataset fingerprint does not match model");
  }
  const EvalReport r = evaluate(ds, model.params, model.config);
  if (a.per_step) {
    out << "step\tacc_scene\n";
    for (std::size_t k = 0; k < r.per_step_scene_accuracy.size(); ++k) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%zu\t%.4f\n", k + 1, r.per_step_scene_accuracy[k]);
      out << buf;
    }
  } else {
    out << format_report(r);
  }
  if (!a.export_path.empty()) {
    const int step = a.step == 0 ? model.params.num_steps() : a.step;
    FeatureLayout layout = FeatureLayout::both;
    if (a.layout == "scores") layout = FeatureLayout::scores;
    else if (a.layout == "factors") layout = FeatureLayout::factors;
    else if (a.layout != "both") {
      err << "unknown --layout '" << a.layout << "'\n";
      return kUsageError;
    }
    save_features(extract_dataset_features(ds, model.params, model.config, step, layout),
                  a.export_path);
  }
  return kSuccess;
}

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err) {
  const ModelConfig cfg = load_config(a.config);
  if (a.trials < 1) throw ValidationError("trials must be >= 1");
  GradCheckOptions opts;
  opts.epsilon = a.eps;
  opts.tolerance = a.tol;
  opts.trials = a.trials;
  opts.seed = a.seed;
  const GradCheckReport rep = grad_check(cfg, opts);
  char buf[160];
  std::snprintf(buf, sizeof buf, "checked %zu coordinates, max relative error %.3e, %zu failures\n",
                rep.checked, rep.max_rel_error, rep.failures.size());
  out << buf;
  if (rep.passed()) return kSuccess;
  const std::size_t shown = std::min<std::size_t>(rep.failures.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& f = rep.failures[i];
    std::snprintf(buf, sizeof buf, "  %s analytic=%.10e numeric=%.10e rel=%.3e\n",
                  f.coordinate.c_str(), f.analytic, f.numeric, f.rel_error);
    err << buf;
  }
  return kValidationFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Message-passing label refinement network"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a synthetic dataset");
  g->add_option("--config", gen.config, "Model config file")->required();
  g->add_option("--out", gen.out, "Output dataset path")->required();
  g->add_option("--seed", gen.seed, "Generator seed");
  g->add_option("--instances", gen.instances, "Number of frames");
  g->add_option("--persons-min", gen.persons_min, "Minimum persons per frame");
  g->add_option("--persons-max", gen.persons_max, "Maximum persons per frame (default M_max)");
  g->add_option("--noise", gen.noise, "Gaussian logit noise sigma");
  g->add_option("--strength", gen.strength, "Dependency strength in [0,1]");
  g->add_option("--peak", gen.peak, "Probability of a scene's preferred action");
  g->add_option("--coherence-hi", gen.coherence_hi, "Pose coherence of even scenes");
  g->add_option("--coherence-lo", gen.coherence_lo, "Pose coherence of odd scenes");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--config", tr.config, "Model config file")->required();
  t->add_option("--data", tr.data, "Training dataset")->required();
  t->add_option("--model-out", tr.model_out, "Output model path")->required();
  t->add_option("--log", tr.log, "Training log path (default stdout)");
  t->add_option("--seed", tr.seed, "Override the config seed");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a model");
  e->add_option("--model", ev.model, "Model file")->required();
  e->add_option("--data", ev.data, "Dataset")->required();
  e->add_flag("--per-step", ev.per_step, "Print scene accuracy after every step");
  e->add_option("--export-features", ev.export_path, "Write MPFV1 features to this path");
  e->add_option("--step", ev.step, "Step whose features are exported (default K)");
  e->add_option("--layout", ev.layout, "Feature layout: scores, factors or both");
  e->add_option("--seed", ev.seed, "Unused; accepted for uniformity");

  GradcheckArgs gc;
  auto* c = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  c->add_option("--config", gc.config, "Model config file")->required();
  c->add_option("--eps", gc.eps, "Central difference step");
  c->add_option("--tol", gc.tol, "Relative error tolerance");
  c->add_option("--trials", gc.trials, "Random instances to check");
  c->add_option("--seed", gc.seed, "Seed for random parameters and instances");

  std::vector<std::string> argv_store{"mpnn"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& pe) {
    err << "error: " << pe.what() << "\n";
    return kUsageError;
  }

  try {
    if (g->parsed()) return cmd_generate(gen, out);
    if (t->parsed()) return cmd_train(tr, out);
    if (e->parsed()) return cmd_eval(ev, out, err);
    if (c->parsed()) return cmd_gradcheck(gc, out, err);
  } catch (const ValidationError& ve) {
    err << "error: " << ve.what() << "\n";
    return kValidationFailure;
  } catch (const NumericError& ne) {
    err << "numeric failure: " << ne.what() << "\n";
    return kNumericFailure;
  } catch (const std::filesystem::filesystem_error& fe) {
    err << "error: " << fe.what() << "\n";
    return kValidationFailure;
  }
  return kUsageError;
}

}  // namespace mpnn::cli
