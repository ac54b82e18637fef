// SPDX-License-Identifier: Apache-2.0
//
// onebit-doa: direction-of-arrival estimation from dithered one-bit array data
// Copyright (C) 2026 The onebit-doa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

// Experiment configuration and the pipelines behind the command line tool.
//
// A configuration is a JSON object. Every key is optional and falls back to the
// defaults below; unknown keys are rejected. The seed is the one exception: it
// must come from the file or the command line.
//
// Every text artifact carries the configuration hash and seed. CSV files start
// with a "# config_hash=... seed=..." line; binary files are listed with both in
// manifest.json next to them.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "array_model.hpp"
#include "baselines.hpp"
#include "sparse_solver.hpp"
#include "theory.hpp"

namespace onebit
{

class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

enum class SolverKind
{
    ista,
    lista,
    music,
};

struct ExperimentConfig
{
    std::optional<std::uint64_t> seed;
    std::string output_dir;

    ArrayConfig array;
    SceneSampler scene;
    std::vector<double> doas_deg; // fixed scene when nonempty, otherwise sampled
    std::vector<double> powers;   // defaults to unit powers for a fixed scene

    int snapshots = 10000;
    DitherPolicy dither_policy = DitherPolicy::margin;
    double dither_margin = 1.2;
    double dither_scale = 1.0;

    int samples = 2000;
    int validation = 400;
    bool subtract_noise = true;
    bool exact_covariance = false;

    SolverKind solver = SolverKind::lista;
    int layers = 10;
    double lambda_factor = 0.1; // lambda = factor * ||Phi^T c_mean||_inf
    TrainOptions training;
    int ista_iterations = 2000;
    bool music_high_resolution = false;

    int min_separation = 2;
    int peak_tolerance = 1;

    BoundParams bound;
    int eval_scenes = 50;

    // Throws ConfigError.
    void validate() const;
    std::uint64_t require_seed() const;
    TrainingSetOptions dataset_options() const;
};

// Throws ConfigError for malformed input, unknown keys or invalid values.
ExperimentConfig parse_config(const nlohmann::json &j);
ExperimentConfig load_config(const std::string &path);

// Fully resolved configuration. seed and output_dir are left out, so the hash
// names the experiment independently of where and with which seed it runs.
nlohmann::json to_json(const ExperimentConfig &cfg);

// 64-bit FNV-1a of to_json(cfg).dump(), as 16 hex digits.
std::string config_hash(const ExperimentConfig &cfg);

// ---------------------------------------------------------------------------
// Pipelines. Each writes into `out_dir` (created if missing) and returns the
// JSON summary it also writes to summary.json. Errors: ConfigError,
// DynamicRangeError, TrainingDiverged, std::runtime_error for I/O.

struct PipelineInputs
{
    std::string input;      // snapshot or one-bit file
    std::string truth;      // scene sidecar written by simulate
    std::string checkpoint; // LSTA file
    std::string dataset;    // DSET file
};

nlohmann::json run_simulate(const ExperimentConfig &cfg, const std::string &out_dir);
nlohmann::json run_quantize(const ExperimentConfig &cfg, const PipelineInputs &in, const std::string &out_dir);
nlohmann::json run_covest(const ExperimentConfig &cfg, const PipelineInputs &in, const std::string &out_dir);
nlohmann::json run_train(const ExperimentConfig &cfg, const PipelineInputs &in, const std::string &out_dir);
nlohmann::json run_eval(const ExperimentConfig &cfg, const PipelineInputs &in, const std::string &out_dir);
nlohmann::json run_music(const ExperimentConfig &cfg, const PipelineInputs &in, const std::string &out_dir);
nlohmann::json run_bounds(const ExperimentConfig &cfg, const std::string &out_dir);

// ---------------------------------------------------------------------------
// Benchmark scenarios behind repro-fig2. Variant 'a' is two sources on eight
// sensors, 'b' three sources on sixteen, 'c' the scenario of 'a' with loss and
// bound curves. The variant fixes M and K; everything else comes from the
// configuration.

struct SceneOutcome
{
    std::vector<int> truth;         // grid indices
    std::vector<Peak> lista_peaks;
    std::vector<Peak> music_peaks;
    bool lista_resolved = false;
    bool music_resolved = false;
};

struct Fig2Result
{
    char variant = 'a';
    ExperimentConfig config; // with the variant applied
    TrainReport report;
    std::vector<SceneOutcome> scenes; // the first eval_scenes validation samples
    int lista_successes = 0;
    int music_successes = 0;
    double dither_scale = 0.0;        // median T over the evaluated scenes
    std::vector<SweepRow> layer_rows; // per-layer error against the bound, layers 1..I
};

ExperimentConfig apply_variant(ExperimentConfig cfg, char variant);

// With an empty out_dir nothing is written.
Fig2Result run_fig2(const ExperimentConfig &cfg, char variant, const std::string &out_dir);

nlohmann::json fig2_summary(const Fig2Result &result);

} // namespace onebit
