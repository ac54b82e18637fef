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

// onebit_doa: command line front end for simulation, quantization, covariance
// recovery, training and evaluation.
//
// Exit codes: 0 success, 1 runtime or I/O failure, 2 configuration or usage error,
// 3 dynamic-range violation with a fixed dither scale, 4 training divergence.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "onebit_doa/experiment.hpp"

namespace
{

struct Common
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App *cmd, Common &c)
{
    cmd->add_option("--config", c.config, "JSON configuration file (defaults apply to missing keys)");
    cmd->add_option("--seed", c.seed, "Master seed; overrides \"seed\" in the configuration");
    cmd->add_option("--out", c.out, "Output directory; overrides \"output_dir\" in the configuration");
}

onebit::ExperimentConfig resolve(const Common &c)
{
    onebit::ExperimentConfig cfg = c.config.empty() ? onebit::parse_config(nlohmann::json::object())
                                                    : onebit::load_config(c.config);
    if (c.seed)
        cfg.seed = *c.seed;
    if (!c.out.empty())
        cfg.output_dir = c.out;
    cfg.require_seed();
    if (cfg.output_dir.empty())
        throw onebit::ConfigError("no output directory given; set \"output_dir\" or pass --out");
    return cfg;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"One-bit direction-of-arrival estimation with dithered quantization and unrolled sparse recovery"};
    app.require_subcommand(1);

    Common common;
    onebit::PipelineInputs in;
    std::string variant;

    auto *simulate = app.add_subcommand("simulate", "Draw a scene and write its snapshots (OBDA) and truth sidecar");
    add_common(simulate, common);

    auto *quantize = app.add_subcommand("quantize", "Quantize a snapshot file to two dithered one-bit streams (OB1B)");
    add_common(quantize, common);
    quantize->add_option("--input", in.input, "Snapshot file written by simulate")->required();

    auto *covest = app.add_subcommand("covest", "Recover the covariance from a one-bit file");
    add_common(covest, common);
    covest->add_option("--input", in.input, "One-bit file written by quantize")->required();
    covest->add_option("--truth", in.truth, "truth.json from simulate; adds max and Frobenius errors");

    auto *train = app.add_subcommand("train", "Generate a dataset and train the unrolled network");
    add_common(train, common);
    train->add_option("--dataset", in.dataset, "Reuse a DSET file instead of generating one");

    auto *eval = app.add_subcommand("eval", "Recover grid powers for one scene with the configured solver");
    add_common(eval, common);
    eval->add_option("--checkpoint", in.checkpoint, "LSTA checkpoint (required for the lista solver)");
    eval->add_option("--input", in.input, "One-bit file; default simulates the configured scene");
    eval->add_option("--truth", in.truth, "truth.json matching --input");

    auto *music = app.add_subcommand("music", "MUSIC pseudospectrum for one scene");
    add_common(music, common);
    music->add_option("--input", in.input, "One-bit file; default simulates the configured scene");
    music->add_option("--truth", in.truth, "truth.json matching --input");

    auto *bounds = app.add_subcommand("bounds", "Per-layer error bound curve");
    add_common(bounds, common);

    auto *repro = app.add_subcommand("repro-fig2", "Train and compare against MUSIC: a (M=8, K=2), b (M=16, K=3), "
                                                   "c (loss and bound curves for M=8, K=2)");
    add_common(repro, common);
    repro->add_option("variant", variant, "a, b or c")->required()->check(CLI::IsMember({"a", "b", "c"}));

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        return 2;
    }

    try
    {
        const onebit::ExperimentConfig cfg = resolve(common);
        const std::string &out = cfg.output_dir;
        nlohmann::json summary;
        if (simulate->parsed())
            summary = onebit::run_simulate(cfg, out);
        else if (quantize->parsed())
            summary = onebit::run_quantize(cfg, in, out);
        else if (covest->parsed())
            summary = onebit::run_covest(cfg, in, out);
        else if (train->parsed())
            summary = onebit::run_train(cfg, in, out);
        else if (eval->parsed())
            summary = onebit::run_eval(cfg, in, out);
        else if (music->parsed())
            summary = onebit::run_music(cfg, in, out);
        else if (bounds->parsed())
            summary = onebit::run_bounds(cfg, out);
        else if (repro->parsed())
        {
            const onebit::Fig2Result r = onebit::run_fig2(cfg, variant[0], out);
            std::cout << "lista resolved " << r.lista_successes << "/" << r.scenes.size() << ", music resolved "
                      << r.music_successes << "/" << r.scenes.size() << "\n";
        }
        std::cout << "wrote " << out << "\n";
        (void)summary;
        return 0;
    }
    catch (const onebit::ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    catch (const onebit::DynamicRangeError &e)
    {
        std::cerr << "dynamic range violation: " << e.what() << "\n";
        return 3;
    }
    catch (const onebit::TrainingDiverged &e)
    {
        std::cerr << "training diverged: " << e.what() << "\n";
        return 4;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
