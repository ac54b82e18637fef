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

#include "onebit_doa/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "onebit_doa/one_bit.hpp"
#include "onebit_doa/parallel.hpp"
#include "onebit_doa/rng.hpp"

namespace onebit
{

using nlohmann::json;

namespace
{

// ---------------------------------------------------------------------------
// Strict JSON reading

void convert(const json &v, const std::string &where, double &out)
{
    if (!v.is_number())
        throw ConfigError(where + " must be a number");
    out = v.get<double>();
    if (!std::isfinite(out))
        throw ConfigError(where + " must be finite");
}

void convert(const json &v, const std::string &where, int &out)
{
    if (!v.is_number_integer())
        throw ConfigError(where + " must be an integer");
    const auto value = v.get<std::int64_t>();
    if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max())
        throw ConfigError(where + " is out of range");
    out = static_cast<int>(value);
}

void convert(const json &v, const std::string &where, std::uint64_t &out)
{
    if (v.is_number_unsigned())
        out = v.get<std::uint64_t>();
    else if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
        out = static_cast<std::uint64_t>(v.get<std::int64_t>());
    else
        throw ConfigError(where + " must be a nonnegative integer");
}

void convert(const json &v, const std::string &where, bool &out)
{
    if (!v.is_boolean())
        throw ConfigError(where + " must be true or false");
    out = v.get<bool>();
}

void convert(const json &v, const std::string &where, std::string &out)
{
    if (!v.is_string())
        throw ConfigError(where + " must be a string");
    out = v.get<std::string>();
}

void convert(const json &v, const std::string &where, std::vector<double> &out)
{
    if (!v.is_array())
        throw ConfigError(where + " must be an array of numbers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i)
    {
        double x = 0.0;
        convert(v[i], where + "[" + std::to_string(i) + "]", x);
        out.push_back(x);
    }
}

class Section
{
  public:
    Section(const json &j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw ConfigError((path_.empty() ? std::string("configuration") : path_) + " must be an object");
    }

    template <typename T>
    void read(const std::string &key, T &out)
    {
        if (const json *v = take(key))
            convert(*v, where(key), out);
    }

    // Calls fn(Section&) for a nested object if present.
    template <typename Fn>
    void nested(const std::string &key, Fn fn)
    {
        if (const json *v = take(key))
        {
            Section s(*v, where(key));
            fn(s);
            s.finish();
        }
    }

    void finish() const
    {
        for (const auto &item : j_.items())
            if (!seen_.count(item.key()))
                throw ConfigError("unknown configuration key " + where(item.key()));
    }

    std::string where(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }

  private:
    const json *take(const std::string &key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    const json &j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string &text, const std::string &where, const std::pair<const char *, Enum> (&names)[N])
{
    for (const auto &[name, value] : names)
        if (text == name)
            return value;
    std::string allowed;
    for (const auto &entry : names)
        allowed += (allowed.empty() ? "" : ", ") + std::string(entry.first);
    throw ConfigError(where + " must be one of: " + allowed);
}

template <typename Enum, std::size_t N>
const char *enum_name(Enum value, const std::pair<const char *, Enum> (&names)[N])
{
    for (const auto &[name, v] : names)
        if (v == value)
            return name;
    return "";
}

const std::pair<const char *, PowerPolicy> power_names[] = {{"unit", PowerPolicy::unit},
                                                            {"uniform", PowerPolicy::uniform}};
const std::pair<const char *, DitherPolicy> dither_names[] = {{"margin", DitherPolicy::margin},
                                                              {"fixed", DitherPolicy::fixed}};
const std::pair<const char *, SolverKind> solver_names[] = {
    {"ista", SolverKind::ista}, {"lista", SolverKind::lista}, {"music", SolverKind::music}};
const std::pair<const char *, bool> music_cov_names[] = {{"one_bit", false}, {"high_resolution", true}};

// ---------------------------------------------------------------------------
// Output helpers

std::string num(double v)
{
    if (std::isnan(v))
        return {};
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class OutputDir
{
  public:
    OutputDir(const std::string &dir, const ExperimentConfig &cfg)
        : dir_(dir), hash_(config_hash(cfg)), seed_(cfg.require_seed())
    {
        if (dir_.empty())
            throw ConfigError("no output directory given");
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec || !std::filesystem::is_directory(dir_))
            throw std::runtime_error("cannot create output directory " + dir_);
    }

    std::string path(const std::string &name) const { return (std::filesystem::path(dir_) / name).string(); }

    // Opens a CSV file and writes the provenance line.
    std::ofstream csv(const std::string &name) const
    {
        std::ofstream os(path(name));
        if (!os)
            throw std::runtime_error("cannot open " + path(name) + " for writing");
        os << "# config_hash=" << hash_ << " seed=" << seed_ << '\n';
        return os;
    }

    void binary(const std::string &name, const std::string &format) { manifest_.push_back({name, format}); }

    void finish(const json &summary) const
    {
        write_json("summary.json", summary);
        if (!manifest_.empty())
        {
            json files = json::array();
            for (const auto &[name, format] : manifest_)
                files.push_back({{"file", name}, {"format", format}});
            write_json("manifest.json", {{"config_hash", hash_}, {"seed", seed_}, {"files", files}});
        }
    }

    const std::string &hash() const { return hash_; }
    std::uint64_t seed() const { return seed_; }

  private:
    void write_json(const std::string &name, const json &j) const
    {
        std::ofstream os(path(name));
        if (!os)
            throw std::runtime_error("cannot open " + path(name) + " for writing");
        os << j.dump(2) << '\n';
    }

    std::string dir_;
    std::string hash_;
    std::uint64_t seed_;
    std::vector<std::pair<std::string, std::string>> manifest_;
};

json base_summary(const ExperimentConfig &cfg, const std::string &command)
{
    return {{"command", command},
            {"config_hash", config_hash(cfg)},
            {"seed", cfg.require_seed()},
            {"peaks", json::array()},
            {"doa_errors_deg", json::array()},
            {"cov_error", {{"max", nullptr}, {"fro", nullptr}}},
            {"losses", {{"train", json::array()}, {"val", json::array()}}},
            {"bound", json::array()}};
}

json peaks_json(const std::vector<Peak> &peaks)
{
    json out = json::array();
    for (const Peak &p : peaks)
        out.push_back({{"angle_deg", p.angle_deg}, {"value", finite_or_null(p.value)}});
    return out;
}

json errors_json(const std::vector<double> &errors)
{
    json out = json::array();
    for (double e : errors)
        out.push_back(finite_or_null(e));
    return out;
}

json matrix_json(const Eigen::MatrixXd &m)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
    {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        out.push_back(row);
    }
    return out;
}

Eigen::MatrixXd matrix_from_json(const json &j, const std::string &where)
{
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw ConfigError(where + " must be a nonempty matrix");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
    for (std::size_t i = 0; i < j.size(); ++i)
    {
        if (!j[i].is_array() || j[i].size() != j[0].size())
            throw ConfigError(where + " has ragged rows");
        for (std::size_t k = 0; k < j[i].size(); ++k)
            convert(j[i][k], where, m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
    }
    return m;
}

void write_covariance_csv(std::ostream &os, const Eigen::MatrixXcd &R)
{
    os << "row,col,re,im\n";
    for (Eigen::Index i = 0; i < R.rows(); ++i)
        for (Eigen::Index j = 0; j < R.cols(); ++j)
            os << i << ',' << j << ',' << num(R(i, j).real()) << ',' << num(R(i, j).imag()) << '\n';
}

// ---------------------------------------------------------------------------
// Scenes and measurements

// Known truth for a single-scene run.
struct Truth
{
    SourceScene scene;
    Eigen::MatrixXcd covariance;
};

SourceScene single_scene(const ExperimentConfig &cfg, std::uint64_t seed)
{
    if (cfg.doas_deg.empty())
        return cfg.scene.sample(cfg.array, seed, 0);
    std::vector<double> powers = cfg.powers;
    if (powers.empty())
        powers.assign(cfg.doas_deg.size(), 1.0);
    return make_scene(cfg.array, cfg.doas_deg, powers, cfg.scene.noise_variance);
}

std::uint64_t single_measurement_seed(std::uint64_t seed) { return derive_seed(seed, StreamTag::sample, 0); }

json truth_json(const Truth &t)
{
    return {{"doas_deg", t.scene.doas_deg},
            {"powers", t.scene.powers},
            {"noise_variance", t.scene.noise_variance},
            {"support", t.scene.support},
            {"covariance", {{"re", matrix_json(t.covariance.real())}, {"im", matrix_json(t.covariance.imag())}}}};
}

Truth read_truth(const std::string &path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot open truth file " + path);
    json j;
    try
    {
        is >> j;
    }
    catch (const json::exception &e)
    {
        throw ConfigError("truth file " + path + ": " + e.what());
    }
    Truth t;
    try
    {
        t.scene.doas_deg = j.at("doas_deg").get<std::vector<double>>();
        t.scene.powers = j.at("powers").get<std::vector<double>>();
        t.scene.noise_variance = j.at("noise_variance").get<double>();
        t.scene.support = j.at("support").get<std::vector<int>>();
    }
    catch (const json::exception &e)
    {
        throw ConfigError("truth file " + path + ": " + e.what());
    }
    const Eigen::MatrixXd re = matrix_from_json(j.at("covariance").at("re"), "truth covariance re");
    const Eigen::MatrixXd im = matrix_from_json(j.at("covariance").at("im"), "truth covariance im");
    if (re.rows() != im.rows() || re.cols() != im.cols())
        throw ConfigError("truth covariance parts differ in size");
    t.covariance.resize(re.rows(), re.cols());
    t.covariance.real() = re;
    t.covariance.imag() = im;
    return t;
}

double choose_scale(const ExperimentConfig &cfg, const SnapshotSet &snapshots)
{
    if (cfg.dither_policy == DitherPolicy::fixed)
    {
        if (max_component(snapshots) >= cfg.dither_scale)
            throw DynamicRangeError("snapshot component reaches the fixed dither scale T = " +
                                    std::to_string(cfg.dither_scale));
        return cfg.dither_scale;
    }
    return pick_dither_scale(snapshots, cfg.dither_margin);
}

// One-bit covariance of a single scene: either from a one-bit file or simulated
// with the same seeds as simulate followed by quantize.
struct SingleRun
{
    std::optional<Truth> truth;
    Eigen::MatrixXcd covariance; // one-bit estimate
    Eigen::MatrixXcd high_resolution;
    double scale = 0.0;
    int snapshots = 0;
};

SingleRun single_run(const ExperimentConfig &cfg, const PipelineInputs &in, bool need_high_resolution)
{
    const std::uint64_t seed = cfg.require_seed();
    SingleRun run;
    if (!in.input.empty())
    {
        if (need_high_resolution)
            throw ConfigError("a high-resolution covariance needs simulated snapshots, not a one-bit input");
        const OneBitSet bits = read_one_bit(in.input);
        if (bits.sensors() != cfg.array.sensors)
            throw ConfigError("one-bit file has " + std::to_string(bits.sensors()) + " sensors, configuration has " +
                              std::to_string(cfg.array.sensors));
        run.covariance = estimate_covariance(bits).hermitian;
        run.scale = bits.scale();
        run.snapshots = bits.count();
        if (!in.truth.empty())
            run.truth = read_truth(in.truth);
        return run;
    }
    Truth truth;
    truth.scene = single_scene(cfg, seed);
    truth.covariance = true_covariance(truth.scene, cfg.array);
    const std::uint64_t mseed = single_measurement_seed(seed);
    const SnapshotSet snapshots = generate_snapshots(truth.scene, cfg.array, cfg.snapshots, mseed);
    run.scale = choose_scale(cfg, snapshots);
    run.covariance = estimate_covariance(quantize(snapshots, DitherParams{run.scale, mseed})).hermitian;
    if (need_high_resolution)
        run.high_resolution = sample_covariance(snapshots);
    run.snapshots = cfg.snapshots;
    run.truth = std::move(truth);
    return run;
}

BoundParams bound_params(const ExperimentConfig &cfg, double scale, int snapshots)
{
    BoundParams p = cfg.bound;
    p.scale = scale;
    p.sensors = cfg.array.sensors;
    p.snapshots = snapshots;
    return p;
}

json bound_json(const BoundParams &p, int layers)
{
    json out = json::array();
    for (int i = 1; i <= layers; ++i)
        out.push_back(layer_error_bound(i, p));
    return out;
}

void write_spectrum(OutputDir &out, const std::string &name, const Spectrum &spectrum)
{
    std::ofstream os = out.csv(name);
    write_spectrum_csv(os, spectrum);
}

void write_losses(OutputDir &out, const TrainReport &report, const BoundParams *bound)
{
    std::ofstream os = out.csv("losses.csv");
    os << "epoch,train_loss,val_loss" << (bound ? ",bound" : "") << '\n';
    auto row = [&](int epoch, double tl, double vl) {
        os << epoch << ',' << num(tl) << ',' << num(vl);
        if (bound)
            os << ',' << num(layer_error_bound(epoch, *bound));
        os << '\n';
    };
    row(0, report.initial_train_loss, report.initial_val_loss);
    for (std::size_t e = 0; e < report.train_loss.size(); ++e)
        row(static_cast<int>(e + 1), report.train_loss[e], report.val_loss[e]);
}

json losses_json(const TrainReport &report)
{
    json train = json::array({report.initial_train_loss});
    json val = json::array({report.initial_val_loss});
    for (double v : report.train_loss)
        train.push_back(finite_or_null(v));
    for (double v : report.val_loss)
        val.push_back(finite_or_null(v));
    return {{"train", train}, {"val", val}};
}

std::vector<int> support_of(const Eigen::VectorXd &target)
{
    std::vector<int> s;
    for (Eigen::Index l = 0; l < target.size(); ++l)
        if (target(l) > 0.0)
            s.push_back(static_cast<int>(l));
    return s;
}

std::vector<double> grid_angles(const ArrayConfig &cfg, const std::vector<int> &indices)
{
    std::vector<double> out;
    for (int l : indices)
        out.push_back(cfg.grid_angle_deg(l));
    return out;
}

std::string join_angles(const std::vector<double> &angles)
{
    std::string s;
    for (double a : angles)
        s += (s.empty() ? "" : ";") + num(a);
    return s;
}

std::vector<double> peak_angles(const std::vector<Peak> &peaks)
{
    std::vector<double> out;
    for (const Peak &p : peaks)
        out.push_back(p.angle_deg);
    return out;
}

ListaParams initial_params(const ExperimentConfig &cfg, const Eigen::MatrixXd &phi, const TrainingSet &data,
                           double *lambda_out)
{
    const Eigen::VectorXd mean = data.inputs.leftCols(data.train_count).rowwise().mean();
    const double lambda = default_lambda(phi, mean, cfg.lambda_factor);
    if (lambda_out)
        *lambda_out = lambda;
    return ista_params(phi, lambda, cfg.layers);
}

TrainOptions train_options(const ExperimentConfig &cfg)
{
    TrainOptions o = cfg.training;
    o.seed = cfg.require_seed();
    return o;
}

} // namespace

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const
{
    try
    {
        array.validate();
    }
    catch (const std::invalid_argument &e)
    {
        throw ConfigError(std::string("array: ") + e.what());
    }
    const int M = array.sensors;
    const int K = doas_deg.empty() ? scene.sources : static_cast<int>(doas_deg.size());
    if (K < 1 || K >= M)
        throw ConfigError("scene needs 1 <= sources < sensors (" + std::to_string(K) + " sources, " +
                          std::to_string(M) + " sensors)");
    if (!doas_deg.empty() && static_cast<int>(doas_deg.size()) != scene.sources)
        throw ConfigError("scene.doas_deg has " + std::to_string(doas_deg.size()) + " entries but scene.sources is " +
                          std::to_string(scene.sources));
    if (!powers.empty() && powers.size() != doas_deg.size())
        throw ConfigError("scene.powers must match scene.doas_deg in length");
    for (double p : powers)
        if (!(p > 0.0))
            throw ConfigError("scene.powers must be positive");
    const double lo = std::min(array.grid_start_deg, array.grid_stop_deg);
    const double hi = std::max(array.grid_start_deg, array.grid_stop_deg);
    for (double d : doas_deg)
        if (d < lo || d > hi)
            throw ConfigError("scene.doas_deg entry " + num(d) + " lies outside the grid");
    if (!(scene.angle_min_deg <= scene.angle_max_deg) || scene.angle_min_deg < lo || scene.angle_max_deg > hi)
        throw ConfigError("scene angle range must lie within the grid");
    if (!(scene.min_separation_deg >= 0.0))
        throw ConfigError("scene.min_separation_deg must be nonnegative");
    if (!(scene.noise_variance >= 0.0))
        throw ConfigError("scene.noise_variance must be nonnegative");
    if (!(scene.power_min > 0.0 && scene.power_max >= scene.power_min))
        throw ConfigError("scene power range must satisfy 0 < power_min <= power_max");
    if (snapshots < 1)
        throw ConfigError("snapshots must be at least 1");
    if (!(dither_margin >= 1.0))
        throw ConfigError("dither.margin must be at least 1");
    if (!(dither_scale > 0.0))
        throw ConfigError("dither.scale must be positive");
    if (samples < 2)
        throw ConfigError("dataset.samples must be at least 2");
    if (validation < 1 || validation >= samples)
        throw ConfigError("dataset.validation must lie in [1, samples)");
    if (layers < 1)
        throw ConfigError("lista.layers must be at least 1");
    if (!(lambda_factor > 0.0))
        throw ConfigError("lista.lambda_factor must be positive");
    if (!(training.learning_rate >= 0.0) || training.batch_size < 1 || training.epochs < 0)
        throw ConfigError("training needs learning_rate >= 0, batch_size >= 1 and epochs >= 0");
    if (!(training.beta1 >= 0.0 && training.beta1 < 1.0 && training.beta2 >= 0.0 && training.beta2 < 1.0))
        throw ConfigError("training betas must lie in [0, 1)");
    if (!(training.epsilon > 0.0) || !(training.divergence_factor > 1.0))
        throw ConfigError("training needs epsilon > 0 and divergence_factor > 1");
    if (ista_iterations < 1)
        throw ConfigError("ista.iterations must be at least 1");
    if (min_separation < 0 || peak_tolerance < 0)
        throw ConfigError("peak separation and tolerance must be nonnegative");
    if (!(bound.sparsity > 0.0 && bound.amplitude > 0.0 && bound.decay > 0.0 && bound.constant > 0.0 &&
          bound.confidence >= 0.0))
        throw ConfigError("bound constants must be positive (confidence nonnegative)");
    if (eval_scenes < 1 || eval_scenes > validation)
        throw ConfigError("evaluation.scenes must lie in [1, dataset.validation]");
}

std::uint64_t ExperimentConfig::require_seed() const
{
    if (!seed)
        throw ConfigError("no seed given; set \"seed\" in the configuration or pass --seed");
    return *seed;
}

TrainingSetOptions ExperimentConfig::dataset_options() const
{
    TrainingSetOptions o;
    o.samples = samples;
    o.validation = validation;
    o.snapshots = snapshots;
    o.dither_policy = dither_policy;
    o.dither_margin = dither_margin;
    o.dither_scale = dither_scale;
    o.subtract_noise = subtract_noise;
    o.exact_covariance = exact_covariance;
    return o;
}

ExperimentConfig parse_config(const json &j)
{
    ExperimentConfig cfg;
    Section root(j, "");
    std::uint64_t seed = 0;
    if (j.is_object() && j.contains("seed"))
    {
        root.read("seed", seed);
        cfg.seed = seed;
    }
    root.read("output_dir", cfg.output_dir);
    root.nested("array", [&](Section &s) {
        s.read("sensors", cfg.array.sensors);
        s.read("spacing_ratio", cfg.array.spacing_ratio);
        s.read("grid_start_deg", cfg.array.grid_start_deg);
        s.read("grid_stop_deg", cfg.array.grid_stop_deg);
        s.read("grid_step_deg", cfg.array.grid_step_deg);
    });
    root.nested("scene", [&](Section &s) {
        std::string policy = enum_name(cfg.scene.power_policy, power_names);
        s.read("sources", cfg.scene.sources);
        s.read("angle_min_deg", cfg.scene.angle_min_deg);
        s.read("angle_max_deg", cfg.scene.angle_max_deg);
        s.read("power_policy", policy);
        cfg.scene.power_policy = parse_enum(policy, s.where("power_policy"), power_names);
        s.read("power_min", cfg.scene.power_min);
        s.read("power_max", cfg.scene.power_max);
        s.read("min_separation_deg", cfg.scene.min_separation_deg);
        s.read("on_grid", cfg.scene.on_grid);
        s.read("noise_variance", cfg.scene.noise_variance);
        s.read("doas_deg", cfg.doas_deg);
        s.read("powers", cfg.powers);
    });
    root.read("snapshots", cfg.snapshots);
    root.nested("dither", [&](Section &s) {
        std::string policy = enum_name(cfg.dither_policy, dither_names);
        s.read("policy", policy);
        cfg.dither_policy = parse_enum(policy, s.where("policy"), dither_names);
        s.read("margin", cfg.dither_margin);
        s.read("scale", cfg.dither_scale);
    });
    root.nested("dataset", [&](Section &s) {
        s.read("samples", cfg.samples);
        s.read("validation", cfg.validation);
        s.read("subtract_noise", cfg.subtract_noise);
        s.read("exact_covariance", cfg.exact_covariance);
    });
    std::string solver = enum_name(cfg.solver, solver_names);
    root.read("solver", solver);
    cfg.solver = parse_enum(solver, "solver", solver_names);
    root.nested("lista", [&](Section &s) {
        s.read("layers", cfg.layers);
        s.read("lambda_factor", cfg.lambda_factor);
    });
    root.nested("training", [&](Section &s) {
        s.read("learning_rate", cfg.training.learning_rate);
        s.read("relative_steps", cfg.training.relative_steps);
        s.read("batch_size", cfg.training.batch_size);
        s.read("epochs", cfg.training.epochs);
        s.read("beta1", cfg.training.beta1);
        s.read("beta2", cfg.training.beta2);
        s.read("epsilon", cfg.training.epsilon);
        s.read("divergence_factor", cfg.training.divergence_factor);
    });
    root.nested("ista", [&](Section &s) { s.read("iterations", cfg.ista_iterations); });
    root.nested("music", [&](Section &s) {
        std::string cov = enum_name(cfg.music_high_resolution, music_cov_names);
        s.read("covariance", cov);
        cfg.music_high_resolution = parse_enum(cov, s.where("covariance"), music_cov_names);
    });
    root.nested("peaks", [&](Section &s) {
        s.read("min_separation", cfg.min_separation);
        s.read("tolerance", cfg.peak_tolerance);
    });
    root.nested("bounds", [&](Section &s) {
        s.read("sparsity", cfg.bound.sparsity);
        s.read("amplitude", cfg.bound.amplitude);
        s.read("decay", cfg.bound.decay);
        s.read("confidence", cfg.bound.confidence);
        s.read("constant", cfg.bound.constant);
        s.read("covariance_constant", cfg.bound.covariance_constant);
    });
    root.nested("evaluation", [&](Section &s) { s.read("scenes", cfg.eval_scenes); });
    root.finish();
    if (!cfg.doas_deg.empty() && !(j.contains("scene") && j["scene"].contains("sources")))
        cfg.scene.sources = static_cast<int>(cfg.doas_deg.size());
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string &path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot open configuration " + path);
    json j;
    try
    {
        is >> j;
    }
    catch (const json::exception &e)
    {
        throw ConfigError("configuration " + path + ": " + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig &cfg)
{
    json scene = {{"sources", cfg.scene.sources},
                  {"angle_min_deg", cfg.scene.angle_min_deg},
                  {"angle_max_deg", cfg.scene.angle_max_deg},
                  {"power_policy", enum_name(cfg.scene.power_policy, power_names)},
                  {"power_min", cfg.scene.power_min},
                  {"power_max", cfg.scene.power_max},
                  {"min_separation_deg", cfg.scene.min_separation_deg},
                  {"on_grid", cfg.scene.on_grid},
                  {"noise_variance", cfg.scene.noise_variance},
                  {"doas_deg", cfg.doas_deg},
                  {"powers", cfg.powers}};
    return {{"array",
             {{"sensors", cfg.array.sensors},
              {"spacing_ratio", cfg.array.spacing_ratio},
              {"grid_start_deg", cfg.array.grid_start_deg},
              {"grid_stop_deg", cfg.array.grid_stop_deg},
              {"grid_step_deg", cfg.array.grid_step_deg}}},
            {"scene", scene},
            {"snapshots", cfg.snapshots},
            {"dither",
             {{"policy", enum_name(cfg.dither_policy, dither_names)},
              {"margin", cfg.dither_margin},
              {"scale", cfg.dither_scale}}},
            {"dataset",
             {{"samples", cfg.samples},
              {"validation", cfg.validation},
              {"subtract_noise", cfg.subtract_noise},
              {"exact_covariance", cfg.exact_covariance}}},
            {"solver", enum_name(cfg.solver, solver_names)},
            {"lista", {{"layers", cfg.layers}, {"lambda_factor", cfg.lambda_factor}}},
            {"training",
             {{"learning_rate", cfg.training.learning_rate},
              {"relative_steps", cfg.training.relative_steps},
              {"batch_size", cfg.training.batch_size},
              {"epochs", cfg.training.epochs},
              {"beta1", cfg.training.beta1},
              {"beta2", cfg.training.beta2},
              {"epsilon", cfg.training.epsilon},
              {"divergence_factor", cfg.training.divergence_factor}}},
            {"ista", {{"iterations", cfg.ista_iterations}}},
            {"music", {{"covariance", enum_name(cfg.music_high_resolution, music_cov_names)}}},
            {"peaks", {{"min_separation", cfg.min_separation}, {"tolerance", cfg.peak_tolerance}}},
            {"bounds",
             {{"sparsity", cfg.bound.sparsity},
              {"amplitude", cfg.bound.amplitude},
              {"decay", cfg.bound.decay},
              {"confidence", cfg.bound.confidence},
              {"constant", cfg.bound.constant},
              {"covariance_constant", cfg.bound.covariance_constant}}},
            {"evaluation", {{"scenes", cfg.eval_scenes}}}};
}

std::string config_hash(const ExperimentConfig &cfg)
{
    const std::string text = to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text)
    {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Single-step pipelines

json run_simulate(const ExperimentConfig &cfg, const std::string &out_dir)
{
    cfg.validate();
    OutputDir out(out_dir, cfg);
    const std::uint64_t seed = out.seed();
    Truth truth;
    truth.scene = single_scene(cfg, seed);
    truth.covariance = true_covariance(truth.scene, cfg.array);
    const SnapshotSet snapshots = generate_snapshots(truth.scene, cfg.array, cfg.snapshots, single_measurement_seed(seed));
    write_snapshots(out.path("snapshots.obda"), snapshots);
    out.binary("snapshots.obda", "OBDA");

    json t = truth_json(truth);
    t["config_hash"] = out.hash();
    t["seed"] = seed;
    {
        std::ofstream os(out.path("truth.json"));
        os << t.dump(2) << '\n';
    }

    json summary = base_summary(cfg, "simulate");
    summary["truth"] = {{"doas_deg", truth.scene.doas_deg}, {"powers", truth.scene.powers},
                        {"support", truth.scene.support}, {"noise_variance", truth.scene.noise_variance}};
    summary["snapshots"] = snapshots.count();
    summary["max_component"] = max_component(snapshots);
    out.finish(summary);
    return summary;
}

json run_quantize(const ExperimentConfig &cfg, const PipelineInputs &in, const std::string &out_dir)
{
    cfg.validate();
    if (in.input.empty())
        throw ConfigError("quantize needs --input with a snapshot file");
    OutputDir out(out_dir, cfg);
    const SnapshotSet snapshots = read_snapshots(in.input);
    const double scale = choose_scale(cfg, snapshots);
    const OneBitSet bits = quantize(snapshots, DitherParams{scale, single_measurement_seed(out.seed())});
    write_one_bit(out.path("onebit.ob1b"), bits);
    out.binary("onebit.ob1b", "OB1B");

    json summary = base_summary(cfg, "quantize");
    summary["dither_scale"] = scale;
    summary["max_component"] = max_component(snapshots);
    summary["snapshots"] = snapshots.count();
    out.finish(summary);
    return summary;
}

json run_covest(const ExperimentConfig &cfg, const PipelineInputs &in, const std::string &out_dir)
{
    cfg.validate();
    if (in.input.empty())
        throw ConfigError("covest needs --input with a one-bit file");
    OutputDir out(out_dir, cfg);
    const OneBitSet bits = read_one_bit(in.input);
    const CovarianceEstimate est = estimate_covariance(bits);
    {
        std::ofstream os = out.csv("covariance.csv");
        write_covariance_csv(os, est.hermitian);
    }
    json summary = base_summary(cfg, "covest");
    summary["dither_scale"] = bits.scale();
    summary["snapshots"] = bits.count();
    if (!in.truth.empty())
    {
        const Truth truth = read_truth(in.truth);
        const CovarianceErrors e = covariance_error_norms(truth.covariance, est.hermitian);
        std::ofstream os = out.csv("cov_error.csv");
        os << "max,fro\n" << num(e.max_norm) << ',' << num(e.frobenius) << '\n';
        summary["cov_error"] = {{"max", e.max_norm}, {"fro", e.frobenius}};
    }
    out.finish(summary);
    return summary;
}

json run_train(const ExperimentConfig &cfg, const PipelineInputs &in, const std::string &out_dir)
{
    cfg.validate();
    OutputDir out(out_dir, cfg);
    const std::uint64_t seed = out.seed();
    TrainingSet data;
    if (!in.dataset.empty())
    {
        data = read_training_set(in.dataset, cfg.validation);
        data.noise_variance = cfg.subtract_noise ? cfg.scene.noise_variance : 0.0;
        if (data.sensors != cfg.array.sensors || data.targets.rows() != cfg.array.grid_size())
            throw ConfigError("dataset dimensions do not match the configuration");
    }
    else
    {
        data = make_training_set(cfg.array, cfg.scene, cfg.dataset_options(), seed);
        write_training_set(out.path("dataset.dset"), data);
        out.binary("dataset.dset", "DSET");
    }
    const Eigen::MatrixXd phi = real_dictionary(cfg.array);
    double lambda = 0.0;
    const ListaParams init = initial_params(cfg, phi, data, &lambda);
    const TrainReport report = train(data, phi, init, train_options(cfg));
    write_checkpoint(out.path("model.lsta"), report.params, cfg.array.sensors);
    out.binary("model.lsta", "LSTA");
    write_losses(out, report, nullptr);

    json summary = base_summary(cfg, "train");
    summary["losses"] = losses_json(report);
    summary["best_epoch"] = report.best_epoch;
    summary["lambda"] = lambda;
    out.finish(summary);
    return summary;
}

json run_eval(const ExperimentConfig &cfg, const PipelineInputs &in, const std::string &out_dir)
{
    cfg.validate();
    if (cfg.solver == SolverKind::music)
        return run_music(cfg, in, out_dir);
    if (cfg.solver == SolverKind::lista && in.checkpoint.empty())
        throw ConfigError("eval with the lista solver needs --checkpoint");
    OutputDir out(out_dir, cfg);
    const SingleRun run = single_run(cfg, in, false);
    const Eigen::MatrixXd phi = real_dictionary(cfg.array);
    const double sigma2 = run.truth && cfg.subtract_noise ? run.truth->scene.noise_variance
                          : cfg.subtract_noise         ? cfg.scene.noise_variance
                                                       : 0.0;
    const Eigen::VectorXd c = stack_covariance(run.covariance) - noise_offset(cfg.array.sensors, sigma2);

    json summary = base_summary(cfg, "eval");
    std::vector<Eigen::VectorXd> layers;
    Eigen::VectorXd nu;
    SpectrumKind kind = SpectrumKind::lista;
    if (cfg.solver == SolverKind::lista)
    {
        int sensors = 0;
        const ListaParams params = read_checkpoint(in.checkpoint, &sensors);
        if (sensors != cfg.array.sensors)
            throw ConfigError("checkpoint was trained for " + std::to_string(sensors) + " sensors");
        params.validate(phi.rows(), phi.cols());
        ListaTrace trace = lista_forward(params, phi, c);
        nu = trace.final();
        layers.assign(trace.outputs.begin() + 1, trace.outputs.end());
    }
    else
    {
        kind = SpectrumKind::ista;
        const double lambda = cfg.lambda_factor * (phi.transpose() * c).cwiseAbs().maxCoeff();
        nu = ista_solve(phi, c, lambda, cfg.ista_iterations).solution;
        summary["lambda"] = lambda;
    }
    const Spectrum spectrum = power_spectrum(nu, cfg.array, kind);
    write_spectrum(out, std::string("spectrum_") + std::string(to_string(kind)) + ".csv", spectrum);
    const int K = run.truth ? run.truth->scene.source_count() : cfg.scene.sources;
    const std::vector<Peak> peaks = find_peaks(spectrum, K, cfg.min_separation);
    summary["peaks"] = peaks_json(peaks);
    summary["dither_scale"] = run.scale;

    const BoundParams bp = bound_params(cfg, run.scale, run.snapshots);
    if (run.truth)
    {
        const SourceScene &scene = run.truth->scene;
        summary["doa_errors_deg"] = errors_json(doa_errors_deg(peaks, scene.doas_deg));
        summary["resolved"] = peaks_match(peaks, scene.support, cfg.peak_tolerance);
        const CovarianceErrors e = covariance_error_norms(run.truth->covariance, run.covariance);
        summary["cov_error"] = {{"max", e.max_norm}, {"fro", e.frobenius}};
        if (!layers.empty())
        {
            const Eigen::VectorXd truth_nu = scene.grid_powers(cfg.array.grid_size());
            std::vector<SweepRow> rows;
            json errs = json::array();
            for (std::size_t i = 0; i < layers.size(); ++i)
            {
                const double err = (layers[i] - truth_nu).norm();
                errs.push_back(err);
                const double layer = static_cast<double>(i + 1);
                rows.push_back(summarize("layer", layer, {err}, layer_error_bound(layer, bp)));
            }
            std::ofstream os = out.csv("layers.csv");
            write_sweep_csv(os, rows);
            summary["layer_errors"] = errs;
        }
    }
    summary["bound"] = bound_json(bp, layers.empty() ? cfg.layers : static_cast<int>(layers.size()));
    out.finish(summary);
    return summary;
}

json run_music(const ExperimentConfig &cfg, const PipelineInputs &in, const std::string &out_dir)
{
    cfg.validate();
    OutputDir out(out_dir, cfg);
    const SingleRun run = single_run(cfg, in, cfg.music_high_resolution);
    const Eigen::MatrixXcd &R = cfg.music_high_resolution ? run.high_resolution : run.covariance;
    const int K = run.truth ? run.truth->scene.source_count() : cfg.scene.sources;
    const Spectrum spectrum = music_spectrum(R, K, cfg.array);
    write_spectrum(out, "spectrum_music.csv", spectrum);
    const std::vector<Peak> peaks = find_peaks(spectrum, K, cfg.min_separation);

    json summary = base_summary(cfg, "music");
    summary["peaks"] = peaks_json(peaks);
    summary["dither_scale"] = run.scale;
    if (run.truth)
    {
        summary["doa_errors_deg"] = errors_json(doa_errors_deg(peaks, run.truth->scene.doas_deg));
        summary["resolved"] = peaks_match(peaks, run.truth->scene.support, cfg.peak_tolerance);
        const CovarianceErrors e = covariance_error_norms(run.truth->covariance, run.covariance);
        summary["cov_error"] = {{"max", e.max_norm}, {"fro", e.frobenius}};
    }
    out.finish(summary);
    return summary;
}

json run_bounds(const ExperimentConfig &cfg, const std::string &out_dir)
{
    cfg.validate();
    OutputDir out(out_dir, cfg);
    double scale = cfg.dither_scale;
    if (cfg.dither_policy == DitherPolicy::margin)
    {
        const SourceScene scene = single_scene(cfg, out.seed());
        scale = pick_dither_scale(
            generate_snapshots(scene, cfg.array, cfg.snapshots, single_measurement_seed(out.seed())), cfg.dither_margin);
    }
    const BoundParams bp = bound_params(cfg, scale, cfg.snapshots);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<SweepRow> rows;
    json curve = json::array();
    for (int i = 0; i <= cfg.layers; ++i)
    {
        const double b = layer_error_bound(i, bp);
        rows.push_back(SweepRow{"layer", static_cast<double>(i), nan, nan, nan, b});
        curve.push_back(b);
    }
    {
        std::ofstream os = out.csv("bounds.csv");
        write_sweep_csv(os, rows);
    }
    json summary = base_summary(cfg, "bounds");
    summary["bound"] = curve;
    summary["bound_layers"] = {0, cfg.layers};
    summary["bound_floor"] = bound_floor(bp);
    summary["dither_scale"] = scale;
    out.finish(summary);
    return summary;
}

// ---------------------------------------------------------------------------
// repro-fig2 scenarios

ExperimentConfig apply_variant(ExperimentConfig cfg, char variant)
{
    switch (variant)
    {
    case 'a':
    case 'c':
        cfg.array.sensors = 8;
        cfg.scene.sources = 2;
        break;
    case 'b':
        cfg.array.sensors = 16;
        cfg.scene.sources = 3;
        break;
    default:
        throw ConfigError(std::string("unknown figure variant '") + variant + "', expected a, b or c");
    }
    cfg.doas_deg.clear();
    cfg.powers.clear();
    return cfg;
}

Fig2Result run_fig2(const ExperimentConfig &base, char variant, const std::string &out_dir)
{
    Fig2Result result;
    result.variant = variant;
    result.config = apply_variant(base, variant);
    const ExperimentConfig &cfg = result.config;
    cfg.validate();
    const std::uint64_t seed = cfg.require_seed();
    std::optional<OutputDir> out;
    if (!out_dir.empty())
        out.emplace(out_dir, cfg);

    const TrainingSet data = make_training_set(cfg.array, cfg.scene, cfg.dataset_options(), seed);
    const Eigen::MatrixXd phi = real_dictionary(cfg.array);
    const ListaParams init = initial_params(cfg, phi, data, nullptr);
    result.report = train(data, phi, init, train_options(cfg));
    const ListaParams &params = result.report.params;

    const int K = cfg.scene.sources;
    const Eigen::VectorXd z = noise_offset(cfg.array.sensors, data.noise_variance);
    result.scenes.resize(static_cast<std::size_t>(cfg.eval_scenes));
    parallel_for(result.scenes.size(), [&](std::size_t j) {
        const Eigen::Index col = data.train_count + static_cast<Eigen::Index>(j);
        SceneOutcome &s = result.scenes[j];
        s.truth = support_of(data.targets.col(col));
        const Eigen::VectorXd nu = lista_forward(params, phi, data.inputs.col(col)).final();
        s.lista_peaks = find_peaks(power_spectrum(nu, cfg.array, SpectrumKind::lista), K, cfg.min_separation);
        Eigen::MatrixXcd R;
        if (cfg.music_high_resolution)
        {
            const SourceScene scene = cfg.scene.sample(cfg.array, seed, static_cast<std::uint64_t>(col));
            R = sample_covariance(generate_snapshots(scene, cfg.array, cfg.snapshots,
                                                     derive_seed(seed, StreamTag::sample, static_cast<std::uint64_t>(col))));
        }
        else
        {
            R = unstack_covariance(data.inputs.col(col) + z, cfg.array.sensors);
        }
        s.music_peaks = find_peaks(music_spectrum(R, K, cfg.array), K, cfg.min_separation);
        s.lista_resolved = peaks_match(s.lista_peaks, s.truth, cfg.peak_tolerance);
        s.music_resolved = peaks_match(s.music_peaks, s.truth, cfg.peak_tolerance);
    });
    for (const SceneOutcome &s : result.scenes)
    {
        result.lista_successes += s.lista_resolved;
        result.music_successes += s.music_resolved;
    }

    // Per-layer errors over the whole validation split against the bound.
    const int n_val = data.validation_count();
    std::vector<double> scales;
    if (!data.scales.empty())
        scales.assign(data.scales.begin() + data.train_count, data.scales.end());
    result.dither_scale = scales.empty() || cfg.exact_covariance ? cfg.dither_scale : median(scales);
    const BoundParams bp = bound_params(cfg, result.dither_scale, cfg.snapshots);
    std::vector<std::vector<double>> errors(static_cast<std::size_t>(cfg.layers),
                                            std::vector<double>(static_cast<std::size_t>(n_val)));
    parallel_for(static_cast<std::size_t>(n_val), [&](std::size_t j) {
        const Eigen::Index col = data.train_count + static_cast<Eigen::Index>(j);
        const std::vector<double> curve = per_layer_error_curve(params, phi, data.targets.col(col), data.inputs.col(col));
        for (std::size_t i = 0; i < curve.size(); ++i)
            errors[i][j] = curve[i];
    });
    for (int i = 1; i <= cfg.layers; ++i)
        result.layer_rows.push_back(
            summarize("layer", i, errors[static_cast<std::size_t>(i - 1)], layer_error_bound(i, bp)));

    if (out)
    {
        write_checkpoint(out->path("model.lsta"), params, cfg.array.sensors);
        out->binary("model.lsta", "LSTA");
        write_training_set(out->path("dataset.dset"), data);
        out->binary("dataset.dset", "DSET");
        write_losses(*out, result.report, &bp);
        {
            std::ofstream os = out->csv("layers.csv");
            write_sweep_csv(os, result.layer_rows);
        }
        {
            std::ofstream os = out->csv("scenes.csv");
            os << "scene,truth_deg,lista_peaks_deg,music_peaks_deg,lista_resolved,music_resolved\n";
            for (std::size_t j = 0; j < result.scenes.size(); ++j)
            {
                const SceneOutcome &s = result.scenes[j];
                os << j << ',' << join_angles(grid_angles(cfg.array, s.truth)) << ','
                   << join_angles(peak_angles(s.lista_peaks)) << ',' << join_angles(peak_angles(s.music_peaks)) << ','
                   << (s.lista_resolved ? 1 : 0) << ',' << (s.music_resolved ? 1 : 0) << '\n';
            }
        }
        const Eigen::Index col = data.train_count;
        const Eigen::VectorXd nu = lista_forward(params, phi, data.inputs.col(col)).final();
        write_spectrum(*out, "spectrum_lista.csv", power_spectrum(nu, cfg.array, SpectrumKind::lista));
        const Eigen::MatrixXcd R = unstack_covariance(data.inputs.col(col) + z, cfg.array.sensors);
        write_spectrum(*out, "spectrum_music.csv", music_spectrum(R, K, cfg.array));
        out->finish(fig2_summary(result));
    }
    return result;
}

json fig2_summary(const Fig2Result &r)
{
    const ExperimentConfig &cfg = r.config;
    json summary = base_summary(cfg, std::string("repro-fig2 ") + r.variant);
    if (!r.scenes.empty())
    {
        const SceneOutcome &s = r.scenes.front();
        summary["peaks"] = peaks_json(s.lista_peaks);
        summary["doa_errors_deg"] = errors_json(doa_errors_deg(s.lista_peaks, grid_angles(cfg.array, s.truth)));
        const std::uint64_t seed = cfg.require_seed();
        const auto col = static_cast<std::uint64_t>(cfg.samples - cfg.validation);
        const SourceScene scene = cfg.scene.sample(cfg.array, seed, col);
        if (!cfg.exact_covariance)
        {
            TrainingSetOptions o = cfg.dataset_options();
            const OneBitMeasurement m =
                measure_one_bit(scene, cfg.array, o, derive_seed(seed, StreamTag::sample, col));
            const CovarianceErrors e = covariance_error_norms(true_covariance(scene, cfg.array), m.covariance);
            summary["cov_error"] = {{"max", e.max_norm}, {"fro", e.frobenius}};
        }
        summary["music_peaks"] = peaks_json(s.music_peaks);
    }
    summary["losses"] = losses_json(r.report);
    json bound = json::array(), med = json::array();
    for (const SweepRow &row : r.layer_rows)
    {
        bound.push_back(row.bound);
        med.push_back(finite_or_null(row.median));
    }
    summary["bound"] = bound;
    summary["layer_error_median"] = med;
    summary["evaluation"] = {{"scenes", static_cast<int>(r.scenes.size())},
                             {"lista_resolved", r.lista_successes},
                             {"music_resolved", r.music_successes},
                             {"best_epoch", r.report.best_epoch},
                             {"dither_scale", r.dither_scale}};
    return summary;
}

} // namespace onebit
