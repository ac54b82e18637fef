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

// Sparse recovery of grid powers nu from c = Phi nu + e.
//
// ISTA solves  min_nu 1/2 ||c - Phi nu||^2 + lambda ||nu||_1  with the iteration
//
//     nu <- soft_{mu lambda}(nu + mu Phi^T (c - Phi nu)),   mu = 1 / sigma_max(Phi)^2.
//
// The unrolled network (tied LISTA) keeps the same layer structure but learns a
// weight matrix W_i and threshold eta_i per layer:
//
//     nu_{i+1} = soft_{eta_i}(nu_i + W_i^T (c - Phi nu_i)),   nu_0 = 0.
//
// Setting W_i = mu Phi and eta_i = mu lambda recovers ISTA exactly, which is the
// initialization used for training.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "array_model.hpp"

namespace onebit
{

// sgn(x) max(0, |x| - eta), componentwise. Throws std::invalid_argument for eta < 0.
Eigen::VectorXd soft_threshold(const Eigen::VectorXd &x, double eta);

// sigma_max(Phi)^2 by power iteration on Phi^T Phi.
double largest_singular_value_sq(const Eigen::MatrixXd &phi, int max_iterations = 5000, double tolerance = 1e-13);

// 1/2 ||c - Phi nu||^2 + lambda ||nu||_1
double lasso_objective(const Eigen::MatrixXd &phi, const Eigen::VectorXd &c, const Eigen::VectorXd &nu, double lambda);

struct IstaResult
{
    Eigen::VectorXd solution;
    double step = 0.0;                   // mu
    std::vector<Eigen::VectorXd> iterates; // nu_1 .. nu_T when recording
    std::vector<double> objective;         // F(nu_0) .. F(nu_T) when recording
};

// Starts from nu = 0. Throws std::invalid_argument on non-finite inputs, lambda < 0
// or mismatched dimensions.
IstaResult ista_solve(const Eigen::MatrixXd &phi, const Eigen::VectorXd &c, double lambda, int iterations,
                      bool record = false);
IstaResult ista_solve(const LinearModel &model, const Eigen::VectorXd &c, double lambda, int iterations,
                      bool record = false);

struct ListaParams
{
    std::vector<Eigen::MatrixXd> weights; // W_i, 2M^2 x L
    std::vector<double> thresholds;       // eta_i >= 0

    int layers() const { return static_cast<int>(weights.size()); }

    // Throws std::invalid_argument when the invariants do not hold for a
    // rows x cols dictionary.
    void validate(Eigen::Index rows, Eigen::Index cols) const;
};

// W_i = mu Phi, eta_i = mu lambda for every layer.
ListaParams ista_params(const Eigen::MatrixXd &phi, double lambda, int layers);

// 0.1 * ||Phi^T c_mean||_inf
double default_lambda(const Eigen::MatrixXd &phi, const Eigen::VectorXd &mean_measurement, double fraction = 0.1);

// outputs[0] = nu_0 = 0 and outputs[i] is the output of layer i, i = 1 .. I.
struct ListaTrace
{
    std::vector<Eigen::VectorXd> outputs;

    const Eigen::VectorXd &final() const { return outputs.back(); }
};

ListaTrace lista_forward(const ListaParams &params, const Eigen::MatrixXd &phi, const Eigen::VectorXd &c);

// Final-layer outputs for a batch, one column per measurement.
Eigen::MatrixXd lista_predict(const ListaParams &params, const Eigen::MatrixXd &phi, const Eigen::MatrixXd &inputs);

// Mean over columns of ||nu_I - target||^2.
double lista_loss(const ListaParams &params, const Eigen::MatrixXd &phi, const Eigen::MatrixXd &targets,
                  const Eigen::MatrixXd &inputs);

struct ListaGradients
{
    std::vector<Eigen::MatrixXd> weights;
    std::vector<double> thresholds;
    double loss = 0.0;
};

class NonFiniteActivation : public std::runtime_error
{
  public:
    NonFiniteActivation(int layer);
    int layer() const { return layer_; }

  private:
    int layer_;
};

// Reverse-mode gradients of the batch loss. targets is L x B, inputs is 2M^2 x B.
// The soft-threshold derivative is taken as 0 at |u| = eta. Throws
// NonFiniteActivation naming the first layer whose pre-activation is not finite.
ListaGradients lista_backward(const ListaParams &params, const Eigen::MatrixXd &phi, const Eigen::MatrixXd &targets,
                              const Eigen::MatrixXd &inputs);

// Model checkpoint: "LSTA", u32 version, u32 I, u32 M, u32 L, then per layer W_i
// row-major f64 followed by eta_i as f64.
inline constexpr std::uint32_t checkpoint_version = 1;
void write_checkpoint(std::ostream &os, const ListaParams &params, int sensors);
ListaParams read_checkpoint(std::istream &is, int *sensors = nullptr);
void write_checkpoint(const std::string &path, const ListaParams &params, int sensors);
ListaParams read_checkpoint(const std::string &path, int *sensors = nullptr);

// ---------------------------------------------------------------------------
// Training data and training loop

struct TrainingSet
{
    Eigen::MatrixXd targets; // nu_j, L x S
    Eigen::MatrixXd inputs;  // c_j = b_j - z_j, 2M^2 x S
    int train_count = 0;     // the first train_count columns train, the rest validate
    int sensors = 0;
    double noise_variance = 0.0; // sigma^2 behind z_j (0 when z was not subtracted)
    std::vector<double> scales;  // dither scale per sample (in memory only)

    int size() const { return static_cast<int>(targets.cols()); }
    int validation_count() const { return size() - train_count; }
};

enum class DitherPolicy
{
    margin, // T = margin * max component, per sample
    fixed,  // T given; a dynamic-range violation is an error
};

struct TrainingSetOptions
{
    int samples = 2000;
    int validation = 400;
    int snapshots = 10000;
    DitherPolicy dither_policy = DitherPolicy::margin;
    double dither_margin = 1.2;
    double dither_scale = 1.0;
    bool subtract_noise = true;    // z from the known sigma^2; false means z = 0
    bool exact_covariance = false; // skip snapshots and quantizer, use the true R
};

class DynamicRangeError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// Sample j draws its scene from sampler.sample(cfg, seed, j) and its snapshots and
// dither from derive_seed(seed, sample, j). Throws DynamicRangeError with a fixed
// dither scale the data exceed.
TrainingSet make_training_set(const ArrayConfig &cfg, const SceneSampler &sampler, const TrainingSetOptions &options,
                              std::uint64_t seed);

// The measurement pipeline for one scene: snapshots, quantizer, covariance,
// stacked measurement b. Returns b and the dither scale used.
struct OneBitMeasurement
{
    Eigen::VectorXd stacked; // b
    Eigen::MatrixXcd covariance;
    double scale = 0.0;
};
OneBitMeasurement measure_one_bit(const SourceScene &scene, const ArrayConfig &cfg, const TrainingSetOptions &options,
                                  std::uint64_t seed);

// Dataset file: "DSET", u32 S, u32 L, u32 2M^2, then per sample nu_j (L f64)
// followed by c_j (2M^2 f64). The train/validation split is not stored.
void write_training_set(std::ostream &os, const TrainingSet &set);
TrainingSet read_training_set(std::istream &is, int validation_count);
void write_training_set(const std::string &path, const TrainingSet &set);
TrainingSet read_training_set(const std::string &path, int validation_count);

struct TrainOptions
{
    double learning_rate = 1e-3;
    int batch_size = 32;
    int epochs = 50;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double divergence_factor = 10.0;
    // Scale Adam steps by each parameter group's initial magnitude (max |W_i| per
    // layer, max eta over layers), so learning_rate is a relative step size.
    bool relative_steps = true;
    std::uint64_t seed = 0; // minibatch order
};

struct TrainReport
{
    double initial_train_loss = 0.0;
    double initial_val_loss = 0.0;
    std::vector<double> train_loss; // after each epoch
    std::vector<double> val_loss;
    std::vector<double> epoch_seconds;
    int best_epoch = 0; // 0 means the initial parameters were never beaten
    ListaParams params; // best validation parameters
};

class TrainingDiverged : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

using EpochCallback = std::function<void(int epoch, double train_loss, double val_loss)>;

// Adam on the mean squared error, thresholds projected onto eta >= 0 after each
// step. Throws TrainingDiverged once the training loss exceeds
// divergence_factor times its initial value.
TrainReport train(const TrainingSet &data, const Eigen::MatrixXd &phi, ListaParams init, const TrainOptions &options,
                  const EpochCallback &on_epoch = {});

} // namespace onebit
