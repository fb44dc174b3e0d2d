#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "ssg/game.hpp"
#include "ssg/random.hpp"

namespace ssg {

// phi(y) = weights_out . relu(weights_in y + bias_in) + bias_out, evaluated
// per target and mean-centered across the game. `w_coverage` is the known
// SUQR coverage weight and is never trained.
struct ValueModel {
  Matrix weights_in;   // H x F
  Vector bias_in;      // H
  Vector weights_out;  // H
  double bias_out = 0.0;
  double w_coverage = -4.0;

  Eigen::Index input_dim() const { return weights_in.cols(); }
  Eigen::Index hidden_dim() const { return weights_in.rows(); }
  void validate() const;
  bool operator==(const ValueModel& other) const;
};

// Same layout as ValueModel's trainable parameters.
struct ModelGradients {
  Matrix weights_in;
  Vector bias_in;
  Vector weights_out;
  double bias_out = 0.0;

  static ModelGradients zeros_like(const ValueModel& model);
  ModelGradients& operator+=(const ModelGradients& other);
  ModelGradients& operator*=(double scale);
  double squared_norm() const;
};

// Glorot-uniform weights, zero biases.
ValueModel init_model(Eigen::Index input_dim, Eigen::Index hidden_dim, std::uint64_t seed,
                      double w_coverage = -4.0);

// Per-hidden-unit multipliers: 0 for dropped units, 1/(1-rate) for kept.
Vector sample_dropout_mask(Eigen::Index hidden_dim, double rate, Rng& rng);

// Uncentered network output, one entry per feature row.
Vector forward_raw(const ValueModel& model, const Matrix& features,
                   const Vector* dropout_mask = nullptr);

Attractiveness forward(const ValueModel& model, const Matrix& features,
                       const Vector* dropout_mask = nullptr);

// Gradient of <grad_phi, forward(model, features)> w.r.t. every parameter.
ModelGradients backward(const ValueModel& model, const Matrix& features, const Vector& grad_phi,
                        const Vector* dropout_mask = nullptr);

struct AdamState {
  ModelGradients first;
  ModelGradients second;
  std::int64_t step = 0;

  static AdamState for_model(const ValueModel& model);
};

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct UpdateResult {
  ValueModel model;
  AdamState state;
};

// One adaptive-moment descent step on `gradients`.
UpdateResult apply_update(const ValueModel& model, const ModelGradients& gradients,
                          const AdamState& state, double learning_rate,
                          const AdamSettings& settings = {});

// Checkpoint I/O (JSON, shortest round-trip decimal floats).
std::string model_to_json(const ValueModel& model);
ValueModel model_from_json(const std::string& text);
void save_model(const ValueModel& model, const std::filesystem::path& path);
ValueModel load_model(const std::filesystem::path& path);

}  // namespace ssg
