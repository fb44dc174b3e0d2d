#include "ssg/model.hpp"

#include <cmath>

#include "json_util.hpp"
#include "ssg/errors.hpp"

namespace ssg {

namespace {

constexpr int kCheckpointVersion = 1;
constexpr const char* kCheckpointFormat = "ssg-value-model";

void check_features(const ValueModel& model, const Matrix& features) {
  if (features.cols() != model.input_dim()) {
    throw InvalidArgument("feature width " + std::to_string(features.cols()) +
                          " does not match model input_dim " + std::to_string(model.input_dim()));
  }
  if (features.rows() == 0) throw InvalidArgument("no targets");
}

void check_mask(const ValueModel& model, const Vector* mask) {
  if (mask && mask->size() != model.hidden_dim()) {
    throw InvalidArgument("dropout mask has wrong length");
  }
}

Matrix pre_activation(const ValueModel& model, const Matrix& features) {
  Matrix z = features * model.weights_in.transpose();
  z.rowwise() += model.bias_in.transpose();
  return z;
}

Matrix activation(const Matrix& z, const Vector* mask) {
  Matrix a = z.cwiseMax(0.0);
  if (mask) a = a * mask->asDiagonal();
  return a;
}

}  // namespace

void ValueModel::validate() const {
  if (weights_in.rows() <= 0 || weights_in.cols() <= 0) {
    throw InvalidArgument("model dimensions must be positive");
  }
  if (bias_in.size() != hidden_dim() || weights_out.size() != hidden_dim()) {
    throw InvalidArgument("model parameter shapes are inconsistent");
  }
  if (!weights_in.allFinite() || !bias_in.allFinite() || !weights_out.allFinite() ||
      !std::isfinite(bias_out)) {
    throw InvalidArgument("model parameters must be finite");
  }
  if (!(w_coverage < 0.0)) throw InvalidArgument("w_coverage must be negative");
}

bool ValueModel::operator==(const ValueModel& other) const {
  return weights_in.rows() == other.weights_in.rows() &&
         weights_in.cols() == other.weights_in.cols() && weights_in == other.weights_in &&
         bias_in == other.bias_in && weights_out == other.weights_out &&
         bias_out == other.bias_out && w_coverage == other.w_coverage;
}

ModelGradients ModelGradients::zeros_like(const ValueModel& model) {
  return ModelGradients{Matrix::Zero(model.hidden_dim(), model.input_dim()),
                        Vector::Zero(model.hidden_dim()), Vector::Zero(model.hidden_dim()), 0.0};
}

ModelGradients& ModelGradients::operator+=(const ModelGradients& other) {
  weights_in += other.weights_in;
  bias_in += other.bias_in;
  weights_out += other.weights_out;
  bias_out += other.bias_out;
  return *this;
}

ModelGradients& ModelGradients::operator*=(double scale) {
  weights_in *= scale;
  bias_in *= scale;
  weights_out *= scale;
  bias_out *= scale;
  return *this;
}

double ModelGradients::squared_norm() const {
  return weights_in.squaredNorm() + bias_in.squaredNorm() + weights_out.squaredNorm() +
         bias_out * bias_out;
}

ValueModel init_model(Eigen::Index input_dim, Eigen::Index hidden_dim, std::uint64_t seed,
                      double w_coverage) {
  if (input_dim <= 0 || hidden_dim <= 0) throw InvalidArgument("model dimensions must be positive");
  Rng rng(seed);
  ValueModel model;
  const double limit_in = std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim));
  const double limit_out = std::sqrt(6.0 / static_cast<double>(hidden_dim + 1));
  model.weights_in.resize(hidden_dim, input_dim);
  for (Eigen::Index r = 0; r < hidden_dim; ++r) {
    for (Eigen::Index c = 0; c < input_dim; ++c) model.weights_in(r, c) = rng.uniform(-limit_in, limit_in);
  }
  model.bias_in = Vector::Zero(hidden_dim);
  model.weights_out.resize(hidden_dim);
  for (Eigen::Index r = 0; r < hidden_dim; ++r) model.weights_out[r] = rng.uniform(-limit_out, limit_out);
  model.bias_out = 0.0;
  model.w_coverage = w_coverage;
  model.validate();
  return model;
}

Vector sample_dropout_mask(Eigen::Index hidden_dim, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout rate must lie in [0, 1)");
  Vector mask = Vector::Constant(hidden_dim, 1.0 / (1.0 - rate));
  if (rate == 0.0) return mask;
  for (Eigen::Index i = 0; i < hidden_dim; ++i) {
    if (rng.uniform() < rate) mask[i] = 0.0;
  }
  return mask;
}

Vector forward_raw(const ValueModel& model, const Matrix& features, const Vector* dropout_mask) {
  check_features(model, features);
  check_mask(model, dropout_mask);
  const Matrix a = activation(pre_activation(model, features), dropout_mask);
  Vector out = a * model.weights_out;
  out.array() += model.bias_out;
  return out;
}

Attractiveness forward(const ValueModel& model, const Matrix& features,
                       const Vector* dropout_mask) {
  return Attractiveness(forward_raw(model, features, dropout_mask));
}

ModelGradients backward(const ValueModel& model, const Matrix& features, const Vector& grad_phi,
                        const Vector* dropout_mask) {
  check_features(model, features);
  check_mask(model, dropout_mask);
  if (grad_phi.size() != features.rows()) throw InvalidArgument("grad_phi has wrong length");

  // Centering is a linear projection; its adjoint removes the mean.
  Vector g = grad_phi;
  g.array() -= g.mean();

  const Matrix z = pre_activation(model, features);
  const Matrix a = activation(z, dropout_mask);

  ModelGradients grads;
  grads.weights_out = a.transpose() * g;
  grads.bias_out = g.sum();
  Matrix dz = g * model.weights_out.transpose();  // T x H
  if (dropout_mask) dz = dz * dropout_mask->asDiagonal();
  dz = dz.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
  grads.weights_in = dz.transpose() * features;
  grads.bias_in = dz.colwise().sum().transpose();
  return grads;
}

AdamState AdamState::for_model(const ValueModel& model) {
  return AdamState{ModelGradients::zeros_like(model), ModelGradients::zeros_like(model), 0};
}

UpdateResult apply_update(const ValueModel& model, const ModelGradients& gradients,
                          const AdamState& state, double learning_rate,
                          const AdamSettings& settings) {
  if (gradients.weights_in.rows() != model.weights_in.rows() ||
      gradients.weights_in.cols() != model.weights_in.cols() ||
      gradients.bias_in.size() != model.bias_in.size() ||
      gradients.weights_out.size() != model.weights_out.size()) {
    throw InvalidArgument("gradient shapes do not match the model");
  }
  UpdateResult out{model, state};
  AdamState& s = out.state;
  s.step += 1;
  const double b1 = settings.beta1;
  const double b2 = settings.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(s.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(s.step));

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= learning_rate * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + settings.epsilon);
  };
  update(out.model.weights_in, s.first.weights_in, s.second.weights_in, gradients.weights_in);
  update(out.model.bias_in, s.first.bias_in, s.second.bias_in, gradients.bias_in);
  update(out.model.weights_out, s.first.weights_out, s.second.weights_out, gradients.weights_out);

  s.first.bias_out = b1 * s.first.bias_out + (1.0 - b1) * gradients.bias_out;
  s.second.bias_out = b2 * s.second.bias_out + (1.0 - b2) * gradients.bias_out * gradients.bias_out;
  out.model.bias_out -= learning_rate * (s.first.bias_out / correction1) /
                        (std::sqrt(s.second.bias_out / correction2) + settings.epsilon);
  return out;
}

std::string model_to_json(const ValueModel& model) {
  model.validate();
  detail::Json doc;
  doc["format"] = kCheckpointFormat;
  doc["schema_version"] = kCheckpointVersion;
  doc["input_dim"] = model.input_dim();
  doc["hidden_dim"] = model.hidden_dim();
  doc["w_coverage"] = model.w_coverage;
  doc["weights_in"] = detail::matrix_to_json(model.weights_in);
  doc["bias_in"] = detail::vector_to_json(model.bias_in);
  doc["weights_out"] = detail::vector_to_json(model.weights_out);
  doc["bias_out"] = model.bias_out;
  return doc.dump(1) + "\n";
}

ValueModel model_from_json(const std::string& text) {
  const detail::Json doc = detail::parse_json(text);
  const std::string root = "model";
  const auto& format = detail::require(doc, "format", root);
  if (!format.is_string() || format.get<std::string>() != kCheckpointFormat) {
    throw ParseError("model.format", 0, "not a value-model checkpoint");
  }
  const auto& version = detail::require(doc, "schema_version", root);
  if (!version.is_number_integer() || version.get<int>() != kCheckpointVersion) {
    throw ParseError("model.schema_version", 0, "unsupported checkpoint version");
  }
  const auto input_dim = detail::require(doc, "input_dim", root).get<Eigen::Index>();
  const auto hidden_dim = detail::require(doc, "hidden_dim", root).get<Eigen::Index>();
  ValueModel model;
  model.w_coverage = detail::as_double(detail::require(doc, "w_coverage", root), "model.w_coverage");
  model.weights_in =
      detail::matrix_from_json(detail::require(doc, "weights_in", root), "model.weights_in", input_dim);
  model.bias_in = detail::vector_from_json(detail::require(doc, "bias_in", root), "model.bias_in");
  model.weights_out =
      detail::vector_from_json(detail::require(doc, "weights_out", root), "model.weights_out");
  model.bias_out = detail::as_double(detail::require(doc, "bias_out", root), "model.bias_out");
  if (model.weights_in.rows() != hidden_dim) {
    throw ParseError("model.weights_in", 0, "row count does not match hidden_dim");
  }
  try {
    model.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError("model", 0, e.what());
  }
  return model;
}

void save_model(const ValueModel& model, const std::filesystem::path& path) {
  detail::write_file(path, model_to_json(model));
}

ValueModel load_model(const std::filesystem::path& path) {
  return model_from_json(detail::read_file(path));
}

}  // namespace ssg
