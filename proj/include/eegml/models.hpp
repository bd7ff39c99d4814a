#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "eegml/error.hpp"
#include "eegml/features.hpp"
#include "eegml/gbt.hpp"
#include "eegml/linear.hpp"
#include "eegml/random_forest.hpp"

namespace eegml {

enum class ModelKind { gbt, random_forest, logistic, mlp };

inline const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::gbt: return "gbt";
    case ModelKind::random_forest: return "random_forest";
    case ModelKind::logistic: return "logistic";
    case ModelKind::mlp: return "mlp";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view name) {
  if (name == "gbt") return ModelKind::gbt;
  if (name == "random_forest") return ModelKind::random_forest;
  if (name == "logistic") return ModelKind::logistic;
  if (name == "mlp") return ModelKind::mlp;
  fail(errc::config_invalid, "unknown model kind '" + std::string(name) + "'");
}

struct ModelSpec {
  ModelKind kind = ModelKind::gbt;
  std::uint64_t seed = 1;
  GbtParams gbt;
  ForestParams forest;
  LogisticParams logistic;
  MlpParams mlp;

  void validate() const {
    switch (kind) {
      case ModelKind::gbt:
        require(gbt.trees >= 1 && gbt.depth >= 1 && gbt.learning_rate > 0 &&
                    gbt.min_samples_leaf >= 1 && gbt.l2 >= 0 && gbt.max_bins >= 2,
                errc::config_invalid, "gbt hyperparameters out of range");
        break;
      case ModelKind::random_forest:
        require(forest.trees >= 1 && forest.max_features >= 0 && forest.min_samples_leaf >= 1 &&
                    forest.max_depth >= 1 && forest.max_bins >= 2,
                errc::config_invalid, "random_forest hyperparameters out of range");
        break;
      case ModelKind::logistic:
        require(logistic.l2 >= 0 && logistic.tol > 0 && logistic.max_iters >= 1,
                errc::config_invalid, "logistic hyperparameters out of range");
        break;
      case ModelKind::mlp:
        require(mlp.hidden >= 1 && mlp.epochs >= 0 && mlp.step > 0, errc::config_invalid,
                "mlp hyperparameters out of range");
        break;
    }
  }
};

struct Model {
  ModelSpec spec;
  std::vector<std::string> schema;
  GbtModel gbt;
  ForestModel forest;
  LogisticModel logistic;
  MlpModel mlp;
  std::optional<std::vector<double>> feature_importance;
};

// Probabilities are kept strictly inside (0, 1) so the threshold rule is
// well-defined at the extremes.
inline double clamp_probability(double p) {
  return std::min(1.0 - 1e-12, std::max(1e-12, p));
}

inline void validate_training_table(const FeatureTable& table) {
  require(!table.rows.empty(), errc::empty_table, "training table is empty");
  require(table.has_both_classes(), errc::single_class,
          "training table must contain both classes");
  for (const auto& row : table.rows)
    for (double v : row.values)
      require(std::isfinite(v), errc::non_finite_feature,
              "non-finite feature value for subject " + row.subject_id);
}

inline Model train(const ModelSpec& spec, const FeatureTable& table) {
  spec.validate();
  validate_training_table(table);
  Model model;
  model.spec = spec;
  model.schema = table.schema;
  switch (spec.kind) {
    case ModelKind::gbt:
      model.gbt = train_gbt(table, spec.gbt);
      model.feature_importance = model.gbt.importance;
      break;
    case ModelKind::random_forest:
      model.forest = train_random_forest(table, spec.forest, spec.seed);
      model.feature_importance = model.forest.importance;
      break;
    case ModelKind::logistic:
      model.logistic = train_logistic(table, spec.logistic);
      break;
    case ModelKind::mlp:
      model.mlp = train_mlp(table, spec.mlp, spec.seed);
      break;
  }
  return model;
}

inline std::vector<double> predict_proba(const Model& model, const FeatureTable& rows) {
  require(rows.schema == model.schema, errc::schema_mismatch,
          "feature schema does not match the model's schema");
  std::vector<double> probs;
  probs.reserve(rows.rows.size());
  for (const auto& row : rows.rows) {
    const double* x = row.values.data();
    double p = 0.5;
    switch (model.spec.kind) {
      case ModelKind::gbt: p = predict_gbt(model.gbt, x); break;
      case ModelKind::random_forest: p = model.forest.predict(x); break;
      case ModelKind::logistic: p = predict_logistic(model.logistic, x); break;
      case ModelKind::mlp: p = predict_mlp(model.mlp, x); break;
    }
    probs.push_back(clamp_probability(p));
  }
  return probs;
}

// Strict decision rule: class 1 iff y > theta.
inline std::vector<int> apply_threshold(const std::vector<double>& probs, double theta) {
  std::vector<int> out;
  out.reserve(probs.size());
  for (double p : probs) out.push_back(p > theta ? 1 : 0);
  return out;
}

// Summed cross-entropy and analytic gradient of the MLP on a table, in the
// parameter layout [W1][b1][w2][b2]. Exposed for gradient verification.
inline std::pair<double, std::vector<double>> mlp_loss_gradient(const Model& model,
                                                                const FeatureTable& rows) {
  require(model.spec.kind == ModelKind::mlp, errc::wrong_kind,
          "mlp_loss_gradient requires an mlp model");
  require(rows.schema == model.schema, errc::schema_mismatch,
          "feature schema does not match the model's schema");
  const std::size_t n = rows.rows.size();
  const std::size_t d = model.mlp.n_inputs;
  std::vector<double> xs(n * d), ys(n);
  for (std::size_t r = 0; r < n; ++r) {
    model.mlp.standardizer.apply(rows.rows[r].values.data(), xs.data() + r * d, d);
    ys[r] = static_cast<double>(rows.rows[r].label);
  }
  return mlp_loss_gradient_raw(model.mlp, xs, ys);
}

}  // namespace eegml
