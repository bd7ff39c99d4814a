#pragma once

#include <string>

#include <json.hpp>

#include "eegml/models.hpp"
#include "eegml/version.hpp"

namespace eegml {

using json = nlohmann::json;

inline json tree_to_json(const Tree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes)
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
  return nodes;
}

inline Tree tree_from_json(const json& j) {
  Tree tree;
  for (const auto& n : j) {
    TreeNode node;
    node.feature = n.at(0).get<int>();
    node.threshold = n.at(1).get<double>();
    node.left = n.at(2).get<int>();
    node.right = n.at(3).get<int>();
    node.value = n.at(4).get<double>();
    tree.nodes.push_back(node);
  }
  return tree;
}

inline json model_to_json(const Model& model) {
  json j;
  j["format_version"] = format_version;
  j["eegml"] = version_string;
  j["kind"] = model_kind_name(model.spec.kind);
  j["seed"] = model.spec.seed;
  j["schema"] = model.schema;

  switch (model.spec.kind) {
    case ModelKind::gbt: {
      const auto& m = model.gbt;
      j["params"] = {{"trees", m.params.trees},
                     {"depth", m.params.depth},
                     {"learning_rate", m.params.learning_rate},
                     {"min_samples_leaf", m.params.min_samples_leaf},
                     {"l2", m.params.l2},
                     {"max_bins", m.params.max_bins}};
      json trees = json::array();
      for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
      j["gbt"] = {{"base_score", m.base_score},
                  {"trees", trees},
                  {"importance", m.importance},
                  {"total_gain", m.total_gain}};
      break;
    }
    case ModelKind::random_forest: {
      const auto& m = model.forest;
      j["params"] = {{"trees", m.params.trees},
                     {"max_features", m.params.max_features},
                     {"min_samples_leaf", m.params.min_samples_leaf},
                     {"max_depth", m.params.max_depth},
                     {"max_bins", m.params.max_bins}};
      json trees = json::array();
      for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
      j["random_forest"] = {{"trees", trees}, {"importance", m.importance}};
      break;
    }
    case ModelKind::logistic: {
      const auto& m = model.logistic;
      j["params"] = {{"l2", m.params.l2}, {"tol", m.params.tol}, {"max_iters", m.params.max_iters}};
      j["logistic"] = {{"weights", m.weights},
                       {"bias", m.bias},
                       {"mean", m.standardizer.mean},
                       {"scale", m.standardizer.scale}};
      break;
    }
    case ModelKind::mlp: {
      const auto& m = model.mlp;
      j["params"] = {{"hidden", m.params.hidden}, {"epochs", m.params.epochs}, {"step", m.params.step}};
      j["mlp"] = {{"n_inputs", m.n_inputs},
                  {"w1", m.w1},
                  {"b1", m.b1},
                  {"w2", m.w2},
                  {"b2", m.b2},
                  {"mean", m.standardizer.mean},
                  {"scale", m.standardizer.scale}};
      break;
    }
  }
  if (model.feature_importance) j["feature_importance"] = *model.feature_importance;
  return j;
}

inline Model model_from_json(const json& j) {
  require(j.at("format_version").get<int>() == format_version, errc::config_invalid,
          "unsupported model format version");
  Model model;
  model.spec.kind = parse_model_kind(j.at("kind").get<std::string>());
  model.spec.seed = j.at("seed").get<std::uint64_t>();
  model.schema = j.at("schema").get<std::vector<std::string>>();

  const json& p = j.at("params");
  switch (model.spec.kind) {
    case ModelKind::gbt: {
      auto& m = model.gbt;
      m.params.trees = p.at("trees").get<int>();
      m.params.depth = p.at("depth").get<int>();
      m.params.learning_rate = p.at("learning_rate").get<double>();
      m.params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
      m.params.l2 = p.at("l2").get<double>();
      m.params.max_bins = p.at("max_bins").get<int>();
      model.spec.gbt = m.params;
      const json& g = j.at("gbt");
      m.base_score = g.at("base_score").get<double>();
      for (const auto& t : g.at("trees")) m.trees.push_back(tree_from_json(t));
      m.importance = g.at("importance").get<std::vector<double>>();
      m.total_gain = g.at("total_gain").get<double>();
      break;
    }
    case ModelKind::random_forest: {
      auto& m = model.forest;
      m.params.trees = p.at("trees").get<int>();
      m.params.max_features = p.at("max_features").get<int>();
      m.params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
      m.params.max_depth = p.at("max_depth").get<int>();
      m.params.max_bins = p.at("max_bins").get<int>();
      model.spec.forest = m.params;
      const json& g = j.at("random_forest");
      for (const auto& t : g.at("trees")) m.trees.push_back(tree_from_json(t));
      m.importance = g.at("importance").get<std::vector<double>>();
      break;
    }
    case ModelKind::logistic: {
      auto& m = model.logistic;
      m.params.l2 = p.at("l2").get<double>();
      m.params.tol = p.at("tol").get<double>();
      m.params.max_iters = p.at("max_iters").get<int>();
      model.spec.logistic = m.params;
      const json& g = j.at("logistic");
      m.weights = g.at("weights").get<std::vector<double>>();
      m.bias = g.at("bias").get<double>();
      m.standardizer.mean = g.at("mean").get<std::vector<double>>();
      m.standardizer.scale = g.at("scale").get<std::vector<double>>();
      break;
    }
    case ModelKind::mlp: {
      auto& m = model.mlp;
      m.params.hidden = p.at("hidden").get<int>();
      m.params.epochs = p.at("epochs").get<int>();
      m.params.step = p.at("step").get<double>();
      model.spec.mlp = m.params;
      const json& g = j.at("mlp");
      m.n_inputs = g.at("n_inputs").get<std::size_t>();
      m.w1 = g.at("w1").get<std::vector<double>>();
      m.b1 = g.at("b1").get<std::vector<double>>();
      m.w2 = g.at("w2").get<std::vector<double>>();
      m.b2 = g.at("b2").get<double>();
      m.standardizer.mean = g.at("mean").get<std::vector<double>>();
      m.standardizer.scale = g.at("scale").get<std::vector<double>>();
      break;
    }
  }
  if (j.contains("feature_importance"))
    model.feature_importance = j.at("feature_importance").get<std::vector<double>>();
  return model;
}

}  // namespace eegml
