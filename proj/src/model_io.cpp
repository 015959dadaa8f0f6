#include "bli/ltr.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace bli {
namespace {

using nlohmann::json;

constexpr std::string_view kFormat = "bli-lfbb-gbdt";
constexpr int kVersion = 1;

json tree_to_json(const RegressionTree& tree) {
  json nodes = json::array();
  for (const TreeNode& n : tree.nodes) {
    if (n.is_leaf()) {
      nodes.push_back({{"leaf", n.value}});
    } else {
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
  }
  return {{"nodes", std::move(nodes)}};
}

[[noreturn]] void malformed(const std::string& what) { throw DataError("malformed model document: " + what); }

template <typename T>
T field(const json& object, const char* name) {
  if (!object.is_object() || !object.contains(name)) malformed(fmt::format("missing field '{}'", name));
  try {
    return object.at(name).get<T>();
  } catch (const json::exception&) {
    malformed(fmt::format("field '{}' has the wrong type", name));
  }
}

RegressionTree tree_from_json(const json& j, std::size_t n_features, std::size_t index) {
  const auto& nodes = j.contains("nodes") ? j.at("nodes") : json();
  if (!nodes.is_array() || nodes.empty()) malformed(fmt::format("tree {} has no nodes", index));
  RegressionTree tree;
  for (const auto& n : nodes) {
    TreeNode node;
    if (n.is_object() && n.contains("leaf")) {
      node.value = field<double>(n, "leaf");
      if (!std::isfinite(node.value)) malformed(fmt::format("tree {} has a non-finite leaf", index));
    } else {
      node.feature = field<int>(n, "feature");
      node.threshold = field<double>(n, "threshold");
      node.left = field<int>(n, "left");
      node.right = field<int>(n, "right");
      if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= n_features) {
        malformed(fmt::format("tree {} splits on feature {} outside the schema", index, node.feature));
      }
    }
    tree.nodes.push_back(node);
  }
  // Every node except the root must have exactly one parent that precedes it.
  std::vector<int> parents(tree.nodes.size(), 0);
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& node = tree.nodes[i];
    if (node.is_leaf()) continue;
    for (int child : {node.left, node.right}) {
      if (child <= static_cast<int>(i) || static_cast<std::size_t>(child) >= tree.nodes.size()) {
        malformed(fmt::format("tree {} node {} has an invalid child {}", index, i, child));
      }
      ++parents[static_cast<std::size_t>(child)];
    }
  }
  for (std::size_t i = 1; i < parents.size(); ++i) {
    if (parents[i] != 1) malformed(fmt::format("tree {} node {} is not referenced exactly once", index, i));
  }
  return tree;
}

}  // namespace

std::string model_to_json(const GbdtModel& model) {
  const GbdtParams& p = model.params;
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["params"] = {{"n_trees", p.n_trees},
                   {"max_depth", p.max_depth},
                   {"learning_rate", p.learning_rate},
                   {"min_child_weight", p.min_child_weight},
                   {"l2_leaf_reg", p.l2_leaf_reg},
                   {"sigma", p.sigma},
                   {"seed", p.seed}};
  doc["schema"] = {{"fingerprint", model.schema_fingerprint},
                   {"n_features", kFeatureCount},
                   {"disabled_groups", model.mask.disabled_groups()}};
  doc["base_score"] = model.base_score;
  doc["mix"] = model.mix ? json(*model.mix) : json(nullptr);
  json trees = json::array();
  for (const auto& t : model.trees) trees.push_back(tree_to_json(t));
  doc["trees"] = std::move(trees);
  return doc.dump(1) + "\n";
}

GbdtModel model_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("malformed model document at byte {}: {}", e.byte, e.what()));
  }
  if (field<std::string>(doc, "format") != kFormat) malformed("unexpected format tag");
  const int version = field<int>(doc, "version");
  if (version != kVersion) {
    throw DataError(fmt::format("unsupported model version {} (this build reads version {})", version, kVersion));
  }
  GbdtModel model;
  const json& p = doc.contains("params") ? doc.at("params") : json();
  model.params.n_trees = field<std::size_t>(p, "n_trees");
  model.params.max_depth = field<std::size_t>(p, "max_depth");
  model.params.learning_rate = field<double>(p, "learning_rate");
  model.params.min_child_weight = field<double>(p, "min_child_weight");
  model.params.l2_leaf_reg = field<double>(p, "l2_leaf_reg");
  model.params.sigma = field<double>(p, "sigma");
  model.params.seed = field<std::uint64_t>(p, "seed");

  const json& schema = doc.contains("schema") ? doc.at("schema") : json();
  model.schema_fingerprint = field<std::string>(schema, "fingerprint");
  const auto n_features = field<std::size_t>(schema, "n_features");
  const auto disabled = field<std::vector<std::string>>(schema, "disabled_groups");
  try {
    model.mask = FeatureMask::from_disabled_groups(disabled);
  } catch (const DataError& e) {
    malformed(e.what());
  }
  model.base_score = field<double>(doc, "base_score");
  if (doc.contains("mix") && !doc.at("mix").is_null()) model.mix = field<double>(doc, "mix");

  const json& trees = doc.contains("trees") ? doc.at("trees") : json();
  if (!trees.is_array()) malformed("missing tree list");
  for (std::size_t i = 0; i < trees.size(); ++i) model.trees.push_back(tree_from_json(trees[i], n_features, i));
  return model;
}

void save_model(const GbdtModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  out << model_to_json(model);
  if (!out) throw DataError(fmt::format("failed writing '{}'", path.string()));
}

GbdtModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}' for reading", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return model_from_json(text.str());
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void save_trace(std::span<const double> map_trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  out << "round\ttrain_map\n";
  for (std::size_t i = 0; i < map_trace.size(); ++i) out << (i + 1) << '\t' << format_shortest(map_trace[i]) << '\n';
  if (!out) throw DataError(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace bli
