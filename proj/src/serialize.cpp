#include "simile/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace simile {

using nlohmann::json;

namespace {

constexpr int kForestVersion = 1;
constexpr int kPolicyVersion = 1;

json tree_to_json(const TreeNode& node) {
    if (node.is_leaf()) return json{{"leaf", node.leaf}};
    return json{{"feature", node.feature},
                {"threshold", node.threshold},
                {"left", tree_to_json(*node.left)},
                {"right", tree_to_json(*node.right)}};
}

std::unique_ptr<TreeNode> tree_from_json(const json& j) {
    auto node = std::make_unique<TreeNode>();
    if (j.contains("leaf")) {
        node->leaf = j.at("leaf").get<Vec>();
        return node;
    }
    node->feature = j.at("feature").get<int>();
    node->threshold = j.at("threshold").get<double>();
    node->left = tree_from_json(j.at("left"));
    node->right = tree_from_json(j.at("right"));
    return node;
}

json maybe(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json forest_to_json(const SmoothForest& forest) {
    json trees = json::array();
    for (const auto& t : forest.trees) trees.push_back(tree_to_json(*t));
    return json{
        {"format", "simile-forest"},
        {"version", kForestVersion},
        {"lambda", forest.lambda},
        {"leaf_mode", forest.leaf_mode == LeafMode::distance_only ? "distance_only" : "joint"},
        {"action_bound", forest.action_bound},
        {"layout",
         {{"context_dim", forest.layout.context_dim},
          {"action_dim", forest.layout.action_dim},
          {"p", forest.layout.p},
          {"q", forest.layout.q}}},
        {"autoregressor",
         {{"tau", forest.reg.tau}, {"ridge", forest.reg.ridge}, {"coeffs", forest.reg.coeffs}}},
        {"config",
         {{"n_trees", forest.cfg.n_trees},
          {"max_depth", forest.cfg.max_depth},
          {"min_samples_leaf", forest.cfg.min_samples_leaf},
          {"feature_subsample_fraction", forest.cfg.feature_subsample_fraction},
          {"bootstrap", forest.cfg.bootstrap},
          {"seed", forest.cfg.seed}}},
        {"trees", std::move(trees)}};
}

SmoothForest forest_from_json(const json& j) {
    if (j.value("format", "") != "simile-forest")
        throw std::runtime_error("forest_from_json: not a forest document");
    if (j.value("version", -1) != kForestVersion)
        throw std::runtime_error("forest_from_json: unsupported version");
    SmoothForest f;
    f.lambda = j.at("lambda").get<double>();
    f.leaf_mode = j.at("leaf_mode").get<std::string>() == "joint" ? LeafMode::joint
                                                                  : LeafMode::distance_only;
    f.action_bound = j.at("action_bound").get<double>();
    const json& lay = j.at("layout");
    f.layout = StateLayout{lay.at("context_dim").get<int>(), lay.at("action_dim").get<int>(),
                           lay.at("p").get<int>(), lay.at("q").get<int>()};
    const json& reg = j.at("autoregressor");
    f.reg.tau = reg.at("tau").get<int>();
    f.reg.ridge = reg.at("ridge").get<double>();
    f.reg.coeffs = reg.at("coeffs").get<std::vector<Vec>>();
    const json& cfg = j.at("config");
    f.cfg.n_trees = cfg.at("n_trees").get<int>();
    f.cfg.max_depth = cfg.at("max_depth").get<int>();
    f.cfg.min_samples_leaf = cfg.at("min_samples_leaf").get<int>();
    f.cfg.feature_subsample_fraction = cfg.at("feature_subsample_fraction").get<double>();
    f.cfg.bootstrap = cfg.at("bootstrap").get<bool>();
    f.cfg.seed = cfg.at("seed").get<std::uint64_t>();
    for (const json& t : j.at("trees")) f.trees.push_back(tree_from_json(t));
    if (f.trees.empty()) throw std::runtime_error("forest_from_json: no trees");
    return f;
}

json policy_to_json(const EnsemblePolicy& policy) {
    policy.validate();
    json members = json::array();
    for (const auto& m : policy.members())
        members.push_back(json{{"weight", m.weight}, {"forest", forest_to_json(*m.forest)}});
    return json{{"format", "simile-policy"}, {"version", kPolicyVersion},
                {"members", std::move(members)}};
}

EnsemblePolicy policy_from_json(const json& j) {
    if (j.value("format", "") != "simile-policy")
        throw std::runtime_error("policy_from_json: not a policy document");
    if (j.value("version", -1) != kPolicyVersion)
        throw std::runtime_error("policy_from_json: unsupported version");
    std::vector<PolicyMember> members;
    for (const json& m : j.at("members"))
        members.push_back(PolicyMember{
            std::make_shared<SmoothForest>(forest_from_json(m.at("forest"))),
            m.at("weight").get<double>()});
    return EnsemblePolicy::from_members(std::move(members));
}

void save_policy(const EnsemblePolicy& policy, const std::string& path) {
    write_text_atomic(path, policy_to_json(policy).dump(2) + "\n");
}

EnsemblePolicy load_policy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return policy_from_json(j);
}

json record_to_json(const IterationRecord& r) {
    return json{{"iteration", r.iteration},
                {"sigma", maybe(r.sigma)},
                {"beta", maybe(r.beta)},
                {"error_new", maybe(r.error_new)},
                {"error_old", maybe(r.error_old)},
                {"combined_error", maybe(r.combined_error)},
                {"smoothness", maybe(r.smoothness)},
                {"feedback_descent", maybe(r.feedback_descent)},
                {"measured_improvement", maybe(r.measured_improvement)},
                {"theory",
                 {{"gamma", maybe(r.theory.gamma)},
                  {"epsilon", maybe(r.theory.epsilon)},
                  {"lipschitz", maybe(r.theory.lipschitz)},
                  {"reduction", maybe(r.theory.reduction)},
                  {"delta", maybe(r.theory.delta)},
                  {"theorem2_bound", maybe(r.theory.theorem2_bound)},
                  {"corollary2_beta", maybe(r.theory.corollary2_beta)},
                  {"corollary2_bound", maybe(r.theory.corollary2_bound)},
                  {"contraction_ok", r.theory.contraction_ok}}}};
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(tmp + ": cannot open for writing");
        out << content;
        if (!out) throw std::runtime_error(tmp + ": write failed");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error(path + ": rename failed");
}

}  // namespace simile
