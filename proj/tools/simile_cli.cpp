#include <algorithm>
#include <charconv>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "simile/experiments.hpp"
#include "simile/serialize.hpp"
#include "simile/simile.hpp"

namespace {

using namespace simile;

std::string fmt(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

struct DataFlags {
    std::string path;
    std::string format = "csv";
    int m = -1;
    int k = -1;
    double bound = 1.0;

    TrajFormat traj_format() const {
        if (format == "csv") return TrajFormat::csv;
        if (format == "jsonl") return TrajFormat::jsonl;
        throw std::runtime_error("unknown format '" + format + "' (want csv or jsonl)");
    }
    Trajectory load() const {
        return load_trajectory(path, traj_format(), m, k, bound);
    }
};

void add_data_options(CLI::App* cmd, DataFlags& f, bool required) {
    auto* opt = cmd->add_option("--data", f.path, "trajectory file");
    if (required) opt->required();
    cmd->add_option("--format", f.format, "csv or jsonl")->default_val(f.format);
    cmd->add_option("--m", f.m, "context dimension (headerless CSV only)");
    cmd->add_option("--k", f.k, "action dimension (headerless CSV only)");
    cmd->add_option("--bound", f.bound, "action bound R")->default_val(f.bound);
}

struct TrainFlags {
    int iters = 10;
    double lambda = 1.0;
    int tau = 2;
    double ridge = -1.0;
    int p = 2, q = 2;
    std::string beta = "adaptive";
    std::string sigma_mode = "geometric";
    double sigma0 = 0.5;
    double sigma_decay = 0.5;
    int trees = 20;
    int depth = 6;
    int min_leaf = 2;
    double feature_frac = 1.0;
    bool bootstrap = false;
    std::string leaf_mode = "distance_only";
    std::uint64_t seed = 7;
    double gamma_pert = 0.4;

    TrainingConfig to_config() const {
        TrainingConfig cfg;
        cfg.n_iterations = iters;
        cfg.lambda = lambda;
        cfg.tau = tau;
        cfg.ridge = ridge;
        cfg.p = p;
        cfg.q = q;
        if (sigma_mode == "geometric") cfg.sigma = SigmaSchedule::geometric(sigma0, sigma_decay);
        else if (sigma_mode == "constant") cfg.sigma = SigmaSchedule::constant(sigma0);
        else if (sigma_mode == "zero") cfg.sigma = SigmaSchedule::zero();
        else throw std::runtime_error("unknown sigma mode '" + sigma_mode + "'");
        cfg.forest.n_trees = trees;
        cfg.forest.max_depth = depth;
        cfg.forest.min_samples_leaf = min_leaf;
        cfg.forest.feature_subsample_fraction = feature_frac;
        cfg.forest.bootstrap = bootstrap;
        if (leaf_mode == "distance_only") cfg.leaf_mode = LeafMode::distance_only;
        else if (leaf_mode == "joint") cfg.leaf_mode = LeafMode::joint;
        else throw std::runtime_error("unknown leaf mode '" + leaf_mode + "'");
        cfg.seed = seed;
        cfg.gamma_perturbation = gamma_pert;
        cfg = apply_beta_token(std::move(cfg), beta);
        cfg.validate();
        return cfg;
    }
};

void add_train_options(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--iters", f.iters, "training iterations N")->default_val(f.iters);
    cmd->add_option("--lambda", f.lambda, "smoothing weight")->default_val(f.lambda);
    cmd->add_option("--tau", f.tau, "autoregressor lags")->default_val(f.tau);
    cmd->add_option("--ridge", f.ridge, "autoregressor ridge (<0 selects 1e-3*T)")
        ->default_val(f.ridge);
    cmd->add_option("--p", f.p, "context window length")->default_val(f.p);
    cmd->add_option("--q", f.q, "action window length")->default_val(f.q);
    cmd->add_option("--beta", f.beta, "adaptive, corollary2, or a fixed value in (0,1]")
        ->default_val(f.beta);
    cmd->add_option("--sigma-mode", f.sigma_mode, "geometric, constant or zero")
        ->default_val(f.sigma_mode);
    cmd->add_option("--sigma0", f.sigma0, "initial feedback mix")->default_val(f.sigma0);
    cmd->add_option("--sigma-decay", f.sigma_decay, "geometric decay")->default_val(f.sigma_decay);
    cmd->add_option("--trees", f.trees, "trees per forest")->default_val(f.trees);
    cmd->add_option("--depth", f.depth, "max tree depth")->default_val(f.depth);
    cmd->add_option("--min-leaf", f.min_leaf, "min samples per leaf")->default_val(f.min_leaf);
    cmd->add_option("--feature-frac", f.feature_frac, "per-node feature fraction")
        ->default_val(f.feature_frac);
    cmd->add_flag("--bootstrap", f.bootstrap, "bootstrap-sample each tree");
    cmd->add_option("--leaf-mode", f.leaf_mode, "distance_only or joint")
        ->default_val(f.leaf_mode);
    cmd->add_option("--seed", f.seed, "master seed")->default_val(f.seed);
    cmd->add_option("--gamma-pert", f.gamma_pert, "perturbation scale for the gamma estimate")
        ->default_val(f.gamma_pert);
}

std::string records_to_jsonl(const std::vector<IterationRecord>& records) {
    std::string out;
    for (const auto& r : records) out += record_to_json(r).dump() + "\n";
    return out;
}

int cmd_synth(const SynthConfig& scfg, const std::string& out_path, const std::string& format) {
    const Trajectory traj = synth_expert(scfg);
    const TrajFormat tf = format == "jsonl" ? TrajFormat::jsonl : TrajFormat::csv;
    save_trajectory(traj, out_path, tf);
    std::cout << "wrote " << out_path << ": T=" << traj.horizon()
              << " m=" << traj.context_dim() << " k=" << traj.action_dim()
              << " expert_smoothness=" << fmt(smoothness(traj.actions)) << "\n";
    return 0;
}

int cmd_train(const DataFlags& data_flags, const TrainFlags& train_flags,
              const std::string& out_path, const std::string& log_path) {
    const Trajectory data = data_flags.load();
    const TrainingConfig cfg = train_flags.to_config();
    const TrainResult result = simile_train(data, cfg);
    save_policy(result.policy, out_path);
    if (!log_path.empty()) write_text_atomic(log_path, records_to_jsonl(result.records));
    const IterationRecord& last = result.records.back();
    std::cout << "trained " << cfg.n_iterations << " iterations: members="
              << result.policy.size() << " combined_error=" << fmt(last.combined_error)
              << " smoothness=" << fmt(last.smoothness) << "\n"
              << "policy written to " << out_path;
    if (!log_path.empty()) std::cout << ", log to " << log_path;
    std::cout << "\n";
    return 0;
}

int cmd_eval(const DataFlags& data_flags, const std::string& policy_path,
             const std::string& out_path, const std::string& out_format) {
    const Trajectory data = data_flags.load();
    const EnsemblePolicy policy = load_policy(policy_path);
    const RolloutResult rolled = rollout_det(policy, data.contexts, data.actions.front());
    std::cout << "imitation_loss=" << fmt(imitation_loss(rolled.actions, data.actions))
              << " smoothness=" << fmt(smoothness(rolled.actions))
              << " expert_smoothness=" << fmt(smoothness(data.actions)) << "\n";
    if (!out_path.empty()) {
        Trajectory out;
        out.contexts = data.contexts;
        out.actions = rolled.actions;
        out.action_bound = data.action_bound;
        save_trajectory(out, out_path, out_format == "jsonl" ? TrajFormat::jsonl : TrajFormat::csv);
        std::cout << "roll-out written to " << out_path << "\n";
    }
    return 0;
}

int cmd_compare_beta(const DataFlags& data_flags, const TrainFlags& train_flags,
                     const std::string& grid_arg, const std::string& out_path) {
    const Trajectory data = data_flags.load();
    std::vector<std::string> grid;
    std::stringstream ss(grid_arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) if (!tok.empty()) grid.push_back(tok);
    if (grid.empty()) throw std::runtime_error("--grid is empty");
    auto cells = compare_beta(data, train_flags.to_config(), grid);

    struct Row { std::string mode; int iteration; double err; };
    std::vector<Row> rows;
    for (const auto& cell : cells)
        for (const auto& rec : cell.records)
            rows.push_back(Row{cell.mode, rec.iteration, rec.combined_error});
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.mode != b.mode ? a.mode < b.mode : a.iteration < b.iteration;
    });
    std::string csv = "iteration,beta_mode,combined_error\n";
    for (const auto& r : rows)
        csv += std::to_string(r.iteration) + "," + r.mode + "," + fmt(r.err) + "\n";
    write_text_atomic(out_path, csv);
    std::cout << "wrote " << out_path << " (" << rows.size() << " rows, "
              << cells.size() << " modes)\n";
    return 0;
}

int cmd_compare_interp(const DataFlags& data_flags, const TrainFlags& train_flags, double beta,
                       int n_samples, const std::string& out_path) {
    const Trajectory data = data_flags.load();
    if (n_samples < 2)
        std::cerr << "note: n_samples=" << n_samples << " gives a degenerate stderr of 0\n";
    const auto rows = compare_interp(data, train_flags.to_config(), beta, n_samples);
    std::string csv = "iteration,deterministic_error,mean_stochastic_error,stderr\n";
    for (const auto& r : rows)
        csv += std::to_string(r.iteration) + "," + fmt(r.deterministic_error) + "," +
               fmt(r.mean_stochastic_error) + "," + fmt(r.stderr_value) + "\n";
    write_text_atomic(out_path, csv);
    std::cout << "wrote " << out_path << " (" << rows.size() << " iterations, beta="
              << fmt(beta) << ", " << n_samples << " roll-outs)\n";
    return 0;
}

int cmd_check_theory(const DataFlags& data_flags, const TrainFlags& train_flags,
                     const SynthConfig& scfg, const std::string& out_path) {
    const Trajectory data = data_flags.path.empty() ? synth_expert(scfg) : data_flags.load();
    const TheoryReport report = run_theory_suite(data, train_flags.to_config());
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : report.checks) {
        checks.push_back(nlohmann::json{{"name", c.name},
                                        {"pass", c.pass},
                                        {"asserted", c.asserted},
                                        {"detail", c.detail}});
        std::cout << (c.pass ? "PASS " : "FAIL ") << (c.asserted ? "" : "(reported) ")
                  << c.name << "\n";
    }
    const nlohmann::json doc{{"all_pass", report.all_pass}, {"checks", checks}};
    if (!out_path.empty()) {
        write_text_atomic(out_path, doc.dump(2) + "\n");
        std::cout << "report written to " << out_path << "\n";
    }
    std::cout << (report.all_pass ? "all asserted checks passed" : "asserted checks FAILED")
              << "\n";
    return report.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SIMILE: smooth imitation learning for online sequence prediction"};
    app.require_subcommand(1);
    int rc = 0;

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic expert trajectory");
    SynthConfig scfg;
    std::string synth_out = "expert.csv", synth_format = "csv";
    synth->add_option("--T", scfg.horizon, "horizon")->check(CLI::Range(2, 1 << 24))
        ->default_val(scfg.horizon);
    synth->add_option("--m", scfg.context_dim, "context dimension")->default_val(scfg.context_dim);
    synth->add_option("--noise", scfg.noise_std, "context noise std")->default_val(scfg.noise_std);
    synth->add_option("--halflife", scfg.smoothing_halflife, "expert smoother halflife")
        ->default_val(scfg.smoothing_halflife);
    synth->add_option("--bound", scfg.action_bound, "action bound R")->default_val(scfg.action_bound);
    synth->add_option("--seed", scfg.seed, "seed")->default_val(scfg.seed);
    synth->add_option("--out", synth_out, "output file")->default_val(synth_out);
    synth->add_option("--format", synth_format, "csv or jsonl")->default_val(synth_format);
    synth->callback([&] { rc = cmd_synth(scfg, synth_out, synth_format); });

    // train
    auto* train = app.add_subcommand("train", "run the full training loop");
    DataFlags train_data;
    TrainFlags train_flags;
    std::string train_out = "policy.json", train_log;
    add_data_options(train, train_data, true);
    add_train_options(train, train_flags);
    train->add_option("--out", train_out, "policy output file")->default_val(train_out);
    train->add_option("--log", train_log, "iteration log (JSON lines)");
    train->callback([&] { rc = cmd_train(train_data, train_flags, train_out, train_log); });

    // eval
    auto* eval = app.add_subcommand("eval", "roll out a saved policy against a trajectory");
    DataFlags eval_data;
    std::string eval_policy, eval_out, eval_format = "csv";
    add_data_options(eval, eval_data, true);
    eval->add_option("--policy", eval_policy, "policy file")->required();
    eval->add_option("--out", eval_out, "write the rolled-out trajectory here");
    eval->add_option("--out-format", eval_format, "csv or jsonl")->default_val(eval_format);
    eval->callback([&] { rc = cmd_eval(eval_data, eval_policy, eval_out, eval_format); });

    // compare-beta
    auto* cbeta = app.add_subcommand("compare-beta", "adaptive vs fixed interpolation step");
    DataFlags cbeta_data;
    TrainFlags cbeta_flags;
    std::string cbeta_grid = "adaptive,0.1,0.5", cbeta_out = "compare_beta.csv";
    add_data_options(cbeta, cbeta_data, true);
    add_train_options(cbeta, cbeta_flags);
    cbeta->add_option("--grid", cbeta_grid, "comma-separated beta modes")->default_val(cbeta_grid);
    cbeta->add_option("--out", cbeta_out, "output CSV")->default_val(cbeta_out);
    cbeta->callback([&] { rc = cmd_compare_beta(cbeta_data, cbeta_flags, cbeta_grid, cbeta_out); });

    // compare-interp
    auto* cinterp = app.add_subcommand("compare-interp",
                                       "deterministic vs stochastic interpolation");
    DataFlags cinterp_data;
    TrainFlags cinterp_flags;
    double cinterp_beta = 0.5;
    int cinterp_samples = 50;
    std::string cinterp_out = "compare_interp.csv";
    add_data_options(cinterp, cinterp_data, true);
    add_train_options(cinterp, cinterp_flags);
    cinterp->add_option("--interp-beta", cinterp_beta, "fixed interpolation step")
        ->default_val(cinterp_beta);
    cinterp->add_option("--samples", cinterp_samples, "stochastic roll-outs per iteration")
        ->check(CLI::PositiveNumber)->default_val(cinterp_samples);
    cinterp->add_option("--out", cinterp_out, "output CSV")->default_val(cinterp_out);
    cinterp->callback([&] {
        rc = cmd_compare_interp(cinterp_data, cinterp_flags, cinterp_beta, cinterp_samples,
                                cinterp_out);
    });

    // check-theory; defaults are the reference protocol, under which every
    // asserted check is expected to pass
    auto* check = app.add_subcommand("check-theory", "run the executable theory checks");
    DataFlags check_data;
    TrainFlags check_flags;
    check_flags.lambda = 2.0;
    check_flags.tau = 1;
    check_flags.q = 1;
    check_flags.trees = 30;
    check_flags.depth = 5;
    check_flags.feature_frac = 0.25;
    SynthConfig check_synth;
    check_synth.noise_std = 0.10;
    check_synth.smoothing_halflife = 5.0;
    check_synth.seed = 3;
    std::string check_out;
    add_data_options(check, check_data, false);
    add_train_options(check, check_flags);
    check->add_option("--T", check_synth.horizon, "synthetic horizon when --data is absent")
        ->check(CLI::Range(2, 1 << 24))->default_val(check_synth.horizon);
    check->add_option("--noise", check_synth.noise_std, "synthetic context noise")
        ->default_val(check_synth.noise_std);
    check->add_option("--halflife", check_synth.smoothing_halflife, "synthetic expert halflife")
        ->default_val(check_synth.smoothing_halflife);
    check->add_option("--synth-seed", check_synth.seed, "synthetic data seed")
        ->default_val(check_synth.seed);
    check->add_option("--out", check_out, "JSON report path");
    check->callback([&] { rc = cmd_check_theory(check_data, check_flags, check_synth, check_out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return rc;
}
