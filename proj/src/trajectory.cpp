#include "simile/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <json.hpp>

#include "simile/rng.hpp"

namespace simile {

void Trajectory::validate() const {
    if (contexts.size() != actions.size())
        throw std::invalid_argument("trajectory: contexts and actions differ in length");
    if (horizon() < 2) throw std::invalid_argument("trajectory: horizon must be >= 2");
    if (!(action_bound > 0.0) || !std::isfinite(action_bound))
        throw std::invalid_argument("trajectory: action_bound must be positive and finite");
    const int m = context_dim();
    const int k = action_dim();
    if (m < 1 || k < 1) throw std::invalid_argument("trajectory: empty context or action rows");
    for (int t = 0; t < horizon(); ++t) {
        if (static_cast<int>(contexts[t].size()) != m)
            throw std::invalid_argument("trajectory: inconsistent context dimension at step " +
                                        std::to_string(t + 1));
        if (static_cast<int>(actions[t].size()) != k)
            throw std::invalid_argument("trajectory: inconsistent action dimension at step " +
                                        std::to_string(t + 1));
        for (double a : actions[t]) {
            if (!std::isfinite(a) || a < 0.0 || a > action_bound)
                throw std::invalid_argument("trajectory: action out of [0, R] at step " +
                                            std::to_string(t + 1));
        }
    }
}

namespace {

// Core window assembly. Context index below 1 repeats x_1; action index
// below `first_action_index` falls back to `pre_start`.
State build_state(const StateLayout& lay, const Series& contexts, int t,
                  const Series& actions, const Vec& pre_start) {
    State s;
    s.reserve(lay.state_dim());
    for (int i = 0; i <= lay.p; ++i) {
        const int idx = std::max(1, t - i);
        const Vec& x = contexts[idx - 1];
        s.insert(s.end(), x.begin(), x.end());
    }
    for (int j = 1; j <= lay.q; ++j) {
        const int idx = t - j;  // 1-based step whose action we want
        const Vec& a = (idx >= 1 && idx <= static_cast<int>(actions.size()))
                           ? actions[idx - 1]
                           : pre_start;
        s.insert(s.end(), a.begin(), a.end());
    }
    return s;
}

}  // namespace

State make_state(const Trajectory& traj, int t, int p, int q) {
    if (p < 0 || q < 0) throw std::invalid_argument("make_state: p and q must be >= 0");
    if (t < 1 || t > traj.horizon())
        throw std::out_of_range("make_state: t = " + std::to_string(t) + " outside [1, " +
                                std::to_string(traj.horizon()) + "]");
    const StateLayout lay{traj.context_dim(), traj.action_dim(), p, q};
    // pre-start actions repeat the earliest available element, a_1
    return build_state(lay, traj.contexts, t, traj.actions, traj.actions.front());
}

State assemble_state(const StateLayout& layout, const Series& contexts, int t,
                     const Series& past_actions, const Vec& initial_action) {
    return build_state(layout, contexts, t, past_actions, initial_action);
}

namespace {

// Forward-backward exponential moving average; zero phase, halflife in steps.
Vec fb_smooth(const Vec& x, double halflife) {
    const double alpha = halflife > 0.0 ? 1.0 - std::pow(0.5, 1.0 / halflife) : 1.0;
    Vec y(x.size());
    y[0] = x[0];
    for (size_t t = 1; t < x.size(); ++t) y[t] = alpha * x[t] + (1.0 - alpha) * y[t - 1];
    Vec z(y.size());
    z.back() = y.back();
    for (size_t i = y.size() - 1; i-- > 0;) z[i] = alpha * y[i] + (1.0 - alpha) * z[i + 1];
    return z;
}

double reflect_unit(double v) {
    while (v < 0.0 || v > 1.0) {
        if (v < 0.0) v = -v;
        if (v > 1.0) v = 2.0 - v;
    }
    return v;
}

}  // namespace

Trajectory synth_expert(const SynthConfig& cfg) {
    if (cfg.horizon < 2) throw std::invalid_argument("synth_expert: horizon must be >= 2");
    if (cfg.context_dim < 1) throw std::invalid_argument("synth_expert: context_dim must be >= 1");
    if (cfg.noise_std < 0.0) throw std::invalid_argument("synth_expert: noise_std must be >= 0");
    if (cfg.smoothing_halflife < 0.0)
        throw std::invalid_argument("synth_expert: smoothing_halflife must be >= 0");
    if (!(cfg.action_bound > 0.0))
        throw std::invalid_argument("synth_expert: action_bound must be positive");

    const int T = cfg.horizon;
    const int m = cfg.context_dim;
    const double R = cfg.action_bound;
    constexpr double kStepStd = 0.06;  // walk step, in unit-interval coordinates
    Rng rng(mix64(cfg.seed));

    // one reflected random walk in [0,1] per context dimension
    std::vector<Vec> walks(m, Vec(T));
    for (int j = 0; j < m; ++j) {
        double w = 0.5;
        for (int t = 0; t < T; ++t) {
            walks[j][t] = w;
            w = reflect_unit(w + kStepStd * rng.normal());
        }
    }

    Trajectory traj;
    traj.action_bound = R;
    traj.contexts.assign(T, Vec(m));
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < m; ++j)
            traj.contexts[t][j] = R * walks[j][t] + cfg.noise_std * rng.normal();

    // expert follows the smoothed mean of the clean walks, scaled into [0,R]
    Vec mean_walk(T);
    for (int t = 0; t < T; ++t) {
        double s = 0.0;
        for (int j = 0; j < m; ++j) s += walks[j][t];
        mean_walk[t] = s / m;
    }
    const Vec smooth = fb_smooth(mean_walk, cfg.smoothing_halflife);
    traj.actions.assign(T, Vec(1));
    for (int t = 0; t < T; ++t) traj.actions[t][0] = R * smooth[t];

    traj.validate();
    return traj;
}

// ---------------------------------------------------------------------------
// file I/O

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
    throw std::runtime_error(path + ": line " + std::to_string(line) + ": " + what);
}

bool parse_double(const std::string& field, double& out) {
    const char* b = field.data();
    const char* e = b + field.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    auto [ptr, ec] = std::from_chars(b, e, out);
    while (ptr < e && (*ptr == ' ' || *ptr == '\t' || *ptr == '\r')) ++ptr;
    return ec == std::errc() && ptr == e;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

void check_action_bounds(const Vec& a, double R, const std::string& path, int line) {
    for (double v : a) {
        if (!std::isfinite(v) || v < 0.0 || v > R)
            parse_fail(path, line, "action " + format_double(v) + " out of [0, " +
                                       format_double(R) + "]");
    }
}

Trajectory load_csv(const std::string& path, int m, int k, double R) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    Trajectory traj;
    traj.action_bound = R;
    std::string line;
    int lineno = 0;
    bool saw_any = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (!saw_any) {
            // header detection: a row whose fields are not all numeric
            bool numeric = true;
            double tmp;
            for (const auto& f : fields)
                if (!parse_double(f, tmp)) { numeric = false; break; }
            if (!numeric) {
                int hm = 0, hk = 0;
                for (const auto& f : fields) {
                    std::string name = f;
                    name.erase(0, name.find_first_not_of(" \t"));
                    if (name.rfind("x_", 0) == 0) ++hm;
                    else if (name.rfind("a_", 0) == 0) ++hk;
                    else parse_fail(path, lineno, "unrecognized header field '" + f + "'");
                }
                if (hm < 1 || hk < 1) parse_fail(path, lineno, "header needs x_* and a_* columns");
                if (m >= 0 && m != hm) parse_fail(path, lineno, "header context dim mismatch");
                if (k >= 0 && k != hk) parse_fail(path, lineno, "header action dim mismatch");
                m = hm;
                k = hk;
                saw_any = true;
                continue;
            }
            if (m < 0 || k < 0)
                throw std::runtime_error(path + ": headerless CSV needs explicit dimensions");
            saw_any = true;
        }
        if (static_cast<int>(fields.size()) != m + k)
            parse_fail(path, lineno, "expected " + std::to_string(m + k) + " fields, got " +
                                         std::to_string(fields.size()));
        Vec x(m), a(k);
        for (int j = 0; j < m + k; ++j) {
            double v;
            if (!parse_double(fields[j], v))
                parse_fail(path, lineno, "malformed number '" + fields[j] + "'");
            if (j < m) x[j] = v;
            else a[j - m] = v;
        }
        check_action_bounds(a, R, path, lineno);
        traj.contexts.push_back(std::move(x));
        traj.actions.push_back(std::move(a));
    }
    if (traj.contexts.empty()) throw std::runtime_error(path + ": no rows");
    traj.validate();
    return traj;
}

Trajectory load_jsonl(const std::string& path, int m, int k, double R) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    Trajectory traj;
    traj.action_bound = R;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("x") || !j.contains("a"))
            parse_fail(path, lineno, "expected an object with fields 'x' and 'a'");
        Vec x, a;
        try {
            x = j.at("x").get<Vec>();
            a = j.at("a").get<Vec>();
        } catch (const nlohmann::json::exception&) {
            parse_fail(path, lineno, "'x' and 'a' must be numeric arrays");
        }
        if (m < 0) m = static_cast<int>(x.size());
        if (k < 0) k = static_cast<int>(a.size());
        if (static_cast<int>(x.size()) != m || static_cast<int>(a.size()) != k)
            parse_fail(path, lineno, "inconsistent dimensions");
        check_action_bounds(a, R, path, lineno);
        traj.contexts.push_back(std::move(x));
        traj.actions.push_back(std::move(a));
    }
    if (traj.contexts.empty()) throw std::runtime_error(path + ": no rows");
    traj.validate();
    return traj;
}

}  // namespace

Trajectory load_trajectory(const std::string& path, TrajFormat format, int context_dim,
                           int action_dim, double action_bound) {
    return format == TrajFormat::csv ? load_csv(path, context_dim, action_dim, action_bound)
                                     : load_jsonl(path, context_dim, action_dim, action_bound);
}

void save_trajectory(const Trajectory& traj, const std::string& path, TrajFormat format) {
    traj.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    const int m = traj.context_dim();
    const int k = traj.action_dim();
    if (format == TrajFormat::csv) {
        for (int j = 0; j < m; ++j) out << (j ? "," : "") << "x_" << (j + 1);
        for (int j = 0; j < k; ++j) out << ",a_" << (j + 1);
        out << "\n";
        for (int t = 0; t < traj.horizon(); ++t) {
            for (int j = 0; j < m; ++j) out << (j ? "," : "") << format_double(traj.contexts[t][j]);
            for (int j = 0; j < k; ++j) out << "," << format_double(traj.actions[t][j]);
            out << "\n";
        }
    } else {
        for (int t = 0; t < traj.horizon(); ++t) {
            nlohmann::json j{{"x", traj.contexts[t]}, {"a", traj.actions[t]}};
            out << j.dump() << "\n";
        }
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace simile
