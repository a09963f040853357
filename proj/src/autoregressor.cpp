#include "simile/autoregressor.hpp"

#include <cmath>
#include <stdexcept>

namespace simile {

LinearAutoregressor LinearAutoregressor::identity(int action_dim) {
    LinearAutoregressor h;
    h.tau = 1;
    h.coeffs.assign(action_dim, Vec{1.0});
    return h;
}

namespace {

// Gaussian elimination with partial pivoting; solves in place. tau is tiny
// (a handful of lags), so a dense solve is plenty.
Vec solve_linear(std::vector<Vec> A, Vec b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(A[r][col]) > std::fabs(A[pivot][col])) pivot = r;
        if (std::fabs(A[pivot][col]) < 1e-12)
            throw std::runtime_error(
                "fit_autoregressor: singular normal equations; use ridge > 0");
        std::swap(A[pivot], A[col]);
        std::swap(b[pivot], b[col]);
        for (int r = col + 1; r < n; ++r) {
            const double f = A[r][col] / A[col][col];
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) A[r][c] -= f * A[col][c];
            b[r] -= f * b[col];
        }
    }
    Vec x(n);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= A[r][c] * x[c];
        x[r] = s / A[r][r];
    }
    return x;
}

}  // namespace

LinearAutoregressor fit_autoregressor(const Series& actions, int tau, double ridge) {
    if (tau < 1) throw std::invalid_argument("fit_autoregressor: tau must be >= 1");
    if (ridge < 0.0) throw std::invalid_argument("fit_autoregressor: ridge must be >= 0");
    const int T = static_cast<int>(actions.size());
    if (T <= tau)
        throw std::invalid_argument("fit_autoregressor: sequence length must exceed tau");
    const int k = static_cast<int>(actions.front().size());

    LinearAutoregressor h;
    h.tau = tau;
    h.ridge = ridge;
    h.coeffs.resize(k);

    // per dimension: minimize sum_{t>tau} (a_t - sum_i c_i a_{t-i})^2 + ridge ||c||^2
    for (int d = 0; d < k; ++d) {
        std::vector<Vec> gram(tau, Vec(tau, 0.0));
        Vec rhs(tau, 0.0);
        for (int t = tau; t < T; ++t) {  // 0-based: predicts actions[t]
            for (int i = 0; i < tau; ++i) {
                const double ai = actions[t - 1 - i][d];
                rhs[i] += actions[t][d] * ai;
                for (int j = 0; j < tau; ++j) gram[i][j] += ai * actions[t - 1 - j][d];
            }
        }
        for (int i = 0; i < tau; ++i) gram[i][i] += ridge;
        h.coeffs[d] = solve_linear(std::move(gram), std::move(rhs));
        for (double c : h.coeffs[d])
            if (!std::isfinite(c))
                throw std::runtime_error("fit_autoregressor: non-finite coefficients");
    }
    return h;
}

Vec predict_ar(const LinearAutoregressor& h, const Series& recent) {
    if (static_cast<int>(recent.size()) != h.tau)
        throw std::invalid_argument("predict_ar: need exactly tau recent actions");
    const int k = h.action_dim();
    Vec out(k, 0.0);
    for (int d = 0; d < k; ++d) {
        if (static_cast<int>(recent[0].size()) != k)
            throw std::invalid_argument("predict_ar: action dimension mismatch");
        double s = 0.0;
        for (int i = 0; i < h.tau; ++i) s += h.coeffs[d][i] * recent[i][d];
        out[d] = s;
    }
    return out;
}

Vec predict_ar_state(const LinearAutoregressor& h, const State& s, const StateLayout& layout) {
    if (h.tau > layout.q)
        throw std::invalid_argument("predict_ar_state: tau exceeds the state's action window");
    if (static_cast<int>(s.size()) != layout.state_dim())
        throw std::invalid_argument("predict_ar_state: state dimension mismatch");
    const int k = layout.action_dim;
    const int off = layout.action_offset();
    Vec out(k, 0.0);
    for (int d = 0; d < k; ++d) {
        double acc = 0.0;
        for (int i = 0; i < h.tau; ++i) acc += h.coeffs[d][i] * s[off + i * k + d];
        out[d] = acc;
    }
    return out;
}

}  // namespace simile
