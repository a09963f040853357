#include "simile/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace simile {

namespace {

void check_same_shape(const Series& a, const Series& b, const char* who) {
    if (a.size() != b.size()) throw std::invalid_argument(std::string(who) + ": length mismatch");
    if (a.empty()) throw std::invalid_argument(std::string(who) + ": empty sequences");
    if (a.front().size() != b.front().size())
        throw std::invalid_argument(std::string(who) + ": action dimension mismatch");
}

}  // namespace

double imitation_loss(const Series& a, const Series& b) {
    check_same_shape(a, b, "imitation_loss");
    double acc = 0.0;
    for (size_t t = 0; t < a.size(); ++t) {
        for (size_t d = 0; d < a[t].size(); ++d) {
            const double e = a[t][d] - b[t][d];
            acc += e * e;
        }
    }
    return acc / static_cast<double>(a.size());
}

double smoothness(const Series& a) {
    if (a.size() < 2) throw std::invalid_argument("smoothness: need T >= 2");
    double acc = 0.0;
    for (size_t t = 1; t < a.size(); ++t) {
        double sq = 0.0;
        for (size_t d = 0; d < a[t].size(); ++d) {
            const double e = a[t][d] - a[t - 1][d];
            sq += e * e;
        }
        acc += std::sqrt(sq);
    }
    return acc / static_cast<double>(a.size() - 1);
}

double feedback_descent(const Series& rolled, const Series& expert, const Series& feedback) {
    check_same_shape(rolled, expert, "feedback_descent");
    check_same_shape(rolled, feedback, "feedback_descent");
    double acc = 0.0;
    for (size_t t = 0; t < rolled.size(); ++t)
        for (size_t d = 0; d < rolled[t].size(); ++d)
            acc += (rolled[t][d] - expert[t][d]) * (feedback[t][d] - rolled[t][d]);
    return acc / static_cast<double>(rolled.size());
}

}  // namespace simile
