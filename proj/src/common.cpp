#include "kinetik/common.hpp"

#include <iostream>
#include <mutex>

namespace kinetik {

Vec make_vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

Vec zero_vec(int d) { return Vec::Zero(d); }

double sphere_measure(int d) {
    // 2 pi^{d/2} / Gamma(d/2)
    return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
}

double ball_volume(int d) { return sphere_measure(d) / d; }

namespace {
std::mutex g_warn_mutex;
WarningSink g_sink;
}  // namespace

void set_warning_sink(WarningSink sink) {
    std::lock_guard<std::mutex> lock(g_warn_mutex);
    g_sink = std::move(sink);
}

void warn(const std::string& msg) {
    std::lock_guard<std::mutex> lock(g_warn_mutex);
    if (g_sink)
        g_sink(msg);
    else
        std::cerr << "kinetik: warning: " << msg << '\n';
}

}  // namespace kinetik
