#include "hmw/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace hmw {

std::vector<double> simpson_weights(std::size_t n) {
    if (n < 3 || n % 2 == 0) throw std::invalid_argument("simpson_weights: n must be odd and >= 3");
    std::vector<double> w(n, 1.0);
    for (std::size_t i = 1; i + 1 < n; ++i) w[i] = (i % 2 == 1) ? 4.0 : 2.0;
    double sum = 0.0;
    for (double x : w) sum += x;
    for (double& x : w) x /= sum;
    return w;
}

void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        // Newton iteration from the Chebyshev-angle initial guess.
        double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
}

VelocityGrid supersonic_velocity_grid(double vm, double speed_ratio, std::size_t n) {
    if (!(vm > 0.0) || !(speed_ratio > 1.0)) {
        throw std::invalid_argument("supersonic_velocity_grid: need vm > 0 and speed ratio > 1");
    }
    const double half_width = 4.0 / speed_ratio;
    const double lo = vm * (1.0 - half_width);
    const double hi = vm * (1.0 + half_width);

    std::vector<double> x, gw;
    gauss_legendre(n, x, gw);

    VelocityGrid grid;
    grid.v.resize(n);
    grid.w.resize(n);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = 0.5 * (hi - lo) * x[i] + 0.5 * (hi + lo);
        const double u = v / vm - 1.0;
        const double p = v * v * v * std::exp(-speed_ratio * speed_ratio * u * u);
        grid.v[i] = v;
        grid.w[i] = gw[i] * p;
        norm += grid.w[i];
    }
    for (double& w : grid.w) w /= norm;
    return grid;
}

} // namespace hmw
