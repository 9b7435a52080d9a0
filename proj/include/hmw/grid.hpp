#pragma once

#include <cstddef>
#include <vector>

namespace hmw {

// Composite Simpson weights for n uniform samples (n odd), normalized to sum 1.
// Exact for polynomial integrands up to cubic, which keeps moment values stable
// under grid doubling at the 1e-10 level required of the y-grid.
std::vector<double> simpson_weights(std::size_t n);

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights);

struct VelocityGrid {
    std::vector<double> v;  // m/s
    std::vector<double> w;  // P(v)-folded quadrature weights, sum = 1
};

// Quadrature grid for the supersonic distribution P(v) ~ v^3 exp(-S^2 (v/vm - 1)^2),
// spanning [vm (1 - 4/S), vm (1 + 4/S)].
VelocityGrid supersonic_velocity_grid(double vm, double speed_ratio, std::size_t n = 101);

} // namespace hmw
