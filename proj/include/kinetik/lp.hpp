#pragma once

#include <vector>

namespace kinetik {

struct MinimaxFit {
    double residual = 0.0;             // min_c max_i |f_i - sum_j c_j phi_j(i)|
    std::vector<double> coefficients;  // minimizing c
    int pivots = 0;
};

// Discrete Chebyshev fit. phi is row-major n_nodes x n_basis. Solved as a
// linear program with a dense simplex tableau.
MinimaxFit minimax_fit(const std::vector<double>& phi, const std::vector<double>& f, int n_basis);

}  // namespace kinetik
