#include "kinetik/lp.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "kinetik/common.hpp"

namespace kinetik {

// Variables: c_j = p_j - q_j (j < m), E' = e+ - e-, with E = E' + F and
// F = max|f|. Constraints (2n rows, slack s >= 0):
//    phi_i.c - E' + s = f_i + F
//   -phi_i.c - E' + s = F - f_i
// Both right-hand sides are >= 0, so the slack basis is feasible.
MinimaxFit minimax_fit(const std::vector<double>& phi, const std::vector<double>& f, int m) {
    const int n = static_cast<int>(f.size());
    require(n > 0, "minimax fit needs at least one node");
    require(phi.size() == static_cast<std::size_t>(n) * m, "minimax basis matrix size mismatch");
    double F = 0.0;
    for (double x : f) F = std::max(F, std::abs(x));
    MinimaxFit out;
    out.coefficients.assign(m, 0.0);
    if (m == 0 || F == 0.0) {
        out.residual = F;
        return out;
    }
    // Exact fits (f in the span) make the LP fully degenerate; catch them by least squares.
    Eigen::MatrixXd A(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) A(i, j) = phi[static_cast<std::size_t>(i) * m + j];
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(f.data(), n);
    {
        const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
        const double res = (A * c - b).cwiseAbs().maxCoeff();
        if (res <= 1e-12 * F) {
            for (int j = 0; j < m; ++j) out.coefficients[j] = c[j];
            out.residual = res;
            return out;
        }
    }
    // Unit max-norm columns; coefficients are rescaled at the end.
    std::vector<double> scale(m, 1.0);
    for (int j = 0; j < m; ++j) {
        const double mx = A.col(j).cwiseAbs().maxCoeff();
        if (mx > 0.0) scale[j] = 1.0 / mx;
    }
    const int rows = 2 * n;
    const int nvar = 2 * m + 2;  // p, q, e+, e-
    const int cols = nvar + rows + 1;
    std::vector<double> T(static_cast<std::size_t>(rows + 1) * cols, 0.0);
    auto at = [&](int r, int c) -> double& { return T[static_cast<std::size_t>(r) * cols + c]; };
    for (int i = 0; i < n; ++i) {
        for (int sgn = 0; sgn < 2; ++sgn) {
            int r = 2 * i + sgn;
            double sign = sgn == 0 ? 1.0 : -1.0;
            for (int j = 0; j < m; ++j) {
                double a = sign * phi[static_cast<std::size_t>(i) * m + j] * scale[j];
                at(r, j) = a;
                at(r, m + j) = -a;
            }
            at(r, 2 * m) = -1.0;
            at(r, 2 * m + 1) = 1.0;
            at(r, nvar + r) = 1.0;
            at(r, cols - 1) = sgn == 0 ? f[i] + F : F - f[i];
        }
    }
    // Objective row: minimize e+ - e-  (reduced costs stored as c_j - z_j).
    at(rows, 2 * m) = 1.0;
    at(rows, 2 * m + 1) = -1.0;
    std::vector<int> basis(rows);
    for (int r = 0; r < rows; ++r) basis[r] = nvar + r;

    // Dantzig pricing; Bland's rule while the objective stalls, which rules out cycling.
    const double eps = 1e-12;
    const int max_pivots = 50 * (rows + cols);
    int stalled = 0;
    for (;;) {
        int enter = -1;
        if (stalled < 8) {
            double most = -eps;
            for (int c = 0; c < cols - 1; ++c)
                if (at(rows, c) < most) {
                    most = at(rows, c);
                    enter = c;
                }
        } else {
            for (int c = 0; c < cols - 1; ++c)
                if (at(rows, c) < -eps) {
                    enter = c;
                    break;
                }
        }
        if (enter < 0) break;
        int leave = -1;
        double best = 0.0;
        for (int r = 0; r < rows; ++r) {
            double a = at(r, enter);
            if (a > eps) {
                double ratio = at(r, cols - 1) / a;
                if (leave < 0 || ratio < best - 1e-15 || (std::abs(ratio - best) <= 1e-15 && basis[r] < basis[leave])) {
                    leave = r;
                    best = ratio;
                }
            }
        }
        if (leave < 0) throw NumericalError("minimax LP unbounded (should not happen)");
        stalled = best * std::abs(at(rows, enter)) > 1e-14 * F ? 0 : stalled + 1;
        double piv = at(leave, enter);
        for (int c = 0; c < cols; ++c) at(leave, c) /= piv;
        for (int r = 0; r <= rows; ++r) {
            if (r == leave) continue;
            double factor = at(r, enter);
            if (factor == 0.0) continue;
            double* dst = &at(r, 0);
            const double* src = &at(leave, 0);
            for (int c = 0; c < cols; ++c) dst[c] -= factor * src[c];
        }
        basis[leave] = enter;
        if (++out.pivots > max_pivots) throw NumericalError("minimax LP did not terminate");
    }
    std::vector<double> x(nvar, 0.0);
    for (int r = 0; r < rows; ++r)
        if (basis[r] < nvar) x[basis[r]] = at(r, cols - 1);
    for (int j = 0; j < m; ++j) out.coefficients[j] = (x[j] - x[m + j]) * scale[j];
    // Recompute the residual directly from the coefficients.
    double res = 0.0;
    for (int i = 0; i < n; ++i) {
        double p = 0.0;
        for (int j = 0; j < m; ++j) p += phi[static_cast<std::size_t>(i) * m + j] * out.coefficients[j];
        res = std::max(res, std::abs(f[i] - p));
    }
    out.residual = res;
    return out;
}

}  // namespace kinetik
