#include <algorithm>
#include <limits>

#include "otlab/errors.hpp"
#include "otlab/oracles.hpp"

namespace otlab {

// Shortest augmenting path Hungarian method (row potentials u, column potentials v).
Assignment solve_assignment(const Eigen::MatrixXd& cost)
{
    const auto n = static_cast<std::size_t>(cost.rows());
    if (cost.cols() != cost.rows())
        throw DimensionError("assignment needs a square cost matrix");
    if (!cost.allFinite())
        throw NumericError("assignment cost matrix has non-finite entries");
    const double inf = std::numeric_limits<double>::infinity();

    // 1-based arrays; column 0 is a virtual start column.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);

    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            std::size_t i0 = p[j0], j1 = 0;
            double delta = inf;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j])
                    continue;
                double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    Assignment out;
    out.row_to_col.assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j)
        out.row_to_col[p[j] - 1] = j - 1;
    for (std::size_t i = 0; i < n; ++i)
        out.total += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(out.row_to_col[i]));
    return out;
}

}  // namespace otlab
