#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "otlab/errors.hpp"
#include "otlab/oracles.hpp"

namespace otlab {

namespace {

struct Cell {
    std::size_t row;
    std::size_t col;
};

// Basis tree over m row nodes [0, m) and n column nodes [m, m + n).
class Basis {
public:
    Basis(std::size_t m, std::size_t n) : m_(m), n_(n) {}

    std::vector<Cell> cells;

    // Node path from row `r` to column `c` through basic cells; returns the cell
    // indices along the path starting at the column end.
    std::vector<std::size_t> path_from_col_to_row(std::size_t c, std::size_t r) const
    {
        std::size_t nodes = m_ + n_;
        std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(nodes);
        for (std::size_t k = 0; k < cells.size(); ++k) {
            adj[cells[k].row].push_back({m_ + cells[k].col, k});
            adj[m_ + cells[k].col].push_back({cells[k].row, k});
        }
        const auto none = std::numeric_limits<std::size_t>::max();
        std::vector<std::size_t> via(nodes, none), prev(nodes, none);
        std::vector<char> seen(nodes, 0);
        std::deque<std::size_t> q{m_ + c};
        seen[m_ + c] = 1;
        while (!q.empty()) {
            std::size_t a = q.front();
            q.pop_front();
            if (a == r)
                break;
            for (auto [b, k] : adj[a])
                if (!seen[b]) {
                    seen[b] = 1;
                    prev[b] = a;
                    via[b] = k;
                    q.push_back(b);
                }
        }
        if (!seen[r])
            throw ContractError("transportation basis is not a spanning tree");
        std::vector<std::size_t> rev;
        for (std::size_t a = r; a != m_ + c; a = prev[a])
            rev.push_back(via[a]);
        std::reverse(rev.begin(), rev.end());
        return rev;
    }

    void potentials(const Eigen::MatrixXd& cost, std::vector<double>& u, std::vector<double>& v) const
    {
        std::size_t nodes = m_ + n_;
        std::vector<std::vector<std::size_t>> adj(nodes);
        for (std::size_t k = 0; k < cells.size(); ++k) {
            adj[cells[k].row].push_back(k);
            adj[m_ + cells[k].col].push_back(k);
        }
        std::vector<char> known(nodes, 0);
        std::vector<double> pot(nodes, 0.0);
        std::deque<std::size_t> q{0};
        known[0] = 1;
        while (!q.empty()) {
            std::size_t a = q.front();
            q.pop_front();
            for (auto k : adj[a]) {
                const Cell& c = cells[k];
                std::size_t other = a < m_ ? m_ + c.col : c.row;
                if (known[other])
                    continue;
                double cij = cost(static_cast<Eigen::Index>(c.row), static_cast<Eigen::Index>(c.col));
                pot[other] = cij - pot[a];
                known[other] = 1;
                q.push_back(other);
            }
        }
        u.assign(pot.begin(), pot.begin() + static_cast<std::ptrdiff_t>(m_));
        v.assign(pot.begin() + static_cast<std::ptrdiff_t>(m_), pot.end());
    }

private:
    std::size_t m_, n_;
};

}  // namespace

TransportPlan solve_transportation(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                                   const Eigen::MatrixXd& cost)
{
    const auto m = static_cast<std::size_t>(supply.size());
    const auto n = static_cast<std::size_t>(demand.size());
    if (m == 0 || n == 0 || cost.rows() != supply.size() || cost.cols() != demand.size())
        throw DimensionError("transportation: cost matrix does not match marginals");
    if ((supply.array() < 0).any() || (demand.array() < 0).any())
        throw DomainError("transportation: marginals must be nonnegative");
    double total = supply.sum();
    if (std::fabs(total - demand.sum()) > 1e-9 * std::max(1.0, total))
        throw DomainError("transportation: unbalanced marginals");

    Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(cost.rows(), cost.cols());
    Basis basis(m, n);

    // Northwest-corner start; exactly m + n - 1 basic cells (some may carry zero flow).
    {
        std::vector<double> a(supply.data(), supply.data() + m);
        std::vector<double> b(demand.data(), demand.data() + n);
        std::size_t i = 0, j = 0;
        while (true) {
            double x = std::min(a[i], b[j]);
            flow(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x;
            basis.cells.push_back({i, j});
            a[i] -= x;
            b[j] -= x;
            if (i == m - 1 && j == n - 1)
                break;
            if (j == n - 1 || (i < m - 1 && a[i] <= b[j]))
                ++i;
            else
                ++j;
        }
    }

    TransportPlan out;
    std::vector<double> u, v;
    const std::size_t max_pivots = 50 * (m + n) * (m + n) + 1000;
    const double tol = 1e-12 * std::max(1.0, cost.cwiseAbs().maxCoeff());
    std::vector<char> is_basic(m * n, 0);
    for (const auto& c : basis.cells)
        is_basic[c.row * n + c.col] = 1;

    while (true) {
        basis.potentials(cost, u, v);
        double best = -tol;
        std::size_t ei = m, ej = n;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (is_basic[i * n + j])
                    continue;
                double r = cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - u[i] - v[j];
                if (r < best) {
                    best = r;
                    ei = i;
                    ej = j;
                }
            }
        if (ei == m)
            break;
        if (++out.pivots > max_pivots)
            throw NumericError("transportation simplex did not converge");

        // Cycle: entering cell gains theta; path cells alternate -, +, -, ...
        auto path = basis.path_from_col_to_row(ej, ei);
        double theta = std::numeric_limits<double>::infinity();
        std::size_t leave = path.size();
        for (std::size_t k = 0; k < path.size(); k += 2) {
            const Cell& c = basis.cells[path[k]];
            double f = flow(static_cast<Eigen::Index>(c.row), static_cast<Eigen::Index>(c.col));
            if (f < theta) {
                theta = f;
                leave = k;
            }
        }
        for (std::size_t k = 0; k < path.size(); ++k) {
            const Cell& c = basis.cells[path[k]];
            double& f = flow(static_cast<Eigen::Index>(c.row), static_cast<Eigen::Index>(c.col));
            f += (k % 2 == 0 ? -theta : theta);
            if (f < 0)
                f = 0;
        }
        flow(static_cast<Eigen::Index>(ei), static_cast<Eigen::Index>(ej)) += theta;
        const Cell old = basis.cells[path[leave]];
        flow(static_cast<Eigen::Index>(old.row), static_cast<Eigen::Index>(old.col)) = 0.0;
        is_basic[old.row * n + old.col] = 0;
        basis.cells[path[leave]] = {ei, ej};
        is_basic[ei * n + ej] = 1;
    }

    out.flow = std::move(flow);
    out.cost = (out.flow.array() * cost.array()).sum();
    return out;
}

}  // namespace otlab
