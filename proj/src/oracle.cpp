#include "idla/oracle.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <gmpxx.h>

#include "idla/errors.hpp"

namespace idla::oracle {

namespace {

// Truncated state space: all occupied sites with base - depth <= y <= h(A).
// Interior states are occupied sites; absorbing states the vacant sites
// adjacent to them.
struct StateSpace {
    int n;
    std::int64_t y_min; // truncation level
    std::int64_t y_max;
    std::vector<std::int32_t> interior_id; // per grid cell; -1 vacant, -2 out of range
    std::vector<Site> interior;
    std::vector<Site> boundary;
    std::map<std::pair<std::int64_t, std::int32_t>, std::int32_t> boundary_id;

    std::size_t cell(Site s) const {
        return static_cast<std::size_t>(s.y - y_min) * static_cast<std::size_t>(n) +
               static_cast<std::size_t>(s.x);
    }
    std::int32_t interior_index(Site s) const {
        if (s.y < y_min || s.y > y_max) return -2;
        return interior_id[cell(s)];
    }
};

StateSpace build_states(const Cluster& a, int depth, std::int64_t state_cap) {
    StateSpace ss;
    ss.n = a.width();
    ss.y_min = a.base() - depth;
    ss.y_max = a.height();
    std::int64_t levels = ss.y_max - ss.y_min + 1;
    std::int64_t occ_count = (a.base() - ss.y_min + 1) * ss.n + a.stored_count();
    if (occ_count > state_cap)
        throw TooLargeError("oracle state count " + std::to_string(occ_count) + " exceeds cap");
    ss.interior_id.assign(static_cast<std::size_t>(levels * ss.n), -1);
    for (std::int64_t y = ss.y_min; y <= ss.y_max; ++y)
        for (int x = 0; x < ss.n; ++x) {
            Site s{x, y};
            if (a.occupied(s)) {
                ss.interior_id[ss.cell(s)] = static_cast<std::int32_t>(ss.interior.size());
                ss.interior.push_back(s);
            }
        }
    auto note_boundary = [&](Site s) {
        auto key = std::make_pair(s.y, s.x);
        if (ss.boundary_id.emplace(key, static_cast<std::int32_t>(ss.boundary.size())).second)
            ss.boundary.push_back(s);
    };
    for (const Site& s : ss.interior) {
        const Site nb[4] = {{s.x, s.y + 1},
                            {s.x, s.y - 1},
                            {s.x + 1 == ss.n ? 0 : s.x + 1, s.y},
                            {s.x == 0 ? ss.n - 1 : s.x - 1, s.y}};
        for (const Site& t : nb)
            if (t.y >= ss.y_min && !a.occupied(t)) note_boundary(t);
    }
    std::sort(ss.boundary.begin(), ss.boundary.end());
    ss.boundary_id.clear();
    for (std::size_t i = 0; i < ss.boundary.size(); ++i)
        ss.boundary_id[{ss.boundary[i].y, ss.boundary[i].x}] =
            static_cast<std::int32_t>(i);
    return ss;
}

// Expected-visits vector v solving (I - Q)^T v = rhs, where Q is the
// interior-to-interior quarter-step matrix. `absorb_bottom` switches the
// bottom row from reflecting to absorbing (used for the truncation bound).
Eigen::VectorXd solve_visits(const StateSpace& ss, const Eigen::VectorXd& rhs,
                             bool absorb_bottom) {
    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> trips;
    trips.reserve(ss.interior.size() * 5);
    auto m = static_cast<Eigen::Index>(ss.interior.size());
    for (std::int32_t i = 0; i < m; ++i) {
        trips.emplace_back(i, i, 1.0);
        const Site s = ss.interior[static_cast<std::size_t>(i)];
        const Site nb[4] = {{s.x, s.y + 1},
                            {s.x, s.y - 1},
                            {s.x + 1 == ss.n ? 0 : s.x + 1, s.y},
                            {s.x == 0 ? ss.n - 1 : s.x - 1, s.y}};
        for (const Site& t : nb) {
            if (t.y < ss.y_min) {
                if (!absorb_bottom) trips.emplace_back(i, i, -0.25); // reflect: stay put
                continue;
            }
            std::int32_t j = ss.interior_index(t);
            if (j >= 0) trips.emplace_back(j, i, -0.25); // transposed system
        }
    }
    Eigen::SparseMatrix<double> mat(m, m);
    mat.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(mat);
    if (lu.info() != Eigen::Success) throw std::runtime_error("oracle linear solve failed");
    return lu.solve(rhs);
}

ExitDistribution exit_from_rhs(const Cluster& a, const StateSpace& ss,
                               const Eigen::VectorXd& rhs) {
    Eigen::VectorXd v = solve_visits(ss, rhs, false);
    std::vector<double> out(ss.boundary.size(), 0.0);
    for (std::size_t i = 0; i < ss.interior.size(); ++i) {
        const Site s = ss.interior[i];
        const Site nb[4] = {{s.x, s.y + 1},
                            {s.x, s.y - 1},
                            {s.x + 1 == ss.n ? 0 : s.x + 1, s.y},
                            {s.x == 0 ? ss.n - 1 : s.x - 1, s.y}};
        for (const Site& t : nb) {
            if (t.y < ss.y_min || a.occupied(t)) continue;
            out[static_cast<std::size_t>(ss.boundary_id.at({t.y, t.x}))] +=
                0.25 * v[static_cast<Eigen::Index>(i)];
        }
    }
    // truncation bound: probability of touching the bottom level before exit
    Eigen::VectorXd vb = solve_visits(ss, rhs, true);
    double trunc = 0.0;
    for (std::size_t i = 0; i < ss.interior.size(); ++i)
        if (ss.interior[i].y == ss.y_min) trunc += 0.25 * vb[static_cast<Eigen::Index>(i)];

    ExitDistribution d;
    d.truncation_error = trunc;
    d.probs.reserve(out.size());
    for (std::size_t b = 0; b < out.size(); ++b) d.probs.emplace_back(ss.boundary[b], out[b]);
    return d;
}

} // namespace

ExitDistribution exact_exit_distribution(const Cluster& a, Site start, const OracleOptions& opt) {
    if (!a.occupied(start)) throw StartVacantError("oracle start must be inside the cluster");
    if (opt.depth < 100) throw DomainError("oracle depth must be at least 100");
    StateSpace ss = build_states(a, opt.depth, opt.state_cap);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ss.interior.size()));
    rhs[ss.interior_index(start)] = 1.0;
    return exit_from_rhs(a, ss, rhs);
}

ExitDistribution exact_exit_distribution_uniform0(const Cluster& a, const OracleOptions& opt) {
    StateSpace ss = build_states(a, opt.depth, opt.state_cap);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ss.interior.size()));
    for (int x = 0; x < a.width(); ++x)
        rhs[ss.interior_index(Site{x, 0})] += 1.0 / a.width();
    return exit_from_rhs(a, ss, rhs);
}

std::map<Cluster, double> exact_cluster_distribution(const Cluster& a0, int t,
                                                     const OracleOptions& opt) {
    std::map<Cluster, double> cur{{a0, 1.0}};
    for (int step = 0; step < t; ++step) {
        std::map<Cluster, double> next;
        for (const auto& [cluster, p] : cur) {
            ExitDistribution d = exact_exit_distribution_uniform0(cluster, opt);
            for (const auto& [site, q] : d.probs) {
                if (q == 0.0) continue;
                next[occupied_with(cluster, site)] += p * q;
            }
        }
        if (static_cast<std::int64_t>(next.size()) > opt.support_cap)
            throw TooLargeError("cluster distribution support exceeds cap");
        cur = std::move(next);
    }
    return cur;
}

namespace {

// Rational Gaussian elimination for the small Abelian test bed.
using Rational = mpq_class;

std::map<Cluster, Rational> rational_exit_step(const Cluster& a, Site start, int depth) {
    StateSpace ss = build_states(a, depth, 4000);
    auto m = ss.interior.size();
    std::vector<std::vector<Rational>> mat(m, std::vector<Rational>(m, 0));
    std::vector<std::vector<Rational>> r(m, std::vector<Rational>(ss.boundary.size(), 0));
    const Rational quarter(1, 4);
    for (std::size_t i = 0; i < m; ++i) {
        mat[i][i] = 1;
        const Site s = ss.interior[i];
        const Site nb[4] = {{s.x, s.y + 1},
                            {s.x, s.y - 1},
                            {s.x + 1 == ss.n ? 0 : s.x + 1, s.y},
                            {s.x == 0 ? ss.n - 1 : s.x - 1, s.y}};
        for (const Site& nbs : nb) {
            if (nbs.y < ss.y_min) {
                mat[i][i] -= quarter; // reflecting bottom
                continue;
            }
            std::int32_t j = ss.interior_index(nbs);
            if (j >= 0)
                mat[i][static_cast<std::size_t>(j)] -= quarter;
            else
                r[i][static_cast<std::size_t>(ss.boundary_id.at({nbs.y, nbs.x}))] += quarter;
        }
    }
    // solve x^T (I - Q) = e_start^T, i.e. forward-eliminate the augmented
    // transposed system
    std::size_t srow = static_cast<std::size_t>(ss.interior_index(start));
    std::vector<Rational> rhs(m, 0);
    rhs[srow] = 1;
    // transpose in place conceptually: solve (I-Q)^T v = rhs
    std::vector<std::vector<Rational>> tm(m, std::vector<Rational>(m));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) tm[i][j] = mat[j][i];
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t piv = col;
        while (piv < m && tm[piv][col] == 0) ++piv;
        if (piv == m) throw std::runtime_error("singular rational system");
        std::swap(tm[piv], tm[col]);
        std::swap(rhs[piv], rhs[col]);
        for (std::size_t row = col + 1; row < m; ++row) {
            if (tm[row][col] == 0) continue;
            Rational f = tm[row][col] / tm[col][col];
            for (std::size_t j = col; j < m; ++j) tm[row][j] -= f * tm[col][j];
            rhs[row] -= f * rhs[col];
        }
    }
    std::vector<Rational> v(m, 0);
    for (std::size_t ii = m; ii-- > 0;) {
        Rational acc = rhs[ii];
        for (std::size_t j = ii + 1; j < m; ++j) acc -= tm[ii][j] * v[j];
        v[ii] = acc / tm[ii][ii];
    }
    std::map<Cluster, Rational> out;
    for (std::size_t i = 0; i < m; ++i) {
        if (v[i] == 0) continue;
        const Site s = ss.interior[i];
        const Site nb[4] = {{s.x, s.y + 1},
                            {s.x, s.y - 1},
                            {s.x + 1 == ss.n ? 0 : s.x + 1, s.y},
                            {s.x == 0 ? ss.n - 1 : s.x - 1, s.y}};
        for (const Site& t : nb) {
            if (t.y < ss.y_min || a.occupied(t)) continue;
            out[occupied_with(a, t)] += quarter * v[i];
        }
    }
    return out;
}

} // namespace

std::map<Cluster, std::string> exact_smash_distribution_rational(const Cluster& a,
                                                                 const std::vector<Site>& order,
                                                                 int depth) {
    std::map<Cluster, Rational> cur{{a, Rational(1)}};
    for (const Site& z : order) {
        std::map<Cluster, Rational> next;
        for (const auto& [cluster, p] : cur) {
            if (!cluster.occupied(z)) {
                next[occupied_with(cluster, z)] += p;
                continue;
            }
            for (auto& [child, q] : rational_exit_step(cluster, z, depth)) next[child] += p * q;
        }
        cur = std::move(next);
    }
    std::map<Cluster, std::string> out;
    for (auto& [cluster, p] : cur) {
        p.canonicalize();
        out[cluster] = p.get_str();
    }
    return out;
}

} // namespace idla::oracle
