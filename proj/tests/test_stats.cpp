#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "idla/chain.hpp"
#include "idla/errors.hpp"
#include "idla/stat_tests.hpp"
#include "idla/stats.hpp"

using namespace idla;

namespace {
constexpr double kPi = 3.14159265358979323846;

// independent bisection oracle for cosh(q/n) = 2 - cos(2 pi / n)
double qn_bisect(int n) {
    double target = 2.0 - std::cos(2.0 * kPi / n);
    double lo = 0.0, hi = 16.0 * n;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (std::cosh(mid / n) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}
} // namespace

TEST_CASE("q_N closed form agrees with bisection and its equation") {
    CHECK(stats::solve_qn(4) == doctest::Approx(qn_bisect(4)).epsilon(1e-10));
    CHECK(stats::solve_qn(4) == doctest::Approx(4.0 * std::log(2.0 + std::sqrt(3.0))).epsilon(1e-12));
    for (int n : {3, 4, 7, 16, 64, 256, 1024}) {
        double q = stats::solve_qn(n);
        CHECK(std::fabs(std::cosh(q / n) - (2.0 - std::cos(2.0 * kPi / n))) < 1e-12);
    }
}

TEST_CASE("q_N approaches 2 pi at the N^-2 rate") {
    std::vector<double> scaled;
    for (int n : {64, 128, 256, 512})
        scaled.push_back(std::fabs(stats::solve_qn(n) - 2.0 * kPi) * n * n);
    for (double v : scaled) {
        CHECK(v > 1.0);
        CHECK(v < 100.0);
    }
    // stable limit: the scaled gap converges (~20.67)
    CHECK(std::fabs(scaled.back() - scaled.front()) / scaled.back() < 0.01);
}

TEST_CASE("psi values and discrete harmonicity") {
    for (std::int64_t y : {-3, 0, 5}) CHECK(stats::psi(Site{0, y}, 8) == doctest::Approx(0.0));
    CHECK(stats::psi(Site{1, 0}, 4) == doctest::Approx(1.0).epsilon(1e-15));
    RngStream rng(3, 0, 0);
    double worst = 0.0;
    for (int n : {3, 8, 32, 64}) {
        for (int i = 0; i < 250; ++i) {
            auto x = static_cast<std::int32_t>(rng.next_below(static_cast<std::uint64_t>(n)));
            auto y = static_cast<std::int64_t>(rng.next_below(101)) - 50;
            double nb = stats::psi(Site{(x + 1) % n, y}, n) + stats::psi(Site{(x + n - 1) % n, y}, n) +
                        stats::psi(Site{x, y + 1}, n) + stats::psi(Site{x, y - 1}, n);
            double scale = std::exp(stats::solve_qn(n) * static_cast<double>(y) / n);
            worst = std::max(worst, std::fabs(nb / 4.0 - stats::psi(Site{x, y}, n)) / scale);
        }
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("imbalance: rectangles vanish, single sites evaluate in closed form") {
    for (int k : {0, 1, 5}) CHECK(stats::imbalance(Cluster(6, k)) == 0.0);
    Cluster a(4, 0);
    a.occupy(Site{1, 1});
    double q = qn_bisect(4);
    CHECK(stats::imbalance(a) == doctest::Approx(std::exp(q / 4.0) / 4.0).epsilon(1e-10));
    CHECK(stats::imbalance(a) == doctest::Approx((2.0 + std::sqrt(3.0)) / 4.0).epsilon(1e-12));
}

TEST_CASE("imbalance ignores complete rows exactly") {
    Cluster a(5, 0);
    a.occupy(Site{2, 1});
    double before = stats::imbalance(a);
    // add a full (floating) row at level 2
    for (int x = 0; x < 5; ++x) a.occupy(Site{x, 2});
    CHECK(stats::imbalance(a) == before);
}

TEST_CASE("single-chain imbalance is a martingale") {
    const int n = 16;
    const std::int64_t t = n * n;
    const int reps = 5000;
    std::vector<double> u_final;
    u_final.reserve(reps);
    for (int r = 0; r < reps; ++r) {
        ChainState chain = make_chain(n, 51, static_cast<std::uint64_t>(r));
        run_idla(chain, t);
        u_final.push_back(stats::imbalance(chain.cluster));
    }
    double mu = stat_tests::mean(u_final);
    double se = std::sqrt(stat_tests::variance(u_final) / reps);
    CHECK(std::fabs(mu) <= 3.0 * se);
}

TEST_CASE("test function parsing and validation") {
    auto phi = stats::TestFunction::parse("1:0,-0.5 -1:0,0.5");
    CHECK(phi.max_k() == 1);
    CHECK(phi.evaluate(0.25, 0.0) == doctest::Approx(1.0).epsilon(1e-12)); // sin(pi/2)
    CHECK(phi.evaluate(0.0, 3.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(stats::TestFunction::parse("1:0,-0.5"), DomainError);
    CHECK_THROWS_AS(stats::TestFunction::parse("1:0,-0.5 -1:0,0.4"), DomainError);
    CHECK_THROWS_AS(stats::TestFunction::parse(""), DomainError);
    CHECK_NOTHROW(stats::TestFunction::parse("0:2,0"));
    CHECK_THROWS_AS(stats::TestFunction::parse("0:2,1"), DomainError); // alpha_0 must be real
}

TEST_CASE("discrepancy: zero-mode mass conservation and empty difference") {
    Cluster c = run_idla_flat(8, 61, 53, 0);
    auto phi0 = stats::TestFunction::parse("0:1,0");
    CHECK(std::fabs(stats::discrepancy_functional(c, 61, phi0)) < 1e-9);

    Cluster rect(4, 2);
    for (const char* lit : {"0:1,0", "1:0,-0.5 -1:0,0.5", "2:0.25,0 -2:0.25,0"}) {
        auto phi = stats::TestFunction::parse(lit);
        CHECK(std::fabs(stats::discrepancy_functional(rect, 8, phi)) < 1e-12);
    }
    CHECK_THROWS_AS(stats::discrepancy_functional(rect, 9, phi0), CardinalityMismatchError);
}

namespace {
// brute-force grid integration of phi over the symmetric difference, the
// independent route for the per-cell closed forms
double discrepancy_brute(const Cluster& a, std::int64_t t, const stats::TestFunction& phi,
                         double shift) {
    const int n = a.width();
    double yline = static_cast<double>(t) / (static_cast<double>(n) * n);
    double acc = 0.0;
    const int grid = 400;
    for (std::int64_t row = std::min<std::int64_t>(a.base() + 1, t / n - 2); row <= a.height() + 2;
         ++row) {
        for (int x = 0; x < n; ++x) {
            bool occ = a.occupied(Site{x, row});
            double x_lo = static_cast<double>(x - 1) / n, y_lo = static_cast<double>(row - 1) / n;
            double h = 1.0 / (n * grid);
            for (int i = 0; i < grid; ++i)
                for (int j = 0; j < grid; ++j) {
                    double xx = x_lo + (i + 0.5) * h;
                    double yy = y_lo + (j + 0.5) * h;
                    double ind = (occ ? 1.0 : 0.0) - (yy <= yline ? 1.0 : 0.0);
                    if (ind != 0.0) acc += ind * phi.evaluate(xx, yy - shift) * h * h;
                }
        }
    }
    return n * acc;
}
} // namespace

TEST_CASE("discrepancy matches brute-force integration on a ragged cluster") {
    Cluster a(4, 0);
    for (int x : {0, 1, 2}) a.occupy(Site{x, 1});
    for (int x : {0, 1, 3}) a.occupy(Site{x, 2});
    a.occupy(Site{2, 3});
    a.occupy(Site{3, 3});
    REQUIRE(a.cardinality_above(0) == 8);
    for (const char* lit : {"1:0,-0.5 -1:0,0.5", "1:0.3,-0.25 -1:0.3,0.25 0:0.7,0"}) {
        auto phi = stats::TestFunction::parse(lit);
        for (double shift : {0.0, 0.5}) {
            double fast = stats::discrepancy_functional(a, 8, phi, shift);
            double brute = discrepancy_brute(a, 8, phi, shift);
            CHECK(std::fabs(fast - brute) < 1e-5);
        }
    }
}

TEST_CASE("discrepancy handles a line cutting through a cell row") {
    Cluster a(4, 0);
    for (int x : {0, 1, 2}) a.occupy(Site{x, 1});
    REQUIRE(a.cardinality_above(0) == 3); // T = 3 puts the line at 3/4 of row 1
    auto phi = stats::TestFunction::parse("1:0,-0.5 -1:0,0.5 0:0.2,0");
    double fast = stats::discrepancy_functional(a, 3, phi, 0.0);
    double brute = discrepancy_brute(a, 3, phi, 0.0);
    CHECK(std::fabs(fast - brute) < 1e-5);
}

TEST_CASE("tabulated profiles integrate through Simpson") {
    // alpha_1(y) = (0, -0.5) * ramp(y), a linear profile tabulated on knots
    std::string dir = "profile_test.tsv";
    {
        std::ofstream out(dir);
        out << "-10 0 0\n0 0 0\n1 1 0\n10 1 0\n";
    }
    auto phi = stats::TestFunction::parse("1:0,-0.5@" + dir + " -1:0,0.5@" + dir);
    Cluster a(4, 0);
    a.occupy(Site{1, 1});
    a.occupy(Site{2, 1});
    a.occupy(Site{3, 1});
    // brute via evaluate() on a grid
    double fast = stats::discrepancy_functional(a, 3, phi, 0.0);
    double brute = discrepancy_brute(a, 3, phi, 0.0);
    CHECK(std::fabs(fast - brute) < 5e-5);
    std::remove(dir.c_str());
}

TEST_CASE("gff variance closed forms") {
    auto sin_phi = stats::TestFunction::parse("1:0,-0.5 -1:0,0.5");
    CHECK(stats::gff_variance(sin_phi, 1.0, true) ==
          doctest::Approx(1.0 / (8.0 * kPi)).epsilon(1e-12));
    CHECK(stats::gff_variance(sin_phi, 1.0, false) ==
          doctest::Approx((1.0 - std::exp(-4.0 * kPi)) / (8.0 * kPi)).epsilon(1e-12));
    auto zero_only = stats::TestFunction::parse("0:3,0");
    CHECK(stats::gff_variance(zero_only, 1.0, false) == 0.0);

    // monotone in y0, additive over disjoint mode sets
    CHECK(stats::gff_variance(sin_phi, 0.5, false) < stats::gff_variance(sin_phi, 2.0, false));
    auto two_modes = stats::TestFunction::parse("1:0,-0.5 -1:0,0.5 2:0.25,0 -2:0.25,0");
    auto second = stats::TestFunction::parse("2:0.25,0 -2:0.25,0");
    CHECK(stats::gff_variance(two_modes, 1.0, true) ==
          doctest::Approx(stats::gff_variance(sin_phi, 1.0, true) +
                          stats::gff_variance(second, 1.0, true)).epsilon(1e-12));
}

TEST_CASE("fluctuation reports") {
    Cluster rect(4, 3);
    auto r = stats::fluctuation_check(rect, 12);
    CHECK(r.max_overshoot == 0);
    CHECK(r.max_undershoot == 0);

    Cluster column(5, 0);
    for (std::int64_t y = 1; y <= 5; ++y) column.occupy(Site{0, y});
    auto c = stats::fluctuation_check(column, 5);
    CHECK(c.max_undershoot == 1);
    CHECK(c.max_overshoot == 4);

    auto with_band = stats::fluctuation_check(column, 5, 3.0);
    CHECK(with_band.inner_ok); // 1 <= 3 ln 5
    CHECK(with_band.outer_ok); // 4 <= 3 ln 5
    auto tight = stats::fluctuation_check(column, 5, 0.5);
    CHECK(!tight.inner_ok);
    CHECK(!tight.outer_ok);
}

TEST_CASE("early/late detection on the ideal staircase") {
    const int n = 6;
    std::map<std::int64_t, Cluster> snaps;
    for (std::int64_t t = 0; t <= 10 * n; t += n) snaps.emplace(t, Cluster(n, t / n));
    for (std::int64_t m : {1, 2, 4}) {
        auto rep = stats::detect_early_late(snaps, m, m);
        CHECK(rep.early.empty());
        CHECK(rep.late.empty());
    }
}

TEST_CASE("a seeded bump is early by construction") {
    const int n = 5;
    const std::int64_t m = 2;
    std::map<std::int64_t, Cluster> snaps;
    for (std::int64_t t = 0; t <= 6 * n; t += n) {
        Cluster c(n, t / n);
        Site bump{0, m + 1};
        if (!c.occupied(bump)) {
            // keep the column connected below the bump
            for (std::int64_t y = c.base() + 1; y <= m + 1; ++y) c.occupy(Site{0, y});
        }
        snaps.emplace(t, c);
    }
    auto rep = stats::detect_early_late(snaps, m, 1);
    bool found = false;
    for (const Site& s : rep.early) found = found || (s == Site{0, m + 1});
    CHECK(found);
}

TEST_CASE("missing snapshots are reported") {
    const int n = 4;
    std::map<std::int64_t, Cluster> snaps;
    snaps.emplace(0, Cluster(n, 0));
    snaps.emplace(3 * n, Cluster(n, 3)); // gap at t = n, 2n
    CHECK_THROWS_AS(stats::detect_early_late(snaps, 1, 1), MissingSnapshotError);
}

TEST_CASE("a-priori moment bound") {
    CHECK_THROWS_AS(stats::apriori_moment_bound(2, 10, 2, 8), DomainError);
    CHECK(stats::apriori_moment_bound(3, 10, 2, 8) == doctest::Approx(10.0).epsilon(1e-12));
    // log-space evaluation survives huge arguments
    double b = stats::apriori_moment_bound(100, 1000000, 0, 64);
    CHECK(std::isfinite(b));

    // Monte Carlo domination on the small grid
    const int n = 8;
    const std::int64_t t = 64;
    const int reps = 2000;
    std::vector<double> level_count(5, 0.0);
    for (int r = 0; r < reps; ++r) {
        ChainState chain = make_chain(n, 71, static_cast<std::uint64_t>(r));
        run_idla(chain, t);
        for (std::int64_t k = 2; k <= 4; ++k) {
            std::int64_t c = 0;
            for (int x = 0; x < n; ++x)
                if (chain.cluster.occupied(Site{x, k})) ++c;
            level_count[static_cast<std::size_t>(k)] += static_cast<double>(c);
        }
    }
    for (std::int64_t k = 2; k <= 4; ++k)
        CHECK(level_count[static_cast<std::size_t>(k)] / reps <=
              stats::apriori_moment_bound(k, t, 0, n));
}

TEST_CASE("excess-height constants") {
    auto c = stats::excess_constants(8, 0.5);
    CHECK(c.n_star == doctest::Approx(332.7106466687737).epsilon(1e-12));
    CHECK(c.e_star == 14760); // ceil(2 n* N ln 16), pinned on first evaluation
    CHECK(c.delta == 2 * 64 * 14760 + 1);
    CHECK_THROWS_AS(stats::excess_constants(8, 0.0), DomainError);
    CHECK_THROWS_AS(stats::excess_constants(8, 1.0), DomainError);
    for (int n : {3, 4, 8, 32, 128, 512}) {
        auto cc = stats::excess_constants(n, 0.5);
        double nlogn = static_cast<double>(n) * std::log(static_cast<double>(n));
        CHECK(static_cast<double>(cc.e_star) > 40.0 * nlogn * nlogn);
        CHECK(cc.delta > 2 * static_cast<std::int64_t>(n) * n * cc.e_star);
    }
}

TEST_CASE("reflected walk: deterministic first step and Wald excursion length") {
    RngStream rng(81, 0, 0);
    const int n = 8;
    const double eta = 0.5;
    // barrier below the first landing point traps the walk in one step
    auto one = stats::simulate_reflected_walk(n, eta, (n - 1.0) / n, 10, rng, true);
    CHECK(one.hit_upper_first);
    CHECK(one.steps == 1);

    CHECK(stats::reflected_walk_drift(n, eta) == doctest::Approx(-eta / n).epsilon(1e-15));

    // E[excursion length] = 1 + (N-1)/eta by optional stopping on X + eta t / N
    const int reps = 100000;
    double total = 0.0;
    for (int r = 0; r < reps; ++r) {
        auto exc = stats::simulate_reflected_walk(n, eta, 1e18, 1 << 26, rng, true);
        total += static_cast<double>(exc.steps);
    }
    double expect = 1.0 + (n - 1.0) / eta;
    CHECK(total / reps == doctest::Approx(expect).epsilon(0.02));
}

TEST_CASE("reflected walk barrier-hit probability decreases with height") {
    const int n = 8;
    const double eta = 0.5;
    RngStream rng(83, 0, 0);
    std::vector<double> hit_freq;
    for (double barrier : {2.0, 3.0, 5.0}) {
        int hits = 0;
        const int reps = 100000;
        for (int r = 0; r < reps; ++r) {
            auto exc = stats::simulate_reflected_walk(n, eta, barrier, 1 << 26, rng, true);
            if (exc.hit_upper_first) ++hits;
        }
        hit_freq.push_back(static_cast<double>(hits) / reps);
    }
    CHECK(hit_freq[0] > hit_freq[1]);
    CHECK(hit_freq[1] > hit_freq[2]);
}

TEST_CASE("early/late points are rare on real flat-start trajectories") {
    // m = l = ceil(4 ln N) at N = 32, t = N^2, snapshots every N steps
    const int n = 32;
    const std::int64_t t_eval = n * n;
    const auto m = static_cast<std::int64_t>(std::ceil(4.0 * std::log(static_cast<double>(n))));
    const std::int64_t t_run = t_eval + m * n; // keep the late verdicts in range
    const int reps = 400;
    int flagged = 0;
    for (int r = 0; r < reps; ++r) {
        std::map<std::int64_t, Cluster> snaps;
        ChainState chain = make_chain(n, 91, static_cast<std::uint64_t>(r));
        snaps.emplace(0, chain.cluster);
        for (std::int64_t t = 1; t <= t_run; ++t) {
            add_particle(chain);
            if (t % n == 0) snaps.emplace(t, chain.cluster);
        }
        auto rep = stats::detect_early_late(snaps, m, m, t_eval);
        if (!rep.early.empty() || !rep.late.empty()) ++flagged;
    }
    CHECK(static_cast<double>(flagged) / reps <= 0.05);
}

TEST_CASE("polynomially long runs stay inside the linear-in-time envelope") {
    // the m = 3 containment event: A(T) inside R_{h0 + 3T/N} on every run
    const int n = 16;
    const auto t_final = static_cast<std::int64_t>(
        std::ceil(static_cast<double>(n) * n * std::log(static_cast<double>(n))));
    const int reps = 1000;
    int escapes = 0;
    for (int r = 0; r < reps; ++r) {
        ChainState chain = make_chain(n, 93, static_cast<std::uint64_t>(r));
        run_idla(chain, t_final);
        if (chain.cluster.height() > 3 * t_final / n) ++escapes;
    }
    CHECK(escapes == 0);
}
