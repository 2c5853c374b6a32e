#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "idla/lattice.hpp"
#include "idla/rng.hpp"

namespace idla::stats {

// Unique positive root of cosh(q/N) = 2 - cos(2 pi / N), in closed form.
double solve_qn(int n);

// psi(x, y) = e^{q_N y / N} sin(2 pi x / N), discrete harmonic on the cylinder.
double psi(Site s, int n);

// Horizontal imbalance u_A = (1/N) sum_{n in A} psi(n), evaluated as if
// `reference_level` were level 0. Full rows cancel exactly, so only the
// stored partial rows above the filled level enter the sum.
double imbalance(const Cluster& a, std::int64_t reference_level = 0);

// A finite set of Fourier modes with coefficient profiles: phi(x, y) =
// sum_{|k|<=K} alpha_k(y) e^{2 pi i k x}, with alpha_{-k} = conj(alpha_k).
class TestFunction {
  public:
    struct Profile {
        std::complex<double> constant{0.0, 0.0};
        // optional tabulated profile: (y, value) knots, linearly interpolated
        std::vector<std::pair<double, std::complex<double>>> table;

        bool tabulated() const { return !table.empty(); }
        std::complex<double> eval(double y) const;
    };

    void add_mode(int k, Profile profile);
    // Literal syntax: space-separated `k:re,im` or `k:re,im@file` tokens.
    static TestFunction parse(const std::string& literal);

    std::complex<double> alpha(int k, double y) const;
    const std::map<int, Profile>& modes() const { return modes_; }
    int max_k() const;
    // Throws if any mode lacks its conjugate partner.
    void validate() const;

    double evaluate(double x, double y) const;

  private:
    std::map<int, Profile> modes_;
};

// D_{N,T}(phi): the rescaled occupied-minus-rectangle indicator integrated
// against phi(x, y - vertical_shift), with per-cell closed forms in x and
// analytic or Simpson y-integrals.
double discrepancy_functional(const Cluster& a, std::int64_t t, const TestFunction& phi,
                              double vertical_shift = 0.0);

// Limit variance of D_{N,T}(phi): the flat-start form at height y0, or the
// stationary form.
double gff_variance(const TestFunction& phi, double y0, bool stationary);

struct FluctuationReport {
    std::int64_t t = 0;
    std::int64_t max_overshoot = 0;  // levels of h(A) beyond t/N
    std::int64_t max_undershoot = 0; // levels the filled rectangle falls short of t/N
    bool inner_ok = true;
    bool outer_ok = true;
};

// Distance of A(t) from the ideal rectangle R_{t/N}; the ok flags compare
// against a caller-supplied threshold b * ln N (skipped when b <= 0).
FluctuationReport fluctuation_check(const Cluster& a, std::int64_t t, double b_threshold = 0.0);

struct EarlyLateReport {
    std::vector<Site> early;
    std::vector<Site> late;
    std::int64_t t_final = 0;
};

// Scans indexed checkpoints for m-early sites ((x,y) in A((y-m)N)) among the
// cluster at t_eval and l-late sites ((x,y) not in A((y+l)N)) among
// R_{t_eval/N}. t_eval defaults to the last checkpoint; later checkpoints
// supply the future verdicts the late scan needs.
EarlyLateReport detect_early_late(const std::map<std::int64_t, Cluster>& snapshots,
                                  std::int64_t m, std::int64_t l, std::int64_t t_eval = -1);

// mu_k(t) <= (1/N)^{k-h0-1} t^{k-h0} / (k-h0)!, evaluated in log space.
double apriori_moment_bound(std::int64_t k, std::int64_t t, std::int64_t h0, int n);

struct ExcessConstants {
    double n_star = 0.0;      // 20 N ln N
    std::int64_t e_star = 0;  // ceil(2 n* N ln(N / (1 - eta)))
    std::int64_t delta = 0;   // 2 N^2 E* + 1
};

ExcessConstants excess_constants(int n, double eta);

struct ReflectedWalkResult {
    bool hit_upper_first = false;
    std::int64_t steps = 0;
    std::int64_t zero_visits = 0;
};

// The auxiliary walk on (1/N) Z_{>=0} with a reflecting barrier at zero:
// from 0 it jumps to 1 - 1/N deterministically; above 0 it moves up by
// 1 - 1/N with probability (1-eta)/N and down by 1/N otherwise. Runs until
// hitting [barrier, inf), returning to 0 (when stop_on_zero), or max_steps.
ReflectedWalkResult simulate_reflected_walk(int n, double eta, double barrier,
                                            std::int64_t max_steps, RngStream& rng,
                                            bool stop_on_zero);

// Exact one-step drift of the reflected walk away from zero (equals -eta/N).
double reflected_walk_drift(int n, double eta);

} // namespace idla::stats
