#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "idla/errors.hpp"

namespace idla {

// A vertex of the cylinder Z_N x Z. x is the horizontal coordinate mod N,
// y the signed vertical level.
struct Site {
    std::int32_t x = 0;
    std::int64_t y = 0;

    friend bool operator==(const Site&, const Site&) = default;
    friend auto operator<=>(const Site&, const Site&) = default;
};

// Exact rational with a fixed positive denominator, used for the excess
// height h(A) - |A|/N so drift increments like 1 - 1/N stay exact.
struct Fraction {
    std::int64_t num = 0;
    std::int64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Fraction&, const Fraction&) = default;
};

// A cluster of the IDLA state space: the full half-cylinder up to `base`
// plus explicit occupancy rows for levels base+1 .. base+rows. Canonical
// form keeps the first stored row not full (full bottom rows are absorbed
// into base) and the top stored row nonempty.
//
// `base` may go negative for shift bookkeeping; all paper-facing
// functionals assume the level-0 convention (base >= 0).
class Cluster {
  public:
    explicit Cluster(int n, std::int64_t base = 0);

    static Cluster rectangle(int n, std::int64_t k) { return Cluster(n, k); }

    int width() const { return n_; }
    std::int64_t base() const { return base_; }
    std::int64_t row_count() const { return static_cast<std::int64_t>(rows_) ; }

    bool occupied(Site s) const {
        if (s.y <= base_) return true;
        std::int64_t r = s.y - base_ - 1;
        if (r >= rows_) return false;
        return (word(r, s.x >> 6) >> (s.x & 63)) & 1u;
    }

    // Adds one site. Throws OccupiedSiteError if already present, and
    // rejects whole-row gaps (y > height+1).
    void occupy(Site s);

    std::int64_t height() const { return base_ + rows_; }

    // Number of occupied sites strictly above `level`; level = 0 gives the
    // paper's |A|.
    std::int64_t cardinality_above(std::int64_t level) const;

    // h(A) - |A|/N as an exact rational; requires base >= 0.
    Fraction excess_height() const;

    // k_A = max{k >= 0 : R_k subset of A}; equals base for canonical
    // clusters with base >= 0.
    std::int64_t max_filled_level() const;

    // Translates the cluster down by k_A; returns the shift consumed.
    std::int64_t downshift();

    // Sum of popcounts of the stored rows (sites above base).
    std::int64_t stored_count() const;

    std::int64_t row_popcount(std::int64_t r) const;

    // Iterates occupied sites above base, by level ascending then x
    // ascending.
    template <typename F> void for_each_stored(F&& f) const {
        for (std::int64_t r = 0; r < rows_; ++r) {
            for (int w = 0; w < words_per_row_; ++w) {
                std::uint64_t bits = word(r, w);
                while (bits) {
                    int b = __builtin_ctzll(bits);
                    bits &= bits - 1;
                    f(Site{static_cast<std::int32_t>(w * 64 + b), base_ + 1 + r});
                }
            }
        }
    }

    // "IDLA v1" snapshot text format; round-trips bit-exactly.
    std::string serialize() const;
    static Cluster parse(const std::string& text);

    friend bool operator==(const Cluster& a, const Cluster& b) {
        return a.n_ == b.n_ && a.base_ == b.base_ && a.bits_ == b.bits_;
    }
    friend bool operator<(const Cluster& a, const Cluster& b) {
        if (a.n_ != b.n_) return a.n_ < b.n_;
        if (a.base_ != b.base_) return a.base_ < b.base_;
        return a.bits_ < b.bits_;
    }

  private:
    std::uint64_t word(std::int64_t r, int w) const {
        return bits_[static_cast<std::size_t>(r) * words_per_row_ + w];
    }
    std::uint64_t& word(std::int64_t r, int w) {
        return bits_[static_cast<std::size_t>(r) * words_per_row_ + w];
    }
    bool row_full(std::int64_t r) const;
    bool row_empty(std::int64_t r) const;
    void canonicalize();

    int n_;
    int words_per_row_;
    std::int64_t base_;
    std::int64_t rows_ = 0;
    std::vector<std::uint64_t> bits_; // rows_ * words_per_row_ words
};

// Value-style occupy, handy for bindings and tests.
Cluster occupied_with(Cluster a, Site s);

// Value-style downshift S(A).
Cluster downshifted(Cluster a);

} // namespace idla
