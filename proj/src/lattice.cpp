#include "idla/lattice.hpp"

#include <bit>
#include <sstream>

namespace idla {

Cluster::Cluster(int n, std::int64_t base)
    : n_(n), words_per_row_((n + 63) / 64), base_(base) {
    if (n < 3) throw InvalidWidthError("cylinder width must be at least 3, got " + std::to_string(n));
}

bool Cluster::row_full(std::int64_t r) const {
    int rem = n_ & 63;
    for (int w = 0; w < words_per_row_; ++w) {
        std::uint64_t expect = (w == words_per_row_ - 1 && rem != 0)
                                   ? ((std::uint64_t{1} << rem) - 1)
                                   : ~std::uint64_t{0};
        if (word(r, w) != expect) return false;
    }
    return true;
}

bool Cluster::row_empty(std::int64_t r) const {
    for (int w = 0; w < words_per_row_; ++w)
        if (word(r, w) != 0) return false;
    return true;
}

std::int64_t Cluster::row_popcount(std::int64_t r) const {
    std::int64_t c = 0;
    for (int w = 0; w < words_per_row_; ++w) c += std::popcount(word(r, w));
    return c;
}

void Cluster::canonicalize() {
    std::int64_t drop = 0;
    while (drop < rows_ && row_full(drop)) ++drop;
    if (drop > 0) {
        bits_.erase(bits_.begin(), bits_.begin() + drop * words_per_row_);
        base_ += drop;
        rows_ -= drop;
    }
    while (rows_ > 0 && row_empty(rows_ - 1)) {
        bits_.resize(bits_.size() - words_per_row_);
        --rows_;
    }
}

void Cluster::occupy(Site s) {
    if (s.x < 0 || s.x >= n_) throw std::invalid_argument("site x out of range");
    if (occupied(s)) throw OccupiedSiteError("site already occupied");
    if (s.y > base_ + rows_ + 1)
        throw std::invalid_argument("occupy would leave a gap of absent rows");
    if (s.y == base_ + rows_ + 1) {
        bits_.resize(bits_.size() + words_per_row_, 0);
        ++rows_;
    }
    std::int64_t r = s.y - base_ - 1;
    word(r, s.x >> 6) |= std::uint64_t{1} << (s.x & 63);
    if (r == 0 && row_full(0)) canonicalize();
}

std::int64_t Cluster::stored_count() const {
    std::int64_t c = 0;
    for (const auto& w : bits_) c += std::popcount(w);
    return c;
}

std::int64_t Cluster::cardinality_above(std::int64_t level) const {
    if (level >= base_) {
        std::int64_t c = 0;
        for (std::int64_t r = level - base_; r < rows_; ++r) c += row_popcount(r);
        return c;
    }
    return (base_ - level) * n_ + stored_count();
}

Fraction Cluster::excess_height() const {
    if (base_ < 0) throw DomainError("excess height needs level-0 convention (base >= 0)");
    return Fraction{height() * n_ - cardinality_above(0), n_};
}

std::int64_t Cluster::max_filled_level() const {
    if (base_ < 0) throw DomainError("max_filled_level needs base >= 0");
    return base_; // canonical: row base+1, if present, is not full
}

std::int64_t Cluster::downshift() {
    std::int64_t k = max_filled_level();
    base_ = 0;
    return k;
}

std::string Cluster::serialize() const {
    std::ostringstream out;
    out << "IDLA v1 N=" << n_ << " base=" << base_ << " rows=" << rows_ << '\n';
    for (std::int64_t r = 0; r < rows_; ++r) {
        for (int x = 0; x < n_; ++x)
            out << (((word(r, x >> 6) >> (x & 63)) & 1u) ? '1' : '0');
        out << '\n';
    }
    return out.str();
}

Cluster Cluster::parse(const std::string& text) {
    std::istringstream in(text);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "IDLA" || version != "v1") throw std::invalid_argument("bad snapshot header");
    auto field = [&](const std::string& name) {
        std::string tok;
        in >> tok;
        if (tok.rfind(name + "=", 0) != 0) throw std::invalid_argument("bad snapshot field " + name);
        return std::stoll(tok.substr(name.size() + 1));
    };
    auto n = static_cast<int>(field("N"));
    std::int64_t base = field("base");
    std::int64_t rows = field("rows");
    Cluster c(n, base);
    std::string line;
    std::getline(in, line);
    for (std::int64_t r = 0; r < rows; ++r) {
        if (!std::getline(in, line) || static_cast<int>(line.size()) != n)
            throw std::invalid_argument("bad snapshot row");
        for (int x = 0; x < n; ++x) {
            if (line[x] == '1')
                c.occupy(Site{x, base + 1 + r});
            else if (line[x] != '0')
                throw std::invalid_argument("bad snapshot character");
        }
    }
    // parse-then-serialize must be bit-exact, so reject non-canonical input
    if (c.base() != base || c.row_count() != rows)
        throw std::invalid_argument("snapshot not in canonical form");
    return c;
}

Cluster occupied_with(Cluster a, Site s) {
    a.occupy(s);
    return a;
}

Cluster downshifted(Cluster a) {
    a.downshift();
    return a;
}

} // namespace idla
