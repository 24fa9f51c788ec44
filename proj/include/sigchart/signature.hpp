#pragma once

// Truncated signatures of piecewise-linear paths.
//
// A d-dimensional polyline is mapped to the truncated tensor algebra by
// taking the exponential of each segment displacement and multiplying the
// exponentials together (Chen's identity). The logarithm of that tensor
// lives in the free Lie algebra and is reported in coordinates indexed by
// Lyndon words, which gives a minimal, non-redundant feature set.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "sigchart/common.hpp"

namespace sigchart {

// A word over the alphabet {1..dim}.
using Word = std::vector<int>;

namespace detail {

// w is Lyndon iff it is strictly smaller than each of its proper suffixes.
inline bool is_lyndon(const Word& w) {
    for (std::size_t i = 1; i < w.size(); ++i) {
        if (!std::lexicographical_compare(w.begin(), w.end(), w.begin() + i, w.end()))
            return false;
    }
    return true;
}

inline std::size_t word_offset(const Word& w, int dim) {
    std::size_t off = 0;
    for (int letter : w)
        off = off * static_cast<std::size_t>(dim) + static_cast<std::size_t>(letter - 1);
    return off;
}

inline std::size_t pow_size(int dim, int k) {
    std::size_t n = 1;
    for (int i = 0; i < k; ++i)
        n *= static_cast<std::size_t>(dim);
    return n;
}

} // namespace detail

/// All Lyndon words over {1..dim} of length <= level, sorted by (length, lex).
inline std::vector<Word> lyndon_words(int dim, int level) {
    require(dim >= 1, "lyndon_words: dim must be >= 1");
    require(level >= 1, "lyndon_words: level must be >= 1");
    // Duval's generator
    std::vector<Word> out;
    Word w{0};
    while (!w.empty()) {
        ++w.back();
        out.push_back(w);
        std::size_t m = w.size();
        while (w.size() < static_cast<std::size_t>(level))
            w.push_back(w[w.size() - m]);
        while (!w.empty() && w.back() == dim)
            w.pop_back();
    }
    std::sort(out.begin(), out.end(), [](const Word& a, const Word& b) {
        if (a.size() != b.size())
            return a.size() < b.size();
        return a < b;
    });
    return out;
}

// Levels 1..K of a signature; the level-0 coefficient is identically 1 and
// never stored. tensors[k-1] holds the d^k coefficients of level k in
// lexicographic multi-index order.
struct TruncatedSignature {
    int dim = 0;
    int level = 0;
    std::vector<std::vector<double>> tensors;

    static TruncatedSignature zero(int dim, int level) {
        TruncatedSignature s;
        s.dim = dim;
        s.level = level;
        s.tensors.resize(static_cast<std::size_t>(level));
        for (int k = 1; k <= level; ++k)
            s.tensors[static_cast<std::size_t>(k - 1)].assign(detail::pow_size(dim, k), 0.0);
        return s;
    }

    double coeff(const Word& w) const {
        require(!w.empty() && w.size() <= static_cast<std::size_t>(level), "coeff: bad word length");
        return tensors[w.size() - 1][detail::word_offset(w, dim)];
    }
};

class LyndonBasis; // fwd

// Log-signature coordinates in the Lyndon basis, ordered as lyndon_words().
struct LogSignature {
    int dim = 0;
    int level = 0;
    std::vector<double> coords;
    std::shared_ptr<const std::vector<Word>> basis;

    double coord(const Word& w) const {
        for (std::size_t i = 0; i < basis->size(); ++i)
            if ((*basis)[i] == w)
                return coords[i];
        throw contract_error("LogSignature::coord: word not in basis");
    }
};

// Precomputed change-of-basis data for one (dim, level) pair: the bracket
// expansion of every Lyndon word in the tensor algebra, and the per-level
// unitriangular matrix used to project a Lie tensor onto Lyndon coordinates.
class LyndonBasis {
public:
    struct Term {
        std::size_t offset; // within its level
        double coeff;
    };

    LyndonBasis(int dim, int level) : dim_(dim), level_(level) {
        words_ = std::make_shared<const std::vector<Word>>(lyndon_words(dim, level));
        const auto& words = *words_;
        expansions_.resize(words.size());
        std::map<Word, std::size_t> index;
        for (std::size_t i = 0; i < words.size(); ++i)
            index[words[i]] = i;

        // expansion of w: single letter, or [P_u, P_v] with w = uv the
        // standard factorization (v = longest proper Lyndon suffix)
        std::vector<std::map<Word, double>> sparse(words.size());
        for (std::size_t i = 0; i < words.size(); ++i) {
            const Word& w = words[i];
            if (w.size() == 1) {
                sparse[i][w] = 1.0;
                continue;
            }
            std::size_t split = 1;
            for (; split < w.size(); ++split) {
                Word suffix(w.begin() + static_cast<std::ptrdiff_t>(split), w.end());
                if (detail::is_lyndon(suffix))
                    break;
            }
            Word u(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(split));
            Word v(w.begin() + static_cast<std::ptrdiff_t>(split), w.end());
            const auto& pu = sparse[index.at(u)];
            const auto& pv = sparse[index.at(v)];
            auto& dst = sparse[i];
            for (const auto& [wu, cu] : pu) {
                for (const auto& [wv, cv] : pv) {
                    Word uv = wu;
                    uv.insert(uv.end(), wv.begin(), wv.end());
                    Word vu = wv;
                    vu.insert(vu.end(), wu.begin(), wu.end());
                    dst[uv] += cu * cv;
                    dst[vu] -= cu * cv;
                }
            }
        }
        for (std::size_t i = 0; i < words.size(); ++i) {
            for (const auto& [w, c] : sparse[i])
                if (c != 0.0)
                    expansions_[i].push_back({detail::word_offset(w, dim), c});
        }

        // per level: word indices in lex order plus the triangular matrix
        // tri[i][j] = coefficient of word j in the expansion of word i
        by_level_.resize(static_cast<std::size_t>(level) + 1);
        for (std::size_t i = 0; i < words.size(); ++i)
            by_level_[words[i].size()].push_back(i);
        tri_.resize(static_cast<std::size_t>(level) + 1);
        for (int k = 1; k <= level; ++k) {
            const auto& ids = by_level_[static_cast<std::size_t>(k)];
            auto& tri = tri_[static_cast<std::size_t>(k)];
            tri.assign(ids.size(), std::vector<double>(ids.size(), 0.0));
            for (std::size_t a = 0; a < ids.size(); ++a) {
                const auto& exp = sparse[ids[a]];
                for (std::size_t b = 0; b < ids.size(); ++b) {
                    auto it = exp.find(words[ids[b]]);
                    if (it != exp.end())
                        tri[a][b] = it->second;
                }
            }
        }
    }

    int dim() const { return dim_; }
    int level() const { return level_; }
    const std::vector<Word>& words() const { return *words_; }
    std::shared_ptr<const std::vector<Word>> words_ptr() const { return words_; }
    const std::vector<Term>& expansion(std::size_t word_index) const { return expansions_[word_index]; }
    const std::vector<std::size_t>& level_word_indices(int k) const { return by_level_[static_cast<std::size_t>(k)]; }
    double tri(int k, std::size_t a, std::size_t b) const { return tri_[static_cast<std::size_t>(k)][a][b]; }

private:
    int dim_;
    int level_;
    std::shared_ptr<const std::vector<Word>> words_;
    std::vector<std::vector<Term>> expansions_;
    std::vector<std::vector<std::size_t>> by_level_;
    std::vector<std::vector<std::vector<double>>> tri_;
};

/// Shared (dim, level) basis cache; safe for concurrent first use.
inline const LyndonBasis& lyndon_basis(int dim, int level) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::unique_ptr<const LyndonBasis>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(dim, level);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, std::make_unique<const LyndonBasis>(dim, level)).first;
    return *it->second;
}

// Ordered point list of a d-dimensional polyline.
struct Path {
    std::vector<std::vector<double>> points;
    int dim = 0;

    explicit Path(std::vector<std::vector<double>> pts) : points(std::move(pts)) {
        require(points.size() >= 2, "Path: need at least 2 points");
        dim = static_cast<int>(points.front().size());
        require(dim >= 1, "Path: dim must be >= 1");
        for (const auto& p : points) {
            require(static_cast<int>(p.size()) == dim, "Path: inconsistent point dimension");
            for (double x : p)
                require(std::isfinite(x), "Path: non-finite coordinate");
        }
    }
};

/// Signature of one linear segment: level k is displacement^(tensor k) / k!.
inline TruncatedSignature segment_signature(const std::vector<double>& displacement, int level) {
    const int dim = static_cast<int>(displacement.size());
    require(dim >= 1, "segment_signature: empty displacement");
    require(level >= 1, "segment_signature: level must be >= 1");
    for (double x : displacement)
        require(std::isfinite(x), "segment_signature: non-finite displacement");

    TruncatedSignature s = TruncatedSignature::zero(dim, level);
    s.tensors[0] = displacement;
    for (int k = 2; k <= level; ++k) {
        const auto& prev = s.tensors[static_cast<std::size_t>(k - 2)];
        auto& cur = s.tensors[static_cast<std::size_t>(k - 1)];
        std::size_t i = 0;
        const double inv_k = 1.0 / k;
        for (double p : prev)
            for (double x : displacement)
                cur[i++] = p * x * inv_k;
    }
    return s;
}

/// Chen product: signature of the concatenation of the underlying paths.
inline TruncatedSignature chen_concat(const TruncatedSignature& a, const TruncatedSignature& b) {
    require(a.dim == b.dim, "chen_concat: dimension mismatch");
    require(a.level == b.level, "chen_concat: level mismatch");
    TruncatedSignature out = TruncatedSignature::zero(a.dim, a.level);
    for (int k = 1; k <= a.level; ++k) {
        auto& dst = out.tensors[static_cast<std::size_t>(k - 1)];
        const auto& ak = a.tensors[static_cast<std::size_t>(k - 1)];
        const auto& bk = b.tensors[static_cast<std::size_t>(k - 1)];
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] = ak[i] + bk[i];
        for (int j = 1; j < k; ++j) {
            const auto& aj = a.tensors[static_cast<std::size_t>(j - 1)];
            const auto& bj = b.tensors[static_cast<std::size_t>(k - j - 1)];
            std::size_t i = 0;
            for (double av : aj)
                for (double bv : bj)
                    dst[i++] += av * bv;
        }
    }
    return out;
}

/// Left fold of chen_concat over the segment signatures of a polyline.
inline TruncatedSignature path_signature(const Path& path, int level) {
    require(level >= 1, "path_signature: level must be >= 1");
    std::vector<double> delta(static_cast<std::size_t>(path.dim));
    TruncatedSignature acc;
    bool first = true;
    for (std::size_t i = 1; i < path.points.size(); ++i) {
        for (int j = 0; j < path.dim; ++j)
            delta[static_cast<std::size_t>(j)] =
                path.points[i][static_cast<std::size_t>(j)] - path.points[i - 1][static_cast<std::size_t>(j)];
        TruncatedSignature seg = segment_signature(delta, level);
        acc = first ? std::move(seg) : chen_concat(acc, seg);
        first = false;
    }
    return acc;
}

namespace detail {

// product of two tensors that are zero at level 0
inline TruncatedSignature mul_zero_level0(const TruncatedSignature& a, const TruncatedSignature& b) {
    TruncatedSignature out = TruncatedSignature::zero(a.dim, a.level);
    for (int k = 2; k <= a.level; ++k) {
        auto& dst = out.tensors[static_cast<std::size_t>(k - 1)];
        for (int j = 1; j < k; ++j) {
            const auto& aj = a.tensors[static_cast<std::size_t>(j - 1)];
            const auto& bj = b.tensors[static_cast<std::size_t>(k - j - 1)];
            std::size_t i = 0;
            for (double av : aj)
                for (double bv : bj)
                    dst[i++] += av * bv;
        }
    }
    return out;
}

// log(S) = sum_{m>=1} (-1)^(m-1)/m (S-1)^m; terminates at m = level because
// S-1 has no level-0 part. Result is a Lie tensor stored with level-0 = 0.
inline TruncatedSignature log_tensor(const TruncatedSignature& sig) {
    TruncatedSignature x = sig; // S - 1: identical on levels >= 1
    TruncatedSignature acc = x;
    TruncatedSignature power = x;
    for (int m = 2; m <= sig.level; ++m) {
        power = mul_zero_level0(power, x);
        const double c = ((m - 1) % 2 == 0 ? 1.0 : -1.0) / m;
        for (int k = 1; k <= sig.level; ++k) {
            auto& dst = acc.tensors[static_cast<std::size_t>(k - 1)];
            const auto& src = power.tensors[static_cast<std::size_t>(k - 1)];
            for (std::size_t i = 0; i < dst.size(); ++i)
                dst[i] += c * src[i];
        }
    }
    return acc;
}

} // namespace detail

/// Log of a truncated signature, projected onto Lyndon coordinates.
inline LogSignature log_signature(const TruncatedSignature& sig) {
    const LyndonBasis& basis = lyndon_basis(sig.dim, sig.level);
    TruncatedSignature lt = detail::log_tensor(sig);

    LogSignature out;
    out.dim = sig.dim;
    out.level = sig.level;
    out.basis = basis.words_ptr();
    out.coords.assign(basis.words().size(), 0.0);

    // Within each level the expansion matrix is unitriangular in lex
    // order, so a forward substitution recovers the coordinates.
    for (int k = 1; k <= sig.level; ++k) {
        const auto& ids = basis.level_word_indices(k);
        const auto& tensor = lt.tensors[static_cast<std::size_t>(k - 1)];
        for (std::size_t j = 0; j < ids.size(); ++j) {
            double y = tensor[detail::word_offset(basis.words()[ids[j]], sig.dim)];
            for (std::size_t i = 0; i < j; ++i)
                y -= out.coords[ids[i]] * basis.tri(k, i, j);
            out.coords[ids[j]] = y;
        }
    }
    return out;
}

/// Inverse of log_signature: expand Lyndon coordinates into a Lie tensor
/// and exponentiate. exp(log_signature(S)) reproduces S.
inline TruncatedSignature exp_log_signature(const LogSignature& ls) {
    const LyndonBasis& basis = lyndon_basis(ls.dim, ls.level);
    require(ls.coords.size() == basis.words().size(), "exp_log_signature: coordinate count mismatch");

    TruncatedSignature lie = TruncatedSignature::zero(ls.dim, ls.level);
    for (std::size_t i = 0; i < basis.words().size(); ++i) {
        const int k = static_cast<int>(basis.words()[i].size());
        auto& dst = lie.tensors[static_cast<std::size_t>(k - 1)];
        for (const auto& term : basis.expansion(i))
            dst[term.offset] += ls.coords[i] * term.coeff;
    }

    // exp(x) = 1 + sum_{m>=1} x^m / m!
    TruncatedSignature out = lie;
    TruncatedSignature power = lie;
    double factorial = 1.0;
    for (int m = 2; m <= ls.level; ++m) {
        power = detail::mul_zero_level0(power, lie);
        factorial *= m;
        for (int k = 1; k <= ls.level; ++k) {
            auto& dst = out.tensors[static_cast<std::size_t>(k - 1)];
            const auto& src = power.tensors[static_cast<std::size_t>(k - 1)];
            for (std::size_t i = 0; i < dst.size(); ++i)
                dst[i] += src[i] / factorial;
        }
    }
    return out;
}

} // namespace sigchart
