#pragma once

// Random MRF instances shared by the unit tests and the acceptance checks.

#include "aads/stitch.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace aads::test {

using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

enum class PairwiseFamily {
    General, ///< every table entry independent
    Seam,    ///< symmetric with zero diagonal, like the stitching seam costs
};

inline Mrf random_mrf(std::mt19937_64& rng, std::size_t n, std::size_t labels, const EdgeList& edges, bool integer,
                      PairwiseFamily family = PairwiseFamily::General, double p_forbid = 0.0)
{
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::uniform_int_distribution<int> ui(0, 9);
    std::bernoulli_distribution forbid(p_forbid);
    auto draw = [&] { return integer ? static_cast<double>(ui(rng)) : u(rng); };
    Mrf mrf(n, labels);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t l = 0; l < labels; ++l)
            mrf.unary_at(i, l) = draw();
        for (std::size_t l = 1; l < labels; ++l)
            if (forbid(rng))
                mrf.unary_at(i, l) = std::numeric_limits<double>::infinity();
    }
    for (const auto& [a, b] : edges) {
        std::vector<double> cost(labels * labels, 0.0);
        if (family == PairwiseFamily::General) {
            for (double& c : cost)
                c = draw();
        } else {
            for (std::size_t la = 0; la < labels; ++la)
                for (std::size_t lb = la + 1; lb < labels; ++lb)
                    cost[la * labels + lb] = cost[lb * labels + la] = draw();
        }
        mrf.add_edge(a, b, cost);
    }
    return mrf;
}

/// Random tree (or chain) over shuffled node ids, so edges run in both index directions.
inline EdgeList random_tree(std::mt19937_64& rng, std::size_t n, bool chain)
{
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    EdgeList edges;
    for (std::size_t k = 1; k < n; ++k) {
        const std::size_t parent = chain ? k - 1 : std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
        edges.emplace_back(perm[parent], perm[k]);
    }
    return edges;
}

inline EdgeList grid_edges(std::size_t w, std::size_t h)
{
    EdgeList edges;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            if (x + 1 < w)
                edges.emplace_back(y * w + x, y * w + x + 1);
            if (y + 1 < h)
                edges.emplace_back(y * w + x, (y + 1) * w + x);
        }
    return edges;
}

} // namespace aads::test
