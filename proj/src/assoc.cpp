#include "annofuse/assoc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace annofuse {

namespace {

// Nearest neighbor of `p` in `pts`; ties resolve to the lowest index.
std::size_t nearest_index(const PointAnnotation& p, const std::vector<PointAnnotation>& pts) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pts.size(); ++j) {
        const double d = point_distance(p, pts[j]);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

struct UnionFind {
    std::vector<std::size_t> parent;

    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), std::size_t{0});
    }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

std::vector<MatchPair> pairwise_match(const AnnotationSet& set_a, const AnnotationSet& set_b,
                                      double threshold) {
    if (set_a.image_id != set_b.image_id)
        throw InputError("pairwise_match: mismatched image ids \"" + set_a.image_id + "\" vs \"" +
                         set_b.image_id + "\"");
    if (set_a.source == set_b.source)
        throw InputError("pairwise_match: both sets come from source \"" + set_a.source + "\"");

    const auto& as = set_a.annotations;
    const auto& bs = set_b.annotations;
    if (as.empty() || bs.empty()) return {};

    std::vector<std::size_t> nn_a(as.size()), nn_b(bs.size());
    for (std::size_t i = 0; i < as.size(); ++i) nn_a[i] = nearest_index(as[i], bs);
    for (std::size_t j = 0; j < bs.size(); ++j) nn_b[j] = nearest_index(bs[j], as);

    std::vector<MatchPair> pairs;
    for (std::size_t i = 0; i < as.size(); ++i) {
        const std::size_t j = nn_a[i];
        if (nn_b[j] != i) continue;
        const double d = point_distance(as[i], bs[j]);
        if (d < threshold) pairs.push_back({i, j, d});
    }
    std::sort(pairs.begin(), pairs.end(), [](const MatchPair& x, const MatchPair& y) {
        if (x.distance != y.distance) return x.distance < y.distance;
        if (x.index_a != y.index_a) return x.index_a < y.index_a;
        return x.index_b < y.index_b;
    });
    return pairs;
}

std::vector<Cluster> build_clusters(const std::vector<AnnotationSet>& sets,
                                    const AssocConfig& cfg) {
    if (!(cfg.threshold > 0.0) || !std::isfinite(cfg.threshold))
        throw InputError("association threshold must be positive and finite");
    if (sets.empty()) return {};
    if (sets.size() > 64) throw InputError("build_clusters supports at most 64 sources");
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (sets[i].image_id != sets[0].image_id)
            throw InputError("build_clusters: mixed image ids");
        for (std::size_t j = 0; j < i; ++j)
            if (sets[j].source == sets[i].source)
                throw InputError("build_clusters: duplicate source \"" + sets[i].source + "\"");
    }

    // Flat ids over all annotations, in (set, index) order.
    std::vector<std::size_t> offset(sets.size() + 1, 0);
    for (std::size_t k = 0; k < sets.size(); ++k)
        offset[k + 1] = offset[k] + sets[k].annotations.size();
    const std::size_t total = offset.back();

    struct Link {
        double distance;
        std::size_t pair_order;  // source-pair enumeration order
        std::size_t index_a, index_b;
        std::size_t set_a, set_b;
    };
    std::vector<Link> links;
    std::size_t pair_order = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        for (std::size_t j = i + 1; j < sets.size(); ++j, ++pair_order) {
            for (const auto& mp : pairwise_match(sets[i], sets[j], cfg.threshold))
                links.push_back({mp.distance, pair_order, mp.index_a, mp.index_b, i, j});
        }
    }
    std::sort(links.begin(), links.end(), [](const Link& x, const Link& y) {
        if (x.distance != y.distance) return x.distance < y.distance;
        if (x.pair_order != y.pair_order) return x.pair_order < y.pair_order;
        if (x.index_a != y.index_a) return x.index_a < y.index_a;
        return x.index_b < y.index_b;
    });

    UnionFind uf(total);
    std::vector<std::uint64_t> source_mask(total);
    for (std::size_t k = 0; k < sets.size(); ++k)
        for (std::size_t a = 0; a < sets[k].annotations.size(); ++a)
            source_mask[offset[k] + a] = std::uint64_t{1} << k;

    for (const auto& link : links) {
        const std::size_t ra = uf.find(offset[link.set_a] + link.index_a);
        const std::size_t rb = uf.find(offset[link.set_b] + link.index_b);
        if (ra == rb) continue;
        if (source_mask[ra] & source_mask[rb]) continue;  // would duplicate a source
        uf.unite(ra, rb);
        source_mask[uf.find(ra)] = source_mask[ra] | source_mask[rb];
    }

    // Emit clusters in first-seen order of (set, index); members inherit it.
    std::vector<Cluster> clusters;
    std::vector<std::size_t> slot(total, std::numeric_limits<std::size_t>::max());
    for (std::size_t k = 0; k < sets.size(); ++k) {
        for (std::size_t a = 0; a < sets[k].annotations.size(); ++a) {
            const std::size_t root = uf.find(offset[k] + a);
            if (slot[root] == std::numeric_limits<std::size_t>::max()) {
                slot[root] = clusters.size();
                clusters.push_back(Cluster{sets[0].image_id, {}});
            }
            clusters[slot[root]].members.push_back(
                ClusterMember{sets[k].source, a, sets[k].annotations[a]});
        }
    }
    return clusters;
}

}  // namespace annofuse
