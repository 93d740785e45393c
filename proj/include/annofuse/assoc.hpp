#pragma once

#include <cstddef>
#include <vector>

#include "annofuse/types.hpp"

namespace annofuse {

/// One mutual-nearest-neighbor link between two annotation sets.
struct MatchPair {
    std::size_t index_a = 0;   // index into the first set
    std::size_t index_b = 0;   // index into the second set
    double distance = 0.0;     // Euclidean, pixels; always < threshold
};

struct ClusterMember {
    SourceId source;
    std::size_t index = 0;     // index within its AnnotationSet
    PointAnnotation point;
};

/// Annotations of one physical pole across sources; at most one member per
/// source. Members are listed in input-set order.
struct Cluster {
    std::string image_id;
    std::vector<ClusterMember> members;

    bool has_source(const SourceId& s) const {
        for (const auto& m : members)
            if (m.source == s) return true;
        return false;
    }
    std::size_t size() const { return members.size(); }
};

struct AssocConfig {
    double threshold = 20.0;   // pixels; links require distance strictly below
};

/// Mutual nearest neighbors between two sets of the same image and distinct
/// sources. A pair (a, b) is kept iff b is a's nearest neighbor in setB, a is
/// b's nearest neighbor in setA, and their distance is strictly below
/// `threshold`. Nearest-neighbor ties resolve to the lowest index. Output is
/// sorted by ascending distance, ties by (index_a, index_b).
std::vector<MatchPair> pairwise_match(const AnnotationSet& set_a, const AnnotationSet& set_b,
                                      double threshold);

/// Groups the annotations of one image into clusters forming a partition:
/// pairwise matches of every unordered source pair are merged greedily in
/// globally ascending distance order (ties by source-pair enumeration order,
/// then pair order), skipping any merge that would place two annotations of
/// the same source in one cluster. Every annotation ends up in exactly one
/// cluster; unmatched annotations become singletons.
std::vector<Cluster> build_clusters(const std::vector<AnnotationSet>& sets,
                                    const AssocConfig& cfg);

}  // namespace annofuse
