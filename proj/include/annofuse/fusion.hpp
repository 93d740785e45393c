#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "annofuse/assoc.hpp"
#include "annofuse/types.hpp"

namespace annofuse {

/// Source ranking, highest preference first (e.g. {"S", "L", "M"}).
using PreferenceOrder = std::vector<SourceId>;

/// The representative annotation of one cluster: the member of the
/// highest-preference source, carrying the full contributing-source set.
struct FusedAnnotation {
    std::string image_id;
    double u = 0.0;
    double v = 0.0;
    SourceId chosen_source;
    std::vector<SourceId> contributing_sources;  // cluster member order
    int consensus_degree = 0;                    // == contributing_sources.size()

    friend bool operator==(const FusedAnnotation&, const FusedAnnotation&) = default;
};

/// Syntax error in a consensus-policy expression, with the byte offset of
/// the offending token.
class PolicyError : public InputError {
public:
    PolicyError(const std::string& msg, std::size_t offset);
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_ = 0;
};

/// Boolean consensus policy over source names.
///
/// Grammar:
///   expr   := term ('|' term)*
///   term   := factor ('&' factor)*
///   factor := NAME | 'atleast' '(' INT ')' | '(' expr ')'
///
/// '&' binds tighter than '|'; whitespace is ignored; NAME matches
/// [A-Za-z_][A-Za-z0-9_]* and 'atleast' is reserved. A NAME is true iff the
/// cluster contains a member from that source; atleast(q) is true iff the
/// cluster has at least q members.
struct ConsensusPolicy {
    struct Node {
        enum class Kind { Source, AtLeast, And, Or };
        Kind kind = Kind::Source;
        std::string name;            // Source
        int q = 0;                   // AtLeast
        std::vector<Node> children;  // And / Or (n-ary, flattened)
        std::size_t offset = 0;      // byte offset in the source text
    };
    Node root;
    std::string text;  // original expression
};

ConsensusPolicy parse_policy(std::string_view text);

/// Resolves the policy against a dataset's source list: every NAME must be a
/// declared source and every atleast(q) must satisfy 1 <= q <= K. Throws
/// PolicyError otherwise.
void bind_policy(const ConsensusPolicy& policy, const std::vector<SourceId>& sources);

/// Total after bind_policy succeeded.
bool eval_policy(const Cluster& cluster, const ConsensusPolicy& policy);

FusedAnnotation fuse_cluster(const Cluster& cluster, const PreferenceOrder& order);

/// Fused annotations of the clusters with at least q members. q must lie in
/// [1, order.size()]; q = 1 is the union of the sources, q = K their
/// intersection.
std::vector<FusedAnnotation> consensus_set(const std::vector<Cluster>& clusters, int q,
                                           const PreferenceOrder& order);

/// Per-image split into the confident set (clusters satisfying the policy)
/// and the ambiguous set (every other cluster).
struct LabelSplit {
    std::string image_id;
    std::vector<FusedAnnotation> confident;
    std::vector<FusedAnnotation> ambiguous;
};

LabelSplit split_labels(const std::vector<Cluster>& clusters, const ConsensusPolicy& policy,
                        const PreferenceOrder& order);

}  // namespace annofuse
