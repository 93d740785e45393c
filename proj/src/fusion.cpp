#include "annofuse/fusion.hpp"

#include <algorithm>
#include <cctype>

namespace annofuse {

PolicyError::PolicyError(const std::string& msg, std::size_t offset)
    : InputError("policy: " + msg + " at offset " + std::to_string(offset)), offset_(offset) {}

namespace {

using Node = ConsensusPolicy::Node;

class PolicyParser {
public:
    explicit PolicyParser(std::string_view text) : text_(text) {}

    Node parse() {
        Node root = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) throw PolicyError("unexpected input", pos_);
        return root;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Node parse_expr() {
        Node first = parse_term();
        if (!eat('|')) return first;
        Node node{Node::Kind::Or, {}, 0, {}, first.offset};
        node.children.push_back(std::move(first));
        do {
            node.children.push_back(parse_term());
        } while (eat('|'));
        return node;
    }

    Node parse_term() {
        Node first = parse_factor();
        if (!eat('&')) return first;
        Node node{Node::Kind::And, {}, 0, {}, first.offset};
        node.children.push_back(std::move(first));
        do {
            node.children.push_back(parse_factor());
        } while (eat('&'));
        return node;
    }

    Node parse_factor() {
        skip_ws();
        if (pos_ >= text_.size()) throw PolicyError("unexpected end of input", pos_);
        const std::size_t start = pos_;
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Node inner = parse_expr();
            if (!eat(')')) throw PolicyError("expected ')'", pos_);
            return inner;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t end = pos_;
            while (end < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_'))
                ++end;
            std::string name(text_.substr(pos_, end - pos_));
            pos_ = end;
            if (name == "atleast") return parse_atleast(start);
            return Node{Node::Kind::Source, std::move(name), 0, {}, start};
        }
        throw PolicyError("expected a source name, 'atleast(q)' or '('", pos_);
    }

    Node parse_atleast(std::size_t start) {
        if (!eat('(')) throw PolicyError("expected '(' after 'atleast'", pos_);
        skip_ws();
        const std::size_t int_start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ == int_start) throw PolicyError("expected an integer", pos_);
        long q = 0;
        for (std::size_t i = int_start; i < pos_; ++i) {
            q = q * 10 + (text_[i] - '0');
            if (q > 1'000'000) throw PolicyError("consensus degree out of range", int_start);
        }
        if (!eat(')')) throw PolicyError("expected ')'", pos_);
        if (q < 1) throw PolicyError("consensus degree out of range", int_start);
        return Node{Node::Kind::AtLeast, {}, static_cast<int>(q), {}, start};
    }
};

void bind_node(const Node& node, const std::vector<SourceId>& sources) {
    switch (node.kind) {
        case Node::Kind::Source:
            if (std::find(sources.begin(), sources.end(), node.name) == sources.end())
                throw PolicyError("unknown source \"" + node.name + "\"", node.offset);
            break;
        case Node::Kind::AtLeast:
            if (node.q < 1 || static_cast<std::size_t>(node.q) > sources.size())
                throw PolicyError("consensus degree " + std::to_string(node.q) +
                                      " out of range for " + std::to_string(sources.size()) +
                                      " sources",
                                  node.offset);
            break;
        case Node::Kind::And:
        case Node::Kind::Or:
            for (const auto& child : node.children) bind_node(child, sources);
            break;
    }
}

bool eval_node(const Cluster& cluster, const Node& node) {
    switch (node.kind) {
        case Node::Kind::Source:
            return cluster.has_source(node.name);
        case Node::Kind::AtLeast:
            return cluster.members.size() >= static_cast<std::size_t>(node.q);
        case Node::Kind::And:
            for (const auto& child : node.children)
                if (!eval_node(cluster, child)) return false;
            return true;
        case Node::Kind::Or:
            for (const auto& child : node.children)
                if (eval_node(cluster, child)) return true;
            return false;
    }
    return false;
}

}  // namespace

ConsensusPolicy parse_policy(std::string_view text) {
    ConsensusPolicy policy;
    policy.text.assign(text);
    policy.root = PolicyParser(text).parse();
    return policy;
}

void bind_policy(const ConsensusPolicy& policy, const std::vector<SourceId>& sources) {
    bind_node(policy.root, sources);
}

bool eval_policy(const Cluster& cluster, const ConsensusPolicy& policy) {
    return eval_node(cluster, policy.root);
}

FusedAnnotation fuse_cluster(const Cluster& cluster, const PreferenceOrder& order) {
    if (cluster.members.empty()) throw InputError("fuse_cluster: empty cluster");

    auto rank = [&](const SourceId& s) {
        for (std::size_t r = 0; r < order.size(); ++r)
            if (order[r] == s) return r;
        throw InputError("fuse_cluster: source \"" + s + "\" absent from the preference order");
    };

    const ClusterMember* best = &cluster.members.front();
    std::size_t best_rank = rank(best->source);
    for (const auto& m : cluster.members) {
        const std::size_t r = rank(m.source);
        if (r < best_rank) {
            best_rank = r;
            best = &m;
        }
    }

    FusedAnnotation fused;
    fused.image_id = cluster.image_id;
    fused.u = best->point.u;
    fused.v = best->point.v;
    fused.chosen_source = best->source;
    for (const auto& m : cluster.members) fused.contributing_sources.push_back(m.source);
    fused.consensus_degree = static_cast<int>(cluster.members.size());
    return fused;
}

std::vector<FusedAnnotation> consensus_set(const std::vector<Cluster>& clusters, int q,
                                           const PreferenceOrder& order) {
    if (q < 1 || static_cast<std::size_t>(q) > order.size())
        throw InputError("consensus degree " + std::to_string(q) + " out of range for " +
                         std::to_string(order.size()) + " sources");
    std::vector<FusedAnnotation> out;
    for (const auto& c : clusters)
        if (c.members.size() >= static_cast<std::size_t>(q)) out.push_back(fuse_cluster(c, order));
    return out;
}

LabelSplit split_labels(const std::vector<Cluster>& clusters, const ConsensusPolicy& policy,
                        const PreferenceOrder& order) {
    LabelSplit split;
    if (!clusters.empty()) split.image_id = clusters.front().image_id;
    for (const auto& c : clusters) {
        auto fused = fuse_cluster(c, order);
        if (eval_policy(c, policy))
            split.confident.push_back(std::move(fused));
        else
            split.ambiguous.push_back(std::move(fused));
    }
    return split;
}

}  // namespace annofuse
