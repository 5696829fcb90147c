#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gramforge/grammar.hpp"
#include "gramforge/link_parser.hpp"
#include "gramforge/random.hpp"

namespace gramforge {

struct GenerateOptions {
  std::size_t max_len = 16;    // tokens, terminator included
  std::size_t max_depth = 8;   // link hops from the root
  std::size_t attempts = 100;  // retries before giving up
  // Relative weight of a compatible (owner, disjunct) filler; empty = uniform.
  std::function<double(const std::string& owner, const Disjunct&)> weight;
};

struct GeneratedSentence {
  TokenSequence sentence;
  Linkage linkage;
  std::size_t anchor_position = 0;
};

namespace detail {

struct TreeNode {
  std::string owner;
  std::string word;
  Disjunct disjunct;
  std::size_t parent_connector = SIZE_MAX;  // index in disjunct linking to the parent
  std::vector<std::unique_ptr<TreeNode>> children;  // parallel to disjunct.connectors
  std::size_t position = 0;
};

class TreeGenerator {
 public:
  TreeGenerator(const Grammar& g, const GenerateOptions& o, Rng& rng) : g_(g), o_(o), rng_(rng) {}

  // Builds a tree containing (owner, d). The anchor first climbs to a random
  // ancestor: a node may hang from its parent only by its outermost connector
  // on one side, so every subtree occupies a contiguous span and the result
  // is planar by construction. Then the open connectors are filled top-down.
  // Returns the root; `anchor` receives the anchor node.
  std::unique_ptr<TreeNode> grow(const std::string& owner, const Disjunct& d, bool climb, TreeNode*& anchor) {
    nodes_ = 0;
    auto node = make_node(owner, d, SIZE_MAX);
    anchor = node.get();
    for (std::size_t hops = 0; climb && hops < o_.max_depth; ++hops) {
      std::vector<std::size_t> up;  // candidate parent connectors
      for (auto dir : {Direction::left, Direction::right}) {
        std::size_t outer = SIZE_MAX;
        for (std::size_t i = 0; i < node->disjunct.connectors.size(); ++i)
          if (node->disjunct.connectors[i].dir == dir && !node->children[i]) outer = i;
        // a connector already holding a child cannot lead to the parent
        if (outer != SIZE_MAX && is_outermost(*node, outer)) up.push_back(outer);
      }
      const std::size_t pick = uniform_index(rng_, up.size() + 1);
      if (pick == up.size()) break;
      const auto& c = node->disjunct.connectors[up[pick]];
      auto parent = pick_parent(node->owner, c);
      if (!parent) break;
      node->parent_connector = up[pick];
      auto p = make_node(c.label, parent->first, SIZE_MAX);
      p->children[parent->second] = std::move(node);
      node = std::move(p);
    }
    if (!expand(*node, 0)) return nullptr;
    return node;
  }

 private:
  static bool is_outermost(const TreeNode& n, std::size_t i) {
    const auto dir = n.disjunct.connectors[i].dir;
    for (std::size_t j = i + 1; j < n.disjunct.connectors.size(); ++j)
      if (n.disjunct.connectors[j].dir == dir) return false;
    return true;
  }

  std::unique_ptr<TreeNode> make_node(const std::string& owner, const Disjunct& d, std::size_t parent) {
    auto node = std::make_unique<TreeNode>();
    node->owner = owner;
    const auto words = g_.words_of(owner);
    node->word = words[uniform_index(rng_, words.size())];
    node->disjunct = d;
    node->parent_connector = parent;
    node->children.resize(d.connectors.size());
    ++nodes_;
    return node;
  }

  bool expand(TreeNode& node, std::size_t depth) {
    if (nodes_ > budget()) return false;
    for (std::size_t ci = 0; ci < node.disjunct.connectors.size(); ++ci) {
      if (ci == node.parent_connector) continue;
      if (depth + 1 > o_.max_depth) return false;
      if (!node.children[ci]) {
        const auto& c = node.disjunct.connectors[ci];
        auto filler = pick_filler(node.owner, c);
        if (!filler) return false;
        node.children[ci] = make_node(c.label, filler->first, filler->second);
        if (nodes_ > budget()) return false;
      }
      if (!expand(*node.children[ci], depth + 1)) return false;
    }
    return true;
  }

  std::size_t budget() const { return o_.max_len - (g_.terminator() ? 1 : 0); }

  std::size_t choose(const std::vector<double>& weights) {
    if (!o_.weight) return uniform_index(rng_, weights.size());
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) return SIZE_MAX;
    double r = uniform_unit(rng_) * total;
    std::size_t pick = 0;
    for (; pick + 1 < weights.size(); ++pick) {
      if (r < weights[pick]) break;
      r -= weights[pick];
    }
    return pick;
  }

  // Disjuncts of `c.label` whose outermost connector facing `owner` pairs with c.
  std::optional<std::pair<Disjunct, std::size_t>> pick_filler(const std::string& owner, const Connector& c) {
    const Rule* peer = g_.rule(c.label);
    if (!peer) return std::nullopt;
    const Direction back = opposite(c.dir);
    std::vector<std::pair<const Disjunct*, std::size_t>> options;
    std::vector<double> weights;
    for (const auto& d : peer->disjuncts) {
      std::size_t last = SIZE_MAX;
      for (std::size_t i = 0; i < d.connectors.size(); ++i)
        if (d.connectors[i].dir == back) last = i;
      if (last == SIZE_MAX || d.connectors[last].label != owner) continue;
      options.emplace_back(&d, last);
      weights.push_back(o_.weight ? o_.weight(c.label, d) : 1.0);
    }
    if (options.empty()) return std::nullopt;
    const auto pick = choose(weights);
    if (pick == SIZE_MAX) return std::nullopt;
    return std::make_pair(*options[pick].first, options[pick].second);
  }

  // (disjunct, connector index) of `c.label` that can hold `owner` as a child
  // through connector c; any position on the facing side will do.
  std::optional<std::pair<Disjunct, std::size_t>> pick_parent(const std::string& owner, const Connector& c) {
    const Rule* peer = g_.rule(c.label);
    if (!peer) return std::nullopt;
    const Direction back = opposite(c.dir);
    std::vector<std::pair<const Disjunct*, std::size_t>> options;
    std::vector<double> weights;
    for (const auto& d : peer->disjuncts)
      for (std::size_t i = 0; i < d.connectors.size(); ++i)
        if (d.connectors[i].dir == back && d.connectors[i].label == owner) {
          options.emplace_back(&d, i);
          weights.push_back(o_.weight ? o_.weight(c.label, d) : 1.0);
        }
    if (options.empty()) return std::nullopt;
    const auto pick = choose(weights);
    if (pick == SIZE_MAX) return std::nullopt;
    return std::make_pair(*options[pick].first, options[pick].second);
  }

  const Grammar& g_;
  const GenerateOptions& o_;
  Rng& rng_;
  std::size_t nodes_ = 0;
};

// Left subtrees farthest first, the word, then right subtrees nearest first.
inline void linearize(TreeNode& node, std::vector<TreeNode*>& out) {
  std::vector<std::size_t> left, right;
  for (std::size_t i = 0; i < node.disjunct.connectors.size(); ++i) {
    if (i == node.parent_connector) continue;
    (node.disjunct.connectors[i].dir == Direction::left ? left : right).push_back(i);
  }
  for (auto it = left.rbegin(); it != left.rend(); ++it) linearize(*node.children[*it], out);
  node.position = out.size();
  out.push_back(&node);
  for (auto i : right) linearize(*node.children[i], out);
}

inline void collect_links(const TreeNode& node, std::vector<Link>& links) {
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    if (!node.children[i]) continue;
    const auto& child = *node.children[i];
    if (child.position < node.position)
      links.push_back({child.position, node.position, child.owner, node.owner});
    else
      links.push_back({node.position, child.position, node.owner, child.owner});
    collect_links(child, links);
  }
}

}  // namespace detail

// Stochastic sentence generation. With an anchor, one word takes one of the
// anchor rule's disjuncts (so the linkage uses the anchor); otherwise the
// seed owner and disjunct are drawn uniformly. Open connectors are filled
// recursively with uniformly sampled compatible owners and disjuncts.
inline GeneratedSentence generate(const Grammar& grammar, const Rule* anchor, const GenerateOptions& options,
                                  Rng& rng) {
  if (grammar.empty()) throw GenerationError("cannot generate from an empty grammar");
  if (options.max_len < 1) throw ConfigError("max_len must be >= 1");
  std::vector<std::string> seeds;
  for (const auto& [owner, r] : grammar.rules())
    if (!r.disjuncts.empty()) seeds.push_back(owner);
  if (anchor && anchor->disjuncts.empty()) throw GenerationError("anchor rule has no disjuncts");

  detail::TreeGenerator gen(grammar, options, rng);
  for (std::size_t attempt = 0; attempt < options.attempts; ++attempt) {
    std::string owner;
    Disjunct d;
    if (anchor) {
      owner = anchor->owner;
      d = anchor->disjuncts[uniform_index(rng, anchor->disjuncts.size())];
    } else {
      owner = seeds[uniform_index(rng, seeds.size())];
      const auto& ds = grammar.rule(owner)->disjuncts;
      d = ds[uniform_index(rng, ds.size())];
    }
    detail::TreeNode* anchor_node = nullptr;
    auto root = gen.grow(owner, d, anchor != nullptr, anchor_node);
    if (!root) continue;
    std::vector<detail::TreeNode*> order;
    detail::linearize(*root, order);
    std::vector<std::string> words;
    Linkage linkage;
    for (auto* n : order) {
      words.push_back(n->word);
      linkage.owners.push_back(n->owner);
      linkage.disjuncts.push_back(n->disjunct);
    }
    if (grammar.terminator()) {
      words.push_back(*grammar.terminator());
      linkage.owners.emplace_back();
      linkage.disjuncts.emplace_back();
    }
    detail::collect_links(*root, linkage.links);
    std::sort(linkage.links.begin(), linkage.links.end(), [](const Link& a, const Link& b) {
      return std::tie(a.left, a.right) < std::tie(b.left, b.right);
    });
    GeneratedSentence out;
    out.sentence = TokenSequence(std::move(words));
    linkage.sentence = out.sentence;
    out.linkage = std::move(linkage);
    out.anchor_position = anchor_node->position;
    return out;
  }
  throw GenerationError(std::string("no sentence within ") + std::to_string(options.max_len) +
                        " tokens after " + std::to_string(options.attempts) + " attempts" +
                        (anchor ? " using anchor '" + anchor->text() + "'" : std::string()));
}

inline GeneratedSentence generate(const Grammar& grammar, const std::optional<Rule>& anchor,
                                  const GenerateOptions& options, std::uint64_t seed) {
  Rng rng(seed);
  return generate(grammar, anchor ? &*anchor : nullptr, options, rng);
}

}  // namespace gramforge
