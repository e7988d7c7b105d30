#include "mlmc/batching.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mlmc {

void BatchPolicy::validate() const {
  if (!(min_fraction > 0.0) || !(min_fraction <= max_fraction) || !(max_fraction < 1.0))
    throw InvalidArgs("batch fractions must satisfy 0 < min <= max < 1");
}

namespace {

long long clamp_batch(long long raw, long long total, long long partitions,
                      const BatchPolicy& policy, long long remaining) {
  long long lo = static_cast<long long>(
      std::ceil(policy.min_fraction * static_cast<double>(total) / partitions));
  long long hi = static_cast<long long>(
      std::ceil(policy.max_fraction * static_cast<double>(total) / partitions));
  long long b = std::clamp(raw, lo, hi);
  return std::min(b, remaining);
}

}  // namespace

long long batch_size(long long n, long long total, long long partitions,
                     const BatchPolicy& policy) {
  policy.validate();
  if (n < 0 || total < 0 || n > total) throw InvalidArgs("need 0 <= n <= N");
  if (partitions < 1) throw InvalidArgs("partitions must be >= 1");
  if (n == total) return 0;
  long long denominator = total * partitions;
  long long raw = (total - n + denominator - 1) / denominator;  // integer ceiling
  return clamp_batch(raw, total, partitions, policy, total - n);
}

long long tree_batch_size(long long n, long long total, long long executing,
                          long long total_partitions, const BatchPolicy& policy) {
  policy.validate();
  if (n < 0 || total < 0 || n > total) throw InvalidArgs("need 0 <= n <= N");
  if (executing < 1 || executing > total_partitions)
    throw InvalidArgs("need 1 <= executing partitions <= total partitions");
  if (n == total) return 0;
  long long numerator = (total - n) * executing;
  long long denominator = total * total_partitions;
  long long raw = (numerator + denominator - 1) / denominator;
  return clamp_batch(raw, total, total_partitions, policy, total - n);
}

int CoordinatorTree::leaf_of_root(int root_index) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& node = nodes[i];
    if (!node.children.empty()) continue;
    if (root_index >= node.first_root && root_index < node.first_root + node.root_count)
      return static_cast<int>(i);
  }
  throw OutOfRange("root index " + std::to_string(root_index) + " not covered by the tree");
}

CoordinatorTree build_coordinator_tree(int level_m_roots, int comm_limit) {
  if (level_m_roots < 1) throw InvalidArgs("need at least one level-M root");
  if (comm_limit < 2) throw InvalidArgs("comm_limit must be >= 2");

  CoordinatorTree tree;
  tree.comm_limit = comm_limit;
  tree.nodes.push_back({});  // master
  tree.nodes[0].first_root = 0;
  tree.nodes[0].root_count = level_m_roots;
  if (level_m_roots <= comm_limit) return tree;  // master handles the roots directly

  // Leaf layer over root indices, then coordinator layers until the top fits.
  struct Span {
    int node = -1;  // -1 while the layer is still abstract spans of roots
    int first = 0;
    int count = 0;
  };
  std::vector<Span> layer;
  int full = level_m_roots / comm_limit;
  int rest = level_m_roots % comm_limit;
  for (int i = 0; i < full; ++i) layer.push_back({-1, i * comm_limit, comm_limit});
  if (rest > 0) layer.back().count += rest;  // lump the partial group into a sibling

  // materialize leaves
  for (Span& span : layer) {
    span.node = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[span.node].first_root = span.first;
    tree.nodes[span.node].root_count = span.count;
  }

  while (static_cast<int>(layer.size()) > comm_limit) {
    std::vector<Span> upper;
    int groups = static_cast<int>(layer.size()) / comm_limit;
    int leftover = static_cast<int>(layer.size()) % comm_limit;
    int cursor = 0;
    for (int g = 0; g < groups; ++g) {
      int take = comm_limit + (g == groups - 1 ? leftover : 0);
      int node = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      tree.nodes[node].first_root = layer[cursor].first;
      int count = 0;
      for (int i = 0; i < take; ++i) {
        tree.nodes[layer[cursor].node].parent = node;
        tree.nodes[node].children.push_back(layer[cursor].node);
        count += layer[cursor].count;
        ++cursor;
      }
      tree.nodes[node].root_count = count;
      upper.push_back({node, tree.nodes[node].first_root, count});
    }
    layer = std::move(upper);
  }

  for (const Span& span : layer) {
    tree.nodes[span.node].parent = 0;
    tree.nodes[0].children.push_back(span.node);
  }
  return tree;
}

}  // namespace mlmc
