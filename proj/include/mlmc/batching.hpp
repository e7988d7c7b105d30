#pragma once

#include <vector>

#include "mlmc/errors.hpp"

namespace mlmc {

// Clamp fractions for dynamic batch sizing; bounds apply as
// ceil(fraction * N / partitions).
struct BatchPolicy {
  double min_fraction = 0.01;
  double max_fraction = 0.62;

  void validate() const;
};

// Batch handed to one root: ceil((N-n)/(N*partitions)) clamped to the policy
// bounds, then capped at the remaining samples. Returns 0 when n == N.
long long batch_size(long long n, long long total, long long partitions,
                     const BatchPolicy& policy);

// Batch granted to a slave coordinator managing `executing` of the `total_partitions`
// partitions at a level: ceil((N-n)*P_i/(N*sum_k P_k)) with the same clamp
// convention (partitions = total_partitions), capped at N-n.
long long tree_batch_size(long long n, long long total, long long executing,
                          long long total_partitions, const BatchPolicy& policy);

// Communication tree replacing the single master. Node 0 is the master; leaf
// nodes own contiguous ranges of level-M root indices. When the root count
// fits under comm_limit the tree degenerates to the master alone.
struct CoordinatorTree {
  struct Node {
    int parent = -1;
    std::vector<int> children;  // node indices
    int first_root = 0;         // contiguous range of level-M root
    int root_count = 0;         // indices handled beneath this node
  };
  int comm_limit = 2;
  std::vector<Node> nodes;

  int coordinator_count() const { return static_cast<int>(nodes.size()) - 1; }
  // leaf node owning the given level-M root index
  int leaf_of_root(int root_index) const;
};

// Balanced bottom-up construction: floor(R/comm_limit) full leaves, any
// partial leftover lumped into the last sibling, then the same rule applied
// to the coordinator layer until at most comm_limit nodes report to the
// master. At most one node per layer exceeds comm_limit, by less than 2x.
CoordinatorTree build_coordinator_tree(int level_m_roots, int comm_limit);

}  // namespace mlmc
