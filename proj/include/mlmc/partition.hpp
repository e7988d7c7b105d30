#pragma once

#include <vector>

#include "mlmc/errors.hpp"

namespace mlmc {

// Worker counts and the group-size ladder q_0 < q_1 < ... < q_M. Workers are
// numbered 1..workers; coordinators live outside the family.
struct PartitionSpec {
  int workers = 1;
  std::vector<int> group_sizes;  // q, strictly increasing, q_M <= workers

  int max_level() const { return static_cast<int>(group_sizes.size()) - 1; }
  void validate() const;
};

enum class Divisibility { FullyDivisible, PartiallyDivisible };

// FullyDivisible iff q_0 | q_1 | ... | q_M | p.
Divisibility divisibility_class(const PartitionSpec& spec);

// A contiguous block of worker ranks at one level. The root is the minimum
// rank. Remainder groups (size < q_level) never execute work at their level;
// they only exist to be split further.
struct Group {
  int level = 0;
  int first = 1;
  int size = 0;
  bool is_remainder = false;

  int root() const { return first; }
  int last() const { return first + size - 1; }
  bool contains(int rank) const { return rank >= first && rank <= last(); }
  std::vector<int> members() const;
};

class PartitionFamily {
 public:
  const PartitionSpec& spec() const { return spec_; }
  int max_level() const { return spec_.max_level(); }
  int workers() const { return spec_.workers; }

  const std::vector<Group>& groups(int level) const;
  const Group& group_of(int rank, int level) const;
  bool is_root(int rank, int level) const;

  // Number of full (non-remainder) groups at a level; remainder groups never
  // receive work so this is the partition count used for batch sizing.
  int full_group_count(int level) const;

  // Groups at level-1 nested inside g (g.level must be >= 1).
  std::vector<Group> subgroups(const Group& g) const;

  // Groups smaller than q_0; these can never execute any task.
  std::vector<Group> below_q0_groups() const;

  friend PartitionFamily build_family(const PartitionSpec& spec);

 private:
  PartitionSpec spec_;
  std::vector<std::vector<Group>> levels_;      // [level] -> groups, ascending rank
  std::vector<std::vector<int>> group_index_;   // [level][rank-1] -> index into levels_[level]
  std::vector<int> full_counts_;
};

// Recursive split per the hierarchical construction: level M holds
// floor(p/q_M) full groups plus one remainder of p mod q_M (omitted when 0);
// every group splits the same way at the next level down. Ranks are assigned
// contiguously ascending, full groups first, remainder last.
PartitionFamily build_family(const PartitionSpec& spec);

}  // namespace mlmc
