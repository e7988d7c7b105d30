#include "mlmc/partition.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace mlmc {

void PartitionSpec::validate() const {
  if (workers < 1) throw InvalidSpec("worker count must be >= 1");
  if (group_sizes.empty()) throw InvalidSpec("at least one group size is required");
  for (std::size_t i = 0; i < group_sizes.size(); ++i) {
    if (group_sizes[i] < 1) throw InvalidSpec("group sizes must be >= 1");
    if (i > 0 && group_sizes[i] <= group_sizes[i - 1])
      throw InvalidSpec("group sizes must be strictly increasing");
  }
  if (group_sizes.back() > workers)
    throw InvalidSpec("q (" + std::to_string(group_sizes.back()) + ") exceeds p (" +
                      std::to_string(workers) + ")");
}

Divisibility divisibility_class(const PartitionSpec& spec) {
  spec.validate();
  for (std::size_t i = 1; i < spec.group_sizes.size(); ++i)
    if (spec.group_sizes[i] % spec.group_sizes[i - 1] != 0)
      return Divisibility::PartiallyDivisible;
  if (spec.workers % spec.group_sizes.back() != 0) return Divisibility::PartiallyDivisible;
  return Divisibility::FullyDivisible;
}

std::vector<int> Group::members() const {
  std::vector<int> out(size);
  std::iota(out.begin(), out.end(), first);
  return out;
}

const std::vector<Group>& PartitionFamily::groups(int level) const {
  if (level < 0 || level > max_level())
    throw OutOfRange("level " + std::to_string(level) + " outside 0.." +
                     std::to_string(max_level()));
  return levels_[level];
}

const Group& PartitionFamily::group_of(int rank, int level) const {
  if (rank < 1 || rank > spec_.workers)
    throw OutOfRange("rank " + std::to_string(rank) + " outside 1.." +
                     std::to_string(spec_.workers));
  const std::vector<Group>& at_level = groups(level);
  return at_level[group_index_[level][rank - 1]];
}

bool PartitionFamily::is_root(int rank, int level) const {
  return group_of(rank, level).root() == rank;
}

int PartitionFamily::full_group_count(int level) const {
  if (level < 0 || level > max_level())
    throw OutOfRange("level " + std::to_string(level) + " outside 0.." +
                     std::to_string(max_level()));
  return full_counts_[level];
}

std::vector<Group> PartitionFamily::subgroups(const Group& g) const {
  if (g.level < 1) throw OutOfRange("level-0 groups have no subgroups");
  std::vector<Group> out;
  for (const Group& child : groups(g.level - 1))
    if (child.first >= g.first && child.last() <= g.last()) out.push_back(child);
  return out;
}

std::vector<Group> PartitionFamily::below_q0_groups() const {
  std::vector<Group> out;
  int q0 = spec_.group_sizes.front();
  for (const Group& g : levels_[0])
    if (g.size < q0) out.push_back(g);
  return out;
}

PartitionFamily build_family(const PartitionSpec& spec) {
  spec.validate();
  PartitionFamily family;
  family.spec_ = spec;
  int levels = spec.max_level() + 1;
  family.levels_.resize(levels);
  family.group_index_.assign(levels, std::vector<int>(spec.workers, -1));
  family.full_counts_.assign(levels, 0);

  // Split a contiguous block [first, first+size) into groups of q plus a
  // trailing remainder.
  auto split_block = [](int first, int size, int q, std::vector<Group>& out, int level) {
    int full = size / q;
    for (int i = 0; i < full; ++i)
      out.push_back(Group{level, first + i * q, q, false});
    int rem = size % q;
    if (rem > 0) out.push_back(Group{level, first + full * q, rem, true});
  };

  int top = spec.max_level();
  split_block(1, spec.workers, spec.group_sizes[top], family.levels_[top], top);
  for (int level = top - 1; level >= 0; --level) {
    for (const Group& parent : family.levels_[level + 1])
      split_block(parent.first, parent.size, spec.group_sizes[level], family.levels_[level],
                  level);
  }

  for (int level = 0; level < levels; ++level) {
    const std::vector<Group>& at_level = family.levels_[level];
    for (std::size_t gi = 0; gi < at_level.size(); ++gi) {
      const Group& g = at_level[gi];
      if (!g.is_remainder) ++family.full_counts_[level];
      for (int rank = g.first; rank <= g.last(); ++rank)
        family.group_index_[level][rank - 1] = static_cast<int>(gi);
    }
  }
  return family;
}

}  // namespace mlmc
