#include "mlmc/protocol.hpp"

#include <algorithm>
#include <string>

namespace mlmc {

const char* message_type_name(const DutyMessage& msg) {
  switch (msg.index()) {
    case 0: return "ReadyAtLevel";
    case 1: return "DoSample";
    case 2: return "NextPartition";
    case 3: return "PartialSums";
    case 4: return "Shutdown";
    default: return "LevelTargets";
  }
}

// --- routing -------------------------------------------------------------------

EndpointId RoutingTable::parent_endpoint(int node) const {
  int parent = tree->nodes[node].parent;
  return node_endpoint[parent];
}

int RoutingTable::node_of(EndpointId id) const {
  if (id == 0) return 0;
  if (id <= workers) throw ProtocolViolation("endpoint " + std::to_string(id) + " is a worker");
  return endpoint_node[id - workers - 1];
}

RoutingTable build_routing(const PartitionFamily& family, const CoordinatorTree& tree) {
  RoutingTable routing;
  routing.family = &family;
  routing.tree = &tree;
  routing.workers = family.workers();

  int nodes = static_cast<int>(tree.nodes.size());
  routing.node_endpoint.resize(nodes);
  routing.node_endpoint[0] = 0;
  for (int n = 1; n < nodes; ++n) {
    routing.node_endpoint[n] = routing.workers + n;
    routing.endpoint_node.push_back(n);
  }

  int top = family.max_level();
  const std::vector<Group>& top_groups = family.groups(top);

  // domain of a node as a worker-rank range, from its level-M root span
  auto domain = [&](int node) -> std::pair<int, int> {
    const CoordinatorTree::Node& tn = tree.nodes[node];
    const Group& first = top_groups[tn.first_root];
    const Group& last = top_groups[tn.first_root + tn.root_count - 1];
    return {first.first, last.last()};
  };

  routing.coordinator_of_rank.assign(routing.workers + 1, 0);
  if (tree.coordinator_count() > 0) {
    for (std::size_t gi = 0; gi < top_groups.size(); ++gi) {
      int leaf = tree.leaf_of_root(static_cast<int>(gi));
      const Group& g = top_groups[gi];
      for (int rank = g.first; rank <= g.last(); ++rank)
        routing.coordinator_of_rank[rank] = routing.node_endpoint[leaf];
    }
  }

  routing.partitions_under.assign(nodes, std::vector<int>(top + 1, 0));
  for (int n = 0; n < nodes; ++n) {
    auto [lo, hi] = domain(n);
    for (int level = 0; level <= top; ++level)
      for (const Group& g : family.groups(level))
        if (!g.is_remainder && g.first >= lo && g.last() <= hi)
          ++routing.partitions_under[n][level];
  }

  routing.total_level0_groups = static_cast<int>(family.groups(0).size());
  return routing;
}

// --- worker ---------------------------------------------------------------------

WorkerProtocol::WorkerProtocol(int rank, const RoutingTable* routing)
    : rank_(rank), routing_(routing) {
  int top = routing_->family->max_level();
  level_ = top;
  sums_.resize(top + 1);
  for (int l = 0; l <= top; ++l) sums_[l].level = l;
}

bool WorkerProtocol::am_root() const { return routing_->family->is_root(rank_, level_); }

Actions WorkerProtocol::on_start() {
  Actions actions;
  if (am_root())
    actions.sends.push_back(
        {rank_, routing_->coordinator_of_rank[rank_], ReadyAtLevel{rank_, level_}});
  return actions;
}

void WorkerProtocol::append_broadcast(Actions& actions, const DutyMessage& duty) const {
  const Group& group = routing_->family->group_of(rank_, level_);
  for (int member = group.first; member <= group.last(); ++member)
    if (member != rank_) actions.sends.push_back({rank_, member, duty});
}

Actions WorkerProtocol::on_message(const Envelope& env) {
  if (state_ != State::AwaitDuty)
    throw ProtocolViolation("worker " + std::to_string(rank_) + " received " +
                            message_type_name(env.msg) + " while not awaiting a duty");
  bool root = am_root();
  EndpointId expected_source =
      root ? routing_->coordinator_of_rank[rank_]
           : routing_->family->group_of(rank_, level_).root();
  if (env.from != expected_source)
    throw ProtocolViolation("worker " + std::to_string(rank_) + " received " +
                            message_type_name(env.msg) + " from endpoint " +
                            std::to_string(env.from) + ", expected " +
                            std::to_string(expected_source));

  Actions actions;
  if (root) append_broadcast(actions, env.msg);

  if (const auto* batch = std::get_if<DoSample>(&env.msg)) {
    if (batch->level != level_ || batch->first > batch->last)
      throw ProtocolViolation("worker " + std::to_string(rank_) + " got a batch for level " +
                              std::to_string(batch->level) + " while at level " +
                              std::to_string(level_));
    state_ = State::Computing;
    pending_ = EvalRequest{batch->level, batch->first, batch->last};
    actions.eval = pending_;
    return actions;
  }
  if (std::holds_alternative<NextPartition>(env.msg)) {
    --level_;
    if (level_ < 0) {
      Actions finish = finish_level_zero();
      actions.sends.insert(actions.sends.end(), finish.sends.begin(), finish.sends.end());
      return actions;
    }
    if (am_root())
      actions.sends.push_back(
          {rank_, routing_->coordinator_of_rank[rank_], ReadyAtLevel{rank_, level_}});
    return actions;
  }
  if (std::holds_alternative<Shutdown>(env.msg)) {
    state_ = State::Exited;
    actions.exited = true;
    return actions;
  }
  throw ProtocolViolation("worker " + std::to_string(rank_) + " cannot handle " +
                          message_type_name(env.msg));
}

Actions WorkerProtocol::finish_level_zero() {
  // Sampling loop done for this iteration: level-0 roots ship their partial
  // sums, then everyone rejoins the finest partition and waits for the next
  // duty (another iteration or a shutdown).
  Actions actions;
  if (routing_->family->is_root(rank_, 0)) {
    PartialSums sums;
    sums.reporter = rank_;
    for (const LevelStats& stats : sums_) {
      if (stats.count == 0) continue;
      sums.sums.push_back({stats.level, stats.count, stats.sum_y + stats.comp_y,
                           stats.sum_y2 + stats.comp_y2, stats.sum_cost + stats.comp_cost});
    }
    actions.sends.push_back({rank_, routing_->coordinator_of_rank[rank_], std::move(sums)});
    for (LevelStats& stats : sums_) stats = LevelStats{stats.level};
  }
  level_ = routing_->family->max_level();
  if (am_root())
    actions.sends.push_back(
        {rank_, routing_->coordinator_of_rank[rank_], ReadyAtLevel{rank_, level_}});
  return actions;
}

Actions WorkerProtocol::on_batch_done() {
  if (state_ != State::Computing)
    throw ProtocolViolation("worker " + std::to_string(rank_) + " finished a batch it never got");
  state_ = State::AwaitDuty;
  pending_.reset();
  Actions actions;
  if (am_root())
    actions.sends.push_back(
        {rank_, routing_->coordinator_of_rank[rank_], ReadyAtLevel{rank_, level_}});
  return actions;
}

void WorkerProtocol::accumulate(int level, double y, double cost) {
  sums_[level].add(y, cost);
}

// --- coordinator ------------------------------------------------------------------

CoordinatorProtocol::CoordinatorProtocol(int node, const RoutingTable* routing,
                                         const BatchPolicy* policy, EstimatorState initial_state,
                                         const MasterOptions& options)
    : node_(node), routing_(routing), policy_(policy), options_(options),
      state_(std::move(initial_state)) {
  int top = routing_->family->max_level();
  pools_.resize(top + 1);
  waiting_.resize(top + 1);
  refill_pending_.assign(top + 1, false);
  reported_.assign(routing_->workers + 1, 0);
  for (int l = 0; l <= top; ++l) {
    long long n = l <= state_.config.initial_levels ? state_.config.initial_samples[l] : 0;
    pools_[l].target = n;
    pools_[l].granted_end = n;  // the master owns the whole range
  }
}

CoordinatorProtocol::CoordinatorProtocol(int node, const RoutingTable* routing,
                                         const BatchPolicy* policy,
                                         std::vector<long long> initial_targets)
    : node_(node), routing_(routing), policy_(policy) {
  int top = routing_->family->max_level();
  pools_.resize(top + 1);
  waiting_.resize(top + 1);
  refill_pending_.assign(top + 1, false);
  reported_.assign(routing_->workers + 1, 0);
  for (int l = 0; l <= top; ++l)
    pools_[l].target = l < static_cast<int>(initial_targets.size()) ? initial_targets[l] : 0;
}

Actions CoordinatorProtocol::on_start() { return {}; }

int CoordinatorProtocol::direct_children() const {
  const CoordinatorTree::Node& node = routing_->tree->nodes[node_];
  if (!node.children.empty()) return static_cast<int>(node.children.size());
  return node.root_count;
}

long long CoordinatorProtocol::per_root_batch(int level) const {
  const Pool& pool = pools_[level];
  long long assigned = pool.target - pool.remaining();
  return batch_size(assigned, pool.target, routing_->family->full_group_count(level), *policy_);
}

void CoordinatorProtocol::serve_root(int root, int level, Actions& actions) {
  Pool& pool = pools_[level];
  long long b = std::min(per_root_batch(level), pool.remaining());
  actions.sends.push_back({endpoint(), root, DoSample{level, pool.next, pool.next + b - 1}});
  pool.next += b;
}

void CoordinatorProtocol::grant_to_child(int child_node, int level, Actions& actions) {
  Pool& pool = pools_[level];
  long long executing = routing_->partitions_under[child_node][level];
  long long total = routing_->partitions_under[node_][level];
  long long assigned = pool.target - pool.remaining();
  long long tree_b = tree_batch_size(assigned, pool.target, executing, total, *policy_);
  // grant enough for one batch per executing partition under the child, so
  // root-level traffic stays off this endpoint
  long long grant =
      std::min(pool.remaining(), std::max(tree_b, executing * per_root_batch(level)));
  actions.sends.push_back({endpoint(), routing_->node_endpoint[child_node],
                           DoSample{level, pool.next, pool.next + grant - 1}});
  pool.next += grant;
}

void CoordinatorProtocol::request_refill(int level, Actions& actions) {
  if (refill_pending_[level]) return;
  refill_pending_[level] = true;
  outstanding_refills_.push_back(level);
  actions.sends.push_back(
      {endpoint(), routing_->parent_endpoint(node_), ReadyAtLevel{endpoint(), level}});
}

void CoordinatorProtocol::serve_waiting(int level, Actions& actions) {
  Pool& pool = pools_[level];
  std::deque<int>& queue = waiting_[level];
  while (!queue.empty() && pool.remaining() > 0) {
    int requester = queue.front();
    queue.pop_front();
    if (requester <= routing_->workers)
      serve_root(requester, level, actions);
    else
      grant_to_child(routing_->node_of(requester), level, actions);
  }
  if (queue.empty()) return;
  if (pool.upstream_exhausted || is_master()) {
    while (!queue.empty()) {
      actions.sends.push_back({endpoint(), queue.front(), NextPartition{}});
      queue.pop_front();
    }
  } else {
    request_refill(level, actions);
  }
}

void CoordinatorProtocol::reply_shutdown(int requester, Actions& actions) {
  actions.sends.push_back({endpoint(), requester, Shutdown{}});
  ++shutdowns_sent_;
  if (shutting_down_ && routing_->tree->nodes[node_].children.empty() &&
      shutdowns_sent_ >= direct_children())
    exited_ = true;
}

void CoordinatorProtocol::enter_shutdown(Actions& actions) {
  shutting_down_ = true;
  for (std::deque<int>& queue : waiting_)
    while (!queue.empty()) {
      int requester = queue.front();
      queue.pop_front();
      if (requester <= routing_->workers) reply_shutdown(requester, actions);
    }
  while (!deferred_.empty()) {
    reply_shutdown(std::get<ReadyAtLevel>(deferred_.front().msg).root, actions);
    deferred_.pop_front();
  }
  const CoordinatorTree::Node& node = routing_->tree->nodes[node_];
  for (int child : node.children)
    actions.sends.push_back({endpoint(), routing_->node_endpoint[child], Shutdown{}});
  if (!node.children.empty()) {
    exited_ = true;  // internal nodes have nothing left to answer
  } else if (shutdowns_sent_ >= direct_children()) {
    exited_ = true;
  }
}

Actions CoordinatorProtocol::handle_ready(const Envelope& env) {
  const auto& ready = std::get<ReadyAtLevel>(env.msg);
  int requester = ready.root;
  int level = ready.level;
  Actions actions;

  if (shutting_down_) {
    if (requester <= routing_->workers) reply_shutdown(requester, actions);
    // late refill requests die with the cascade
    return actions;
  }

  if (requester <= routing_->workers) {
    if (reported_[requester]) {
      // finished this iteration already; hold until the barrier resolves
      deferred_.push_back(env);
      return actions;
    }
    const Group& group = routing_->family->group_of(requester, level);
    if (group.root() != requester)
      throw ProtocolViolation("rank " + std::to_string(requester) +
                              " is not the root of its level-" + std::to_string(level) +
                              " group");
    if (group.is_remainder) {
      if (group.size < routing_->family->spec().group_sizes.front() &&
          std::find(sub_q0_roots_seen_.begin(), sub_q0_roots_seen_.end(), requester) ==
              sub_q0_roots_seen_.end())
        sub_q0_roots_seen_.push_back(requester);
      actions.sends.push_back({endpoint(), requester, NextPartition{}});
      return actions;
    }
  }

  Pool& pool = pools_[level];
  if (pool.remaining() > 0) {
    if (requester <= routing_->workers)
      serve_root(requester, level, actions);
    else
      grant_to_child(routing_->node_of(requester), level, actions);
    return actions;
  }
  if (is_master() || pool.upstream_exhausted) {
    actions.sends.push_back({endpoint(), requester, NextPartition{}});
    return actions;
  }
  waiting_[level].push_back(requester);
  request_refill(level, actions);
  return actions;
}

Actions CoordinatorProtocol::handle_partial_sums(const Envelope& env) {
  const auto& sums = std::get<PartialSums>(env.msg);
  Actions actions;
  reported_[sums.reporter] = 1;
  if (!is_master()) {
    actions.sends.push_back({endpoint(), routing_->parent_endpoint(node_), env.msg});
    return actions;
  }
  collected_.emplace_back(sums.reporter, sums);
  if (static_cast<int>(collected_.size()) == routing_->total_level0_groups)
    finish_barrier(actions);
  return actions;
}

Actions CoordinatorProtocol::handle_refill_reply(const Envelope& env) {
  if (outstanding_refills_.empty())
    throw ProtocolViolation(std::string("unexpected ") + message_type_name(env.msg) +
                            " from the parent coordinator");
  int level = outstanding_refills_.front();
  outstanding_refills_.pop_front();
  refill_pending_[level] = false;

  Actions actions;
  if (const auto* grant = std::get_if<DoSample>(&env.msg)) {
    if (grant->level != level)
      throw ProtocolViolation("refill reply for level " + std::to_string(grant->level) +
                              ", expected level " + std::to_string(level));
    Pool& pool = pools_[level];
    if (pool.remaining() != 0)
      throw ProtocolViolation("refill granted while the local pool is not empty");
    pool.next = grant->first;
    pool.granted_end = grant->last;
    serve_waiting(level, actions);
    return actions;
  }
  if (std::holds_alternative<NextPartition>(env.msg)) {
    pools_[level].upstream_exhausted = true;
    serve_waiting(level, actions);
    return actions;
  }
  throw ProtocolViolation(std::string("bad refill reply ") + message_type_name(env.msg));
}

Actions CoordinatorProtocol::on_message(const Envelope& env) {
  if (exited_) {
    // a child coordinator may still push a refill request while the shutdown
    // cascade races down its branch; it is being shut down by its parent
    if (std::holds_alternative<ReadyAtLevel>(env.msg) && env.from > routing_->workers) return {};
    throw ProtocolViolation(std::string("message ") + message_type_name(env.msg) +
                            " to an exited coordinator");
  }
  bool from_parent = !is_master() && env.from == routing_->parent_endpoint(node_);
  if (std::holds_alternative<ReadyAtLevel>(env.msg)) return handle_ready(env);
  if (std::holds_alternative<PartialSums>(env.msg)) return handle_partial_sums(env);
  if (from_parent && std::holds_alternative<LevelTargets>(env.msg)) {
    Actions actions;
    begin_iteration(actions, std::get<LevelTargets>(env.msg).targets);
    return actions;
  }
  if (from_parent && std::holds_alternative<Shutdown>(env.msg)) {
    // consume the matching refill entry when the shutdown doubles as a reply
    if (!outstanding_refills_.empty()) {
      refill_pending_[outstanding_refills_.front()] = false;
      outstanding_refills_.pop_front();
    }
    Actions actions;
    enter_shutdown(actions);
    return actions;
  }
  if (from_parent) return handle_refill_reply(env);
  throw ProtocolViolation(std::string("coordinator cannot handle ") +
                          message_type_name(env.msg) + " from endpoint " +
                          std::to_string(env.from));
}

void CoordinatorProtocol::begin_iteration(Actions& actions,
                                          const std::vector<long long>& targets) {
  for (std::size_t l = 0; l < pools_.size(); ++l) {
    Pool& pool = pools_[l];
    pool.target = l < targets.size() ? targets[l] : 0;
    pool.upstream_exhausted = false;
    if (is_master()) {
      pool.granted_end = pool.target;
    } else {
      pool.granted_end = pool.next - 1;  // empty until the parent grants
    }
  }
  std::fill(reported_.begin(), reported_.end(), 0);

  for (int child : routing_->tree->nodes[node_].children)
    actions.sends.push_back({endpoint(), routing_->node_endpoint[child], LevelTargets{targets}});

  std::deque<Envelope> pending = std::move(deferred_);
  deferred_.clear();
  for (const Envelope& env : pending) {
    Actions replayed = handle_ready(env);
    actions.sends.insert(actions.sends.end(), replayed.sends.begin(), replayed.sends.end());
  }
}

void CoordinatorProtocol::finish_barrier(Actions& actions) {
  std::sort(collected_.begin(), collected_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [reporter, sums] : collected_) {
    for (const LevelSums& entry : sums.sums) {
      LevelStats delta;
      delta.level = entry.level;
      delta.count = entry.count;
      delta.sum_y = entry.sum_y;
      delta.sum_y2 = entry.sum_y2;
      delta.sum_cost = entry.sum_cost;
      state_.per_level[entry.level].merge(delta);
    }
  }
  collected_.clear();

  for (std::size_t l = 0; l < pools_.size(); ++l) {
    long long assigned = pools_[l].next - 1;
    if (state_.per_level[l].count != assigned)
      throw ProtocolViolation("level " + std::to_string(l) + " reduced " +
                              std::to_string(state_.per_level[l].count) + " samples, assigned " +
                              std::to_string(assigned));
  }

  ++iteration_;
  IterationRecord record;
  record.index = iteration_;
  record.estimate = telescoping_estimate(state_);

  bool done = true;
  std::vector<long long> next_targets;
  if (options_.adaptive) {
    AdaptiveUpdate update = adaptive_update(state_);
    converged_ = update.converged;
    final_error_ = update.error_estimate;
    record.converged = update.converged;
    record.error_estimate = update.error_estimate;
    state_.decay_c = update.fit.c;
    state_.decay_alpha = update.fit.alpha;

    if (!update.converged && iteration_ < options_.max_iterations) {
      next_targets.assign(pools_.size(), 0);
      bool new_work = false;
      for (std::size_t l = 0; l < pools_.size(); ++l) {
        long long current = state_.per_level[l].count;
        long long want = static_cast<int>(l) <= update.new_level
                             ? update.new_samples[l]
                             : 0;
        next_targets[l] = std::max(want, current);
        if (next_targets[l] > current) new_work = true;
      }
      if (new_work) {
        done = false;
        state_.current_level = std::max(state_.current_level, update.new_level);
      }
      // without new work the update is a fixed point that failed the error
      // test; the hierarchy is capped at M, so stop and report unconverged
    }
  } else {
    converged_ = false;
    try {
      AdaptiveUpdate info = adaptive_update(state_);
      final_error_ = info.error_estimate;
      record.error_estimate = info.error_estimate;
    } catch (const Error&) {
      final_error_ = 0.0;
    }
  }
  record.targets.resize(pools_.size());
  for (std::size_t l = 0; l < pools_.size(); ++l) record.targets[l] = pools_[l].target;
  iteration_log_.push_back(record);

  if (done) {
    enter_shutdown(actions);
    return;
  }
  begin_iteration(actions, next_targets);
}

}  // namespace mlmc
