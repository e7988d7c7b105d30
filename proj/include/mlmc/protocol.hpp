#pragma once

#include <deque>
#include <optional>
#include <variant>
#include <vector>

#include "mlmc/batching.hpp"
#include "mlmc/estimator.hpp"
#include "mlmc/partition.hpp"

namespace mlmc {

// Endpoint ids: 0 is the master, 1..p are workers, p+1.. are slave
// coordinators of the communication tree.
using EndpointId = int;

// --- wire vocabulary ----------------------------------------------------------

struct ReadyAtLevel {
  int root = 0;  // requesting endpoint (worker rank, or coordinator id for refills)
  int level = 0;
};

struct DoSample {
  int level = 0;
  long long first = 0;  // inclusive sample indices
  long long last = 0;
};

struct NextPartition {};

struct LevelSums {
  int level = 0;
  long long count = 0;
  double sum_y = 0.0;
  double sum_y2 = 0.0;
  double sum_cost = 0.0;
};

struct PartialSums {
  int reporter = 0;  // level-0 root rank the sums belong to
  std::vector<LevelSums> sums;
};

struct Shutdown {};

// Coordinator-link bookkeeping only (never sent to workers): announces the
// per-level sample targets of the next adaptive iteration so slave
// coordinators can size batches with the true N_l.
struct LevelTargets {
  std::vector<long long> targets;
};

using DutyMessage =
    std::variant<ReadyAtLevel, DoSample, NextPartition, PartialSums, Shutdown, LevelTargets>;

const char* message_type_name(const DutyMessage& msg);

struct Envelope {
  EndpointId from = 0;
  EndpointId to = 0;
  DutyMessage msg;
};

// --- engine-facing actions ------------------------------------------------------

struct EvalRequest {
  int level = 0;
  long long first = 0;
  long long last = 0;
};

struct Actions {
  std::vector<Envelope> sends;
  std::optional<EvalRequest> eval;
  bool exited = false;
};

// --- routing ---------------------------------------------------------------------

struct RoutingTable {
  const PartitionFamily* family = nullptr;
  const CoordinatorTree* tree = nullptr;
  int workers = 0;

  std::vector<EndpointId> coordinator_of_rank;  // [rank], coordinator serving that worker
  std::vector<EndpointId> node_endpoint;        // [tree node] -> endpoint id
  std::vector<int> endpoint_node;               // [endpoint - workers offset] bookkeeping
  std::vector<std::vector<int>> partitions_under;  // [tree node][level] full groups in domain
  int total_level0_groups = 0;                  // expected PartialSums reporters per iteration

  int coordinator_count() const { return tree ? tree->coordinator_count() : 0; }
  int endpoints() const { return workers + 1 + coordinator_count(); }
  EndpointId parent_endpoint(int node) const;
  int node_of(EndpointId id) const;
};

RoutingTable build_routing(const PartitionFamily& family, const CoordinatorTree& tree);

// --- worker state machine ---------------------------------------------------------

// SPMD worker logic of the duty protocol: every worker starts each iteration
// at the finest partition, roots exchange duties with their coordinator and
// broadcast them to the group, and level-0 roots ship partial sums at the end
// of the sampling loop.
class WorkerProtocol {
 public:
  WorkerProtocol(int rank, const RoutingTable* routing);

  Actions on_start();
  Actions on_message(const Envelope& env);
  Actions on_batch_done();  // engine finished the last EvalRequest

  // Per-sample accumulation; the engine calls this on the acting root only.
  void accumulate(int level, double y, double cost);

  bool exited() const { return state_ == State::Exited; }
  int rank() const { return rank_; }
  int level() const { return level_; }
  const std::vector<LevelStats>& sums() const { return sums_; }

 private:
  enum class State { AwaitDuty, Computing, Exited };

  bool am_root() const;
  Actions handle_duty(const DutyMessage& duty);
  void append_broadcast(Actions& actions, const DutyMessage& duty) const;
  Actions finish_level_zero();

  int rank_ = 0;
  int level_ = 0;
  State state_ = State::AwaitDuty;
  const RoutingTable* routing_ = nullptr;
  std::vector<LevelStats> sums_;
  std::optional<EvalRequest> pending_;
};

// --- coordinator / master state machine ---------------------------------------------

struct MasterOptions {
  bool adaptive = false;
  int max_iterations = 30;
};

struct IterationRecord {
  int index = 0;
  double estimate = 0.0;
  bool converged = false;
  double error_estimate = 0.0;
  std::vector<long long> targets;
};

// Node 0 behaves as the master (owns the estimator state and the global
// sample pools); other nodes proxy duties for their subtree, pulling sample
// ranges from the parent on demand.
class CoordinatorProtocol {
 public:
  CoordinatorProtocol(int node, const RoutingTable* routing, const BatchPolicy* policy,
                      EstimatorState initial_state, const MasterOptions& options);
  CoordinatorProtocol(int node, const RoutingTable* routing, const BatchPolicy* policy,
                      std::vector<long long> initial_targets);  // slave node

  Actions on_start();
  Actions on_message(const Envelope& env);

  bool exited() const { return exited_; }
  bool is_master() const { return node_ == 0; }
  EndpointId endpoint() const { return routing_->node_endpoint[node_]; }

  // master-side results, valid after the run completes
  const EstimatorState& state() const { return state_; }
  const std::vector<IterationRecord>& iterations() const { return iteration_log_; }
  bool converged() const { return converged_; }
  double final_error_estimate() const { return final_error_; }
  const std::vector<int>& idle_groups_logged() const { return sub_q0_roots_seen_; }

 private:
  struct Pool {
    long long next = 1;    // first unassigned sample index
    long long target = 0;  // N_l of the current iteration
    bool upstream_exhausted = false;
    long long granted_end = 0;  // master: == target; slaves: end of local pool
    long long remaining() const { return granted_end - next + 1 < 0 ? 0 : granted_end - next + 1; }
  };

  Actions handle_ready(const Envelope& env);
  Actions handle_partial_sums(const Envelope& env);
  Actions handle_refill_reply(const Envelope& env);
  void serve_waiting(int level, Actions& actions);
  void serve_root(int root, int level, Actions& actions);
  long long per_root_batch(int level) const;
  void request_refill(int level, Actions& actions);
  void grant_to_child(int child_node, int level, Actions& actions);
  void begin_iteration(Actions& actions, const std::vector<long long>& targets);
  void finish_barrier(Actions& actions);
  void enter_shutdown(Actions& actions);
  void reply_shutdown(int requester, Actions& actions);
  int direct_children() const;

  int node_ = 0;
  const RoutingTable* routing_ = nullptr;
  const BatchPolicy* policy_ = nullptr;
  bool exited_ = false;

  std::vector<Pool> pools_;                 // per level
  std::vector<std::deque<int>> waiting_;    // per level, queued child requesters
  std::vector<bool> refill_pending_;        // per level (slave side)
  std::deque<int> outstanding_refills_;     // levels, FIFO-matched with parent replies
  std::vector<char> reported_;              // workers that sent PartialSums this iteration

  // master-only state
  MasterOptions options_;
  EstimatorState state_;
  int iteration_ = 0;
  bool reducing_ = false;
  bool shutting_down_ = false;
  bool converged_ = false;
  double final_error_ = 0.0;
  std::vector<std::pair<int, PartialSums>> collected_;  // (reporter, sums)
  std::deque<Envelope> deferred_;                        // readys received while reducing
  std::vector<IterationRecord> iteration_log_;
  std::vector<int> sub_q0_roots_seen_;
  int shutdowns_sent_ = 0;
};

}  // namespace mlmc
