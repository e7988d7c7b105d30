#include "mlmc/run.hpp"

#include <string>

#include "engine.hpp"

namespace mlmc {

void RunConfig::validate() const {
  estimator.validate();
  partition.validate();
  batch.validate();
  if (partition.max_level() != estimator.max_levels)
    throw InvalidArgs("the partition ladder must provide one group size per level (M+1)");
  if (adaptive && estimator.initial_levels < 2)
    throw InvalidArgs("adaptive runs need at least 2 initial levels to fit the decay");
  if (max_iterations < 1) throw InvalidArgs("max_iterations must be >= 1");
  if (coordinator_overhead < 0.0) throw InvalidArgs("coordinator overhead must be >= 0");
  if (!(execute_time_scale > 0.0)) throw InvalidArgs("execute time scale must be positive");
  if (use_coordinator_tree && comm_limit < 2) throw InvalidArgs("comm_limit must be >= 2");
  if (const auto* pause = std::get_if<PauseModelSpec>(&model.spec)) {
    if (static_cast<int>(pause->mu_per_level.size()) > estimator.max_levels + 1)
      throw InvalidArgs("pause model declares more levels than the hierarchy has");
    pause->validate(estimator.max_levels);
  }
}

RunReport run_mlmc(const RunConfig& config) {
  config.validate();

  PartitionFamily family = build_family(config.partition);
  int level_m_roots = static_cast<int>(family.groups(family.max_level()).size());

  CoordinatorTree tree;
  if (config.use_coordinator_tree) {
    tree = build_coordinator_tree(level_m_roots, config.comm_limit);
  } else {
    tree.comm_limit = config.comm_limit;
    tree.nodes.push_back({});
    tree.nodes[0].first_root = 0;
    tree.nodes[0].root_count = level_m_roots;
  }

  RoutingTable routing = build_routing(family, tree);
  std::unique_ptr<SampleModel> model = make_model(config.model, config.estimator.max_levels);

  detail::EngineContext ctx;
  ctx.config = &config;
  ctx.family = &family;
  ctx.tree = &tree;
  ctx.routing = &routing;
  ctx.model = model.get();

  return config.mode == RunMode::Simulate ? detail::run_simulate(ctx)
                                          : detail::run_execute(ctx);
}

}  // namespace mlmc
