#pragma once

#include "mlmc/run.hpp"

namespace mlmc::detail {

struct EngineContext {
  const RunConfig* config = nullptr;
  const PartitionFamily* family = nullptr;
  const CoordinatorTree* tree = nullptr;
  const RoutingTable* routing = nullptr;
  const SampleModel* model = nullptr;
};

RunReport run_simulate(const EngineContext& ctx);
RunReport run_execute(const EngineContext& ctx);

// Report fields derived from the master endpoint after the run.
void fill_report_from_master(RunReport& report, const CoordinatorProtocol& master,
                             const EngineContext& ctx);

}  // namespace mlmc::detail
