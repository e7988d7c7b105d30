#pragma once

#include <string>
#include <vector>

#include "mlmc/partition.hpp"
#include "mlmc/run.hpp"
#include "mlmc/scheduler.hpp"

namespace mlmc {

std::string timeline_to_json(const Timeline& timeline, int indent = -1);
std::string report_to_json(const RunReport& report, int indent = 2);
std::string family_to_json(const PartitionFamily& family, int indent = 2);
std::string family_to_text(const PartitionFamily& family);
std::string message_log_to_jsonl(const std::vector<LoggedMessage>& log, int workers);

}  // namespace mlmc
