#include "mlmc/serialize.hpp"

#include <sstream>

#include <json.hpp>

namespace mlmc {

namespace {

using ordered_json = nlohmann::ordered_json;

const char* kind_name(IntervalKind kind) {
  switch (kind) {
    case IntervalKind::Active: return "active";
    case IntervalKind::Idle: return "idle";
    default: return "manage";
  }
}

std::string endpoint_name(EndpointId id, int workers) {
  if (id == 0) return "master";
  if (id <= workers) return "worker:" + std::to_string(id);
  return "coord:" + std::to_string(id - workers);
}

}  // namespace

std::string timeline_to_json(const Timeline& timeline, int indent) {
  ordered_json doc;
  doc["p"] = timeline.workers;
  doc["q"] = timeline.group_sizes;
  doc["makespan"] = timeline.makespan;
  ordered_json intervals = ordered_json::array();
  for (const TimelineInterval& iv : timeline.intervals) {
    ordered_json entry;
    entry["worker"] = iv.worker;
    entry["start"] = iv.start;
    entry["end"] = iv.end;
    entry["kind"] = kind_name(iv.kind);
    if (iv.kind == IntervalKind::Active) {
      entry["task"] = iv.task;
      entry["level"] = iv.level;
    } else {
      entry["task"] = nullptr;
      entry["level"] = nullptr;
    }
    intervals.push_back(std::move(entry));
  }
  doc["intervals"] = std::move(intervals);
  return doc.dump(indent);
}

std::string report_to_json(const RunReport& report, int indent) {
  ordered_json doc;
  doc["estimate"] = report.estimate;
  doc["tolerance"] = report.tolerance;
  ordered_json levels = ordered_json::array();
  for (const LevelReport& level : report.levels) {
    ordered_json entry;
    entry["l"] = level.level;
    entry["N"] = level.count;
    entry["mean_Y"] = level.mean_y;
    entry["var_Y"] = level.var_y;
    entry["mean_cost"] = level.mean_cost;
    levels.push_back(std::move(entry));
  }
  doc["levels"] = std::move(levels);
  doc["t_w"] = report.wall_time;
  doc["core_time"] = {{"active", report.core_time.active},
                      {"idle", report.core_time.idle},
                      {"manage", report.core_time.manage}};
  doc["efficiency"] = report.efficiency;
  doc["iterations"] = report.iterations;
  doc["seed"] = report.seed;
  return doc.dump(indent);
}

std::string family_to_json(const PartitionFamily& family, int indent) {
  ordered_json doc;
  doc["p"] = family.workers();
  doc["q"] = family.spec().group_sizes;
  doc["divisibility"] = divisibility_class(family.spec()) == Divisibility::FullyDivisible
                            ? "full"
                            : "partial";
  ordered_json levels = ordered_json::array();
  for (int level = family.max_level(); level >= 0; --level) {
    ordered_json entry;
    entry["level"] = level;
    ordered_json groups = ordered_json::array();
    for (const Group& g : family.groups(level)) {
      ordered_json group;
      group["root"] = g.root();
      group["members"] = g.members();
      group["is_remainder"] = g.is_remainder;
      groups.push_back(std::move(group));
    }
    entry["groups"] = std::move(groups);
    levels.push_back(std::move(entry));
  }
  doc["levels"] = std::move(levels);
  ordered_json idle = ordered_json::array();
  for (const Group& g : family.below_q0_groups()) idle.push_back(g.root());
  doc["permanently_idle_roots"] = std::move(idle);
  return doc.dump(indent);
}

std::string family_to_text(const PartitionFamily& family) {
  std::ostringstream out;
  out << "p = " << family.workers() << ", q =";
  for (int q : family.spec().group_sizes) out << ' ' << q;
  out << (divisibility_class(family.spec()) == Divisibility::FullyDivisible
              ? " (fully divisible)\n"
              : " (partially divisible)\n");
  for (int level = family.max_level(); level >= 0; --level) {
    out << "level " << level << " (q = " << family.spec().group_sizes[level] << "):\n";
    for (const Group& g : family.groups(level)) {
      out << "  root " << g.root() << "  ranks " << g.first << ".." << g.last();
      if (g.is_remainder) out << "  [remainder]";
      out << '\n';
    }
  }
  std::vector<Group> idle = family.below_q0_groups();
  if (!idle.empty()) {
    out << "permanently idle (below q0):";
    for (const Group& g : idle) out << " root " << g.root() << " (" << g.size << " ranks)";
    out << '\n';
  }
  return out.str();
}

std::string message_log_to_jsonl(const std::vector<LoggedMessage>& log, int workers) {
  std::ostringstream out;
  for (const LoggedMessage& line : log) {
    ordered_json entry;
    entry["time"] = line.time;
    entry["from"] = endpoint_name(line.from, workers);
    entry["to"] = endpoint_name(line.to, workers);
    entry["type"] = message_type_name(line.msg);
    ordered_json payload;
    if (const auto* ready = std::get_if<ReadyAtLevel>(&line.msg)) {
      payload["root"] = ready->root;
      payload["level"] = ready->level;
    } else if (const auto* batch = std::get_if<DoSample>(&line.msg)) {
      payload["level"] = batch->level;
      payload["first"] = batch->first;
      payload["last"] = batch->last;
    } else if (const auto* sums = std::get_if<PartialSums>(&line.msg)) {
      payload["reporter"] = sums->reporter;
      ordered_json entries = ordered_json::array();
      for (const LevelSums& s : sums->sums)
        entries.push_back({{"level", s.level},
                           {"count", s.count},
                           {"sum_y", s.sum_y},
                           {"sum_y2", s.sum_y2},
                           {"sum_cost", s.sum_cost}});
      payload["sums"] = std::move(entries);
    } else if (const auto* targets = std::get_if<LevelTargets>(&line.msg)) {
      payload["targets"] = targets->targets;
    }
    entry["payload"] = std::move(payload);
    out << entry.dump() << '\n';
  }
  return out.str();
}

}  // namespace mlmc
