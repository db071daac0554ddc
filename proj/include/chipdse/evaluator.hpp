#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chipdse/arch.hpp"
#include "chipdse/energy.hpp"
#include "chipdse/intracore.hpp"
#include "chipdse/mapping.hpp"

namespace chipdse {

// Per-link byte loads of one pipeline stage plus the DRAM access profile.
// Links are directed (from, to) node pairs.
struct TrafficMap {
	std::map<std::pair<int, int>, std::int64_t> link_bytes;
	std::vector<std::int64_t> dram_read, dram_write;
	std::int64_t total_hops = 0;  // sum over deps of traversed links

	std::int64_t onchip_bytes = 0;  // link-traversal weighted
	std::int64_t d2d_bytes = 0;
	std::int64_t dram_total() const;
	void merge(const TrafficMap& o);
};

// Adds every dependency's bytes along XY paths. Multicast payloads count
// once per link of the union of the per-destination paths. DRAM endpoints
// enter/exit the mesh at the controller's attached router nearest to the
// counterpart set (ties to the lowest router index).
TrafficMap route_traffic(const std::vector<CommDep>& deps, const Topology& topo);

enum class Bottleneck { Compute, NocLink, D2dLink, DramBw };
const char* bottleneck_name(Bottleneck b);

struct EvalReport {
	double delay_s = 0;
	double energy_j = 0;
	double mac_j = 0, glb_j = 0, dram_j = 0, noc_j = 0, d2d_j = 0;
	TrafficMap traffic;  // one steady-state stage
	double stage_time = 0;
	std::vector<double> stage_times;  // per group when aggregated over a DNN
	std::int64_t n_units = 1;
	int depth = 1;
	Bottleneck bottleneck = Bottleneck::Compute;
};

// Evaluates one parsed layer group as a pipeline stage set: stage time is the
// max of per-core busy time, per-link transfer time and per-DRAM time; group
// delay covers fill/drain. `schedules` aligns with `parsed.pws`.
EvalReport evaluate_group(const ParsedGroup& parsed, const std::vector<CoreSchedule>& schedules,
                          const ArchConfig& cfg, const Topology& topo, const EnergyTable& et,
                          std::int64_t n_units);

struct GroupMapping {
	std::vector<int> layers;
	std::int64_t batch_unit = 1;
	LpSpatialMapping lms;
};

struct DnnEval {
	EvalReport total;
	std::vector<EvalReport> per_group;
	bool feasible = true;
	std::string infeasible_why;
};

// Parses, schedules and evaluates every group in order (groups execute
// sequentially; boundary tensors round-trip through the producer's ofmap
// DRAM binding) and sums the reports.
DnnEval evaluate_mapped_dnn(const DnnGraph& g, const std::vector<GroupMapping>& groups,
                            const ArchConfig& cfg, const Topology& topo, const EnergyTable& et,
                            ScheduleCache& cache);

// Text grid of per-link bytes. D2D links are flagged with '*'; pass
// double_d2d to double their displayed volume (export convention only).
std::string heatmap_text(const TrafficMap& tm, const Topology& topo, bool double_d2d = false);

}  // namespace chipdse
