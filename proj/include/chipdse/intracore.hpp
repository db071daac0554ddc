#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>

#include "chipdse/arch.hpp"
#include "chipdse/energy.hpp"
#include "chipdse/mapping.hpp"
#include "chipdse/workload.hpp"

namespace chipdse {

enum class LoopOrder { OutputStationary, WeightStationary, InputStationary, Streaming };

// Intra-core schedule of one partitioned workload: tile sizes per loop dim,
// a stationarity class, and the access/time/energy summary the evaluator
// consumes.
struct CoreSchedule {
	bool feasible = false;
	std::int64_t tb = 1, tk = 1, th = 1, tw = 1, tc = 1;
	LoopOrder order = LoopOrder::Streaming;
	std::int64_t mac_ops = 0;  // exact, schedule-independent
	std::int64_t glb_if_bytes = 0, glb_wgt_bytes = 0, glb_of_bytes = 0;
	std::int64_t workset_bytes = 0;  // double-buffered tile footprint
	double core_time = 0;            // seconds
	double mac_j = 0, glb_j = 0;

	std::int64_t glb_bytes() const { return glb_if_bytes + glb_wgt_bytes + glb_of_bytes; }
	double energy() const { return mac_j + glb_j; }
	double edp() const { return energy() * core_time; }
};

// Exhaustive search over divisor tilings of every loop dim and the three
// stationarity classes; returns the feasible schedule with minimal
// energy x delay, or feasible=false when nothing fits the GLB.
CoreSchedule explore_intracore(const PartitionedWorkload& pw, const Layer& l,
                               const ArchConfig& cfg, const EnergyTable& et,
                               std::int64_t elem_bytes);

// Memo over slice shapes. One instance per (cfg, energy, model) worker; not
// synchronized.
class ScheduleCache {
public:
	using Key = std::array<std::int64_t, 12>;

	ScheduleCache(const ArchConfig& cfg, const EnergyTable& et, std::int64_t elem_bytes)
	    : cfg_(cfg), et_(et), elem_(elem_bytes) {}
	const CoreSchedule& get(const PartitionedWorkload& pw, const Layer& l);
	size_t size() const { return memo_.size(); }

private:
	struct KeyHash {
		std::size_t operator()(const Key& k) const;
	};
	ArchConfig cfg_;
	EnergyTable et_;
	std::int64_t elem_;
	std::unordered_map<Key, CoreSchedule, KeyHash> memo_;
};

}  // namespace chipdse
