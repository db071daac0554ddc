#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "chipdse/arch.hpp"
#include "chipdse/energy.hpp"
#include "chipdse/evaluator.hpp"
#include "chipdse/workload.hpp"

namespace chipdse {

struct LayerGroup {
	std::vector<int> layers;  // contiguous in topological order
	std::int64_t batch_unit = 1;
	int depth = 1;
};

// scalar stage cost of mapping `layers` as one group at `batch_unit`
using GroupCostFn =
    std::function<double(const std::vector<int>& layers, std::int64_t batch_unit)>;

// Minimum-cost contiguous segmentation of the layer list, jointly choosing a
// power-of-two batch unit per segment. Segment length is capped at
// `max_layers_per_group` (the core count).
std::vector<LayerGroup> dp_partition(const DnnGraph& g, int max_layers_per_group,
                                     const GroupCostFn& cost);

// Default segment cost: evaluate the stripe baseline mapping of the segment
// and return E^beta * D^gamma (infinity when the segment cannot be mapped).
GroupCostFn make_stripe_cost_oracle(const DnnGraph& g, const ArchConfig& cfg,
                                    const Topology& topo, const EnergyTable& et, double beta,
                                    double gamma, ScheduleCache& cache);

}  // namespace chipdse
