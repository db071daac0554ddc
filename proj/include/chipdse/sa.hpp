#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "chipdse/arch.hpp"
#include "chipdse/energy.hpp"
#include "chipdse/evaluator.hpp"
#include "chipdse/mapping.hpp"
#include "chipdse/partition.hpp"

namespace chipdse {

// The five mapping-space moves: re-draw one layer's partition, swap two cores
// within one layer, swap cores across two layers, move a core from one
// layer's group to another (re-drawing both partitions), rebind one managed
// data flow to another DRAM.
enum class SaOp { PartResample, SwapWithin, SwapAcross, MoveCore, RebindDram };
constexpr int kNumSaOps = 5;

struct OpContext {
	const DnnGraph* graph = nullptr;
	const ArchConfig* cfg = nullptr;
};

// Returns a mapping that satisfies validity; when the operator cannot apply
// after bounded retries, returns the input unchanged.
LpSpatialMapping apply_operator(const LpSpatialMapping& lms, SaOp op, std::mt19937_64& rng,
                                const OpContext& ctx);

// Draws a group index with probability proportional to exp(log_weight).
int select_group(const std::vector<double>& log_weights, std::mt19937_64& rng);

struct SaParams {
	double beta = 1, gamma = 1;           // group cost = E^beta * D^gamma
	std::int64_t proposals_per_layer_core = 200;  // budget = 200 * N_g * M per group
	std::int64_t cool_every_factor = 5;           // cool every 5 * N_g * M proposals to a group
	double cool_rate = 0.98;
	int warmup = 100;
	std::string trace_path;  // per-iteration CSV when non-empty
};

struct AnnealResult {
	std::vector<GroupMapping> mappings;
	double cost = 0;  // sum of group E^beta * D^gamma at the final state
	DnnEval eval;     // full evaluation of the returned mappings
	std::int64_t proposals = 0, accepted = 0;
};

// Simulated annealing over the per-group mapping spaces, starting from the
// stripe baseline. Deterministic for a given seed.
AnnealResult anneal(const DnnGraph& g, const std::vector<LayerGroup>& groups,
                    const ArchConfig& cfg, const Topology& topo, const EnergyTable& et,
                    const SaParams& params, std::uint64_t seed, ScheduleCache& cache);

}  // namespace chipdse
