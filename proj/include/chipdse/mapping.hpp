#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "chipdse/arch.hpp"
#include "chipdse/bigint.hpp"
#include "chipdse/workload.hpp"

namespace chipdse {

// 4-way partition counts of a layer's (H, W, B, K) output cube.
struct Partition4D {
	std::int64_t h = 1, w = 1, b = 1, k = 1;
	std::int64_t product() const { return h * w * b * k; }
	bool operator==(const Partition4D&) const = default;
};

// Per-layer DRAM bindings: -1 = absent/implicitly managed, 0 = interleaved
// over all DRAMs, v >= 1 = DRAM id v.
struct FlowOfData {
	int ifm = -1, wgt = -1, ofm = -1;
	bool operator==(const FlowOfData&) const = default;
};

struct LayerMapping {
	Partition4D part;
	std::vector<int> cg;  // ordered, distinct core ids
	FlowOfData fd;
};

// The mapping scheme of one layer group: one LayerMapping per layer,
// aligned with `layers`.
struct LpSpatialMapping {
	int group_id = 0;
	std::int64_t batch_unit = 1;
	std::vector<int> layers;
	std::vector<LayerMapping> maps;

	const LayerMapping& of(int layer) const;
	LayerMapping& of(int layer);
};

// Half-open box in (b, k, h, w) coordinates.
struct Box4 {
	std::int64_t b0 = 0, b1 = 0, k0 = 0, k1 = 0, h0 = 0, h1 = 0, w0 = 0, w1 = 0;
	std::int64_t volume() const {
		return empty() ? 0 : (b1 - b0) * (k1 - k0) * (h1 - h0) * (w1 - w0);
	}
	bool empty() const { return b1 <= b0 || k1 <= k0 || h1 <= h0 || w1 <= w0; }
	Box4 intersect(const Box4& o) const;
	bool operator==(const Box4&) const = default;
	auto operator<=>(const Box4&) const = default;
};

struct PartitionedWorkload {
	int layer = -1;
	std::int64_t id_h = 0, id_w = 0, id_b = 0, id_k = 0;
	std::int64_t nid = 0;
	int core = -1;
	Box4 ofmap;                    // ofmap slice, b relative to the batch unit
	Box4 ifmap;                    // needed ifmap region (k = input channels), clamped
	std::int64_t weight_bytes = 0;
	std::int64_t ifmap_bytes = 0;  // volume of `ifmap` x elem
};

struct NodeRef {
	bool is_dram = false;
	int id = 0;  // core id, or DRAM index in [0, D)
	bool operator==(const NodeRef&) const = default;
	auto operator<=>(const NodeRef&) const = default;
};

enum class DepKind { IfmapIn, WeightIn, OfmapOut, IntraEdge };

// One data movement of a pipeline stage: `bytes` of identical payload from
// src to every dst (|dsts| > 1 means multicast).
struct CommDep {
	NodeRef src;
	std::vector<NodeRef> dsts;
	std::int64_t bytes = 0;
	DepKind kind = DepKind::IntraEdge;
	int layer = -1;
};

struct ParsedGroup {
	std::vector<PartitionedWorkload> pws;
	std::vector<CommDep> deps;
	std::int64_t batch_unit = 1;
	int depth = 1;  // longest dependency chain, in layers
};

// Balanced split of `extent` into `parts`: the first (extent % parts) slices
// get one extra element. Returns [lo, hi) of slice `idx`.
std::pair<std::int64_t, std::int64_t> split_range(std::int64_t extent, std::int64_t parts,
                                                  std::int64_t idx);

// Longest dependency chain within the induced subgraph, in layers.
int chain_depth(const DnnGraph& g, const std::vector<int>& layers);

void validate_lms(const LpSpatialMapping& lms, const DnnGraph& g, const ArchConfig& cfg);

// Parses an encoded mapping into per-core workloads plus the communication
// dependency set of one pipeline stage. `upstream_dram` gives, per layer of
// an earlier group, the DRAM binding of its ofmaps (entries use the FD value
// convention); absent entries default to interleaved.
ParsedGroup parse_lms(const LpSpatialMapping& lms, const DnnGraph& g, const ArchConfig& cfg,
                      const std::map<int, int>* upstream_dram = nullptr);

// Heuristic baseline: contiguous rectangle-ish core runs sized proportional
// to layer FLOPs, k/b-preferred partitions, all managed flows interleaved.
LpSpatialMapping stripe_initial_mapping(const std::vector<int>& group_layers,
                                        std::int64_t batch_unit, const DnnGraph& g,
                                        const ArchConfig& cfg);

// Lower bound of the mapping space for N layers on M cores:
//   M! * sum_{i=0}^{N-1} C(N,i) * C(M-N-1, N-i-1) * 4^(N-i)
// Defined for 1 <= N < M; throws std::domain_error otherwise.
BigUint lms_space_size(int n_layers, int n_cores);
// Natural log of the same, computed in floating point; returns 0 (weight 1)
// where the formula is undefined.
double log_lms_space_size(int n_layers, int n_cores);

// N * part(M), the upper bound of the stripe-heuristic space.
BigUint stripe_space_size(int n_layers, int n_cores);

}  // namespace chipdse
