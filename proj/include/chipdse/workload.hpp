#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace chipdse {

enum class LayerKind { Conv, Gemm, Pool, EltwiseAdd, Matmul, Activation };

const char* layer_kind_name(LayerKind k);
bool kind_has_weights(LayerKind k);

// One DNN layer. Ofmap dims are (H, W, K); the kernel is (R, S, C) with
// C = 0 for weightless kinds (Pool keeps its R x S window, EltwiseAdd and
// Activation are all-zero). Gemm/Matmul express an MxNxK product as
// ofmap (M, 1, N) with kernel (1, 1, K).
struct Layer {
	int id = -1;
	std::string name;
	LayerKind kind = LayerKind::Conv;
	std::int64_t out_h = 1, out_w = 1, out_k = 1;
	std::int64_t kr = 0, ks = 0, kc = 0;
	std::int64_t stride = 1;
	std::vector<int> preds;
	std::int64_t flops_per_sample = 0;

	// ifmap extents, derived during validation
	std::int64_t in_h = 0, in_w = 0, in_c = 0;

	std::int64_t ofmap_volume() const { return out_h * out_w * out_k; }
	std::int64_t weight_volume() const { return kr * ks * kc * out_k; }
	bool has_weights() const { return weight_volume() > 0; }
	// effective sliding window for ifmap deduction (1x1 for elementwise kinds)
	std::int64_t win_r() const;
	std::int64_t win_s() const;
	// does the ifmap channel range follow the ofmap k range (channel-preserving
	// kinds) or cover all C input channels (reduction kinds)?
	bool channel_preserving() const;
};

struct DnnGraph {
	std::vector<Layer> layers;
	std::vector<std::vector<int>> succs;
	std::vector<int> inputs;   // layers consuming external DNN input
	std::vector<int> outputs;  // layers producing DNN output
	std::int64_t batch = 1;
	std::int64_t elem_bytes = 1;

	int num_layers() const { return static_cast<int>(layers.size()); }
	const Layer& layer(int id) const { return layers.at(static_cast<size_t>(id)); }
	// channel offset of predecessor `pred_pos` within `layer`'s ifmap
	std::int64_t pred_channel_offset(int layer, int pred_pos) const;
};

std::int64_t layer_flops(const Layer& l, std::int64_t batch);

// Parse a JSON model description into a validated layer DAG. Layer order in
// the file must already be topological (predecessors defined first).
DnnGraph parse_model(const std::string& text);
std::string serialize_model(const DnnGraph& g);

// Validates invariants and fills derived fields (ifmap extents, succs,
// inputs/outputs, flops). parse_model calls this; callers constructing
// graphs programmatically should too.
void finalize_graph(DnnGraph& g);

}  // namespace chipdse
