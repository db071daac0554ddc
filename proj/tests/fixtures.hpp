#pragma once

#include "chipdse/arch.hpp"
#include "chipdse/workload.hpp"

namespace chipdse::tests {

inline Layer make_layer(const std::string& name, LayerKind kind, std::int64_t h, std::int64_t w,
                        std::int64_t k, std::int64_t kr, std::int64_t ks, std::int64_t kc,
                        std::int64_t stride, std::vector<int> preds) {
	Layer l;
	l.name = name;
	l.kind = kind;
	l.out_h = h;
	l.out_w = w;
	l.out_k = k;
	l.kr = kr;
	l.ks = ks;
	l.kc = kc;
	l.stride = stride;
	l.preds = std::move(preds);
	return l;
}

// two chained convs, batch 2: layer1 splits across batch and channel
inline DnnGraph two_conv_chain() {
	DnnGraph g;
	g.batch = 2;
	g.layers.push_back(make_layer("layer1", LayerKind::Conv, 2, 2, 2, 1, 1, 2, 1, {}));
	g.layers.push_back(make_layer("layer2", LayerKind::Conv, 2, 2, 2, 1, 1, 2, 1, {0}));
	finalize_graph(g);
	return g;
}

// conv -> conv -> add with skip
inline DnnGraph residual_block() {
	DnnGraph g;
	g.batch = 1;
	g.layers.push_back(make_layer("c1", LayerKind::Conv, 8, 8, 16, 3, 3, 16, 1, {}));
	g.layers.push_back(make_layer("c2", LayerKind::Conv, 8, 8, 16, 3, 3, 16, 1, {0}));
	g.layers.push_back(make_layer("add", LayerKind::EltwiseAdd, 8, 8, 16, 0, 0, 0, 1, {0, 1}));
	finalize_graph(g);
	return g;
}

// three chained matmuls with heavy inter-layer tensors
inline DnnGraph transformer_block(std::int64_t seq = 64, std::int64_t dim = 128,
                                  std::int64_t batch = 4) {
	DnnGraph g;
	g.batch = batch;
	g.layers.push_back(make_layer("proj_q", LayerKind::Gemm, seq, 1, dim, 1, 1, dim, 1, {}));
	g.layers.push_back(make_layer("attn", LayerKind::Matmul, seq, 1, dim, 1, 1, dim, 1, {0}));
	g.layers.push_back(make_layer("ffn", LayerKind::Gemm, seq, 1, dim, 1, 1, dim, 1, {1}));
	finalize_graph(g);
	return g;
}

inline ArchConfig small_arch(int cx, int cy, int xcut = 1, int ycut = 1, int drams = 2) {
	ArchConfig c;
	c.cores_x = cx;
	c.cores_y = cy;
	c.x_cut = xcut;
	c.y_cut = ycut;
	c.noc_bw = 32e9;
	c.d2d_bw = 32e9;
	c.dram_bw_total = 64e9;
	c.dram_count = drams;
	c.glb_per_core = 1 << 20;
	c.mac_per_core = 1024;
	c.freq_hz = 1e9;
	return c;
}

}  // namespace chipdse::tests
