#include "chipdse/workload.hpp"

#include <map>
#include <sstream>

#include "chipdse/util.hpp"
#include "json.hpp"

namespace chipdse {

using nlohmann::json;

const char* layer_kind_name(LayerKind k) {
	switch (k) {
		case LayerKind::Conv: return "Conv";
		case LayerKind::Gemm: return "Gemm";
		case LayerKind::Pool: return "Pool";
		case LayerKind::EltwiseAdd: return "EltwiseAdd";
		case LayerKind::Matmul: return "Matmul";
		case LayerKind::Activation: return "Activation";
	}
	return "?";
}

bool kind_has_weights(LayerKind k) {
	return k == LayerKind::Conv || k == LayerKind::Gemm || k == LayerKind::Matmul;
}

static LayerKind kind_from_string(const std::string& s) {
	if (s == "Conv") return LayerKind::Conv;
	if (s == "Gemm" || s == "GEMM" || s == "FC" || s == "FullyConnected") return LayerKind::Gemm;
	if (s == "Pool") return LayerKind::Pool;
	if (s == "EltwiseAdd" || s == "Add") return LayerKind::EltwiseAdd;
	if (s == "Matmul") return LayerKind::Matmul;
	if (s == "Activation" || s == "Act") return LayerKind::Activation;
	throw Error("unknown layer kind '" + s + "'");
}

std::int64_t Layer::win_r() const {
	return (kind == LayerKind::EltwiseAdd || kind == LayerKind::Activation) ? 1 : std::max<std::int64_t>(kr, 1);
}

std::int64_t Layer::win_s() const {
	return (kind == LayerKind::EltwiseAdd || kind == LayerKind::Activation) ? 1 : std::max<std::int64_t>(ks, 1);
}

bool Layer::channel_preserving() const {
	return !kind_has_weights(kind);
}

std::int64_t DnnGraph::pred_channel_offset(int layer_id, int pred_pos) const {
	const Layer& l = layer(layer_id);
	if (l.kind == LayerKind::EltwiseAdd) return 0;  // every input covers all channels
	std::int64_t off = 0;
	for (int i = 0; i < pred_pos; ++i) off += layer(l.preds[static_cast<size_t>(i)]).out_k;
	return off;
}

std::int64_t layer_flops(const Layer& l, std::int64_t batch) {
	switch (l.kind) {
		case LayerKind::Conv:
		case LayerKind::Gemm:
		case LayerKind::Matmul:
			return 2 * l.out_h * l.out_w * l.out_k * l.kr * l.ks * l.kc * batch;
		case LayerKind::Pool:
			return l.out_h * l.out_w * l.out_k * l.kr * l.ks * batch;
		case LayerKind::EltwiseAdd:
		case LayerKind::Activation:
			return l.out_h * l.out_w * l.out_k * batch;
	}
	return 0;
}

static void check_kernel_shape(const Layer& l) {
	switch (l.kind) {
		case LayerKind::Conv:
		case LayerKind::Gemm:
		case LayerKind::Matmul:
			if (l.kr < 1 || l.ks < 1 || l.kc < 1)
				throw Error("layer '" + l.name + "': weighted kind needs kernel dims >= 1");
			break;
		case LayerKind::Pool:
			if (l.kr < 1 || l.ks < 1 || l.kc != 0)
				throw Error("layer '" + l.name + "': pool kernel must be [R,S,0]");
			break;
		case LayerKind::EltwiseAdd:
		case LayerKind::Activation:
			if (l.kr != 0 || l.ks != 0 || l.kc != 0)
				throw Error("layer '" + l.name + "': weightless kind must have zero kernel");
			break;
	}
}

void finalize_graph(DnnGraph& g) {
	if (g.layers.empty()) throw Error("model has no layers");
	if (g.batch < 1) throw Error("batch must be positive");
	if (g.elem_bytes < 1) throw Error("elem_bytes must be positive");
	g.succs.assign(g.layers.size(), {});
	for (size_t i = 0; i < g.layers.size(); ++i) {
		Layer& l = g.layers[i];
		l.id = static_cast<int>(i);
		if (l.out_h < 1 || l.out_w < 1 || l.out_k < 1)
			throw Error("layer '" + l.name + "': ofmap dims must be positive");
		if (l.stride < 1) throw Error("layer '" + l.name + "': stride must be positive");
		check_kernel_shape(l);
		for (int p : l.preds) {
			if (p < 0 || p >= static_cast<int>(i))
				throw Error("layer '" + l.name + "': predecessor out of order (cycle or forward reference)");
			g.succs[static_cast<size_t>(p)].push_back(l.id);
		}

		// ifmap extents
		if (l.preds.empty()) {
			l.in_h = (l.out_h - 1) * l.stride + l.win_r();
			l.in_w = (l.out_w - 1) * l.stride + l.win_s();
			l.in_c = l.channel_preserving() ? l.out_k : l.kc;
		} else {
			const Layer& p0 = g.layers[static_cast<size_t>(l.preds[0])];
			std::int64_t sum_k = 0;
			for (int p : l.preds) {
				const Layer& pl = g.layers[static_cast<size_t>(p)];
				if (pl.out_h != p0.out_h || pl.out_w != p0.out_w)
					throw Error("layer '" + l.name + "': predecessors disagree on spatial dims");
				sum_k += pl.out_k;
			}
			l.in_h = p0.out_h;
			l.in_w = p0.out_w;
			if (l.kind == LayerKind::EltwiseAdd) {
				for (int p : l.preds) {
					const Layer& pl = g.layers[static_cast<size_t>(p)];
					if (pl.out_h != l.out_h || pl.out_w != l.out_w || pl.out_k != l.out_k)
						throw Error("layer '" + l.name + "': eltwise input dims must equal ofmap dims (got '" +
						            pl.name + "')");
				}
				l.in_c = l.out_k;
			} else {
				std::int64_t want_c = l.channel_preserving() ? l.out_k : l.kc;
				if (sum_k != want_c)
					throw Error("layer '" + l.name + "': predecessor channels sum to " + std::to_string(sum_k) +
					            ", need " + std::to_string(want_c));
				l.in_c = want_c;
			}
			// the stride-spaced output grid must fit in the ifmap, and the ifmap
			// must be covered by the receptive field
			std::int64_t lo_h = (l.out_h - 1) * l.stride + 1, hi_h = (l.out_h - 1) * l.stride + l.win_r();
			std::int64_t lo_w = (l.out_w - 1) * l.stride + 1, hi_w = (l.out_w - 1) * l.stride + l.win_s();
			if (l.in_h < lo_h || l.in_h > hi_h || l.in_w < lo_w || l.in_w > hi_w)
				throw Error("layer '" + l.name + "': ofmap dims inconsistent with predecessor ofmap dims");
		}
		l.flops_per_sample = layer_flops(l, 1);
	}
	g.inputs.clear();
	g.outputs.clear();
	for (const Layer& l : g.layers) {
		if (l.preds.empty()) g.inputs.push_back(l.id);
		if (g.succs[static_cast<size_t>(l.id)].empty()) g.outputs.push_back(l.id);
	}
}

DnnGraph parse_model(const std::string& text) {
	json j;
	try {
		j = json::parse(text);
	} catch (const json::exception& e) {
		throw Error(std::string("model file is not valid JSON: ") + e.what());
	}
	DnnGraph g;
	g.batch = j.value("batch", std::int64_t{1});
	g.elem_bytes = j.value("elem_bytes", std::int64_t{1});
	if (!j.contains("layers") || !j["layers"].is_array()) throw Error("model file needs a 'layers' array");
	std::map<std::string, int> by_name;
	for (const auto& jl : j["layers"]) {
		Layer l;
		l.name = jl.at("name").get<std::string>();
		if (by_name.count(l.name)) throw Error("duplicate layer name '" + l.name + "'");
		l.kind = kind_from_string(jl.at("kind").get<std::string>());
		auto of = jl.at("ofmap");
		l.out_h = of.at(0).get<std::int64_t>();
		l.out_w = of.at(1).get<std::int64_t>();
		l.out_k = of.at(2).get<std::int64_t>();
		if (jl.contains("kernel")) {
			auto ke = jl["kernel"];
			l.kr = ke.at(0).get<std::int64_t>();
			l.ks = ke.at(1).get<std::int64_t>();
			l.kc = ke.at(2).get<std::int64_t>();
		}
		l.stride = jl.value("stride", std::int64_t{1});
		for (const auto& pn : jl.value("predecessors", std::vector<std::string>{})) {
			auto it = by_name.find(pn);
			if (it == by_name.end())
				throw Error("layer '" + l.name + "': predecessor '" + pn +
				            "' is undefined here (dangling name, cycle or forward reference)");
			l.preds.push_back(it->second);
		}
		by_name[l.name] = static_cast<int>(g.layers.size());
		g.layers.push_back(std::move(l));
	}
	finalize_graph(g);
	return g;
}

std::string serialize_model(const DnnGraph& g) {
	json j;
	j["batch"] = g.batch;
	j["elem_bytes"] = g.elem_bytes;
	j["layers"] = json::array();
	for (const Layer& l : g.layers) {
		json jl;
		jl["name"] = l.name;
		jl["kind"] = layer_kind_name(l.kind);
		jl["ofmap"] = {l.out_h, l.out_w, l.out_k};
		jl["kernel"] = {l.kr, l.ks, l.kc};
		jl["stride"] = l.stride;
		std::vector<std::string> preds;
		for (int p : l.preds) preds.push_back(g.layer(p).name);
		jl["predecessors"] = preds;
		j["layers"].push_back(std::move(jl));
	}
	return j.dump(2);
}

}  // namespace chipdse
