#include "doctest.h"

#include "chipdse/util.hpp"
#include "chipdse/workload.hpp"
#include "fixtures.hpp"

using namespace chipdse;
using namespace chipdse::tests;

TEST_CASE("parse two-layer conv chain") {
	const char* text = R"({
	  "batch": 2,
	  "layers": [
	    {"name": "layer1", "kind": "Conv", "ofmap": [2,2,2], "kernel": [1,1,2], "stride": 1, "predecessors": []},
	    {"name": "layer2", "kind": "Conv", "ofmap": [2,2,2], "kernel": [1,1,2], "stride": 1, "predecessors": ["layer1"]}
	  ]
	})";
	DnnGraph g = parse_model(text);
	CHECK(g.num_layers() == 2);
	CHECK(g.batch == 2);
	CHECK(g.layers[1].preds == std::vector<int>{0});
	CHECK(g.inputs == std::vector<int>{0});
	CHECK(g.outputs == std::vector<int>{1});
	CHECK(g.succs[0] == std::vector<int>{1});
}

TEST_CASE("single layer graph is both input and output") {
	DnnGraph g;
	g.batch = 1;
	g.layers.push_back(make_layer("only", LayerKind::Conv, 4, 4, 8, 3, 3, 3, 1, {}));
	finalize_graph(g);
	CHECK(g.inputs == std::vector<int>{0});
	CHECK(g.outputs == std::vector<int>{0});
	CHECK(g.layers[0].in_h == 6);  // (4-1)*1 + 3
	CHECK(g.layers[0].in_c == 3);
}

TEST_CASE("residual block validates with two-predecessor add") {
	DnnGraph g = residual_block();
	CHECK(g.layers[2].preds.size() == 2);
	CHECK(g.layers[2].weight_volume() == 0);
	CHECK(g.outputs == std::vector<int>{2});
}

TEST_CASE("model errors carry the layer name") {
	SUBCASE("dangling predecessor") {
		const char* text = R"({"batch":1,"layers":[
		  {"name":"a","kind":"Conv","ofmap":[2,2,2],"kernel":[1,1,2],"stride":1,"predecessors":["ghost"]}]})";
		CHECK_THROWS_WITH_AS(parse_model(text), doctest::Contains("a"), Error);
	}
	SUBCASE("forward reference reads as cycle") {
		const char* text = R"({"batch":1,"layers":[
		  {"name":"a","kind":"Conv","ofmap":[2,2,2],"kernel":[1,1,2],"stride":1,"predecessors":["b"]},
		  {"name":"b","kind":"Conv","ofmap":[2,2,2],"kernel":[1,1,2],"stride":1,"predecessors":["a"]}]})";
		CHECK_THROWS_WITH_AS(parse_model(text), doctest::Contains("cycle"), Error);
	}
	SUBCASE("dimension mismatch between producer and consumer") {
		DnnGraph g;
		g.batch = 1;
		g.layers.push_back(make_layer("p", LayerKind::Conv, 4, 4, 8, 1, 1, 3, 1, {}));
		g.layers.push_back(make_layer("c", LayerKind::Conv, 4, 4, 8, 1, 1, 16, 1, {0}));
		CHECK_THROWS_WITH_AS(finalize_graph(g), doctest::Contains("c"), Error);
	}
	SUBCASE("eltwise dims must match") {
		DnnGraph g;
		g.batch = 1;
		g.layers.push_back(make_layer("p", LayerKind::Conv, 4, 4, 8, 1, 1, 3, 1, {}));
		g.layers.push_back(make_layer("add", LayerKind::EltwiseAdd, 4, 4, 16, 0, 0, 0, 1, {0}));
		CHECK_THROWS_AS(finalize_graph(g), Error);
	}
}

TEST_CASE("layer_flops") {
	Layer conv = make_layer("c", LayerKind::Conv, 1, 1, 2, 1, 1, 2, 1, {});
	CHECK(layer_flops(conv, 2) == 16);  // 2*1*1*2*1*1*2*2
	Layer add = make_layer("a", LayerKind::EltwiseAdd, 4, 4, 8, 0, 0, 0, 1, {});
	CHECK(layer_flops(add, 1) == 128);
	Layer gemm = make_layer("g", LayerKind::Gemm, 64, 1, 64, 1, 1, 64, 1, {});
	CHECK(layer_flops(gemm, 1) == 524288);  // 2*M*N*K
	Layer pool = make_layer("p", LayerKind::Pool, 2, 2, 4, 2, 2, 0, 2, {});
	CHECK(layer_flops(pool, 3) == 2 * 2 * 4 * 2 * 2 * 3);
}

TEST_CASE("serialize/parse round trip is identical") {
	DnnGraph g = residual_block();
	std::string text = serialize_model(g);
	DnnGraph g2 = parse_model(text);
	REQUIRE(g2.num_layers() == g.num_layers());
	for (int i = 0; i < g.num_layers(); ++i) {
		CHECK(g2.layers[i].name == g.layers[i].name);
		CHECK(g2.layers[i].kind == g.layers[i].kind);
		CHECK(g2.layers[i].out_h == g.layers[i].out_h);
		CHECK(g2.layers[i].preds == g.layers[i].preds);
		CHECK(g2.layers[i].flops_per_sample == g.layers[i].flops_per_sample);
	}
	CHECK(serialize_model(g2) == text);
}
