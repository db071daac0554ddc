#include "doctest.h"

#include <array>
#include <cmath>

#include "chipdse/intracore.hpp"
#include "chipdse/util.hpp"
#include "fixtures.hpp"

using namespace chipdse;
using namespace chipdse::tests;

namespace {

PartitionedWorkload slice_of(const Layer& l, std::int64_t b) {
	PartitionedWorkload pw;
	pw.layer = l.id;
	pw.ofmap = {0, b, 0, l.out_k, 0, l.out_h, 0, l.out_w};
	pw.ifmap = {0, b, 0, l.in_c, 0, l.in_h, 0, l.in_w};
	return pw;
}

// Independent check: simulate the tile loop nest step by step, reloading a
// tile whenever its id changes, and count GLB traffic directly.
struct SimResult {
	std::int64_t if_elems = 0, w_elems = 0, o_elems = 0;
};

SimResult simulate_nest(const Layer& l, const PartitionedWorkload& pw,
                        const std::array<std::int64_t, 5>& tile, LoopOrder order) {
	std::int64_t b = pw.ofmap.b1, k = pw.ofmap.k1, h = pw.ofmap.h1, w = pw.ofmap.w1;
	std::int64_t c = pw.ifmap.k1;
	auto [tb, tk, th, tw, tc] = tile;
	std::int64_t nb = b / tb, nk = k / tk, nh = h / th, nw = w / tw, nc = c / tc;
	std::int64_t iht = std::min((th - 1) * l.stride + l.win_r(), pw.ifmap.h1);
	std::int64_t iwt = std::min((tw - 1) * l.stride + l.win_s(), pw.ifmap.w1);
	std::int64_t if_tile = tb * tc * iht * iwt;
	std::int64_t w_tile = tk * tc * l.kr * l.ks;
	std::int64_t o_tile = tb * tk * th * tw;

	// loop dims outer->inner per stationarity class; c innermost keeps psums
	// in the accumulators
	std::array<int, 5> nest{};  // values: 0=b 1=h 2=w 3=k 4=c
	switch (order) {
		case LoopOrder::OutputStationary: nest = {0, 1, 2, 3, 4}; break;
		case LoopOrder::WeightStationary: nest = {3, 4, 0, 1, 2}; break;
		default: nest = {0, 4, 1, 2, 3}; break;  // InputStationary
	}
	std::array<std::int64_t, 5> counts{};
	for (int d = 0; d < 5; ++d) {
		std::int64_t n_of[5] = {nb, nh, nw, nk, nc};
		counts[static_cast<size_t>(d)] = n_of[nest[static_cast<size_t>(d)]];
	}
	SimResult r;
	std::array<std::int64_t, 5> idx{};
	std::array<std::int64_t, 4> last_if{-1, -1, -1, -1};
	std::array<std::int64_t, 2> last_w{-1, -1};
	bool done = false;
	while (!done) {
		std::int64_t iv[5] = {0, 0, 0, 0, 0};
		for (int d = 0; d < 5; ++d) iv[nest[static_cast<size_t>(d)]] = idx[static_cast<size_t>(d)];
		std::array<std::int64_t, 4> if_id{iv[0], iv[4], iv[1], iv[2]};
		std::array<std::int64_t, 2> w_id{iv[3], iv[4]};
		if (if_id != last_if) {
			r.if_elems += if_tile;
			last_if = if_id;
		}
		if (w_id != last_w) {
			r.w_elems += w_tile;
			last_w = w_id;
		}
		if (order == LoopOrder::OutputStationary) {
			if (iv[4] == nc - 1) r.o_elems += o_tile;  // final write only
		} else {
			r.o_elems += o_tile;                      // psum write
			if (iv[4] > 0) r.o_elems += o_tile;       // psum read-back
		}
		// advance mixed-radix counter, innermost first
		int d = 4;
		for (; d >= 0; --d) {
			if (++idx[static_cast<size_t>(d)] < counts[static_cast<size_t>(d)]) break;
			idx[static_cast<size_t>(d)] = 0;
		}
		done = d < 0;
	}
	return r;
}

// exhaustive reference search over all divisor tilings and the three orders
double oracle_best_edp(const Layer& l, const PartitionedWorkload& pw, const ArchConfig& cfg,
                       const EnergyTable& et, std::int64_t e) {
	std::int64_t b = pw.ofmap.b1, k = pw.ofmap.k1, h = pw.ofmap.h1, w = pw.ofmap.w1;
	std::int64_t c = pw.ifmap.k1;
	std::int64_t mac_ops = b * h * w * k * l.kr * l.ks * c;
	std::int64_t cl = std::min<std::int64_t>(16, cfg.mac_per_core);
	std::int64_t kl = std::max<std::int64_t>(1, cfg.mac_per_core / cl);
	double best = HUGE_VAL;
	for (std::int64_t tb = 1; tb <= b; ++tb) {
		if (b % tb) continue;
		for (std::int64_t tk = 1; tk <= k; ++tk) {
			if (k % tk) continue;
			for (std::int64_t th = 1; th <= h; ++th) {
				if (h % th) continue;
				for (std::int64_t tw = 1; tw <= w; ++tw) {
					if (w % tw) continue;
					for (std::int64_t tc = 1; tc <= c; ++tc) {
						if (c % tc) continue;
						std::int64_t iht = std::min((th - 1) * l.stride + l.win_r(), pw.ifmap.h1);
						std::int64_t iwt = std::min((tw - 1) * l.stride + l.win_s(), pw.ifmap.w1);
						std::int64_t wset =
						    2 * e * (tb * tc * iht * iwt + tk * tc * l.kr * l.ks + tb * tk * th * tw);
						if (wset > cfg.glb_per_core) continue;
						std::int64_t cyc = b * h * w * l.kr * l.ks * (c / tc) * ceil_div(tc, cl) *
						                   (k / tk) * ceil_div(tk, kl);
						for (LoopOrder ord : {LoopOrder::OutputStationary, LoopOrder::WeightStationary,
						                      LoopOrder::InputStationary}) {
							SimResult sim = simulate_nest(l, pw, {tb, tk, th, tw, tc}, ord);
							std::int64_t bytes = (sim.if_elems + sim.w_elems + sim.o_elems) * e;
							double t = std::max(static_cast<double>(cyc) / cfg.freq_hz,
							                    static_cast<double>(bytes) / cfg.glb_bandwidth());
							double en = mac_ops * et.mac_pj * 1e-12 + bytes * et.glb_pj_per_byte * 1e-12;
							best = std::min(best, en * t);
						}
					}
				}
			}
		}
	}
	return best;
}

}  // namespace

TEST_CASE("untiled workload keeps compulsory traffic only") {
	DnnGraph g;
	g.batch = 1;
	g.layers.push_back(make_layer("l", LayerKind::Conv, 4, 4, 8, 3, 3, 4, 1, {}));
	finalize_graph(g);
	const Layer& l = g.layers[0];
	ArchConfig cfg = small_arch(2, 2);  // 1 MB GLB, plenty
	EnergyTable et;
	PartitionedWorkload pw = slice_of(l, 1);
	CoreSchedule s = explore_intracore(pw, l, cfg, et, 1);
	REQUIRE(s.feasible);
	CHECK(s.tb == 1);
	CHECK(s.tk == 8);
	CHECK(s.th == 4);
	CHECK(s.tw == 4);
	CHECK(s.tc == 4);
	CHECK(s.glb_if_bytes == l.in_h * l.in_w * l.in_c);
	CHECK(s.glb_wgt_bytes == l.weight_volume());
	CHECK(s.glb_of_bytes == l.ofmap_volume());
}

TEST_CASE("mac-bound workload hits the compute roofline exactly") {
	DnnGraph g;
	g.batch = 1;
	g.layers.push_back(make_layer("l", LayerKind::Conv, 8, 8, 64, 3, 3, 64, 1, {}));
	finalize_graph(g);
	const Layer& l = g.layers[0];
	ArchConfig cfg = small_arch(2, 2);
	EnergyTable et;
	PartitionedWorkload pw = slice_of(l, 1);
	CoreSchedule s = explore_intracore(pw, l, cfg, et, 1);
	REQUIRE(s.feasible);
	double mac_lower = static_cast<double>(s.mac_ops) / (cfg.mac_per_core * cfg.freq_hz);
	CHECK(s.core_time == doctest::Approx(mac_lower).epsilon(1e-12));
}

TEST_CASE("exhaustive oracle equivalence on a small gemm") {
	DnnGraph g;
	g.batch = 1;
	g.layers.push_back(make_layer("g", LayerKind::Gemm, 16, 1, 16, 1, 1, 16, 1, {}));
	finalize_graph(g);
	const Layer& l = g.layers[0];
	ArchConfig cfg = small_arch(2, 2);
	cfg.glb_per_core = 1024;  // force tiling
	EnergyTable et;
	PartitionedWorkload pw = slice_of(l, 1);
	CoreSchedule s = explore_intracore(pw, l, cfg, et, 1);
	REQUIRE(s.feasible);
	double oracle = oracle_best_edp(l, pw, cfg, et, 1);
	CHECK(s.edp() == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("oracle equivalence across shapes and buffer sizes") {
	EnergyTable et;
	struct Case {
		std::int64_t h, w, k, kr, ks, kc, stride, b, glb;
	};
	for (const Case& c : {Case{6, 6, 8, 3, 3, 4, 1, 2, 2048}, Case{12, 4, 6, 1, 1, 12, 1, 1, 1024},
	                      Case{5, 5, 16, 3, 3, 8, 2, 2, 4096}, Case{16, 1, 16, 1, 1, 16, 1, 4, 800}}) {
		DnnGraph g;
		g.batch = c.b;
		g.layers.push_back(make_layer("l", LayerKind::Conv, c.h, c.w, c.k, c.kr, c.ks, c.kc,
		                              c.stride, {}));
		finalize_graph(g);
		const Layer& l = g.layers[0];
		ArchConfig cfg = small_arch(2, 2);
		cfg.glb_per_core = c.glb;
		PartitionedWorkload pw = slice_of(l, c.b);
		CoreSchedule s = explore_intracore(pw, l, cfg, et, 1);
		double oracle = oracle_best_edp(l, pw, cfg, et, 1);
		if (!s.feasible) {
			CHECK(oracle == HUGE_VAL);
			continue;
		}
		CHECK(s.edp() == doctest::Approx(oracle).epsilon(1e-12));
		// compulsory bounds
		CHECK(s.glb_if_bytes >= l.in_h * l.in_w * l.in_c * c.b);
		CHECK(s.glb_of_bytes >= l.ofmap_volume() * c.b);
		CHECK(s.core_time >= static_cast<double>(s.mac_ops) / (cfg.mac_per_core * cfg.freq_hz) - 1e-15);
	}
}

TEST_CASE("infeasible when nothing fits") {
	DnnGraph g;
	g.batch = 1;
	g.layers.push_back(make_layer("l", LayerKind::Conv, 4, 4, 8, 3, 3, 4, 1, {}));
	finalize_graph(g);
	ArchConfig cfg = small_arch(2, 2);
	cfg.glb_per_core = 16;  // smaller than any tile
	EnergyTable et;
	PartitionedWorkload pw = slice_of(g.layers[0], 1);
	CoreSchedule s = explore_intracore(pw, g.layers[0], cfg, et, 1);
	CHECK(!s.feasible);
}

TEST_CASE("weightless layers stream") {
	DnnGraph g;
	g.batch = 2;
	g.layers.push_back(make_layer("p", LayerKind::Pool, 4, 4, 8, 2, 2, 0, 2, {}));
	finalize_graph(g);
	ArchConfig cfg = small_arch(2, 2);
	EnergyTable et;
	PartitionedWorkload pw = slice_of(g.layers[0], 2);
	CoreSchedule s = explore_intracore(pw, g.layers[0], cfg, et, 1);
	REQUIRE(s.feasible);
	CHECK(s.order == LoopOrder::Streaming);
	CHECK(s.mac_ops == 2 * 4 * 4 * 8 * 2 * 2);
	CHECK(s.glb_of_bytes == 2 * 4 * 4 * 8);
}

TEST_CASE("schedule cache memoizes by slice shape") {
	DnnGraph g = two_conv_chain();
	ArchConfig cfg = small_arch(3, 2);
	EnergyTable et;
	ScheduleCache cache(cfg, et, 1);
	PartitionedWorkload pw = slice_of(g.layers[0], 2);
	const CoreSchedule& a = cache.get(pw, g.layers[0]);
	const CoreSchedule& b = cache.get(pw, g.layers[0]);
	CHECK(&a == &b);
	CHECK(cache.size() == 1);
}
