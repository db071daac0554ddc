#include "doctest.h"

#include <random>
#include <set>

#include "chipdse/mapping.hpp"
#include "chipdse/util.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace chipdse;
using namespace chipdse::tests;

namespace {

LpSpatialMapping fig3_mapping() {
	LpSpatialMapping lms;
	lms.batch_unit = 2;
	lms.layers = {0, 1};
	LayerMapping m1;
	m1.part = {1, 1, 2, 2};
	m1.cg = {2, 1, 5, 4};
	m1.fd = {1, 1, -1};
	LayerMapping m2;
	m2.part = {1, 1, 1, 2};
	m2.cg = {0, 3};
	m2.fd = {-1, 2, 2};
	lms.maps = {m1, m2};
	return lms;
}

const PartitionedWorkload& pw_at(const ParsedGroup& pg, int layer, std::int64_t h, std::int64_t w,
                                 std::int64_t b, std::int64_t k) {
	for (const PartitionedWorkload& pw : pg.pws)
		if (pw.layer == layer && pw.id_h == h && pw.id_w == w && pw.id_b == b && pw.id_k == k)
			return pw;
	throw Error("pw not found");
}

}  // namespace

TEST_CASE("encoded mapping parses to the expected cores and flows") {
	DnnGraph g = two_conv_chain();
	ArchConfig cfg = small_arch(3, 2);
	ParsedGroup pg = parse_lms(fig3_mapping(), g, cfg);

	CHECK(pw_at(pg, 0, 0, 0, 0, 0).core == 2);
	CHECK(pw_at(pg, 0, 0, 0, 0, 1).core == 1);
	CHECK(pw_at(pg, 0, 0, 0, 1, 0).core == 5);
	CHECK(pw_at(pg, 0, 0, 0, 1, 1).core == 4);
	CHECK(pw_at(pg, 0, 0, 0, 1, 1).nid == 3);

	bool l1_if_dram1 = false, l1_wgt_dram1 = false, l2_wgt_dram2 = false, l2_of_dram2 = false;
	for (const CommDep& dep : pg.deps) {
		if (dep.kind == DepKind::IfmapIn && dep.layer == 0) {
			CHECK(dep.src.is_dram);
			CHECK(dep.src.id == 0);  // DRAM 1
			l1_if_dram1 = true;
		}
		if (dep.kind == DepKind::WeightIn && dep.layer == 0) {
			CHECK(dep.src == NodeRef{true, 0});
			l1_wgt_dram1 = true;
		}
		if (dep.kind == DepKind::WeightIn && dep.layer == 1) {
			CHECK(dep.src == NodeRef{true, 1});  // DRAM 2
			l2_wgt_dram2 = true;
		}
		if (dep.kind == DepKind::OfmapOut) {
			CHECK(dep.layer == 1);
			REQUIRE(dep.dsts.size() == 1);
			CHECK(dep.dsts[0] == NodeRef{true, 1});
			l2_of_dram2 = true;
		}
		if (dep.kind == DepKind::IntraEdge) {
			CHECK(!dep.src.is_dram);
			for (const NodeRef& d : dep.dsts) CHECK(!d.is_dram);
		}
	}
	CHECK(l1_if_dram1);
	CHECK(l1_wgt_dram1);
	CHECK(l2_wgt_dram2);
	CHECK(l2_of_dram2);
}

TEST_CASE("fd sign rules are enforced") {
	DnnGraph g = two_conv_chain();
	ArchConfig cfg = small_arch(3, 2);
	LpSpatialMapping lms = fig3_mapping();
	SUBCASE("weightless flow on weighted layer") {
		lms.maps[0].fd.wgt = -1;
		CHECK_THROWS_WITH_AS(validate_lms(lms, g, cfg), doctest::Contains("layer1"), Error);
	}
	SUBCASE("ofmap must be managed on the boundary") {
		lms.maps[1].fd.ofm = -1;
		CHECK_THROWS_AS(validate_lms(lms, g, cfg), Error);
	}
	SUBCASE("cut exceeding extent") {
		lms.maps[0].part = {4, 1, 1, 1};  // H=2 < 4
		CHECK_THROWS_WITH_AS(validate_lms(lms, g, cfg), doctest::Contains("exceeds"), Error);
	}
	SUBCASE("fd out of range") {
		lms.maps[0].fd.ifm = 3;  // D = 2
		CHECK_THROWS_AS(validate_lms(lms, g, cfg), Error);
	}
	SUBCASE("cg/part product mismatch") {
		lms.maps[0].cg = {2, 1, 5};
		CHECK_THROWS_AS(validate_lms(lms, g, cfg), Error);
	}
}

TEST_CASE("random partitions: nid bijection, exact tiling, byte conservation") {
	std::mt19937_64 rng(7);
	DnnGraph g = two_conv_chain();
	// scale layer dims up so cuts have room
	g.layers[0].out_h = 13;
	g.layers[0].out_w = 9;
	g.layers[0].out_k = 24;
	g.layers[1].out_h = 13;
	g.layers[1].out_w = 9;
	g.layers[1].out_k = 24;
	g.layers[0].kc = 5;
	g.layers[1].kc = 24;
	g.batch = 8;
	finalize_graph(g);

	for (int trial = 0; trial < 300; ++trial) {
		int m = 8 * (1 + static_cast<int>(rng() % 8));  // up to 64 cores
		ArchConfig cfg = small_arch(m / 4, 4);
		std::int64_t bu = 1 + static_cast<std::int64_t>(rng() % 8);
		bool overlap_cgs = trial % 3 == 0;  // cores shared across layers are legal

		auto rand_map = [&](const Layer& l, std::int64_t budget, std::set<int>& used) {
			LayerMapping lm;
			auto pick = [&](std::int64_t extent, std::int64_t cap) {
				std::int64_t hi = std::min({extent, cap, std::int64_t{4}});
				return 1 + static_cast<std::int64_t>(rng() % static_cast<unsigned>(hi));
			};
			lm.part.h = pick(l.out_h, budget);
			lm.part.w = pick(l.out_w, budget / lm.part.h);
			lm.part.b = pick(bu, budget / (lm.part.h * lm.part.w));
			lm.part.k = pick(l.out_k, budget / (lm.part.h * lm.part.w * lm.part.b));
			std::int64_t need = lm.part.product();
			while (static_cast<std::int64_t>(lm.cg.size()) < need) {
				int c = static_cast<int>(rng() % static_cast<unsigned>(m));
				if (!used.count(c)) {
					used.insert(c);
					lm.cg.push_back(c);
				}
			}
			return lm;
		};
		LpSpatialMapping lms;
		lms.batch_unit = bu;
		lms.layers = {0, 1};
		std::set<int> used;
		LayerMapping m1 = rand_map(g.layers[0], m / 2, used);
		if (overlap_cgs) used.clear();
		LayerMapping m2 = rand_map(g.layers[1], m / 2, used);
		m1.fd = {0, 0, -1};
		m2.fd = {-1, 0, 0};
		lms.maps = {m1, m2};

		ParsedGroup pg = parse_lms(lms, g, cfg);

		for (int li = 0; li < 2; ++li) {
			const LayerMapping& lm = lms.maps[static_cast<size_t>(li)];
			const Layer& l = g.layers[static_cast<size_t>(li)];
			// nid -> core is a bijection onto cg
			std::set<int> seen;
			std::int64_t vol = 0;
			std::set<std::int64_t> nids;
			for (const PartitionedWorkload& pw : pg.pws) {
				if (pw.layer != li) continue;
				CHECK(lm.cg[static_cast<size_t>(pw.nid)] == pw.core);
				seen.insert(pw.core);
				nids.insert(pw.nid);
				vol += pw.ofmap.volume();
				CHECK(pw.ofmap.volume() > 0);
			}
			CHECK(seen.size() == lm.cg.size());
			CHECK(nids.size() == lm.cg.size());
			CHECK(*nids.rbegin() == static_cast<std::int64_t>(lm.cg.size()) - 1);
			// slices tile the ofmap cube exactly: disjoint + union-complete
			CHECK(vol == l.out_h * l.out_w * l.out_k * bu);
			for (const PartitionedWorkload& a : pg.pws) {
				if (a.layer != li) continue;
				for (const PartitionedWorkload& b : pg.pws) {
					if (b.layer != li || &a == &b) continue;
					CHECK(a.ofmap.intersect(b.ofmap).empty());
				}
			}
		}

		// receive-side byte conservation on the intra-group edge
		std::int64_t sent = 0;
		for (const CommDep& dep : pg.deps)
			if (dep.kind == DepKind::IntraEdge)
				sent += dep.bytes * static_cast<std::int64_t>(dep.dsts.size());
		std::int64_t needed = 0;
		for (const PartitionedWorkload& pw : pg.pws) {
			if (pw.layer != 1) continue;
			// bytes this consumer receives from producer cores other than its own
			for (const PartitionedWorkload& q : pg.pws) {
				if (q.layer != 0 || q.core == pw.core) continue;
				needed += pw.ifmap.intersect(q.ofmap).volume() * g.elem_bytes;
			}
		}
		CHECK(sent == needed);
	}
}

TEST_CASE("space-size formula matches the independent oracle") {
	CHECK(lms_space_size(1, 2).str() == "8");
	CHECK(lms_space_size(2, 4).str() == "576");
	for (int m = 3; m <= 64; m += 7)
		for (int n = 1; n < m; n += 3) CHECK(lms_space_size(n, m).str() == space_size_oracle(n, m));
	CHECK_THROWS_AS(lms_space_size(4, 4), std::domain_error);
}

TEST_CASE("stripe-space size against enumeration") {
	CHECK(stripe_space_size(1, 5).str() == "7");
	CHECK(stripe_space_size(3, 1).str() == "3");
	CHECK(stripe_space_size(2, 10).str() == "84");
	CHECK(partition_count(4) == 5);
	for (int m = 1; m <= 30; ++m) CHECK(partition_count(m) == enumerate_partitions(m));
	CHECK(stripe_space_size(2, 4).str() == "10");
}

TEST_CASE("log-space size agrees with the exact value") {
	for (int m = 4; m <= 64; m += 10)
		for (int n = 2; n < m; n += 5) {
			std::string s = lms_space_size(n, m).str();
			std::string lead = s.substr(0, std::min<size_t>(15, s.size()));
			double exact_log10 =
			    std::log10(std::stod(lead)) + static_cast<double>(s.size() - lead.size());
			double lg = log_lms_space_size(n, m) / std::log(10.0);
			CHECK(lg == doctest::Approx(exact_log10).epsilon(1e-9));
		}
}

TEST_CASE("stripe initial mapping") {
	SUBCASE("two equal layers get column strips") {
		DnnGraph g = two_conv_chain();
		g.layers[0].out_k = 8;
		g.layers[0].kc = 8;
		g.layers[1].out_k = 8;
		g.layers[1].kc = 8;
		finalize_graph(g);
		ArchConfig cfg = small_arch(2, 3);
		LpSpatialMapping lms = stripe_initial_mapping({0, 1}, 1, g, cfg);
		CHECK(lms.maps[0].cg == std::vector<int>{0, 2, 4});  // column x=0
		CHECK(lms.maps[1].cg == std::vector<int>{1, 3, 5});  // column x=1
		CHECK(lms.maps[0].fd.ifm == 0);
		CHECK(lms.maps[0].fd.wgt == 0);
		CHECK(lms.maps[0].fd.ofm == -1);
		CHECK(lms.maps[1].fd.ofm == 0);
	}
	SUBCASE("single layer takes the whole mesh") {
		DnnGraph g;
		g.batch = 2;
		g.layers.push_back(make_layer("l", LayerKind::Conv, 8, 8, 16, 1, 1, 4, 1, {}));
		finalize_graph(g);
		ArchConfig cfg = small_arch(3, 2);
		LpSpatialMapping lms = stripe_initial_mapping({0}, 2, g, cfg);
		CHECK(lms.maps[0].cg.size() == 6);
	}
	SUBCASE("flops-proportional allocation 2:1:1 over 8 cores") {
		DnnGraph g;
		g.batch = 1;
		g.layers.push_back(make_layer("a", LayerKind::Conv, 8, 8, 16, 1, 1, 8, 1, {}));
		g.layers.push_back(make_layer("b", LayerKind::Conv, 8, 8, 8, 1, 1, 16, 1, {0}));
		g.layers.push_back(make_layer("c", LayerKind::Conv, 8, 8, 8, 1, 1, 8, 1, {1}));
		// flops: a = 2*64*16*8, b = 2*64*8*16, c = 2*64*8*8 -> ratio 2:2:1
		g.layers[0].out_k = 16;
		finalize_graph(g);
		ArchConfig cfg = small_arch(4, 2);
		LpSpatialMapping lms = stripe_initial_mapping({0, 1, 2}, 1, g, cfg);
		CHECK(lms.maps[0].cg.size() + lms.maps[1].cg.size() + lms.maps[2].cg.size() == 8);
		CHECK(lms.maps[0].cg.size() == 3);
		CHECK(lms.maps[1].cg.size() == 3);
		CHECK(lms.maps[2].cg.size() == 2);
	}
}

TEST_CASE("partition choice trades ifmap sharing against weight sharing") {
	// k-only split: every core needs the whole ifmap but 1/4 of the weights;
	// b+k split: half the ifmap, half the weights
	DnnGraph g = two_conv_chain();
	g.layers[0].out_k = 4;
	g.layers[1].kc = 4;
	finalize_graph(g);
	ArchConfig cfg = small_arch(3, 2);
	const Layer& l1 = g.layers[0];
	std::int64_t full_if = l1.in_h * l1.in_w * l1.in_c * 1;  // one sample
	std::int64_t full_w = l1.weight_volume();

	LpSpatialMapping bk;
	bk.batch_unit = 2;
	bk.layers = {0};
	bk.maps.push_back({{1, 1, 2, 2}, {0, 1, 2, 3}, {0, 0, 0}});
	// single-layer group: the layer is also the group boundary
	ParsedGroup pg = parse_lms(bk, g, cfg);
	for (const PartitionedWorkload& pw : pg.pws) {
		if (pw.layer != 0) continue;
		CHECK(pw.ifmap_bytes == full_if);  // half the batch-unit's ifmap volume
		CHECK(pw.weight_bytes == full_w / 2);
	}

	LpSpatialMapping konly;
	konly.batch_unit = 2;
	konly.layers = {0};
	konly.maps.push_back({{1, 1, 1, 4}, {0, 1, 2, 3}, {0, 0, 0}});
	pg = parse_lms(konly, g, cfg);
	for (const PartitionedWorkload& pw : pg.pws) {
		if (pw.layer != 0) continue;
		CHECK(pw.ifmap_bytes == 2 * full_if);  // the entire two-sample ifmap
		CHECK(pw.weight_bytes == full_w / 4);
	}
}
