#include "doctest.h"

#include <set>

#include "chipdse/arch.hpp"
#include "chipdse/util.hpp"
#include "fixtures.hpp"

using namespace chipdse;
using namespace chipdse::tests;

TEST_CASE("core count derivation holds total compute constant") {
	ArchGrid grid;
	grid.tops = 72;
	grid.mac_per_core = {1024};
	CandidateSet cs = enumerate_candidates(grid);
	REQUIRE(cs.valid.size() == 1);
	CHECK(cs.valid[0].cores() == 36);
	CHECK(cs.valid[0].cores_x == 6);
	CHECK(cs.valid[0].cores_y == 6);
	CHECK(cs.valid[0].tops() == doctest::Approx(72.0));

	grid.mac_per_core = {2048};
	cs = enumerate_candidates(grid);
	REQUIRE(cs.valid.size() == 1);
	CHECK(cs.valid[0].cores() == 18);
	CHECK(cs.valid[0].cores_x == 6);
	CHECK(cs.valid[0].cores_y == 3);
	CHECK(cs.valid[0].tops() == doctest::Approx(72.0));
}

TEST_CASE("invalid cuts are rejected with a reason") {
	ArchGrid grid;
	grid.tops = 72;
	grid.mac_per_core = {1024};
	grid.x_cut = {4};  // 4 does not divide 6
	CandidateSet cs = enumerate_candidates(grid);
	CHECK(cs.valid.empty());
	REQUIRE(cs.rejected.size() == 1);
	CHECK(cs.rejected[0].reason.find("divide") != std::string::npos);
}

TEST_CASE("unreachable compute target errors") {
	ArchGrid grid;
	grid.tops = 72;
	grid.mac_per_core = {8192};  // 4.5 cores
	CHECK_THROWS_AS(enumerate_candidates(grid), Error);
}

TEST_CASE("monolithic candidates are not duplicated per d2d ratio") {
	ArchGrid grid;
	grid.tops = 72;
	grid.mac_per_core = {1024};
	grid.x_cut = {1, 2};
	grid.d2d_bw_ratio = {0.25, 0.5, 1};
	CandidateSet cs = enumerate_candidates(grid);
	// 1 monolithic + 3 ratios for the 2-chiplet cut
	CHECK(cs.valid.size() == 4);
}

TEST_CASE("link classification counts boundary crossings") {
	SUBCASE("8x8 with 2x2 cuts") {
		Topology t = make_topology(small_arch(8, 8, 2, 2));
		CHECK(t.count_d2d_links() == 16);  // 8 per axis
		CHECK(t.chiplet_of(t.node_at(3, 0)) == 0);
		CHECK(t.chiplet_of(t.node_at(4, 0)) == 1);
		CHECK(t.link_is_d2d(t.node_at(3, 0), t.node_at(4, 0)));
		CHECK(!t.link_is_d2d(t.node_at(2, 0), t.node_at(3, 0)));
	}
	SUBCASE("monolithic has zero d2d links") {
		Topology t = make_topology(small_arch(6, 6, 1, 1));
		CHECK(t.count_d2d_links() == 0);
	}
	SUBCASE("6x6 split in x only") {
		Topology t = make_topology(small_arch(6, 6, 2, 1));
		CHECK(t.count_d2d_links() == 6);
	}
	SUBCASE("partition: every mesh link is on-chip or d2d") {
		Topology t = make_topology(small_arch(6, 6, 3, 2));
		int d2d = 0, onchip = 0;
		for (int y = 0; y < 6; ++y)
			for (int x = 0; x < 6; ++x) {
				if (x + 1 < 6) (t.link_is_d2d(t.node_at(x, y), t.node_at(x + 1, y)) ? d2d : onchip)++;
				if (y + 1 < 6) (t.link_is_d2d(t.node_at(x, y), t.node_at(x, y + 1)) ? d2d : onchip)++;
			}
		CHECK(d2d == t.count_d2d_links());
		CHECK(d2d + onchip == t.count_mesh_links());
	}
}

TEST_CASE("chiplet id constant within a chiplet, changes across cuts") {
	Topology t = make_topology(small_arch(6, 6, 3, 2));
	std::set<int> ids;
	for (int y = 0; y < 6; ++y)
		for (int x = 0; x < 6; ++x) ids.insert(t.chiplet_of(t.node_at(x, y)));
	CHECK(ids.size() == 6);
	CHECK(t.chiplet_of(t.node_at(0, 0)) == t.chiplet_of(t.node_at(1, 2)));
	CHECK(t.chiplet_of(t.node_at(1, 2)) != t.chiplet_of(t.node_at(2, 2)));
	CHECK(t.chiplet_of(t.node_at(1, 2)) != t.chiplet_of(t.node_at(1, 3)));
}

TEST_CASE("dram controllers attach to edge routers with enough ports") {
	ArchConfig c = small_arch(6, 6);
	c.dram_count = 2;
	c.dram_bw_total = 128e9;  // 64 GB/s per controller, 32 GB/s links -> 2 routers
	Topology t = make_topology(c);
	REQUIRE(t.num_drams() == 2);
	CHECK(t.dram_routers[0].size() == 2);
	for (int r : t.dram_routers[0]) CHECK(t.x_of(r) == 0);
	for (int r : t.dram_routers[1]) CHECK(t.x_of(r) == 5);
}

TEST_CASE("xy path routes x then y") {
	Topology t = make_topology(small_arch(3, 2));
	std::vector<std::pair<int, int>> path;
	t.xy_path(t.node_at(0, 0), t.node_at(2, 1), path);
	REQUIRE(path.size() == 3);
	CHECK(path[0] == std::pair{t.node_at(0, 0), t.node_at(1, 0)});
	CHECK(path[1] == std::pair{t.node_at(1, 0), t.node_at(2, 0)});
	CHECK(path[2] == std::pair{t.node_at(2, 0), t.node_at(2, 1)});
}

TEST_CASE("folded torus wraps the shorter way") {
	ArchConfig c = small_arch(6, 6);
	c.routing = Routing::FoldedTorusXY;
	Topology t = make_topology(c);
	std::vector<std::pair<int, int>> path;
	t.xy_path(t.node_at(0, 0), t.node_at(5, 0), path);
	CHECK(path.size() == 1);  // wrap link
	CHECK(path[0] == std::pair{t.node_at(0, 0), t.node_at(5, 0)});
}

TEST_CASE("arch tuple formatting") {
	ArchConfig c = small_arch(6, 6, 2, 1);
	c.dram_bw_total = 144e9;
	c.d2d_bw = 16e9;
	c.glb_per_core = 2 << 20;
	CHECK(arch_tuple(c) == "(2, 36, 144GB/s, 32GB/s, 16GB/s, 2MB, 1024)");
	ArchConfig mono = small_arch(4, 4, 1, 1);
	mono.glb_per_core = 512 * 1024;
	CHECK(arch_tuple(mono) == "(1, 16, 64GB/s, 32GB/s, None, 512KB, 1024)");
}
