#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace chipdse {

enum class Routing { MeshXY, FoldedTorusXY };

// One architecture candidate of the scalable hardware template: a cores_x x
// cores_y mesh of computing cores, split into x_cut * y_cut chiplets, DRAM
// controllers in IO dies along the left/right mesh edges.
struct ArchConfig {
	int cores_x = 1, cores_y = 1;
	int x_cut = 1, y_cut = 1;
	double noc_bw = 32e9;         // bytes/s per mesh link
	double d2d_bw = 32e9;         // bytes/s per boundary-crossing link
	double dram_bw_total = 64e9;  // bytes/s across all controllers
	int dram_count = 2;
	std::int64_t glb_per_core = 1 << 20;  // bytes
	int mac_per_core = 1024;
	double freq_hz = 1e9;
	double glb_bw = 0;  // bytes/s GLB<->array; 0 means mac_per_core * freq
	Routing routing = Routing::MeshXY;

	int cores() const { return cores_x * cores_y; }
	int chiplets() const { return x_cut * y_cut; }
	double glb_bandwidth() const { return glb_bw > 0 ? glb_bw : mac_per_core * freq_hz; }
	double tops() const;  // TOPS of 1024 Gop/s, 2 ops per MAC
};

void validate_arch(const ArchConfig& cfg);

// Derived node/link view of an ArchConfig. Cores are nodes [0, M) with
// node = y * cores_x + x; DRAM controllers are nodes [M, M + D), each
// attached to enough adjacent edge routers to carry its bandwidth share.
struct Topology {
	int cores_x = 1, cores_y = 1, x_cut = 1, y_cut = 1;
	Routing routing = Routing::MeshXY;
	std::vector<std::vector<int>> dram_routers;  // per controller

	int num_cores() const { return cores_x * cores_y; }
	int num_drams() const { return static_cast<int>(dram_routers.size()); }
	int num_nodes() const { return num_cores() + num_drams(); }
	int node_at(int x, int y) const { return y * cores_x + x; }
	int x_of(int n) const { return n % cores_x; }
	int y_of(int n) const { return n / cores_x; }
	bool is_dram(int n) const { return n >= num_cores(); }
	int dram_of(int n) const { return n - num_cores(); }

	int chiplet_of(int core) const;
	// link kind: d2d iff both ends are cores in different chiplets (DRAM port
	// links belong to the adjacent computing chiplet)
	bool link_is_d2d(int u, int v) const;
	int count_d2d_links() const;   // undirected
	int count_mesh_links() const;  // undirected, cores only

	// d2d links incident to one chiplet (cx, cy) of the cut grid
	int d2d_links_of_chiplet(int cx, int cy) const;

	// Appends the directed hop sequence src -> dst to `out`. Core-to-core
	// only; DRAM endpoints are resolved by the router selection in
	// route_traffic. Throws on unreachable (guards torus misconfig).
	void xy_path(int src_core, int dst_core, std::vector<std::pair<int, int>>& out) const;
};

Topology make_topology(const ArchConfig& cfg);

// Candidate value lists mirroring the sweep parameters. Total compute is held
// at `tops` (units of 1024 Gop/s): a mac_per_core value is usable only when
// tops * 1024e9 / (2 * mac * freq) is a whole number of cores.
struct ArchGrid {
	double tops = 72;
	double freq_hz = 1e9;
	std::vector<int> x_cut{1};
	std::vector<int> y_cut{1};
	std::vector<double> dram_bw_per_tops{2};  // GB/s per TOPS
	std::vector<double> noc_bw_gbs{32};
	std::vector<double> d2d_bw_ratio{1};  // of noc_bw
	std::vector<std::int64_t> glb_kb{1024};
	std::vector<int> mac_per_core{1024};
	Routing routing = Routing::MeshXY;
};

struct RejectedCandidate {
	std::string tuple;
	std::string reason;
};

struct CandidateSet {
	std::vector<ArchConfig> valid;
	std::vector<RejectedCandidate> rejected;
};

CandidateSet enumerate_candidates(const ArchGrid& grid);

// number of cores arranged nearest-square, wider than tall: (cores_x, cores_y)
std::pair<int, int> nearest_square_arrangement(int n);

// "(Chiplet Number, Core Number, DRAM_BW, NoC_BW, D2D_BW, GBUF/Core, MAC/Core)"
std::string arch_tuple(const ArchConfig& cfg);

}  // namespace chipdse
