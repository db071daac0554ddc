#include "chipdse/arch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "chipdse/util.hpp"

namespace chipdse {

double ArchConfig::tops() const {
	return cores() * static_cast<double>(mac_per_core) * 2.0 * freq_hz / 1024e9;
}

void validate_arch(const ArchConfig& cfg) {
	if (cfg.cores_x < 1 || cfg.cores_y < 1) throw Error("arch: core mesh dims must be positive");
	if (cfg.x_cut < 1 || cfg.y_cut < 1) throw Error("arch: cuts must be positive");
	if (cfg.cores_x % cfg.x_cut != 0)
		throw Error("arch: x_cut " + std::to_string(cfg.x_cut) + " does not divide cores_x " +
		            std::to_string(cfg.cores_x));
	if (cfg.cores_y % cfg.y_cut != 0)
		throw Error("arch: y_cut " + std::to_string(cfg.y_cut) + " does not divide cores_y " +
		            std::to_string(cfg.cores_y));
	if (cfg.d2d_bw > cfg.noc_bw) throw Error("arch: d2d_bw must not exceed noc_bw");
	if (cfg.dram_count < 1) throw Error("arch: dram_count must be >= 1");
	if (cfg.noc_bw <= 0 || cfg.dram_bw_total <= 0) throw Error("arch: bandwidths must be positive");
	if (cfg.glb_per_core <= 0 || cfg.mac_per_core <= 0 || cfg.freq_hz <= 0)
		throw Error("arch: core resources must be positive");
}

int Topology::chiplet_of(int core) const {
	int pw = cores_x / x_cut, ph = cores_y / y_cut;
	int cx = x_of(core) / pw, cy = y_of(core) / ph;
	return cy * x_cut + cx;
}

bool Topology::link_is_d2d(int u, int v) const {
	if (is_dram(u) || is_dram(v)) return false;
	return chiplet_of(u) != chiplet_of(v);
}

int Topology::count_d2d_links() const {
	return (x_cut - 1) * cores_y + (y_cut - 1) * cores_x;
}

int Topology::count_mesh_links() const {
	int base = (cores_x - 1) * cores_y + (cores_y - 1) * cores_x;
	if (routing == Routing::FoldedTorusXY) base += cores_x + cores_y;  // wrap links
	return base;
}

int Topology::d2d_links_of_chiplet(int cx, int cy) const {
	int pw = cores_x / x_cut, ph = cores_y / y_cut;
	int n = 0;
	if (cx > 0) n += ph;
	if (cx < x_cut - 1) n += ph;
	if (cy > 0) n += pw;
	if (cy < y_cut - 1) n += pw;
	return n;
}

static void walk_axis(int from, int to, int wrap, bool torus, std::vector<int>& seq) {
	// appends the coordinate sequence from -> to (exclusive of `from`)
	if (from == to) return;
	int step;
	if (!torus) {
		step = to > from ? 1 : -1;
	} else {
		int fwd = (to - from + wrap) % wrap;
		int bwd = (from - to + wrap) % wrap;
		step = fwd <= bwd ? 1 : -1;  // tie prefers forward
	}
	for (int c = from; c != to;) {
		c = torus ? (c + step + wrap) % wrap : c + step;
		seq.push_back(c);
	}
}

void Topology::xy_path(int src, int dst, std::vector<std::pair<int, int>>& out) const {
	if (is_dram(src) || is_dram(dst)) throw Error("xy_path endpoints must be cores");
	bool torus = routing == Routing::FoldedTorusXY;
	int x = x_of(src), y = y_of(src);
	std::vector<int> seq;
	walk_axis(x, x_of(dst), cores_x, torus, seq);
	int prev = src;
	for (int nx : seq) {
		int n = node_at(nx, y);
		out.emplace_back(prev, n);
		prev = n;
	}
	x = x_of(dst);
	seq.clear();
	walk_axis(y, y_of(dst), cores_y, torus, seq);
	for (int ny : seq) {
		int n = node_at(x, ny);
		out.emplace_back(prev, n);
		prev = n;
	}
	if (prev != dst) throw Error("xy_path: endpoint unreachable");
}

Topology make_topology(const ArchConfig& cfg) {
	validate_arch(cfg);
	Topology t;
	t.cores_x = cfg.cores_x;
	t.cores_y = cfg.cores_y;
	t.x_cut = cfg.x_cut;
	t.y_cut = cfg.y_cut;
	t.routing = cfg.routing;

	// Controllers split across the left/right IO dies, centered evenly along
	// the edge, each attached to enough adjacent routers to carry its share
	// of the total DRAM bandwidth.
	int d = cfg.dram_count;
	int left = (d + 1) / 2, right = d / 2;
	double per_ctrl = cfg.dram_bw_total / d;
	int span = std::clamp<int>(static_cast<int>(std::ceil(per_ctrl / cfg.noc_bw)), 1, cfg.cores_y);
	auto attach = [&](int edge_x, int count, int idx_on_side) {
		int center = (2 * idx_on_side + 1) * cfg.cores_y / (2 * count);
		int start = std::clamp(center - span / 2, 0, cfg.cores_y - span);
		std::vector<int> routers;
		for (int i = 0; i < span; ++i) routers.push_back(t.node_at(edge_x, start + i));
		return routers;
	};
	for (int i = 0; i < left; ++i) t.dram_routers.push_back(attach(0, left, i));
	for (int i = 0; i < right; ++i) t.dram_routers.push_back(attach(cfg.cores_x - 1, right, i));
	return t;
}

std::pair<int, int> nearest_square_arrangement(int n) {
	int best_w = n, best_h = 1;
	for (int h = 1; h * h <= n; ++h) {
		if (n % h == 0) {
			best_h = h;
			best_w = n / h;
		}
	}
	return {best_w, best_h};
}

CandidateSet enumerate_candidates(const ArchGrid& grid) {
	if (grid.x_cut.empty() || grid.y_cut.empty() || grid.dram_bw_per_tops.empty() ||
	    grid.noc_bw_gbs.empty() || grid.d2d_bw_ratio.empty() || grid.glb_kb.empty() ||
	    grid.mac_per_core.empty())
		throw Error("candidate grid: every parameter needs at least one value");
	if (grid.tops <= 0 || grid.freq_hz <= 0) throw Error("candidate grid: tops and freq must be positive");

	CandidateSet out;
	bool any_core_count = false;
	for (int mac : grid.mac_per_core) {
		double cores_f = grid.tops * 1024e9 / (2.0 * mac * grid.freq_hz);
		int cores = static_cast<int>(std::llround(cores_f));
		char tup[64];
		if (cores < 1 || std::abs(cores_f - cores) > 1e-9) {
			std::snprintf(tup, sizeof(tup), "mac_per_core=%d", mac);
			out.rejected.push_back({tup, "core count for target compute is not a whole number"});
			continue;
		}
		any_core_count = true;
		auto [cx, cy] = nearest_square_arrangement(cores);
		for (int xc : grid.x_cut) {
			for (int yc : grid.y_cut) {
				bool cut_ok = (cx % xc == 0) && (cy % yc == 0);
				for (double dbpt : grid.dram_bw_per_tops) {
					for (double noc : grid.noc_bw_gbs) {
						for (size_t ri = 0; ri < grid.d2d_bw_ratio.size(); ++ri) {
							// monolithic candidates are identical across d2d ratios
							if (xc * yc == 1 && ri > 0) continue;
							for (std::int64_t glb : grid.glb_kb) {
								ArchConfig c;
								c.cores_x = cx;
								c.cores_y = cy;
								c.x_cut = xc;
								c.y_cut = yc;
								c.noc_bw = noc * 1e9;
								c.d2d_bw = noc * grid.d2d_bw_ratio[ri] * 1e9;
								c.dram_bw_total = dbpt * grid.tops * 1e9;
								c.dram_count = c.dram_bw_total >= 128e9 ? 4 : 2;
								c.glb_per_core = glb * 1024;
								c.mac_per_core = mac;
								c.freq_hz = grid.freq_hz;
								c.routing = grid.routing;
								if (!cut_ok) {
									out.rejected.push_back({arch_tuple(c), "cut does not divide cores on edge"});
								} else {
									out.valid.push_back(c);
								}
							}
						}
					}
				}
			}
		}
	}
	if (!any_core_count) throw Error("candidate grid: target compute unreachable with every mac_per_core value");
	auto key = [](const ArchConfig& c) {
		return std::tuple(c.chiplets(), c.cores(), c.dram_bw_total, c.noc_bw, c.d2d_bw, c.glb_per_core,
		                  c.mac_per_core);
	};
	std::sort(out.valid.begin(), out.valid.end(),
	          [&](const ArchConfig& a, const ArchConfig& b) { return key(a) < key(b); });
	return out;
}

static std::string bw_str(double bytes_per_s) {
	double g = bytes_per_s / 1e9;
	char buf[32];
	if (std::abs(g - std::llround(g)) < 1e-9)
		std::snprintf(buf, sizeof(buf), "%lldGB/s", static_cast<long long>(std::llround(g)));
	else
		std::snprintf(buf, sizeof(buf), "%.3gGB/s", g);
	return buf;
}

std::string arch_tuple(const ArchConfig& cfg) {
	std::string glb;
	if (cfg.glb_per_core % (1 << 20) == 0)
		glb = std::to_string(cfg.glb_per_core >> 20) + "MB";
	else
		glb = std::to_string(cfg.glb_per_core >> 10) + "KB";
	std::string d2d = cfg.chiplets() == 1 ? "None" : bw_str(cfg.d2d_bw);
	return "(" + std::to_string(cfg.chiplets()) + ", " + std::to_string(cfg.cores()) + ", " +
	       bw_str(cfg.dram_bw_total) + ", " + bw_str(cfg.noc_bw) + ", " + d2d + ", " + glb + ", " +
	       std::to_string(cfg.mac_per_core) + ")";
}

}  // namespace chipdse
