#include "chipdse/costmodel.hpp"

#include <cmath>

#include "chipdse/util.hpp"

namespace chipdse {

double die_yield(double area_mm2, const CostParams& p) {
	if (area_mm2 <= 0) throw Error("die_yield: area must be positive");
	return std::pow(p.yield_unit, area_mm2 / p.area_unit_mm2);
}

double silicon_cost(const std::vector<double>& die_areas_mm2, const CostParams& p) {
	double usd = 0;
	for (double a : die_areas_mm2) usd += a / die_yield(a, p) * p.c_silicon_per_mm2;
	return usd;
}

double dram_cost(double dram_bw_total, const CostParams& p) {
	if (dram_bw_total < 0) throw Error("dram_cost: bandwidth must be non-negative");
	return std::ceil(dram_bw_total / p.dram_unit_bw) * p.c_dram_die;
}

double packaging_cost(double total_silicon_mm2, int n_chiplets, const CostParams& p) {
	if (total_silicon_mm2 <= 0) throw Error("packaging_cost: area must be positive");
	double substrate = total_silicon_mm2 * p.f_scale;
	double rate;
	if (n_chiplets <= 1) {
		rate = p.c_fanout_per_mm2;
	} else {
		rate = -1;
		for (const PackageTier& t : p.hd_tiers) {
			if (substrate >= t.area_lo && substrate < t.area_hi) {
				rate = t.usd_per_mm2;
				break;
			}
		}
		if (rate < 0)
			throw Error("packaging_cost: substrate area " + fmt_g(substrate) +
			            " mm^2 outside the price table");
	}
	return substrate / p.yield_package * rate;
}

std::vector<double> die_areas(const ArchConfig& cfg, const CostParams& p) {
	validate_arch(cfg);
	std::vector<double> areas;
	Topology topo = make_topology(cfg);
	int per_chiplet = (cfg.cores_x / cfg.x_cut) * (cfg.cores_y / cfg.y_cut);
	double core_mm2 = p.core_mm2_per_kmac * cfg.mac_per_core / 1024.0 +
	                  p.glb_mm2_per_mb * static_cast<double>(cfg.glb_per_core) / (1 << 20);
	for (int cy = 0; cy < cfg.y_cut; ++cy)
		for (int cx = 0; cx < cfg.x_cut; ++cx)
			areas.push_back(per_chiplet * core_mm2 +
			                topo.d2d_links_of_chiplet(cx, cy) * p.d2d_mm2_per_link);
	// IO dies: controllers split left/right
	int left = (cfg.dram_count + 1) / 2, right = cfg.dram_count / 2;
	if (left > 0) areas.push_back(left * p.dram_phy_mm2 + p.io_misc_mm2);
	if (right > 0) areas.push_back(right * p.dram_phy_mm2 + p.io_misc_mm2);
	return areas;
}

CostBreakdown total_cost(const ArchConfig& cfg, const CostParams& p) {
	CostBreakdown b;
	std::vector<double> areas = die_areas(cfg, p);
	Topology topo = make_topology(cfg);
	b.compute_die_mm2 = areas[0];
	b.d2d_mm2 = 2.0 * topo.count_d2d_links() * p.d2d_mm2_per_link;
	int n_io = (cfg.dram_count > 0 ? 1 : 0) + (cfg.dram_count > 1 ? 1 : 0);
	for (size_t i = areas.size() - static_cast<size_t>(n_io); i < areas.size(); ++i)
		b.io_mm2 += areas[i];
	for (double a : areas) b.total_silicon_mm2 += a;
	b.silicon_usd = silicon_cost(areas, p);
	b.dram_usd = dram_cost(cfg.dram_bw_total, p);
	b.package_usd = packaging_cost(b.total_silicon_mm2, cfg.chiplets(), p);
	b.total_usd = b.silicon_usd + b.dram_usd + b.package_usd;
	return b;
}

}  // namespace chipdse
