#pragma once

#include <vector>

#include "chipdse/arch.hpp"

namespace chipdse {

struct PackageTier {
	double area_lo = 0, area_hi = 0;  // substrate mm^2, half-open band
	double usd_per_mm2 = 0;
};

// Manufacturing-cost constants. Values marked (pinned) come straight from the
// cost formulas' published constants; the rest are the defaults-12nm profile
// and are meant to be overridden from the cost config file.
struct CostParams {
	double c_silicon_per_mm2 = 0.15;
	double yield_unit = 0.9;      // (pinned) per area_unit
	double area_unit_mm2 = 40.0;  // (pinned)
	// module area table
	double core_mm2_per_kmac = 0.5;  // per 1024 MACs of PE array + control
	double glb_mm2_per_mb = 0.6;
	double d2d_mm2_per_link = 0.3;  // one interface on one die
	double dram_phy_mm2 = 5.0;      // per controller
	double io_misc_mm2 = 10.0;      // per IO die
	// packaging
	double f_scale = 4.0;  // substrate area / silicon area
	double yield_package = 0.98;
	double c_fanout_per_mm2 = 0.005;  // (pinned) monolithic fan-out substrate
	std::vector<PackageTier> hd_tiers{
	    {0, 1500, 0.0075}, {1500, 3000, 0.012}, {3000, 10000, 0.018}};
	// DRAM
	double dram_unit_bw = 32e9;  // (pinned) bytes/s per die
	double c_dram_die = 3.5;     // (pinned) USD
};

struct CostBreakdown {
	double silicon_usd = 0, dram_usd = 0, package_usd = 0, total_usd = 0;
	double compute_die_mm2 = 0;  // one computing chiplet, d2d included
	double d2d_mm2 = 0;          // all dies
	double io_mm2 = 0;
	double total_silicon_mm2 = 0;
};

double die_yield(double area_mm2, const CostParams& p);

// yield-adjusted silicon cost of the given dies (one entry per die)
double silicon_cost(const std::vector<double>& die_areas_mm2, const CostParams& p);

double dram_cost(double dram_bw_total, const CostParams& p);

// n_chiplets == 1 uses the fan-out price; otherwise the high-density tier of
// the substrate area band. Throws when the area falls outside the table.
double packaging_cost(double total_silicon_mm2, int n_chiplets, const CostParams& p);

// die areas of a candidate: x_cut * y_cut computing chiplets (d2d area scales
// with boundary links per chiplet) plus the IO dies
std::vector<double> die_areas(const ArchConfig& cfg, const CostParams& p);

CostBreakdown total_cost(const ArchConfig& cfg, const CostParams& p);

}  // namespace chipdse
