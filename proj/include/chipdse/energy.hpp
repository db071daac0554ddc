#pragma once

namespace chipdse {

enum class D2dModel { ClockForwarding, ClockEmbedded };

// Unit energies. NoC router energy per flit per hop is treated as constant;
// the two D2D models cover clock-forwarded links (pay per bit moved) and
// clock-embedded links (pay static power for the whole run).
struct EnergyTable {
	double mac_pj = 0.5;
	double glb_pj_per_byte = 1.0;
	double dram_pj_per_byte = 40.0;
	int flit_bytes = 32;
	double noc_pj_per_flit_per_hop = 0.06 * 8 * 32;  // 0.06 pJ/bit
	D2dModel d2d_model = D2dModel::ClockForwarding;
	double d2d_pj_per_bit = 0.8;
	double d2d_power_w_per_link = 0.05;
};

}  // namespace chipdse
