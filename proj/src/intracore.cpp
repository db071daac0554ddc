#include "chipdse/intracore.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "chipdse/util.hpp"

namespace chipdse {

namespace {

// descending, so equal-cost ties resolve to the largest tile
std::vector<std::int64_t> divisors(std::int64_t n) {
	std::vector<std::int64_t> out;
	for (std::int64_t d = 1; d * d <= n; ++d) {
		if (n % d == 0) {
			out.push_back(d);
			if (d != n / d) out.push_back(n / d);
		}
	}
	std::sort(out.rbegin(), out.rend());
	return out;
}

CoreSchedule streaming_schedule(const PartitionedWorkload& pw, const Layer& l,
                                const ArchConfig& cfg, const EnergyTable& et, std::int64_t e) {
	CoreSchedule s;
	s.order = LoopOrder::Streaming;
	std::int64_t ovol = pw.ofmap.volume();
	std::int64_t window = l.kind == LayerKind::Pool ? l.kr * l.ks : 1;
	s.mac_ops = ovol * window;
	std::int64_t n_in = l.kind == LayerKind::EltwiseAdd
	                        ? std::max<std::int64_t>(1, static_cast<std::int64_t>(l.preds.size()))
	                        : 1;
	s.glb_if_bytes = (l.kind == LayerKind::Pool ? pw.ifmap.volume() : n_in * ovol) * e;
	s.glb_of_bytes = ovol * e;
	std::int64_t in_row = l.win_r() * (pw.ifmap.w1 - pw.ifmap.w0);
	std::int64_t out_row = pw.ofmap.w1 - pw.ofmap.w0;
	s.workset_bytes = 2 * e * (in_row + out_row);
	s.feasible = s.workset_bytes <= cfg.glb_per_core;
	s.tb = pw.ofmap.b1 - pw.ofmap.b0;
	s.tk = pw.ofmap.k1 - pw.ofmap.k0;
	s.th = 1;
	s.tw = out_row;
	double mac_time = static_cast<double>(s.mac_ops) / (cfg.mac_per_core * cfg.freq_hz);
	double mem_time = static_cast<double>(s.glb_bytes()) / cfg.glb_bandwidth();
	s.core_time = std::max(mac_time, mem_time);
	s.mac_j = s.mac_ops * et.mac_pj * 1e-12;
	s.glb_j = s.glb_bytes() * et.glb_pj_per_byte * 1e-12;
	return s;
}

}  // namespace

CoreSchedule explore_intracore(const PartitionedWorkload& pw, const Layer& l,
                               const ArchConfig& cfg, const EnergyTable& et,
                               std::int64_t elem_bytes) {
	if (pw.ofmap.empty()) throw Error("intracore: empty workload slice");
	const std::int64_t e = elem_bytes;
	if (!l.has_weights()) return streaming_schedule(pw, l, cfg, et, e);

	const std::int64_t b = pw.ofmap.b1 - pw.ofmap.b0;
	const std::int64_t k = pw.ofmap.k1 - pw.ofmap.k0;
	const std::int64_t h = pw.ofmap.h1 - pw.ofmap.h0;
	const std::int64_t w = pw.ofmap.w1 - pw.ofmap.w0;
	const std::int64_t c = pw.ifmap.k1 - pw.ifmap.k0;
	const std::int64_t ih_s = pw.ifmap.h1 - pw.ifmap.h0;
	const std::int64_t iw_s = pw.ifmap.w1 - pw.ifmap.w0;

	const std::int64_t c_lanes = std::min<std::int64_t>(16, cfg.mac_per_core);
	const std::int64_t k_lanes = std::max<std::int64_t>(1, cfg.mac_per_core / c_lanes);

	CoreSchedule best;
	best.mac_ops = b * h * w * k * l.kr * l.ks * c;
	double best_edp = HUGE_VAL;

	const std::int64_t wgt_all = k * l.kr * l.ks * c;
	for (std::int64_t tb : divisors(b))
		for (std::int64_t tk : divisors(k))
			for (std::int64_t th : divisors(h))
				for (std::int64_t tw : divisors(w))
					for (std::int64_t tc : divisors(c)) {
						std::int64_t iht = std::min((th - 1) * l.stride + l.win_r(), ih_s);
						std::int64_t iwt = std::min((tw - 1) * l.stride + l.win_s(), iw_s);
						std::int64_t wset =
						    2 * e * (tb * tc * iht * iwt + tk * tc * l.kr * l.ks + tb * tk * th * tw);
						if (wset > cfg.glb_per_core) continue;
						std::int64_t nb = b / tb, nk = k / tk, nh = h / th, nw = w / tw, nc = c / tc;
						std::int64_t i_pass = b * c * (nh * iht) * (nw * iwt);
						std::int64_t cyc = b * h * w * l.kr * l.ks * (nc * ceil_div(tc, c_lanes)) *
						                   (nk * ceil_div(tk, k_lanes));
						double mac_time = static_cast<double>(cyc) / cfg.freq_hz;
						for (int ord = 0; ord < 3; ++ord) {
							std::int64_t i_rd, w_rd, o_wr, o_rd;
							switch (static_cast<LoopOrder>(ord)) {
								case LoopOrder::OutputStationary:
									i_rd = i_pass * nk;
									w_rd = wgt_all * nb * nh * nw;
									o_wr = b * k * h * w;
									o_rd = 0;
									break;
								case LoopOrder::WeightStationary:
									i_rd = i_pass * nk;
									w_rd = wgt_all;
									o_wr = b * k * h * w * nc;
									o_rd = b * k * h * w * (nc - 1);
									break;
								default:  // InputStationary
									i_rd = i_pass;
									w_rd = wgt_all * nb * nh * nw;
									o_wr = b * k * h * w * nc;
									o_rd = b * k * h * w * (nc - 1);
									break;
							}
							CoreSchedule s;
							s.feasible = true;
							s.tb = tb;
							s.tk = tk;
							s.th = th;
							s.tw = tw;
							s.tc = tc;
							s.order = static_cast<LoopOrder>(ord);
							s.mac_ops = best.mac_ops;
							s.glb_if_bytes = i_rd * e;
							s.glb_wgt_bytes = w_rd * e;
							s.glb_of_bytes = (o_wr + o_rd) * e;
							s.workset_bytes = wset;
							double mem_time = static_cast<double>(s.glb_bytes()) / cfg.glb_bandwidth();
							s.core_time = std::max(mac_time, mem_time);
							s.mac_j = s.mac_ops * et.mac_pj * 1e-12;
							s.glb_j = s.glb_bytes() * et.glb_pj_per_byte * 1e-12;
							double edp = s.edp();
							if (edp < best_edp) {
								best_edp = edp;
								best = s;
							}
						}
					}
	return best;  // feasible == false when nothing fit
}

std::size_t ScheduleCache::KeyHash::operator()(const Key& k) const {
	std::uint64_t hash = kFnvBasis;
	for (std::int64_t v : k) hash = fnv1a(hash, static_cast<std::uint64_t>(v));
	return hash;
}

const CoreSchedule& ScheduleCache::get(const PartitionedWorkload& pw, const Layer& l) {
	Key key{static_cast<std::int64_t>(l.kind),
	        pw.ofmap.b1 - pw.ofmap.b0,
	        pw.ofmap.k1 - pw.ofmap.k0,
	        pw.ofmap.h1 - pw.ofmap.h0,
	        pw.ofmap.w1 - pw.ofmap.w0,
	        pw.ifmap.k1 - pw.ifmap.k0,
	        pw.ifmap.h1 - pw.ifmap.h0,
	        pw.ifmap.w1 - pw.ifmap.w0,
	        l.kr,
	        l.ks,
	        l.stride,
	        static_cast<std::int64_t>(l.preds.size())};
	auto [it, inserted] = memo_.try_emplace(key);
	if (inserted) it->second = explore_intracore(pw, l, cfg_, et_, elem_);
	return it->second;
}

}  // namespace chipdse
