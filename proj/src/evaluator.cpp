#include "chipdse/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "chipdse/util.hpp"

namespace chipdse {

std::int64_t TrafficMap::dram_total() const {
	std::int64_t t = 0;
	for (auto v : dram_read) t += v;
	for (auto v : dram_write) t += v;
	return t;
}

void TrafficMap::merge(const TrafficMap& o) {
	for (const auto& [link, bytes] : o.link_bytes) link_bytes[link] += bytes;
	dram_read.resize(std::max(dram_read.size(), o.dram_read.size()), 0);
	dram_write.resize(std::max(dram_write.size(), o.dram_write.size()), 0);
	for (size_t i = 0; i < o.dram_read.size(); ++i) dram_read[i] += o.dram_read[i];
	for (size_t i = 0; i < o.dram_write.size(); ++i) dram_write[i] += o.dram_write[i];
	total_hops += o.total_hops;
	onchip_bytes += o.onchip_bytes;
	d2d_bytes += o.d2d_bytes;
}

namespace {

int manhattan(const Topology& t, int a, int b) {
	return std::abs(t.x_of(a) - t.x_of(b)) + std::abs(t.y_of(a) - t.y_of(b));
}

// attached router of controller `d` nearest (total hops) to the counterparts
int pick_port_router(const Topology& t, int d, const std::vector<int>& counterpart_cores) {
	const auto& routers = t.dram_routers[static_cast<size_t>(d)];
	int best = routers[0];
	std::int64_t best_cost = -1;
	for (int r : routers) {
		std::int64_t cost = 0;
		for (int c : counterpart_cores) cost += manhattan(t, r, c);
		if (best_cost < 0 || cost < best_cost || (cost == best_cost && r < best)) {
			best = r;
			best_cost = cost;
		}
	}
	return best;
}

}  // namespace

TrafficMap route_traffic(const std::vector<CommDep>& deps, const Topology& topo) {
	TrafficMap tm;
	tm.dram_read.assign(static_cast<size_t>(topo.num_drams()), 0);
	tm.dram_write.assign(static_cast<size_t>(topo.num_drams()), 0);

	std::vector<std::pair<int, int>> path;
	std::set<std::pair<int, int>> union_links;
	std::vector<int> cores;
	for (const CommDep& dep : deps) {
		union_links.clear();
		if (dep.src.is_dram) {
			if (dep.src.id < 0 || dep.src.id >= topo.num_drams()) throw Error("route: bad DRAM source");
			tm.dram_read[static_cast<size_t>(dep.src.id)] += dep.bytes;
			cores.clear();
			for (const NodeRef& d : dep.dsts) {
				if (d.is_dram) throw Error("route: DRAM-to-DRAM dependency");
				cores.push_back(d.id);
			}
			int entry = pick_port_router(topo, dep.src.id, cores);
			union_links.insert({topo.num_cores() + dep.src.id, entry});
			for (int c : cores) {
				if (c == entry) continue;
				path.clear();
				topo.xy_path(entry, c, path);
				union_links.insert(path.begin(), path.end());
			}
		} else {
			for (const NodeRef& d : dep.dsts) {
				if (d.is_dram) {
					if (d.id < 0 || d.id >= topo.num_drams()) throw Error("route: bad DRAM destination");
					tm.dram_write[static_cast<size_t>(d.id)] += dep.bytes;
					int exit = pick_port_router(topo, d.id, {dep.src.id});
					if (exit != dep.src.id) {
						path.clear();
						topo.xy_path(dep.src.id, exit, path);
						union_links.insert(path.begin(), path.end());
					}
					union_links.insert({exit, topo.num_cores() + d.id});
				} else {
					if (d.id == dep.src.id) continue;
					path.clear();
					topo.xy_path(dep.src.id, d.id, path);
					union_links.insert(path.begin(), path.end());
				}
			}
		}
		tm.total_hops += static_cast<std::int64_t>(union_links.size());
		for (const auto& link : union_links) {
			tm.link_bytes[link] += dep.bytes;
			if (topo.link_is_d2d(link.first, link.second))
				tm.d2d_bytes += dep.bytes;
			else
				tm.onchip_bytes += dep.bytes;
		}
	}
	return tm;
}

const char* bottleneck_name(Bottleneck b) {
	switch (b) {
		case Bottleneck::Compute: return "compute";
		case Bottleneck::NocLink: return "noc-link";
		case Bottleneck::D2dLink: return "d2d-link";
		case Bottleneck::DramBw: return "dram-bw";
	}
	return "?";
}

EvalReport evaluate_group(const ParsedGroup& parsed, const std::vector<CoreSchedule>& schedules,
                          const ArchConfig& cfg, const Topology& topo, const EnergyTable& et,
                          std::int64_t n_units) {
	if (schedules.size() != parsed.pws.size()) throw Error("evaluate_group: schedule count mismatch");
	EvalReport r;
	r.n_units = n_units;
	r.depth = parsed.depth;

	// weights resident across batch units when they still fit beside the tiles
	std::map<std::pair<int, int>, size_t> sched_of;  // (layer, core) -> pw index
	for (size_t i = 0; i < parsed.pws.size(); ++i)
		sched_of[{parsed.pws[i].layer, parsed.pws[i].core}] = i;
	std::vector<CommDep> recurring;
	std::vector<CommDep> once;
	for (const CommDep& dep : parsed.deps) {
		bool resident = false;
		if (dep.kind == DepKind::WeightIn && n_units > 1) {
			resident = true;
			for (const NodeRef& d : dep.dsts) {
				auto it = sched_of.find({dep.layer, d.id});
				std::int64_t wset = it == sched_of.end() ? 0 : schedules[it->second].workset_bytes;
				if (dep.bytes + wset > cfg.glb_per_core) {
					resident = false;
					break;
				}
			}
		}
		(resident ? once : recurring).push_back(dep);
	}

	r.traffic = route_traffic(recurring, topo);
	TrafficMap once_tm = route_traffic(once, topo);

	// stage time: slowest of compute, link and DRAM terms
	std::map<int, double> core_busy;
	for (size_t i = 0; i < parsed.pws.size(); ++i) {
		if (!schedules[i].feasible) throw Error("evaluate_group: infeasible schedule slipped through");
		core_busy[parsed.pws[i].core] += schedules[i].core_time;
	}
	double t_compute = 0;
	for (const auto& [core, t] : core_busy) t_compute = std::max(t_compute, t);
	double t_noc = 0, t_d2d = 0;
	for (const auto& [link, bytes] : r.traffic.link_bytes) {
		if (topo.link_is_d2d(link.first, link.second))
			t_d2d = std::max(t_d2d, bytes / cfg.d2d_bw);
		else
			t_noc = std::max(t_noc, bytes / cfg.noc_bw);
	}
	double t_dram = 0;
	double per_dram_bw = cfg.dram_bw_total / cfg.dram_count;
	for (size_t d = 0; d < r.traffic.dram_read.size(); ++d) {
		double bytes = static_cast<double>(r.traffic.dram_read[d] + r.traffic.dram_write[d]);
		t_dram = std::max(t_dram, bytes / per_dram_bw);
	}
	r.stage_time = std::max({t_compute, t_noc, t_d2d, t_dram});
	r.bottleneck = Bottleneck::Compute;
	if (r.stage_time == t_dram && t_dram > 0) r.bottleneck = Bottleneck::DramBw;
	if (r.stage_time == t_d2d && t_d2d > 0) r.bottleneck = Bottleneck::D2dLink;
	if (r.stage_time == t_noc && t_noc > 0) r.bottleneck = Bottleneck::NocLink;
	if (r.stage_time == t_compute) r.bottleneck = Bottleneck::Compute;

	r.delay_s = r.stage_time * static_cast<double>(n_units + parsed.depth - 1);
	r.stage_times = {r.delay_s};

	// energy: per-stage terms scale with the number of batch units
	double nu = static_cast<double>(n_units);
	for (size_t i = 0; i < parsed.pws.size(); ++i) {
		r.mac_j += schedules[i].mac_j * nu;
		r.glb_j += schedules[i].glb_j * nu;
	}
	auto traffic_energy = [&](const TrafficMap& tm, double mult) {
		r.dram_j += tm.dram_total() * et.dram_pj_per_byte * 1e-12 * mult;
		double flit = static_cast<double>(et.flit_bytes);
		r.noc_j += tm.onchip_bytes / flit * et.noc_pj_per_flit_per_hop * 1e-12 * mult;
		if (et.d2d_model == D2dModel::ClockForwarding)
			r.d2d_j += tm.d2d_bytes * 8.0 * et.d2d_pj_per_bit * 1e-12 * mult;
	};
	traffic_energy(r.traffic, nu);
	traffic_energy(once_tm, 1.0);
	if (et.d2d_model == D2dModel::ClockEmbedded)
		r.d2d_j = topo.count_d2d_links() * et.d2d_power_w_per_link * r.delay_s;
	r.energy_j = r.mac_j + r.glb_j + r.dram_j + r.noc_j + r.d2d_j;

	// report both recurring and one-time traffic of the stage set
	r.traffic.merge(once_tm);
	return r;
}

DnnEval evaluate_mapped_dnn(const DnnGraph& g, const std::vector<GroupMapping>& groups,
                            const ArchConfig& cfg, const Topology& topo, const EnergyTable& et,
                            ScheduleCache& cache) {
	DnnEval out;
	std::map<int, int> upstream;  // layer -> ofmap DRAM binding (FD convention)
	for (const GroupMapping& gm : groups) {
		ParsedGroup parsed = parse_lms(gm.lms, g, cfg, &upstream);
		std::vector<CoreSchedule> scheds;
		scheds.reserve(parsed.pws.size());
		for (const PartitionedWorkload& pw : parsed.pws) {
			const CoreSchedule& s = cache.get(pw, g.layer(pw.layer));
			if (!s.feasible) {
				out.feasible = false;
				out.infeasible_why = "no tiling of layer '" + g.layer(pw.layer).name + "' fits the GLB";
				return out;
			}
			scheds.push_back(s);
		}
		std::int64_t n_units = ceil_div(g.batch, gm.batch_unit);
		EvalReport rep = evaluate_group(parsed, scheds, cfg, topo, et, n_units);
		for (size_t i = 0; i < gm.layers.size(); ++i)
			if (gm.lms.maps[i].fd.ofm >= 0) upstream[gm.layers[i]] = gm.lms.maps[i].fd.ofm;

		out.total.delay_s += rep.delay_s;
		out.total.energy_j += rep.energy_j;
		out.total.mac_j += rep.mac_j;
		out.total.glb_j += rep.glb_j;
		out.total.dram_j += rep.dram_j;
		out.total.noc_j += rep.noc_j;
		out.total.d2d_j += rep.d2d_j;
		out.total.traffic.merge(rep.traffic);
		out.total.stage_times.push_back(rep.stage_time);
		out.per_group.push_back(std::move(rep));
	}
	// bottleneck of the slowest group
	double worst = -1;
	for (const EvalReport& rep : out.per_group) {
		if (rep.delay_s > worst) {
			worst = rep.delay_s;
			out.total.bottleneck = rep.bottleneck;
		}
	}
	return out;
}

std::string heatmap_text(const TrafficMap& tm, const Topology& topo, bool double_d2d) {
	std::ostringstream os;
	auto bytes_of = [&](int a, int b) {
		auto it = tm.link_bytes.find({a, b});
		std::int64_t v = it == tm.link_bytes.end() ? 0 : it->second;
		auto rev = tm.link_bytes.find({b, a});
		if (rev != tm.link_bytes.end()) v += rev->second;
		if (double_d2d && topo.link_is_d2d(a, b)) v *= 2;
		return v;
	};
	os << "# per-link bytes (both directions summed); '*' marks d2d links\n";
	for (int y = 0; y < topo.cores_y; ++y) {
		for (int x = 0; x < topo.cores_x; ++x) {
			int n = topo.node_at(x, y);
			os << "[" << n << "]";
			if (x + 1 < topo.cores_x) {
				int m = topo.node_at(x + 1, y);
				os << " -" << (topo.link_is_d2d(n, m) ? "*" : "-") << bytes_of(n, m) << "-- ";
			}
		}
		os << "\n";
		if (y + 1 < topo.cores_y) {
			for (int x = 0; x < topo.cores_x; ++x) {
				int n = topo.node_at(x, y), m = topo.node_at(x, y + 1);
				os << " |" << (topo.link_is_d2d(n, m) ? "*" : "") << bytes_of(n, m) << "  ";
			}
			os << "\n";
		}
	}
	for (int d = 0; d < topo.num_drams(); ++d) {
		os << "dram" << d + 1 << ": read=" << tm.dram_read[static_cast<size_t>(d)]
		   << " write=" << tm.dram_write[static_cast<size_t>(d)] << " ports=";
		for (int r : topo.dram_routers[static_cast<size_t>(d)]) os << r << " ";
		os << "\n";
	}
	return os.str();
}

}  // namespace chipdse
