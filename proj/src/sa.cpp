#include "chipdse/sa.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "chipdse/util.hpp"

namespace chipdse {

namespace {

constexpr int kOpRetries = 16;
const double kInf = std::numeric_limits<double>::infinity();

std::int64_t rand_below(std::mt19937_64& rng, std::int64_t n) {
	return static_cast<std::int64_t>(std::uniform_int_distribution<std::uint64_t>(
	    0, static_cast<std::uint64_t>(n) - 1)(rng));
}

std::vector<Partition4D> feasible_parts(std::int64_t n, const Layer& l, std::int64_t bu) {
	std::vector<Partition4D> out;
	for (std::int64_t h = 1; h <= std::min<std::int64_t>(n, l.out_h); ++h) {
		if (n % h) continue;
		std::int64_t nh = n / h;
		for (std::int64_t w = 1; w <= std::min<std::int64_t>(nh, l.out_w); ++w) {
			if (nh % w) continue;
			std::int64_t nw = nh / w;
			for (std::int64_t b = 1; b <= std::min<std::int64_t>(nw, bu); ++b) {
				if (nw % b) continue;
				std::int64_t k = nw / b;
				if (k <= l.out_k) out.push_back({h, w, b, k});
			}
		}
	}
	return out;
}

std::optional<Partition4D> draw_part(std::int64_t n, const Layer& l, std::int64_t bu,
                                     std::mt19937_64& rng,
                                     const Partition4D* exclude = nullptr) {
	std::vector<Partition4D> opts = feasible_parts(n, l, bu);
	if (exclude && opts.size() > 1)
		std::erase_if(opts, [&](const Partition4D& p) { return p == *exclude; });
	if (opts.empty()) return std::nullopt;
	return opts[static_cast<size_t>(rand_below(rng, static_cast<std::int64_t>(opts.size())))];
}

bool contains(const std::vector<int>& v, int x) {
	return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

LpSpatialMapping apply_operator(const LpSpatialMapping& lms, SaOp op, std::mt19937_64& rng,
                                const OpContext& ctx) {
	const DnnGraph& g = *ctx.graph;
	const int n = static_cast<int>(lms.layers.size());
	for (int attempt = 0; attempt < kOpRetries; ++attempt) {
		LpSpatialMapping next = lms;
		switch (op) {
			case SaOp::PartResample: {
				int li = static_cast<int>(rand_below(rng, n));
				LayerMapping& m = next.maps[static_cast<size_t>(li)];
				auto p = draw_part(static_cast<std::int64_t>(m.cg.size()),
				                   g.layer(next.layers[static_cast<size_t>(li)]), next.batch_unit, rng,
				                   &m.part);
				if (!p || *p == m.part) continue;
				m.part = *p;
				return next;
			}
			case SaOp::SwapWithin: {
				int li = static_cast<int>(rand_below(rng, n));
				LayerMapping& m = next.maps[static_cast<size_t>(li)];
				if (m.cg.size() < 2) continue;
				auto i = rand_below(rng, static_cast<std::int64_t>(m.cg.size()));
				auto j = rand_below(rng, static_cast<std::int64_t>(m.cg.size()));
				if (i == j) continue;
				std::swap(m.cg[static_cast<size_t>(i)], m.cg[static_cast<size_t>(j)]);
				return next;
			}
			case SaOp::SwapAcross: {
				if (n < 2) return lms;
				int a = static_cast<int>(rand_below(rng, n));
				int b = static_cast<int>(rand_below(rng, n));
				if (a == b) continue;
				LayerMapping& ma = next.maps[static_cast<size_t>(a)];
				LayerMapping& mb = next.maps[static_cast<size_t>(b)];
				auto i = rand_below(rng, static_cast<std::int64_t>(ma.cg.size()));
				auto j = rand_below(rng, static_cast<std::int64_t>(mb.cg.size()));
				int ca = ma.cg[static_cast<size_t>(i)], cb = mb.cg[static_cast<size_t>(j)];
				if (ca == cb) continue;
				// a swap may not duplicate a core inside either group
				if (contains(ma.cg, cb) || contains(mb.cg, ca)) continue;
				ma.cg[static_cast<size_t>(i)] = cb;
				mb.cg[static_cast<size_t>(j)] = ca;
				return next;
			}
			case SaOp::MoveCore: {
				if (n < 2) return lms;
				int a = static_cast<int>(rand_below(rng, n));
				int b = static_cast<int>(rand_below(rng, n));
				if (a == b) continue;
				LayerMapping& ma = next.maps[static_cast<size_t>(a)];
				LayerMapping& mb = next.maps[static_cast<size_t>(b)];
				if (ma.cg.size() < 2) continue;
				auto i = rand_below(rng, static_cast<std::int64_t>(ma.cg.size()));
				int core = ma.cg[static_cast<size_t>(i)];
				if (contains(mb.cg, core)) continue;
				auto pa = draw_part(static_cast<std::int64_t>(ma.cg.size()) - 1,
				                    g.layer(next.layers[static_cast<size_t>(a)]), next.batch_unit, rng);
				auto pb = draw_part(static_cast<std::int64_t>(mb.cg.size()) + 1,
				                    g.layer(next.layers[static_cast<size_t>(b)]), next.batch_unit, rng);
				if (!pa || !pb) continue;
				ma.cg.erase(ma.cg.begin() + i);
				auto pos = rand_below(rng, static_cast<std::int64_t>(mb.cg.size()) + 1);
				mb.cg.insert(mb.cg.begin() + pos, core);
				ma.part = *pa;
				mb.part = *pb;
				return next;
			}
			case SaOp::RebindDram: {
				std::vector<std::pair<int, int>> slots;  // (layer idx, fd slot)
				for (int li = 0; li < n; ++li) {
					const FlowOfData& fd = next.maps[static_cast<size_t>(li)].fd;
					if (fd.ifm >= 0) slots.push_back({li, 0});
					if (fd.wgt >= 0) slots.push_back({li, 1});
					if (fd.ofm >= 0) slots.push_back({li, 2});
				}
				if (slots.empty()) return lms;
				auto [li, slot] = slots[static_cast<size_t>(
				    rand_below(rng, static_cast<std::int64_t>(slots.size())))];
				FlowOfData& fd = next.maps[static_cast<size_t>(li)].fd;
				int* val = slot == 0 ? &fd.ifm : slot == 1 ? &fd.wgt : &fd.ofm;
				int d = ctx.cfg->dram_count;
				if (d < 1) return lms;
				int nv = static_cast<int>(rand_below(rng, d + 1));
				if (nv == *val) continue;
				*val = nv;
				return next;
			}
		}
	}
	return lms;
}

int select_group(const std::vector<double>& log_weights, std::mt19937_64& rng) {
	if (log_weights.empty()) throw Error("select_group: no groups");
	double mx = *std::max_element(log_weights.begin(), log_weights.end());
	std::vector<double> cum(log_weights.size());
	double s = 0;
	for (size_t i = 0; i < log_weights.size(); ++i) {
		s += std::exp(log_weights[i] - mx);
		cum[i] = s;
	}
	double u = std::uniform_real_distribution<double>(0.0, s)(rng);
	return static_cast<int>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
}

namespace {

struct GroupState {
	LayerGroup group;
	LpSpatialMapping lms;
	ParsedGroup parsed;
	std::vector<CoreSchedule> scheds;
	EvalReport rep;
	double cost = kInf;
	double temp = 0;
	std::int64_t budget = 0, seen = 0, cool_every = 1;
	double log_weight = 0;
	std::int64_t n_units = 1;
};

struct Candidate {
	LpSpatialMapping lms;
	ParsedGroup parsed;
	std::vector<CoreSchedule> scheds;
	EvalReport rep;
	double cost = kInf;
};

}  // namespace

AnnealResult anneal(const DnnGraph& g, const std::vector<LayerGroup>& groups,
                    const ArchConfig& cfg, const Topology& topo, const EnergyTable& et,
                    const SaParams& params, std::uint64_t seed, ScheduleCache& cache) {
	if (groups.empty()) throw Error("anneal: no layer groups");
	const int m = cfg.cores();
	std::mt19937_64 rng(seed);

	std::map<int, int> upstream;  // boundary layer -> fd.ofm value
	auto eval_candidate = [&](const LayerGroup& grp, const LpSpatialMapping& lms,
	                          const std::map<int, int>& up, Candidate& out) {
		out.lms = lms;
		out.parsed = parse_lms(lms, g, cfg, &up);
		out.scheds.clear();
		out.cost = kInf;
		for (const PartitionedWorkload& pw : out.parsed.pws) {
			const CoreSchedule& s = cache.get(pw, g.layer(pw.layer));
			if (!s.feasible) return;
			out.scheds.push_back(s);
		}
		std::int64_t n_units = ceil_div(g.batch, grp.batch_unit);
		out.rep = evaluate_group(out.parsed, out.scheds, cfg, topo, et, n_units);
		out.cost = std::pow(out.rep.energy_j, params.beta) * std::pow(out.rep.delay_s, params.gamma);
	};

	std::vector<GroupState> st(groups.size());
	for (size_t i = 0; i < groups.size(); ++i) {
		GroupState& s = st[i];
		s.group = groups[i];
		s.lms = stripe_initial_mapping(groups[i].layers, groups[i].batch_unit, g, cfg);
		s.n_units = ceil_div(g.batch, groups[i].batch_unit);
		std::int64_t ng = static_cast<std::int64_t>(groups[i].layers.size());
		s.budget = params.proposals_per_layer_core * ng * m;
		s.cool_every = std::max<std::int64_t>(1, params.cool_every_factor * ng * m);
		s.log_weight = log_lms_space_size(static_cast<int>(ng), m);
		for (size_t li = 0; li < s.lms.layers.size(); ++li)
			if (s.lms.maps[li].fd.ofm >= 0) upstream[s.lms.layers[li]] = s.lms.maps[li].fd.ofm;
	}
	for (GroupState& s : st) {
		Candidate c;
		eval_candidate(s.group, s.lms, upstream, c);
		s.parsed = std::move(c.parsed);
		s.scheds = std::move(c.scheds);
		s.rep = c.rep;
		s.cost = c.cost;
	}

	// which groups read a boundary layer's ofmaps
	std::map<int, std::vector<size_t>> readers;
	for (size_t i = 0; i < st.size(); ++i) {
		std::set<int> in_group(st[i].group.layers.begin(), st[i].group.layers.end());
		for (int li : st[i].group.layers)
			for (int p : g.layer(li).preds)
				if (!in_group.count(p)) readers[p].push_back(i);
	}

	auto applicable_ops = [&](const GroupState& s) {
		std::vector<SaOp> ops{SaOp::PartResample, SaOp::SwapWithin};
		if (s.group.layers.size() >= 2) {
			ops.push_back(SaOp::SwapAcross);
			for (const LayerMapping& lm : s.lms.maps)
				if (lm.cg.size() >= 2) {
					ops.push_back(SaOp::MoveCore);
					break;
				}
		}
		for (const LayerMapping& lm : s.lms.maps)
			if (lm.fd.ifm >= 0 || lm.fd.wgt >= 0 || lm.fd.ofm >= 0) {
				ops.push_back(SaOp::RebindDram);
				break;
			}
		return ops;
	};

	OpContext ctx{&g, &cfg};
	std::ofstream trace;
	if (!params.trace_path.empty()) {
		trace.open(params.trace_path);
		trace << "iter,group,op,accepted,cost\n";
	}

	double cur_total = 0;
	for (const GroupState& s : st) cur_total += s.cost;
	double best_total = cur_total;
	std::vector<LpSpatialMapping> best_lms;
	for (const GroupState& s : st) best_lms.push_back(s.lms);

	AnnealResult result;

	// one proposal: mutate group gi, re-evaluate it and any downstream group
	// whose DRAM read side the mutation rebinds
	auto propose = [&](size_t gi, std::vector<std::pair<size_t, Candidate>>& touched) -> double {
		GroupState& s = st[gi];
		std::vector<SaOp> ops = applicable_ops(s);
		SaOp op = ops[static_cast<size_t>(rand_below(rng, static_cast<std::int64_t>(ops.size())))];
		if (trace.is_open())
			trace << result.proposals << "," << gi << "," << static_cast<int>(op) << ",";
		LpSpatialMapping next = apply_operator(s.lms, op, rng, ctx);
		touched.clear();
		touched.emplace_back(gi, Candidate{});

		std::map<int, int> up_next = upstream;
		std::set<size_t> downstream;
		for (size_t li = 0; li < next.layers.size(); ++li) {
			int layer = next.layers[li];
			int nv = next.maps[li].fd.ofm;
			auto it = upstream.find(layer);
			if (it != upstream.end() && nv >= 0 && nv != it->second) {
				up_next[layer] = nv;
				for (size_t r : readers[layer]) downstream.insert(r);
			}
		}
		eval_candidate(s.group, next, up_next, touched[0].second);
		for (size_t r : downstream) {
			touched.emplace_back(r, Candidate{});
			eval_candidate(st[r].group, st[r].lms, up_next, touched.back().second);
		}
		double delta = 0;
		for (const auto& [idx, cand] : touched) {
			if (cand.cost == kInf) return kInf;
			if (st[idx].cost == kInf) return -kInf;  // escaping an infeasible state
			delta += cand.cost - st[idx].cost;
		}
		return delta;
	};

	auto commit = [&](std::vector<std::pair<size_t, Candidate>>& touched) {
		for (auto& [idx, cand] : touched) {
			GroupState& s = st[idx];
			s.lms = std::move(cand.lms);
			s.parsed = std::move(cand.parsed);
			s.scheds = std::move(cand.scheds);
			s.rep = cand.rep;
			s.cost = cand.cost;
			for (size_t li = 0; li < s.lms.layers.size(); ++li)
				if (s.lms.maps[li].fd.ofm >= 0) upstream[s.lms.layers[li]] = s.lms.maps[li].fd.ofm;
		}
		cur_total = 0;
		for (const GroupState& s : st) cur_total += s.cost;
	};

	// warm-up proposals set the starting temperature from the mean |delta|
	std::vector<double> warm_sum(st.size(), 0);
	std::vector<int> warm_cnt(st.size(), 0);
	std::vector<double> logw;
	for (const GroupState& s : st) logw.push_back(s.log_weight);
	std::vector<std::pair<size_t, Candidate>> touched;
	for (int w = 0; w < params.warmup; ++w) {
		size_t gi = static_cast<size_t>(select_group(logw, rng));
		double delta = propose(gi, touched);
		if (trace.is_open()) trace << "warmup," << fmt_g(cur_total) << "\n";
		if (std::isfinite(delta) && delta != 0) {
			warm_sum[gi] += std::abs(delta);
			warm_cnt[gi]++;
		}
	}
	double all_sum = 0;
	int all_cnt = 0;
	for (size_t i = 0; i < st.size(); ++i) {
		all_sum += warm_sum[i];
		all_cnt += warm_cnt[i];
	}
	double global_t0 = all_cnt ? all_sum / all_cnt : 0;
	for (size_t i = 0; i < st.size(); ++i)
		st[i].temp = warm_cnt[i] ? warm_sum[i] / warm_cnt[i] : global_t0;

	std::int64_t total_budget = 0;
	for (const GroupState& s : st) total_budget += s.budget;

	while (result.proposals < total_budget) {
		// groups with remaining budget
		std::vector<size_t> active;
		std::vector<double> w;
		for (size_t i = 0; i < st.size(); ++i)
			if (st[i].seen < st[i].budget) {
				active.push_back(i);
				w.push_back(st[i].log_weight);
			}
		if (active.empty()) break;
		size_t gi = active[static_cast<size_t>(select_group(w, rng))];
		GroupState& s = st[gi];
		++result.proposals;
		++s.seen;
		if (s.seen % s.cool_every == 0) s.temp *= params.cool_rate;

		double delta = propose(gi, touched);
		bool accept = false;
		if (delta <= 0) {
			accept = true;
		} else if (std::isfinite(delta) && s.temp > 0) {
			double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
			accept = u < std::exp(-delta / s.temp);
		}
		if (accept) {
			commit(touched);
			++result.accepted;
			if (cur_total < best_total) {
				best_total = cur_total;
				for (size_t i = 0; i < st.size(); ++i) best_lms[i] = st[i].lms;
			}
		}
		if (trace.is_open()) trace << (accept ? 1 : 0) << "," << fmt_g(cur_total) << "\n";
	}

	result.cost = best_total;
	for (size_t i = 0; i < st.size(); ++i) {
		GroupMapping gm;
		gm.layers = st[i].group.layers;
		gm.batch_unit = st[i].group.batch_unit;
		gm.lms = best_lms[i];
		result.mappings.push_back(std::move(gm));
	}
	result.eval = evaluate_mapped_dnn(g, result.mappings, cfg, topo, et, cache);
	return result;
}

}  // namespace chipdse
