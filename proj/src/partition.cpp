#include "chipdse/partition.hpp"

#include <cmath>
#include <limits>

#include "chipdse/mapping.hpp"
#include "chipdse/util.hpp"

namespace chipdse {

std::vector<LayerGroup> dp_partition(const DnnGraph& g, int max_layers_per_group,
                                     const GroupCostFn& cost) {
	int n = g.num_layers();
	if (max_layers_per_group < 1) throw Error("dp_partition: group cap must be positive");

	std::vector<std::int64_t> batch_units;
	for (std::int64_t bu = 1; bu <= g.batch; bu *= 2) batch_units.push_back(bu);

	const double inf = std::numeric_limits<double>::infinity();
	std::vector<double> best(static_cast<size_t>(n) + 1, inf);
	std::vector<int> cut(static_cast<size_t>(n) + 1, -1);
	std::vector<std::int64_t> bu_at(static_cast<size_t>(n) + 1, 1);
	best[0] = 0;

	std::vector<int> seg;
	for (int i = 1; i <= n; ++i) {
		for (int j = std::max(0, i - max_layers_per_group); j < i; ++j) {
			if (best[static_cast<size_t>(j)] == inf) continue;
			seg.clear();
			for (int l = j; l < i; ++l) seg.push_back(l);
			for (std::int64_t bu : batch_units) {
				double c;
				try {
					c = cost(seg, bu);
				} catch (const std::exception& e) {
					throw Error("dp_partition: cost oracle failed on layers [" + g.layer(j).name +
					            " .. " + g.layer(i - 1).name + "] batch_unit " + std::to_string(bu) +
					            ": " + e.what());
				}
				double total = best[static_cast<size_t>(j)] + c;
				if (total < best[static_cast<size_t>(i)]) {
					best[static_cast<size_t>(i)] = total;
					cut[static_cast<size_t>(i)] = j;
					bu_at[static_cast<size_t>(i)] = bu;
				}
			}
		}
		if (best[static_cast<size_t>(i)] == inf) {
			// nothing mapped; fall back to the shortest segment so the DP stays total
			int j = std::max(0, i - 1);
			best[static_cast<size_t>(i)] = best[static_cast<size_t>(j)];
			cut[static_cast<size_t>(i)] = j;
			bu_at[static_cast<size_t>(i)] = 1;
		}
	}

	std::vector<LayerGroup> groups;
	for (int i = n; i > 0; i = cut[static_cast<size_t>(i)]) {
		LayerGroup grp;
		grp.batch_unit = bu_at[static_cast<size_t>(i)];
		for (int l = cut[static_cast<size_t>(i)]; l < i; ++l) grp.layers.push_back(l);
		grp.depth = chain_depth(g, grp.layers);
		groups.push_back(std::move(grp));
	}
	std::reverse(groups.begin(), groups.end());
	return groups;
}

GroupCostFn make_stripe_cost_oracle(const DnnGraph& g, const ArchConfig& cfg,
                                    const Topology& topo, const EnergyTable& et, double beta,
                                    double gamma, ScheduleCache& cache) {
	return [&g, cfg, topo, &et, beta, gamma, &cache](const std::vector<int>& layers,
	                                                 std::int64_t batch_unit) -> double {
		if (static_cast<int>(layers.size()) > cfg.cores())
			return std::numeric_limits<double>::infinity();
		GroupMapping gm;
		gm.layers = layers;
		gm.batch_unit = batch_unit;
		gm.lms = stripe_initial_mapping(layers, batch_unit, g, cfg);
		gm.lms.batch_unit = batch_unit;
		DnnEval ev = evaluate_mapped_dnn(g, {gm}, cfg, topo, et, cache);
		if (!ev.feasible) return std::numeric_limits<double>::infinity();
		return std::pow(ev.total.energy_j, beta) * std::pow(ev.total.delay_s, gamma);
	};
}

}  // namespace chipdse
