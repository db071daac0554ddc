#include "chipdse/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "chipdse/util.hpp"

namespace chipdse {

namespace {
constexpr std::int64_t kStripeBytes = 4096;  // DRAM interleaving granularity
}

const LayerMapping& LpSpatialMapping::of(int layer) const {
	for (size_t i = 0; i < layers.size(); ++i)
		if (layers[i] == layer) return maps[i];
	throw Error("layer not in mapping");
}

LayerMapping& LpSpatialMapping::of(int layer) {
	for (size_t i = 0; i < layers.size(); ++i)
		if (layers[i] == layer) return maps[i];
	throw Error("layer not in mapping");
}

Box4 Box4::intersect(const Box4& o) const {
	Box4 r;
	r.b0 = std::max(b0, o.b0);
	r.b1 = std::min(b1, o.b1);
	r.k0 = std::max(k0, o.k0);
	r.k1 = std::min(k1, o.k1);
	r.h0 = std::max(h0, o.h0);
	r.h1 = std::min(h1, o.h1);
	r.w0 = std::max(w0, o.w0);
	r.w1 = std::min(w1, o.w1);
	return r;
}

std::pair<std::int64_t, std::int64_t> split_range(std::int64_t extent, std::int64_t parts,
                                                  std::int64_t idx) {
	std::int64_t base = extent / parts, rem = extent % parts;
	std::int64_t lo = idx * base + std::min(idx, rem);
	return {lo, lo + base + (idx < rem ? 1 : 0)};
}

int chain_depth(const DnnGraph& g, const std::vector<int>& layers) {
	std::map<int, int> depth;
	int best = 1;
	for (int li : layers) {
		int d = 1;
		for (int p : g.layer(li).preds) {
			auto it = depth.find(p);
			if (it != depth.end()) d = std::max(d, it->second + 1);
		}
		depth[li] = d;
		best = std::max(best, d);
	}
	return best;
}

void validate_lms(const LpSpatialMapping& lms, const DnnGraph& g, const ArchConfig& cfg) {
	if (lms.layers.empty()) throw Error("mapping: empty layer group");
	if (lms.maps.size() != lms.layers.size()) throw Error("mapping: layers/maps size mismatch");
	if (lms.batch_unit < 1) throw Error("mapping: batch_unit must be positive");
	std::set<int> in_group(lms.layers.begin(), lms.layers.end());
	int m = cfg.cores(), d = cfg.dram_count;
	for (size_t i = 0; i < lms.layers.size(); ++i) {
		int li = lms.layers[i];
		if (i > 0 && lms.layers[i] <= lms.layers[i - 1])
			throw Error("mapping: group layers must be ascending (topological)");
		const Layer& l = g.layer(li);
		const LayerMapping& lm = lms.maps[i];
		const Partition4D& p = lm.part;
		if (p.h < 1 || p.w < 1 || p.b < 1 || p.k < 1)
			throw Error("mapping '" + l.name + "': partition cuts must be positive");
		if (p.h > l.out_h || p.w > l.out_w || p.k > l.out_k || p.b > lms.batch_unit)
			throw Error("mapping '" + l.name + "': partition cut exceeds dimension extent");
		if (p.product() != static_cast<std::int64_t>(lm.cg.size()))
			throw Error("mapping '" + l.name + "': core group size does not match partition product");
		std::set<int> seen;
		for (int c : lm.cg) {
			if (c < 0 || c >= m) throw Error("mapping '" + l.name + "': core id out of range");
			if (!seen.insert(c).second) throw Error("mapping '" + l.name + "': duplicate core in group");
		}
		auto in_range = [&](int v) { return v >= -1 && v <= d; };
		if (!in_range(lm.fd.ifm) || !in_range(lm.fd.wgt) || !in_range(lm.fd.ofm))
			throw Error("mapping '" + l.name + "': data-flow value out of [-1, D]");
		if ((lm.fd.wgt >= 0) != l.has_weights())
			throw Error("mapping '" + l.name + "': weight source must be managed iff the layer has weights");
		if ((lm.fd.ifm >= 0) != l.preds.empty())
			throw Error("mapping '" + l.name + "': ifmap source must be managed iff the layer reads DNN input");
		bool boundary = std::find(g.outputs.begin(), g.outputs.end(), li) != g.outputs.end();
		for (int s : g.succs[static_cast<size_t>(li)])
			if (!in_group.count(s)) boundary = true;
		if ((lm.fd.ofm >= 0) != boundary)
			throw Error("mapping '" + l.name +
			            "': ofmap destination must be managed iff a consumer is outside the group");
	}
}

namespace {

// needed region of predecessor `p`'s ofmap for the consumer slice `of`;
// `off` is p's channel offset within the consumer's ifmap
Box4 need_from_pred(const Layer& l, const Box4& of, const Layer& p, std::int64_t off) {
	Box4 n;
	n.b0 = of.b0;
	n.b1 = of.b1;
	std::int64_t c0 = l.channel_preserving() ? of.k0 : 0;
	std::int64_t c1 = l.channel_preserving() ? of.k1 : l.in_c;
	n.k0 = std::max<std::int64_t>(c0 - off, 0);
	n.k1 = std::min(c1 - off, p.out_k);
	n.h0 = std::min(of.h0 * l.stride, p.out_h);
	n.h1 = std::min((of.h1 - 1) * l.stride + l.win_r(), p.out_h);
	n.w0 = std::min(of.w0 * l.stride, p.out_w);
	n.w1 = std::min((of.w1 - 1) * l.stride + l.win_s(), p.out_w);
	return n;
}

// payload identity for multicast grouping
struct DepKey {
	int kind;
	int tensor_layer;
	int src_is_dram;
	int src_id;  // core id, or the raw FD value for DRAM sources
	Box4 box;
	auto operator<=>(const DepKey&) const = default;
};

struct DepVal {
	std::int64_t bytes = 0;
	std::vector<NodeRef> dsts;
};

void split_interleaved(std::int64_t bytes, int d, std::vector<std::int64_t>& out) {
	out.assign(static_cast<size_t>(d), 0);
	std::int64_t full = bytes / kStripeBytes, tail = bytes % kStripeBytes;
	std::int64_t n = full + (tail ? 1 : 0);
	if (n == 0) return;
	for (int j = 0; j < d; ++j)
		out[static_cast<size_t>(j)] = (n / d + (j < n % d ? 1 : 0)) * kStripeBytes;
	if (tail) out[static_cast<size_t>((n - 1) % d)] -= kStripeBytes - tail;
}

}  // namespace

ParsedGroup parse_lms(const LpSpatialMapping& lms, const DnnGraph& g, const ArchConfig& cfg,
                      const std::map<int, int>* upstream_dram) {
	validate_lms(lms, g, cfg);
	ParsedGroup out;
	out.batch_unit = lms.batch_unit;
	out.depth = chain_depth(g, lms.layers);

	std::map<int, size_t> pos;
	for (size_t i = 0; i < lms.layers.size(); ++i) pos[lms.layers[i]] = i;

	const std::int64_t e = g.elem_bytes;
	std::vector<std::vector<PartitionedWorkload>> per_layer(lms.layers.size());

	for (size_t i = 0; i < lms.layers.size(); ++i) {
		const Layer& l = g.layer(lms.layers[i]);
		const LayerMapping& lm = lms.maps[i];
		const Partition4D& p = lm.part;
		for (std::int64_t ih = 0; ih < p.h; ++ih)
			for (std::int64_t iw = 0; iw < p.w; ++iw)
				for (std::int64_t ib = 0; ib < p.b; ++ib)
					for (std::int64_t ik = 0; ik < p.k; ++ik) {
						PartitionedWorkload pw;
						pw.layer = l.id;
						pw.id_h = ih;
						pw.id_w = iw;
						pw.id_b = ib;
						pw.id_k = ik;
						pw.nid = ih * p.w * p.b * p.k + iw * p.b * p.k + ib * p.k + ik;
						pw.core = lm.cg[static_cast<size_t>(pw.nid)];
						std::tie(pw.ofmap.h0, pw.ofmap.h1) = split_range(l.out_h, p.h, ih);
						std::tie(pw.ofmap.w0, pw.ofmap.w1) = split_range(l.out_w, p.w, iw);
						std::tie(pw.ofmap.b0, pw.ofmap.b1) = split_range(lms.batch_unit, p.b, ib);
						std::tie(pw.ofmap.k0, pw.ofmap.k1) = split_range(l.out_k, p.k, ik);
						pw.ifmap.b0 = pw.ofmap.b0;
						pw.ifmap.b1 = pw.ofmap.b1;
						pw.ifmap.k0 = l.channel_preserving() ? pw.ofmap.k0 : 0;
						pw.ifmap.k1 = l.channel_preserving() ? pw.ofmap.k1 : l.in_c;
						pw.ifmap.h0 = std::min(pw.ofmap.h0 * l.stride, l.in_h);
						pw.ifmap.h1 = std::min((pw.ofmap.h1 - 1) * l.stride + l.win_r(), l.in_h);
						pw.ifmap.w0 = std::min(pw.ofmap.w0 * l.stride, l.in_w);
						pw.ifmap.w1 = std::min((pw.ofmap.w1 - 1) * l.stride + l.win_s(), l.in_w);
						pw.ifmap_bytes = pw.ifmap.volume() * e;
						pw.weight_bytes =
						    l.has_weights() ? (pw.ofmap.k1 - pw.ofmap.k0) * l.kr * l.ks * l.kc * e : 0;
						per_layer[i].push_back(pw);
					}
	}

	std::map<DepKey, DepVal> acc;
	auto add = [&](DepKind kind, int tensor_layer, bool src_dram, int src_id, const Box4& box,
	               std::int64_t bytes, NodeRef dst) {
		DepKey key{static_cast<int>(kind), tensor_layer, src_dram ? 1 : 0, src_id, box};
		DepVal& v = acc[key];
		v.bytes = bytes;
		if (std::find(v.dsts.begin(), v.dsts.end(), dst) == v.dsts.end()) v.dsts.push_back(dst);
	};

	for (size_t i = 0; i < lms.layers.size(); ++i) {
		const Layer& l = g.layer(lms.layers[i]);
		const LayerMapping& lm = lms.maps[i];
		for (const PartitionedWorkload& c : per_layer[i]) {
			NodeRef dst{false, c.core};
			// ifmaps
			if (l.preds.empty()) {
				if (c.ifmap.volume() > 0)
					add(DepKind::IfmapIn, l.id, true, lm.fd.ifm, c.ifmap, c.ifmap.volume() * e, dst);
			} else {
				for (size_t pp = 0; pp < l.preds.size(); ++pp) {
					int pid = l.preds[pp];
					const Layer& pl = g.layer(pid);
					std::int64_t off = g.pred_channel_offset(l.id, static_cast<int>(pp));
					Box4 need = need_from_pred(l, c.ofmap, pl, off);
					if (need.empty()) continue;
					auto it = pos.find(pid);
					if (it != pos.end()) {
						for (const PartitionedWorkload& q : per_layer[it->second]) {
							Box4 inter = need.intersect(q.ofmap);
							if (inter.empty() || q.core == c.core) continue;
							add(DepKind::IntraEdge, pid, false, q.core, inter, inter.volume() * e, dst);
						}
					} else {
						int binding = 0;  // interleaved unless the producer group says otherwise
						if (upstream_dram) {
							auto ub = upstream_dram->find(pid);
							if (ub != upstream_dram->end()) binding = ub->second;
						}
						add(DepKind::IfmapIn, pid, true, binding, need, need.volume() * e, dst);
					}
				}
			}
			// weights
			if (l.has_weights() && c.weight_bytes > 0) {
				Box4 wbox{0, 1, c.ofmap.k0, c.ofmap.k1, 0, 1, 0, 1};
				add(DepKind::WeightIn, l.id, true, lm.fd.wgt, wbox, c.weight_bytes, dst);
			}
			// ofmaps
			if (lm.fd.ofm >= 0 && c.ofmap.volume() > 0) {
				add(DepKind::OfmapOut, l.id, false, c.core, c.ofmap, c.ofmap.volume() * e,
				    NodeRef{true, lm.fd.ofm});
			}
		}
	}

	// flatten, expanding interleaved DRAM endpoints over all controllers
	std::vector<std::int64_t> parts;
	for (const auto& [key, val] : acc) {
		CommDep dep;
		dep.kind = static_cast<DepKind>(key.kind);
		dep.layer = key.tensor_layer;
		dep.bytes = val.bytes;
		dep.dsts = val.dsts;
		if (key.src_is_dram) {
			if (key.src_id == 0) {
				split_interleaved(val.bytes, cfg.dram_count, parts);
				for (int j = 0; j < cfg.dram_count; ++j) {
					if (parts[static_cast<size_t>(j)] == 0) continue;
					CommDep d2 = dep;
					d2.src = NodeRef{true, j};
					d2.bytes = parts[static_cast<size_t>(j)];
					out.deps.push_back(std::move(d2));
				}
				continue;
			}
			dep.src = NodeRef{true, key.src_id - 1};
		} else {
			dep.src = NodeRef{false, key.src_id};
		}
		// DRAM-bound writes with interleaving expand on the destination side
		if (dep.dsts.size() == 1 && dep.dsts[0].is_dram) {
			int fd_val = dep.dsts[0].id;
			if (fd_val == 0) {
				split_interleaved(dep.bytes, cfg.dram_count, parts);
				for (int j = 0; j < cfg.dram_count; ++j) {
					if (parts[static_cast<size_t>(j)] == 0) continue;
					CommDep d2 = dep;
					d2.dsts = {NodeRef{true, j}};
					d2.bytes = parts[static_cast<size_t>(j)];
					out.deps.push_back(std::move(d2));
				}
				continue;
			}
			dep.dsts[0].id = fd_val - 1;
		}
		out.deps.push_back(std::move(dep));
	}

	for (auto& v : per_layer)
		for (auto& pw : v) out.pws.push_back(pw);
	return out;
}

namespace {

// largest divisor of n that is <= cap
std::int64_t best_divisor(std::int64_t n, std::int64_t cap) {
	for (std::int64_t d = std::min(n, cap); d >= 1; --d)
		if (n % d == 0) return d;
	return 1;
}

bool factor_part(std::int64_t n, const Layer& l, std::int64_t batch_unit, Partition4D& p) {
	p.k = best_divisor(n, l.out_k);
	std::int64_t rem = n / p.k;
	p.b = best_divisor(rem, batch_unit);
	rem /= p.b;
	p.h = best_divisor(rem, l.out_h);
	rem /= p.h;
	p.w = best_divisor(rem, l.out_w);
	rem /= p.w;
	return rem == 1;
}

}  // namespace

LpSpatialMapping stripe_initial_mapping(const std::vector<int>& group_layers,
                                        std::int64_t batch_unit, const DnnGraph& g,
                                        const ArchConfig& cfg) {
	int m = cfg.cores();
	int n = static_cast<int>(group_layers.size());
	if (n == 0) throw Error("stripe: empty group");
	if (n > m) throw Error("stripe: group has more layers than cores");

	std::vector<double> flops;
	double total = 0;
	for (int li : group_layers) {
		double f = static_cast<double>(layer_flops(g.layer(li), batch_unit));
		flops.push_back(f);
		total += f;
	}
	if (total <= 0) total = 1;

	// one core each, spares by largest remainder on FLOPs share
	std::vector<std::int64_t> alloc(static_cast<size_t>(n), 1);
	int spare = m - n;
	std::vector<double> quota(static_cast<size_t>(n));
	std::vector<std::int64_t> extra(static_cast<size_t>(n), 0);
	std::int64_t given = 0;
	for (int i = 0; i < n; ++i) {
		quota[static_cast<size_t>(i)] = spare * flops[static_cast<size_t>(i)] / total;
		extra[static_cast<size_t>(i)] = static_cast<std::int64_t>(quota[static_cast<size_t>(i)]);
		given += extra[static_cast<size_t>(i)];
	}
	std::vector<int> order(static_cast<size_t>(n));
	for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
	std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
		double fa = quota[static_cast<size_t>(a)] - std::floor(quota[static_cast<size_t>(a)]);
		double fb = quota[static_cast<size_t>(b)] - std::floor(quota[static_cast<size_t>(b)]);
		return fa > fb;
	});
	for (int i = 0; given < spare; ++i) {
		extra[static_cast<size_t>(order[static_cast<size_t>(i % n)])]++;
		++given;
	}
	for (int i = 0; i < n; ++i) alloc[static_cast<size_t>(i)] += extra[static_cast<size_t>(i)];

	// shrink any allocation the layer's dims cannot absorb
	LpSpatialMapping lms;
	lms.batch_unit = batch_unit;
	lms.layers = group_layers;
	lms.maps.resize(static_cast<size_t>(n));
	std::int64_t freed = 0;
	for (int i = 0; i < n; ++i) {
		const Layer& l = g.layer(group_layers[static_cast<size_t>(i)]);
		Partition4D p;
		std::int64_t use = alloc[static_cast<size_t>(i)];
		std::int64_t cap = std::min<std::int64_t>(use, l.out_h * l.out_w * l.out_k * batch_unit);
		use = cap;
		while (use > 1 && !factor_part(use, l, batch_unit, p)) --use;
		if (use <= 1) {
			use = 1;
			p = Partition4D{};
		}
		freed += alloc[static_cast<size_t>(i)] - use;
		alloc[static_cast<size_t>(i)] = use;
		lms.maps[static_cast<size_t>(i)].part = p;
	}
	// hand freed cores to layers that can still grow
	while (freed > 0) {
		bool placed = false;
		for (int i = 0; i < n && freed > 0; ++i) {
			const Layer& l = g.layer(group_layers[static_cast<size_t>(i)]);
			Partition4D p;
			if (factor_part(alloc[static_cast<size_t>(i)] + 1, l, batch_unit, p)) {
				alloc[static_cast<size_t>(i)]++;
				lms.maps[static_cast<size_t>(i)].part = p;
				--freed;
				placed = true;
			}
		}
		if (!placed) break;
	}

	// contiguous column-major runs
	std::vector<int> cores;
	for (int x = 0; x < cfg.cores_x; ++x)
		for (int y = 0; y < cfg.cores_y; ++y) cores.push_back(y * cfg.cores_x + x);
	size_t cursor = 0;
	for (int i = 0; i < n; ++i) {
		LayerMapping& lm = lms.maps[static_cast<size_t>(i)];
		for (std::int64_t c = 0; c < alloc[static_cast<size_t>(i)]; ++c)
			lm.cg.push_back(cores[cursor++]);
		const Layer& l = g.layer(group_layers[static_cast<size_t>(i)]);
		std::set<int> in_group(group_layers.begin(), group_layers.end());
		lm.fd.ifm = l.preds.empty() ? 0 : -1;
		lm.fd.wgt = l.has_weights() ? 0 : -1;
		bool boundary =
		    std::find(g.outputs.begin(), g.outputs.end(), l.id) != g.outputs.end();
		for (int s : g.succs[static_cast<size_t>(l.id)])
			if (!in_group.count(s)) boundary = true;
		lm.fd.ofm = boundary ? 0 : -1;
	}
	validate_lms(lms, g, cfg);
	return lms;
}

BigUint lms_space_size(int n_layers, int n_cores) {
	if (n_layers < 1 || n_layers >= n_cores)
		throw std::domain_error("lms_space_size: needs 1 <= N < M");
	BigUint sum;
	for (int i = 0; i <= n_layers - 1; ++i) {
		std::uint64_t c1 = binom_u64(n_layers, i);
		std::uint64_t c2 = binom_u64(n_cores - n_layers - 1, n_layers - i - 1);
		if (c1 == 0 || c2 == 0) continue;
		BigUint term(c1);
		term.mul_u64(c2);
		term.shl_bits(2u * static_cast<unsigned>(n_layers - i));
		sum += term;
	}
	for (int f = 2; f <= n_cores; ++f) sum.mul_u64(static_cast<std::uint64_t>(f));
	return sum;
}

double log_lms_space_size(int n_layers, int n_cores) {
	if (n_layers < 1 || n_layers >= n_cores) return 0.0;
	auto logc = [](int n, int k) {
		return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
	};
	double mx = -HUGE_VAL;
	std::vector<double> terms;
	for (int i = 0; i <= n_layers - 1; ++i) {
		int k2 = n_layers - i - 1, n2 = n_cores - n_layers - 1;
		if (k2 > n2) continue;
		double t = logc(n_layers, i) + logc(n2, k2) + (n_layers - i) * std::log(4.0);
		terms.push_back(t);
		mx = std::max(mx, t);
	}
	if (terms.empty()) return 0.0;
	double s = 0;
	for (double t : terms) s += std::exp(t - mx);
	return std::lgamma(n_cores + 1.0) + mx + std::log(s);
}

BigUint stripe_space_size(int n_layers, int n_cores) {
	if (n_cores < 1) throw Error("stripe_space_size: M >= 1 required");
	BigUint r(static_cast<std::uint64_t>(n_layers));
	r.mul_u64(partition_count(n_cores));
	return r;
}

}  // namespace chipdse
