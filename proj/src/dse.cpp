#include "chipdse/dse.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "chipdse/mapping.hpp"
#include "chipdse/partition.hpp"
#include "chipdse/util.hpp"

namespace chipdse {

namespace {

std::uint64_t candidate_seed(std::uint64_t base, const ArchConfig& c) {
	std::uint64_t h = fnv1a(kFnvBasis, base);
	h = fnv1a(h, static_cast<std::uint64_t>(c.cores_x));
	h = fnv1a(h, static_cast<std::uint64_t>(c.cores_y));
	h = fnv1a(h, static_cast<std::uint64_t>(c.x_cut));
	h = fnv1a(h, static_cast<std::uint64_t>(c.y_cut));
	h = fnv1a(h, static_cast<std::uint64_t>(c.noc_bw));
	h = fnv1a(h, static_cast<std::uint64_t>(c.d2d_bw));
	h = fnv1a(h, static_cast<std::uint64_t>(c.dram_bw_total));
	h = fnv1a(h, static_cast<std::uint64_t>(c.glb_per_core));
	h = fnv1a(h, static_cast<std::uint64_t>(c.mac_per_core));
	return h;
}

double geo_mean(const std::vector<double>& v) {
	double s = 0;
	for (double x : v) s += std::log(x);
	return std::exp(s / static_cast<double>(v.size()));
}

}  // namespace

// evaluates one candidate across all DNNs (partition + anneal + evaluate)
static CandidateResult eval_candidate(const ArchConfig& cfg, const std::vector<DnnGraph>& dnns,
                                      const CostParams& cost, const EnergyTable& et,
                                      const DseOptions& opt) {
	CandidateResult r;
	r.cfg = cfg;
	try {
		r.cost = total_cost(cfg, cost);
		r.mc = r.cost.total_usd;
		Topology topo = make_topology(cfg);
		for (size_t di = 0; di < dnns.size(); ++di) {
			const DnnGraph& g = dnns[di];
			ScheduleCache cache(cfg, et, g.elem_bytes);
			GroupCostFn oracle = make_stripe_cost_oracle(g, cfg, topo, et, opt.obj.beta,
			                                             opt.obj.gamma, cache);
			std::vector<LayerGroup> groups = dp_partition(g, cfg.cores(), oracle);
			std::uint64_t seed = fnv1a(candidate_seed(opt.seed, cfg), di);
			SaParams sa = opt.sa;
			sa.beta = opt.obj.beta;
			sa.gamma = opt.obj.gamma;
			AnnealResult ar = anneal(g, groups, cfg, topo, et, sa, seed, cache);
			if (!ar.eval.feasible) {
				r.status = "excluded";
				r.reason = ar.eval.infeasible_why;
				return r;
			}
			r.e_i.push_back(ar.eval.total.energy_j);
			r.d_i.push_back(ar.eval.total.delay_s);
			if (di == 0) r.best_mapping_first_dnn = ar.mappings;
		}
		r.e = geo_mean(r.e_i);
		r.d = geo_mean(r.d_i);
		r.objective = std::pow(r.mc, opt.obj.alpha) * std::pow(r.e, opt.obj.beta) *
		              std::pow(r.d, opt.obj.gamma);
	} catch (const std::exception& e) {
		r.status = "excluded";
		r.reason = e.what();
	}
	return r;
}

std::vector<CandidateResult> run_dse(const ArchGrid& grid, const std::vector<DnnGraph>& dnns,
                                     const CostParams& cost, const EnergyTable& et,
                                     const DseOptions& opt) {
	if (dnns.empty()) throw Error("run_dse: no DNN models");
	if (opt.obj.alpha == 0 && opt.obj.beta == 0 && opt.obj.gamma == 0)
		throw Error("run_dse: objective exponents must not all be zero");
	CandidateSet cands = enumerate_candidates(grid);
	if (cands.valid.empty()) throw Error("run_dse: no valid architecture candidate");

	std::vector<CandidateResult> results(cands.valid.size());
	int n_threads = opt.threads > 0 ? opt.threads
	                                : static_cast<int>(std::thread::hardware_concurrency());
	n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(cands.valid.size())));
	std::atomic<size_t> next{0};
	auto worker = [&]() {
		size_t i;
		while ((i = next.fetch_add(1)) < cands.valid.size())
			results[i] = eval_candidate(cands.valid[i], dnns, cost, et, opt);
	};
	if (n_threads == 1) {
		worker();
	} else {
		std::vector<std::thread> pool;
		for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
		for (auto& t : pool) t.join();
	}

	auto key = [](const ArchConfig& c) {
		return std::tuple(c.chiplets(), c.cores(), c.dram_bw_total, c.noc_bw, c.d2d_bw,
		                  c.glb_per_core, c.mac_per_core);
	};
	std::stable_sort(results.begin(), results.end(),
	                 [&](const CandidateResult& a, const CandidateResult& b) {
		                 bool ea = a.status != "ok", eb = b.status != "ok";
		                 if (ea != eb) return eb;  // failures sink to the bottom
		                 if (ea && eb) return key(a.cfg) < key(b.cfg);
		                 if (a.objective != b.objective) return a.objective < b.objective;
		                 return key(a.cfg) < key(b.cfg);
	                 });
	for (const RejectedCandidate& rej : cands.rejected) {
		CandidateResult r;
		r.status = "invalid";
		r.reason = rej.reason + " " + rej.tuple;
		results.push_back(std::move(r));
	}
	return results;
}

std::string result_csv(const std::vector<CandidateResult>& results,
                       const std::vector<std::string>& model_names) {
	std::ostringstream os;
	os << "chiplets,cores,dram_bw_gbs,noc_bw_gbs,d2d_bw_gbs,glb_kb,mac_per_core";
	for (const std::string& m : model_names) os << ",E_" << m << ",D_" << m;
	os << ",E,D,MC,objective,status,reason\n";
	for (const CandidateResult& r : results) {
		if (r.status == "invalid") {
			for (size_t i = 0; i < 7 + 2 * model_names.size() + 4; ++i) os << ",";
			os << "invalid," << r.reason << "\n";
			continue;
		}
		const ArchConfig& c = r.cfg;
		os << c.chiplets() << "," << c.cores() << "," << fmt_g(c.dram_bw_total / 1e9) << ","
		   << fmt_g(c.noc_bw / 1e9) << "," << fmt_g(c.chiplets() == 1 ? 0 : c.d2d_bw / 1e9) << ","
		   << c.glb_per_core / 1024 << "," << c.mac_per_core;
		for (size_t i = 0; i < model_names.size(); ++i) {
			if (i < r.e_i.size())
				os << "," << fmt_g(r.e_i[i]) << "," << fmt_g(r.d_i[i]);
			else
				os << ",,";
		}
		if (r.status == "ok")
			os << "," << fmt_g(r.e) << "," << fmt_g(r.d) << "," << fmt_g(r.mc) << ","
			   << fmt_g(r.objective);
		else
			os << ",,," << fmt_g(r.mc) << ",";
		os << "," << r.status << "," << r.reason << "\n";
	}
	return os.str();
}

ArchConfig scale_candidate(const ArchConfig& low, int multiplier) {
	ArchConfig high = low;
	int chips = low.chiplets() * multiplier;
	int pw = low.cores_x / low.x_cut, ph = low.cores_y / low.y_cut;
	// tile chiplets nearest-square, longer grid axis first
	auto [gx, gy] = nearest_square_arrangement(chips);
	if (pw < ph) std::swap(gx, gy);  // keep the core mesh itself near square
	high.x_cut = gx;
	high.y_cut = gy;
	high.cores_x = gx * pw;
	high.cores_y = gy * ph;
	high.dram_bw_total = low.dram_bw_total * multiplier;
	high.dram_count = high.dram_bw_total >= 128e9 ? 4 : 2;
	return high;
}

std::vector<JointResult> run_joint_dse(const ArchGrid& low_grid, int multiplier,
                                       const std::vector<DnnGraph>& dnns, const CostParams& cost,
                                       const EnergyTable& et, const DseOptions& opt) {
	if (multiplier < 1) throw Error("run_joint_dse: multiplier must be >= 1");
	CandidateSet cands = enumerate_candidates(low_grid);
	if (cands.valid.empty()) throw Error("run_joint_dse: no valid low-power candidate");
	std::vector<JointResult> results(cands.valid.size());
	std::atomic<size_t> next{0};
	int n_threads = opt.threads > 0 ? opt.threads
	                                : static_cast<int>(std::thread::hardware_concurrency());
	n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(cands.valid.size())));
	auto worker = [&]() {
		size_t i;
		while ((i = next.fetch_add(1)) < cands.valid.size()) {
			JointResult& jr = results[i];
			jr.low = eval_candidate(cands.valid[i], dnns, cost, et, opt);
			ArchConfig high;
			try {
				high = scale_candidate(cands.valid[i], multiplier);
				validate_arch(high);
			} catch (const std::exception& e) {
				jr.status = "excluded";
				jr.reason = std::string("chiplet grid cannot tile the larger mesh: ") + e.what();
				continue;
			}
			jr.high = eval_candidate(high, dnns, cost, et, opt);
			if (jr.low.status != "ok" || jr.high.status != "ok") {
				jr.status = "excluded";
				jr.reason = jr.low.status != "ok" ? jr.low.reason : jr.high.reason;
				continue;
			}
			jr.product = jr.low.objective * jr.high.objective;
		}
	};
	if (n_threads == 1) {
		worker();
	} else {
		std::vector<std::thread> pool;
		for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
		for (auto& t : pool) t.join();
	}
	std::stable_sort(results.begin(), results.end(), [](const JointResult& a, const JointResult& b) {
		bool ea = a.status != "ok", eb = b.status != "ok";
		if (ea != eb) return eb;
		return a.product < b.product;
	});
	return results;
}

std::string joint_csv(const std::vector<JointResult>& results) {
	std::ostringstream os;
	os << "low_arch,high_arch,low_MC,low_E,low_D,high_MC,high_E,high_D,product,status,reason\n";
	for (const JointResult& r : results) {
		os << "\"" << arch_tuple(r.low.cfg) << "\",\"" << arch_tuple(r.high.cfg) << "\"";
		if (r.status == "ok")
			os << "," << fmt_g(r.low.mc) << "," << fmt_g(r.low.e) << "," << fmt_g(r.low.d) << ","
			   << fmt_g(r.high.mc) << "," << fmt_g(r.high.e) << "," << fmt_g(r.high.d) << ","
			   << fmt_g(r.product);
		else
			os << ",,,,,,,";
		os << "," << r.status << "," << r.reason << "\n";
	}
	return os.str();
}

}  // namespace chipdse
