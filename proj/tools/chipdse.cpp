#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "chipdse/dse.hpp"
#include "chipdse/formats.hpp"
#include "chipdse/mapping.hpp"
#include "chipdse/partition.hpp"
#include "chipdse/util.hpp"

namespace fs = std::filesystem;
using namespace chipdse;

namespace {

int log_level() {
	const char* v = std::getenv("CHIPDSE_LOG");
	if (!v) return 1;
	std::string s = v;
	if (s == "quiet") return 0;
	if (s == "debug") return 2;
	return 1;
}

void info(const std::string& msg) {
	if (log_level() >= 1) std::cerr << msg << "\n";
}

std::string timestamp_now() {
	auto now = std::chrono::system_clock::now();
	std::time_t tt = std::chrono::system_clock::to_time_t(now);
	std::tm tm{};
	localtime_r(&tt, &tm);
	char buf[32];
	std::strftime(buf, sizeof(buf), "%Y_%m_%d_%H_%M_%S", &tm);
	return buf;
}

fs::path make_run_dir(const std::string& base, std::uint64_t seed) {
	fs::path dir = fs::path(base) / (timestamp_now() + "_s" + std::to_string(seed));
	for (int i = 2; fs::exists(dir); ++i)
		dir = fs::path(base) / (timestamp_now() + "_s" + std::to_string(seed) + "_" + std::to_string(i));
	fs::create_directories(dir);
	return dir;
}

Objective parse_objective(const std::string& s) {
	Objective o;
	if (s.empty()) return o;
	if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &o.alpha, &o.beta, &o.gamma) != 3)
		throw Error("objective must be 'alpha,beta,gamma'");
	return o;
}

struct CommonArgs {
	std::string energy_path, cost_path;
	std::string objective = "1,1,1";
	std::uint64_t seed = 1;
	int threads = 0;
	std::int64_t batch = 0;  // 0 = keep model batch
	std::string out = "runs";
};

EnergyTable load_energy(const CommonArgs& a) {
	return a.energy_path.empty() ? EnergyTable{} : parse_energy_table(read_file(a.energy_path));
}

CostParams load_cost(const CommonArgs& a) {
	return a.cost_path.empty() ? CostParams{} : parse_cost_params(read_file(a.cost_path));
}

std::vector<DnnGraph> load_models(const std::vector<std::string>& paths, std::int64_t batch) {
	std::vector<DnnGraph> models;
	for (const std::string& p : paths) {
		DnnGraph g = parse_model(read_file(p));
		if (batch > 0) {
			g.batch = batch;
			finalize_graph(g);
		}
		models.push_back(std::move(g));
	}
	return models;
}

void write_manifest(const fs::path& dir, const std::string& subcommand,
                    const std::vector<std::string>& args, const std::vector<std::string>& configs,
                    const CommonArgs& a) {
	RunManifest m;
	m.subcommand = subcommand;
	m.args = args;
	for (const std::string& c : configs)
		if (!c.empty()) m.config_paths.push_back(fs::absolute(c).string());
	m.seed = a.seed;
	m.threads = a.threads;
	m.timestamp = timestamp_now();
	write_file((dir / "manifest.json").string(), serialize_manifest(m));
}

std::string model_stem(const std::string& path) {
	return fs::path(path).stem().string();
}

int cmd_dse(const std::vector<std::string>& model_paths, const std::string& grid_path,
            const CommonArgs& a, int joint_multiplier) {
	std::vector<DnnGraph> models = load_models(model_paths, a.batch);
	ArchGrid grid = parse_grid(read_file(grid_path));
	if (enumerate_candidates(grid).valid.empty()) {
		std::cerr << "error: the grid has no valid architecture candidate\n";
		return 2;
	}
	DseOptions opt;
	opt.obj = parse_objective(a.objective);
	opt.seed = a.seed;
	opt.threads = a.threads;

	fs::path dir = make_run_dir(a.out, a.seed);
	info("run dir: " + dir.string());

	std::vector<CandidateResult> results = run_dse(grid, models, load_cost(a), load_energy(a), opt);
	std::vector<std::string> names;
	for (const std::string& p : model_paths) names.push_back(model_stem(p));
	write_file((dir / "result.csv").string(), result_csv(results, names));
	write_manifest(dir, "dse", model_paths, {grid_path, a.cost_path, a.energy_path}, a);

	const CandidateResult* best = nullptr;
	for (const CandidateResult& r : results)
		if (r.status == "ok") {
			best = &r;
			break;
		}
	if (!best) {
		std::cerr << "error: no candidate could be evaluated\n";
		return 2;
	}
	write_file((dir / "best_arch.txt").string(), arch_tuple(best->cfg) + "\n");
	write_file((dir / "best_arch.json").string(), serialize_arch(best->cfg));
	if (!best->best_mapping_first_dnn.empty())
		write_file((dir / ("best_mapping_" + names[0] + ".json")).string(),
		           serialize_lms_file(best->best_mapping_first_dnn, models[0]));
	if (joint_multiplier > 1) {
		std::vector<JointResult> joint =
		    run_joint_dse(grid, joint_multiplier, models, load_cost(a), load_energy(a), opt);
		write_file((dir / "joint_result.csv").string(), joint_csv(joint));
		if (!joint.empty() && joint[0].status == "ok")
			std::cout << "joint best: " << arch_tuple(joint[0].low.cfg) << " -> "
			          << arch_tuple(joint[0].high.cfg) << "\n";
	}
	if (log_level() >= 2) {
		int shown = 0;
		for (const CandidateResult& r : results) {
			if (r.status != "ok" || shown >= 5) continue;
			std::cerr << "  #" << ++shown << " " << arch_tuple(r.cfg) << " objective "
			          << fmt_g(r.objective, 4) << "\n";
		}
	}
	std::cout << "best arch: " << arch_tuple(best->cfg) << "\n";
	return 0;
}

struct MappedRun {
	std::vector<GroupMapping> mappings;
	DnnEval eval;
};

MappedRun run_mapping(const DnnGraph& g, const ArchConfig& cfg, const EnergyTable& et,
                      const Objective& obj, bool use_sa, std::uint64_t seed,
                      const std::string& trace_path = "") {
	Topology topo = make_topology(cfg);
	ScheduleCache cache(cfg, et, g.elem_bytes);
	GroupCostFn oracle = make_stripe_cost_oracle(g, cfg, topo, et, obj.beta, obj.gamma, cache);
	std::vector<LayerGroup> groups = dp_partition(g, cfg.cores(), oracle);
	MappedRun out;
	if (use_sa) {
		SaParams sa;
		sa.beta = obj.beta;
		sa.gamma = obj.gamma;
		sa.trace_path = trace_path;
		AnnealResult ar = anneal(g, groups, cfg, topo, et, sa, seed, cache);
		out.mappings = ar.mappings;
		out.eval = ar.eval;
	} else {
		for (const LayerGroup& grp : groups) {
			GroupMapping gm;
			gm.layers = grp.layers;
			gm.batch_unit = grp.batch_unit;
			gm.lms = stripe_initial_mapping(grp.layers, grp.batch_unit, g, cfg);
			out.mappings.push_back(std::move(gm));
		}
		out.eval = evaluate_mapped_dnn(g, out.mappings, cfg, topo, et, cache);
	}
	if (!out.eval.feasible) throw Error("mapping infeasible: " + out.eval.infeasible_why);
	return out;
}

int cmd_map(const std::string& model_path, const std::string& arch_path, const CommonArgs& a,
            bool sa_trace) {
	std::vector<DnnGraph> models = load_models({model_path}, a.batch);
	const DnnGraph& g = models[0];
	ArchConfig cfg = parse_arch(read_file(arch_path));
	EnergyTable et = load_energy(a);
	Objective obj = parse_objective(a.objective);

	fs::path dir = make_run_dir(a.out, a.seed);
	info("run dir: " + dir.string());
	MappedRun run = run_mapping(g, cfg, et, obj, true, a.seed,
	                            sa_trace ? (dir / "sa_trace.csv").string() : "");
	write_file((dir / "mapping.json").string(), serialize_lms_file(run.mappings, g));
	std::string csv = "group,layers,batch_unit,depth\n";
	for (size_t i = 0; i < run.mappings.size(); ++i) {
		csv += std::to_string(i) + ",\"";
		for (size_t l = 0; l < run.mappings[i].layers.size(); ++l)
			csv += (l ? " " : "") + g.layer(run.mappings[i].layers[l]).name;
		csv += "\"," + std::to_string(run.mappings[i].batch_unit) + "," +
		       std::to_string(chain_depth(g, run.mappings[i].layers)) + "\n";
	}
	write_file((dir / "groups.csv").string(), csv);
	write_manifest(dir, "map", {model_path, arch_path}, {a.energy_path}, a);
	std::cout << "E = " << fmt_g(run.eval.total.energy_j) << " J, D = "
	          << fmt_g(run.eval.total.delay_s) << " s\n";
	return 0;
}

int cmd_eval(const std::string& model_path, const std::string& arch_path,
             const std::string& lms_path, const CommonArgs& a, bool heatmap, bool double_d2d) {
	std::vector<DnnGraph> models = load_models({model_path}, a.batch);
	const DnnGraph& g = models[0];
	ArchConfig cfg = parse_arch(read_file(arch_path));
	EnergyTable et = load_energy(a);
	std::vector<GroupMapping> mappings = parse_lms_file(read_file(lms_path), g);
	Topology topo = make_topology(cfg);
	ScheduleCache cache(cfg, et, g.elem_bytes);
	DnnEval ev = evaluate_mapped_dnn(g, mappings, cfg, topo, et, cache);
	if (!ev.feasible) throw Error("mapping infeasible: " + ev.infeasible_why);

	fs::path dir = make_run_dir(a.out, a.seed);
	std::string rep = "energy_j,delay_s,mac_j,glb_j,dram_j,noc_j,d2d_j,bottleneck\n";
	rep += fmt_g(ev.total.energy_j) + "," + fmt_g(ev.total.delay_s) + "," + fmt_g(ev.total.mac_j) +
	       "," + fmt_g(ev.total.glb_j) + "," + fmt_g(ev.total.dram_j) + "," +
	       fmt_g(ev.total.noc_j) + "," + fmt_g(ev.total.d2d_j) + "," +
	       bottleneck_name(ev.total.bottleneck) + "\n";
	write_file((dir / "report.csv").string(), rep);
	if (heatmap)
		write_file((dir / "heatmap.txt").string(), heatmap_text(ev.total.traffic, topo, double_d2d));
	write_manifest(dir, "eval", {model_path, arch_path, lms_path}, {a.energy_path}, a);
	std::cout << "E = " << fmt_g(ev.total.energy_j) << " J, D = " << fmt_g(ev.total.delay_s)
	          << " s, bottleneck = " << bottleneck_name(ev.total.bottleneck) << "\n";
	return 0;
}

int cmd_cost(const std::string& arch_path, const CommonArgs& a) {
	ArchConfig cfg = parse_arch(read_file(arch_path));
	CostBreakdown b = total_cost(cfg, load_cost(a));
	std::cout << "arch: " << arch_tuple(cfg) << "\n"
	          << "silicon: $" << fmt_g(b.silicon_usd) << "\n"
	          << "dram: $" << fmt_g(b.dram_usd) << "\n"
	          << "packaging: $" << fmt_g(b.package_usd) << "\n"
	          << "total: $" << fmt_g(b.total_usd) << "\n"
	          << "silicon area: " << fmt_g(b.total_silicon_mm2) << " mm^2 (d2d "
	          << fmt_g(b.d2d_mm2) << ", io " << fmt_g(b.io_mm2) << ")\n";
	return 0;
}

int cmd_compare(const std::string& best_path, const std::string& baseline_path,
                const std::vector<std::string>& model_paths, const std::string& batches_str,
                const CommonArgs& a) {
	ArchConfig best = parse_arch(read_file(best_path));
	ArchConfig base = parse_arch(read_file(baseline_path));
	EnergyTable et = load_energy(a);
	CostParams cost = load_cost(a);
	Objective obj = parse_objective(a.objective);

	std::vector<std::int64_t> batches;
	{
		std::string tok;
		for (char c : batches_str + ",") {
			if (c == ',') {
				if (!tok.empty()) batches.push_back(std::stoll(tok));
				tok.clear();
			} else {
				tok += c;
			}
		}
	}
	if (batches.empty()) throw Error("--batches needs at least one value");

	fs::path dir = make_run_dir(a.out, a.seed);
	info("run dir: " + dir.string());
	struct Pair {
		const char* arch;
		const char* mapping;
	};
	const Pair pairs[3] = {{"baseline", "stripe"}, {"baseline", "sa"}, {"explored", "sa"}};
	std::string csv = "model,batch,arch,mapping,energy_j,delay_s,e_norm,d_norm\n";
	double perf_logsum = 0, eff_logsum = 0;
	int n_rows = 0;
	for (const std::string& mp : model_paths) {
		for (std::int64_t b : batches) {
			DnnGraph g = load_models({mp}, b)[0];
			double base_e = 0, base_d = 0;
			for (const Pair& p : pairs) {
				const ArchConfig& cfg = std::string(p.arch) == "explored" ? best : base;
				bool sa = std::string(p.mapping) == "sa";
				MappedRun run = run_mapping(g, cfg, et, obj, sa, a.seed);
				double e = run.eval.total.energy_j, d = run.eval.total.delay_s;
				if (std::string(p.arch) == "baseline" && !sa) {
					base_e = e;
					base_d = d;
				}
				csv += model_stem(mp) + "," + std::to_string(b) + "," + p.arch + "," + p.mapping +
				       "," + fmt_g(e) + "," + fmt_g(d) + "," + fmt_g(e / base_e) + "," +
				       fmt_g(d / base_d) + "\n";
				if (std::string(p.arch) == "explored") {
					perf_logsum += std::log(base_d / d);
					eff_logsum += std::log(base_e / e);
					++n_rows;
				}
			}
		}
	}
	write_file((dir / "compare.csv").string(), csv);
	std::vector<std::string> cfgs = {a.energy_path, a.cost_path};
	write_manifest(dir, "compare", model_paths, cfgs, a);
	double mc_best = total_cost(best, cost).total_usd;
	double mc_base = total_cost(base, cost).total_usd;
	std::cout << "performance ratio (explored+sa vs baseline+stripe): "
	          << fmt_g(std::exp(perf_logsum / n_rows), 4) << "x\n"
	          << "energy efficiency ratio: " << fmt_g(std::exp(eff_logsum / n_rows), 4) << "x\n"
	          << "MC delta: " << fmt_g((mc_best - mc_base) / mc_base * 100, 4) << "%\n";
	return 0;
}

}  // namespace

int main(int argc, char** argv) {
	CLI::App app{"mapping and architecture co-exploration for chiplet DNN accelerators"};
	app.require_subcommand(1);

	CommonArgs a;
	std::vector<std::string> models;
	std::string grid_path, arch_path, lms_path, best_path, baseline_path, batches = "64";
	int joint = 1;
	bool heatmap = false, heatmap_double = false;

	auto add_common = [&](CLI::App* cmd) {
		cmd->add_option("--energy", a.energy_path, "energy table JSON");
		cmd->add_option("--cost", a.cost_path, "cost params JSON");
		cmd->add_option("--objective", a.objective, "alpha,beta,gamma exponents");
		cmd->add_option("--batch", a.batch, "override model batch size");
		cmd->add_option("--seed", a.seed, "RNG seed");
		cmd->add_option("--threads", a.threads, "worker threads (0 = all)");
		cmd->add_option("--out", a.out, "output base directory");
	};

	CLI::App* dse = app.add_subcommand("dse", "exhaustive architecture sweep");
	dse->add_option("--models", models, "model JSON files")->required();
	dse->add_option("--grid", grid_path, "candidate grid JSON")->required();
	dse->add_option("--joint", joint, "joint DSE multiplier (tile chiplets into joint x compute)");
	add_common(dse);

	bool sa_trace = false;
	CLI::App* map_cmd = app.add_subcommand("map", "mapping search for one architecture");
	map_cmd->add_option("--model", models, "model JSON file")->required()->expected(1);
	map_cmd->add_option("--arch", arch_path, "architecture JSON")->required();
	map_cmd->add_flag("--sa-trace", sa_trace, "write per-iteration (op, accepted, cost) CSV");
	add_common(map_cmd);

	CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a mapping file");
	eval_cmd->add_option("--model", models, "model JSON file")->required()->expected(1);
	eval_cmd->add_option("--arch", arch_path, "architecture JSON")->required();
	eval_cmd->add_option("--lms", lms_path, "mapping JSON")->required();
	eval_cmd->add_flag("--heatmap", heatmap, "write per-link traffic heatmap");
	eval_cmd->add_flag("--heatmap-double-d2d", heatmap_double, "double displayed d2d volumes");
	add_common(eval_cmd);

	CLI::App* cost_cmd = app.add_subcommand("cost", "monetary cost of an architecture");
	cost_cmd->add_option("--arch", arch_path, "architecture JSON")->required();
	add_common(cost_cmd);

	CLI::App* cmp = app.add_subcommand("compare", "explored vs baseline architecture+mapping");
	cmp->add_option("--best", best_path, "explored architecture JSON")->required();
	cmp->add_option("--baseline", baseline_path, "baseline architecture JSON")->required();
	cmp->add_option("--models", models, "model JSON files")->required();
	cmp->add_option("--batches", batches, "comma-separated batch sizes");
	add_common(cmp);

	CLI11_PARSE(app, argc, argv);

	try {
		if (dse->parsed()) return cmd_dse(models, grid_path, a, joint);
		if (map_cmd->parsed()) return cmd_map(models[0], arch_path, a, sa_trace);
		if (eval_cmd->parsed()) return cmd_eval(models[0], arch_path, lms_path, a, heatmap, heatmap_double);
		if (cost_cmd->parsed()) return cmd_cost(arch_path, a);
		if (cmp->parsed()) return cmd_compare(best_path, baseline_path, models, batches, a);
	} catch (const std::exception& e) {
		std::cerr << "error: " << e.what() << "\n";
		return 1;
	}
	return 0;
}
