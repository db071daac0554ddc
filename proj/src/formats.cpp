#include "chipdse/formats.hpp"

#include <fstream>
#include <sstream>

#include "chipdse/util.hpp"
#include "json.hpp"

namespace chipdse {

using nlohmann::json;

std::string read_file(const std::string& path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) throw Error("cannot open '" + path + "'");
	std::ostringstream os;
	os << in.rdbuf();
	return os.str();
}

void write_file(const std::string& path, const std::string& content) {
	std::ofstream out(path, std::ios::binary);
	if (!out) throw Error("cannot write '" + path + "'");
	out << content;
}

static json parse_json(const std::string& text, const char* what) {
	try {
		return json::parse(text);
	} catch (const json::exception& e) {
		throw Error(std::string(what) + ": invalid JSON: " + e.what());
	}
}

ArchGrid parse_grid(const std::string& text) {
	json j = parse_json(text, "grid config");
	ArchGrid g;
	try {
		g.tops = j.at("tops").get<double>();
		if (j.contains("freq_ghz")) g.freq_hz = j["freq_ghz"].get<double>() * 1e9;
		g.x_cut = j.at("x_cut").get<std::vector<int>>();
		g.y_cut = j.at("y_cut").get<std::vector<int>>();
		g.dram_bw_per_tops = j.at("dram_bw_per_tops").get<std::vector<double>>();
		g.noc_bw_gbs = j.at("noc_bw").get<std::vector<double>>();
		g.d2d_bw_ratio = j.at("d2d_bw_ratio").get<std::vector<double>>();
		g.glb_kb = j.at("glb_per_core").get<std::vector<std::int64_t>>();
		g.mac_per_core = j.at("mac_per_core").get<std::vector<int>>();
		if (j.value("topology", "mesh") == std::string("folded_torus"))
			g.routing = Routing::FoldedTorusXY;
	} catch (const json::exception& e) {
		throw Error(std::string("grid config: ") + e.what());
	}
	return g;
}

ArchConfig parse_arch(const std::string& text) {
	json j = parse_json(text, "arch config");
	ArchConfig c;
	try {
		c.cores_x = j.at("cores_x").get<int>();
		c.cores_y = j.at("cores_y").get<int>();
		c.x_cut = j.at("x_cut").get<int>();
		c.y_cut = j.at("y_cut").get<int>();
		c.noc_bw = j.at("noc_bw_gbs").get<double>() * 1e9;
		c.d2d_bw = j.at("d2d_bw_gbs").get<double>() * 1e9;
		c.dram_bw_total = j.at("dram_bw_gbs").get<double>() * 1e9;
		c.dram_count = j.value("dram_count", c.dram_bw_total >= 128e9 ? 4 : 2);
		c.glb_per_core = j.at("glb_kb").get<std::int64_t>() * 1024;
		c.mac_per_core = j.at("mac_per_core").get<int>();
		if (j.contains("freq_ghz")) c.freq_hz = j["freq_ghz"].get<double>() * 1e9;
		if (j.contains("glb_bw_gbs")) c.glb_bw = j["glb_bw_gbs"].get<double>() * 1e9;
		if (j.value("topology", "mesh") == std::string("folded_torus"))
			c.routing = Routing::FoldedTorusXY;
	} catch (const json::exception& e) {
		throw Error(std::string("arch config: ") + e.what());
	}
	validate_arch(c);
	return c;
}

std::string serialize_arch(const ArchConfig& c) {
	json j;
	j["cores_x"] = c.cores_x;
	j["cores_y"] = c.cores_y;
	j["x_cut"] = c.x_cut;
	j["y_cut"] = c.y_cut;
	j["noc_bw_gbs"] = c.noc_bw / 1e9;
	j["d2d_bw_gbs"] = c.d2d_bw / 1e9;
	j["dram_bw_gbs"] = c.dram_bw_total / 1e9;
	j["dram_count"] = c.dram_count;
	j["glb_kb"] = c.glb_per_core / 1024;
	j["mac_per_core"] = c.mac_per_core;
	j["freq_ghz"] = c.freq_hz / 1e9;
	if (c.routing == Routing::FoldedTorusXY) j["topology"] = "folded_torus";
	return j.dump(2);
}

CostParams parse_cost_params(const std::string& text) {
	json j = parse_json(text, "cost config");
	CostParams p;
	try {
		p.c_silicon_per_mm2 = j.value("c_silicon_per_mm2", p.c_silicon_per_mm2);
		p.yield_unit = j.value("yield_unit", p.yield_unit);
		p.area_unit_mm2 = j.value("area_unit_mm2", p.area_unit_mm2);
		p.core_mm2_per_kmac = j.value("core_mm2_per_kmac", p.core_mm2_per_kmac);
		p.glb_mm2_per_mb = j.value("glb_mm2_per_mb", p.glb_mm2_per_mb);
		p.d2d_mm2_per_link = j.value("d2d_mm2_per_link", p.d2d_mm2_per_link);
		p.dram_phy_mm2 = j.value("dram_phy_mm2", p.dram_phy_mm2);
		p.io_misc_mm2 = j.value("io_misc_mm2", p.io_misc_mm2);
		p.f_scale = j.value("f_scale", p.f_scale);
		p.yield_package = j.value("yield_package", p.yield_package);
		p.c_fanout_per_mm2 = j.value("c_fanout_per_mm2", p.c_fanout_per_mm2);
		if (j.contains("hd_tiers")) {
			p.hd_tiers.clear();
			for (const auto& t : j["hd_tiers"])
				p.hd_tiers.push_back({t.at(0).get<double>(), t.at(1).get<double>(),
				                      t.at(2).get<double>()});
		}
		p.dram_unit_bw = j.value("dram_unit_bw_gbs", p.dram_unit_bw / 1e9) * 1e9;
		p.c_dram_die = j.value("c_dram_die", p.c_dram_die);
	} catch (const json::exception& e) {
		throw Error(std::string("cost config: ") + e.what());
	}
	if (p.yield_unit <= 0 || p.yield_unit > 1 || p.yield_package <= 0 || p.yield_package > 1)
		throw Error("cost config: yields must be in (0, 1]");
	double prev_hi = -1;
	for (const PackageTier& t : p.hd_tiers) {
		if (prev_hi >= 0 && t.area_lo != prev_hi)
			throw Error("cost config: package tiers must be contiguous");
		if (t.area_hi <= t.area_lo) throw Error("cost config: package tier band empty");
		prev_hi = t.area_hi;
	}
	return p;
}

EnergyTable parse_energy_table(const std::string& text) {
	json j = parse_json(text, "energy config");
	EnergyTable t;
	try {
		t.mac_pj = j.value("mac_pj", t.mac_pj);
		t.glb_pj_per_byte = j.value("glb_pj_per_byte", t.glb_pj_per_byte);
		t.dram_pj_per_byte = j.value("dram_pj_per_byte", t.dram_pj_per_byte);
		t.flit_bytes = j.value("flit_bytes", t.flit_bytes);
		if (j.contains("noc_pj_per_bit_per_hop"))
			t.noc_pj_per_flit_per_hop = j["noc_pj_per_bit_per_hop"].get<double>() * 8 * t.flit_bytes;
		t.noc_pj_per_flit_per_hop = j.value("noc_pj_per_flit_per_hop", t.noc_pj_per_flit_per_hop);
		std::string model = j.value("d2d_model", "clock_forwarding");
		if (model == "clock_forwarding")
			t.d2d_model = D2dModel::ClockForwarding;
		else if (model == "clock_embedded")
			t.d2d_model = D2dModel::ClockEmbedded;
		else
			throw Error("energy config: unknown d2d_model '" + model + "'");
		t.d2d_pj_per_bit = j.value("d2d_pj_per_bit", t.d2d_pj_per_bit);
		t.d2d_power_w_per_link = j.value("d2d_power_w_per_link", t.d2d_power_w_per_link);
	} catch (const json::exception& e) {
		throw Error(std::string("energy config: ") + e.what());
	}
	if (t.mac_pj < 0 || t.glb_pj_per_byte < 0 || t.dram_pj_per_byte < 0 ||
	    t.noc_pj_per_flit_per_hop < 0 || t.flit_bytes <= 0)
		throw Error("energy config: unit energies must be non-negative, flit_bytes positive");
	return t;
}

std::vector<GroupMapping> parse_lms_file(const std::string& text, const DnnGraph& g) {
	json j = parse_json(text, "mapping file");
	std::map<std::string, int> by_name;
	for (const Layer& l : g.layers) by_name[l.name] = l.id;
	std::vector<GroupMapping> out;
	try {
		for (const auto& jg : j.at("groups")) {
			GroupMapping gm;
			gm.batch_unit = jg.at("batch_unit").get<std::int64_t>();
			for (const auto& name : jg.at("layers")) {
				auto it = by_name.find(name.get<std::string>());
				if (it == by_name.end())
					throw Error("mapping file: unknown layer '" + name.get<std::string>() + "'");
				gm.layers.push_back(it->second);
			}
			gm.lms.batch_unit = gm.batch_unit;
			gm.lms.group_id = static_cast<int>(out.size());
			gm.lms.layers = gm.layers;
			for (int li : gm.layers) {
				const auto& jm = jg.at("mappings").at(g.layer(li).name);
				LayerMapping m;
				auto part = jm.at("part");
				m.part.h = part.at(0).get<std::int64_t>();
				m.part.w = part.at(1).get<std::int64_t>();
				m.part.b = part.at(2).get<std::int64_t>();
				m.part.k = part.at(3).get<std::int64_t>();
				m.cg = jm.at("cg").get<std::vector<int>>();
				auto fd = jm.at("fd");
				m.fd.ifm = fd.at(0).get<int>();
				m.fd.wgt = fd.at(1).get<int>();
				m.fd.ofm = fd.at(2).get<int>();
				gm.lms.maps.push_back(std::move(m));
			}
			out.push_back(std::move(gm));
		}
	} catch (const json::exception& e) {
		throw Error(std::string("mapping file: ") + e.what());
	}
	return out;
}

std::string serialize_lms_file(const std::vector<GroupMapping>& groups, const DnnGraph& g) {
	json j;
	j["groups"] = json::array();
	for (const GroupMapping& gm : groups) {
		json jg;
		jg["batch_unit"] = gm.batch_unit;
		std::vector<std::string> names;
		for (int li : gm.layers) names.push_back(g.layer(li).name);
		jg["layers"] = names;
		json maps = json::object();
		for (size_t i = 0; i < gm.layers.size(); ++i) {
			const LayerMapping& m = gm.lms.maps[i];
			json jm;
			jm["part"] = {m.part.h, m.part.w, m.part.b, m.part.k};
			jm["cg"] = m.cg;
			jm["fd"] = {m.fd.ifm, m.fd.wgt, m.fd.ofm};
			maps[g.layer(gm.layers[i]).name] = std::move(jm);
		}
		jg["mappings"] = std::move(maps);
		j["groups"].push_back(std::move(jg));
	}
	return j.dump(2);
}

std::string serialize_manifest(const RunManifest& m) {
	json j;
	j["tool"] = m.tool;
	j["version"] = m.version;
	j["subcommand"] = m.subcommand;
	j["args"] = m.args;
	j["config_paths"] = m.config_paths;
	j["seed"] = m.seed;
	j["threads"] = m.threads;
	j["timestamp"] = m.timestamp;
	return j.dump(2);
}

}  // namespace chipdse
