#pragma once

#include <string>
#include <vector>

#include "chipdse/arch.hpp"
#include "chipdse/costmodel.hpp"
#include "chipdse/energy.hpp"
#include "chipdse/evaluator.hpp"

namespace chipdse {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

ArchGrid parse_grid(const std::string& text);
ArchConfig parse_arch(const std::string& text);
std::string serialize_arch(const ArchConfig& cfg);
CostParams parse_cost_params(const std::string& text);
EnergyTable parse_energy_table(const std::string& text);

// mapping file: per group {layers, batch_unit, mappings: {name: {part, cg, fd}}}
std::vector<GroupMapping> parse_lms_file(const std::string& text, const DnnGraph& g);
std::string serialize_lms_file(const std::vector<GroupMapping>& groups, const DnnGraph& g);

struct RunManifest {
	std::string tool = "chipdse";
	std::string version = "0.1.0";
	std::string subcommand;
	std::vector<std::string> args;
	std::vector<std::string> config_paths;
	std::uint64_t seed = 0;
	int threads = 0;
	std::string timestamp;
};

std::string serialize_manifest(const RunManifest& m);

}  // namespace chipdse
