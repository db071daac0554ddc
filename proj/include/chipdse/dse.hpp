#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chipdse/arch.hpp"
#include "chipdse/costmodel.hpp"
#include "chipdse/energy.hpp"
#include "chipdse/evaluator.hpp"
#include "chipdse/sa.hpp"
#include "chipdse/workload.hpp"

namespace chipdse {

struct Objective {
	double alpha = 1, beta = 1, gamma = 1;  // MC, E, D exponents
};

struct CandidateResult {
	ArchConfig cfg;
	std::string status = "ok";  // ok | excluded | invalid
	std::string reason;
	std::vector<double> e_i, d_i;  // per DNN
	double e = 0, d = 0;           // geometric means
	double mc = 0;
	double objective = 0;
	CostBreakdown cost;
	std::vector<GroupMapping> best_mapping_first_dnn;
};

struct DseOptions {
	Objective obj;
	std::uint64_t seed = 1;
	int threads = 0;  // 0 = hardware concurrency
	SaParams sa;
};

// Exhaustive sweep: per candidate, MC from the cost model and per-DNN
// partition + annealing + evaluation; ranked ascending by
// MC^alpha * E^beta * D^gamma with lexicographic tuple tie-break.
// Rejected/failed candidates are kept with status and reason.
std::vector<CandidateResult> run_dse(const ArchGrid& grid, const std::vector<DnnGraph>& dnns,
                                     const CostParams& cost, const EnergyTable& et,
                                     const DseOptions& opt);

std::string result_csv(const std::vector<CandidateResult>& results,
                       const std::vector<std::string>& model_names);

struct JointResult {
	CandidateResult low, high;
	std::string status = "ok";
	std::string reason;
	double product = 0;  // objective(low) * objective(high)
};

// Joint exploration for reusing one chiplet across two compute scales: each
// low candidate's chiplets are tiled into a `multiplier`-times-larger
// accelerator; ranked by the product of both objectives.
std::vector<JointResult> run_joint_dse(const ArchGrid& low_grid, int multiplier,
                                       const std::vector<DnnGraph>& dnns, const CostParams& cost,
                                       const EnergyTable& et, const DseOptions& opt);

std::string joint_csv(const std::vector<JointResult>& results);

// scale a candidate by tiling its chiplet grid (longer axis first)
ArchConfig scale_candidate(const ArchConfig& low, int multiplier);

}  // namespace chipdse
