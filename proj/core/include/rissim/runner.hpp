#ifndef RISSIM_RUNNER_HPP
#define RISSIM_RUNNER_HPP

#include <string>
#include <vector>

#include "rissim/metasensing.hpp"
#include "rissim/records.hpp"
#include "rissim/scenario.hpp"

namespace rissim::harness {

/// Schemes a module's sweep compares; the first entry is the default.
std::vector<std::string> schemes_for(const std::string& module);

/// Run every module in the spec with the spec's scheme (or the module
/// default), one independent stream per seed, records ordered by
/// (seed, cycle). Identical specs produce identical records.
std::vector<RunRecord> run(const ScenarioSpec& spec);

/// Run one module under one scheme; building block for run() and sweeps.
std::vector<RunRecord> run_module(const ScenarioSpec& spec, const std::string& module,
                                  const std::string& scheme);

/// Deterministic synthetic posture library over the scene's blocks.
metasensing::PostureLibrary make_posture_library(const ScenarioSpec& spec);

}  // namespace rissim::harness

#endif  // RISSIM_RUNNER_HPP
