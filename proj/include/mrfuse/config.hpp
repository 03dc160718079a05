#ifndef MRFUSE_CONFIG_HPP
#define MRFUSE_CONFIG_HPP

// JSON form of SolverConfig. Keys mirror the field names; "prior" and "ssim"
// are nested objects. Missing keys keep their defaults, unknown keys are an
// error.

#include "mrfuse/solver.hpp"

#include <filesystem>
#include <string>

namespace mrfuse {

SolverConfig solver_config_from_json(const std::string& text);
std::string solver_config_to_json(const SolverConfig& config);

SolverConfig load_solver_config(const std::filesystem::path& path);

}  // namespace mrfuse

#endif  // MRFUSE_CONFIG_HPP
