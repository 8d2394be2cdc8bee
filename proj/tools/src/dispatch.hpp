#pragma once

#include <string>
#include <vector>

#include "cli_config.hpp"

namespace kstage::cli {

/* Executes a resolved run: validates the parameter combination, writes
 * manifest.json (the resolved configuration echo) before any long
 * computation starts, then computes and writes the subcommand's output
 * files into output-dir. Returns the names of the files written, manifest
 * first. Throws UsageError / kstage::contract_error for inadmissible
 * parameters (exit 2) and std::runtime_error for runtime failures (exit 1). */
std::vector<std::string> run_command(RunConfig cfg);

}  // namespace kstage::cli
