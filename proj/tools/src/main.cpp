#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "cli_config.hpp"
#include "dispatch.hpp"
#include "kstage/errors.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const kstage::cli::RunConfig cfg = kstage::cli::parse_config(args);
    const std::vector<std::string> files = kstage::cli::run_command(cfg);
    for (const auto& f : files) std::printf("wrote %s\n", (cfg.output_dir() + "/" + f).c_str());
    return 0;
  } catch (const kstage::cli::CliExit& e) {
    return e.code;
  } catch (const kstage::cli::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const kstage::contract_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
