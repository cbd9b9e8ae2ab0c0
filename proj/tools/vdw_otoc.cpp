// vdw-otoc <solve|otoc|fit|report> --config <path> [--out <dir>] [--state <n>...]
//          [--r2-min <f>] [--threads <k>] [--no-recompute]
//
// Exit codes: 0 ok, 2 configuration or usage error, 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vdw_otoc/blas_guard.hpp"
#include "vdw_otoc/cli/pipeline.hpp"

extern "C" void openblas_set_num_threads(int);

namespace {

int thread_count(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("VDW_OTOC_THREADS")) {
    try {
      const int k = std::stoi(env);
      if (k > 0) return k;
    } catch (const std::exception&) {
    }
    throw vdw_otoc::cli::ConfigError("VDW_OTOC_THREADS", "must be a positive integer");
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  vdw_otoc::ensure_sound_blas_kernel(argv);
  namespace cli = vdw_otoc::cli;

  CLI::App app{"OTOC growth rates for diatomic bound states"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::vector<int> states;
  double r2_min = 0.0;
  int threads = 0;
  bool no_recompute = false;

  const std::pair<const char*, cli::Stage> stages[] = {
      {"solve", cli::Stage::solve},
      {"otoc", cli::Stage::otoc},
      {"fit", cli::Stage::fit},
      {"report", cli::Stage::report},
  };
  std::vector<CLI::App*> subs;
  for (const auto& entry : stages) {
    auto* sub = app.add_subcommand(entry.first);
    sub->add_option("--config", config_path, "Run configuration (JSON)")->required();
    sub->add_option("--out", out, "Artifact directory (overrides output.directory)");
    sub->add_option("--state", states, "State indices (overrides otoc.states)");
    sub->add_option("--r2-min", r2_min, "Minimum window R^2 (overrides fit.r2_min)");
    sub->add_option("--threads", threads, "Worker threads (default: VDW_OTOC_THREADS or 1)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--no-recompute", no_recompute, "Fail instead of solving when solve artifacts are missing");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  cli::Stage stage = cli::Stage::report;
  bool r2_given = false;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (subs[i]->parsed()) {
      stage = stages[i].second;
      r2_given = subs[i]->count("--r2-min") > 0;
    }
  }

  try {
    cli::RunOptions opts;
    if (!out.empty()) opts.out = std::filesystem::path(out);
    opts.states = states;
    if (r2_given) opts.r2_min = r2_min;
    opts.threads = thread_count(threads);
    opts.no_recompute = no_recompute;
    // Parallelism is over states only; a multithreaded BLAS would make
    // results depend on the thread count.
    openblas_set_num_threads(1);

    cli::RunConfig cfg = cli::load_config(config_path);
    cli::run_stage(stage, std::move(cfg), opts);
    return 0;
  } catch (const cli::ConfigError& e) {
    std::cerr << "vdw-otoc: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const cli::ArtifactError& e) {
    std::cerr << "vdw-otoc: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "vdw-otoc: output error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "vdw-otoc: numerical failure: " << e.what() << "\n";
    return 3;
  }
}
