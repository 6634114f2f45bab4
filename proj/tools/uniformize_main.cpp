// Command-line front end: `uniformize run|describe|verify`.
// Exit codes: 0 success, 2 validation error, 3 numerical-guard failure.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "uniformize/scenarios.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir, const std::string& format,
            int threads, std::uint64_t seed, bool seed_set) {
  unf::ExperimentConfig config = unf::load_config(config_path);
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (!format.empty()) config.format = format;
  config.threads = threads;
  if (seed_set) config.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  const auto tables = unf::run_scenario(config);
  unf::emit_results(config, tables);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "scenario " << config.scenario << " finished in " << ms << " ms; wrote "
            << tables.size() << " table(s) to " << config.out_dir.string() << "\n";
  return 0;
}

int cmd_describe(const std::string& config_path) {
  const unf::ExperimentConfig config = unf::load_config(config_path);
  std::cout << unf::describe_config(config);
  return 0;
}

int cmd_verify() {
  const unf::IdentityReport rep = unf::identity_suite(2, 3, 50, 42);
  const double tol = 1e-9;
  auto line = [&](const char* name, double r) {
    std::cout << name << ": max residual " << unf::format_double(r) << " ("
              << (r <= tol ? "pass" : "FAIL") << ")\n";
  };
  line("power contraction identity", rep.max_power_contraction);
  line("bracket contraction identity", rep.max_bracket_contraction);
  line("symmetric-product dual pairing", rep.max_jordan_dual);
  line("bracket dual pairing", rep.max_poisson_dual);
  if (!rep.pass(tol)) throw unf::GuardError("verification residuals exceed tolerance");
  std::cout << "all identity checks passed (d=2, n_max=3, 50 trials, seed 42)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uniformized Hamiltonian dynamics workbench"};
  app.require_subcommand(1);

  std::string config_path, out_dir, format;
  int threads = 1;
  std::uint64_t seed = 42;

  auto* run = app.add_subcommand("run", "execute a scenario from a JSON config");
  run->add_option("--config", config_path, "path to the JSON config")->required();
  run->add_option("--out-dir", out_dir, "output directory (overrides the config)");
  run->add_option("--format", format, "csv or json (overrides the config)")
      ->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--threads", threads, "worker threads for independent jobs")
      ->check(CLI::PositiveNumber);
  auto* seed_opt = run->add_option("--seed", seed, "seed for randomized trials");

  auto* describe = app.add_subcommand("describe", "print derived quantities for a config");
  describe->add_option("--config", config_path, "path to the JSON config")->required();

  app.add_subcommand("verify", "run the algebra/identity suite with default settings");

  try {
    app.parse(argc, argv);
    if (app.got_subcommand("run"))
      return cmd_run(config_path, out_dir, format, threads, seed, seed_opt->count() > 0);
    if (app.got_subcommand("describe")) return cmd_describe(config_path);
    return cmd_verify();
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const unf::GuardError& e) {
    std::cerr << "numerical guard failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  }
}
