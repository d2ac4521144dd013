#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ksred_cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace ksred::cli;

  CLI::App app{"Regularised three-body dynamics in symmetry-reduced invariants"};
  app.require_subcommand(1);

  std::string config, out_dir = ".", mode;
  auto* simulate = app.add_subcommand("simulate", "integrate a three-body configuration");
  simulate->add_option("--config", config, "JSON run configuration")->required();
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--mode", mode, "canonical, lax or both")
      ->check(CLI::IsMember({"canonical", "lax", "both"}));

  VerifyOptions verify_opts;
  double tol = 0.0;
  auto* verify = app.add_subcommand("verify", "run a property suite and print a JSON report");
  verify->add_option("--suite", verify_opts.suite, "ks, kepler, algebra, iso or dynamics")
      ->required()
      ->check(CLI::IsMember({"ks", "kepler", "algebra", "iso", "dynamics"}));
  verify->add_option("--m", verify_opts.m, "number of pairs for algebra/iso")->check(CLI::IsMember({1, 3, 6}));
  verify->add_option("--trials", verify_opts.trials, "random trials per property")->check(CLI::PositiveNumber);
  verify->add_option("--seed", verify_opts.seed, "master seed");
  auto* tol_opt = verify->add_option("--tol", tol, "override every property threshold")->check(CLI::NonNegativeNumber);

  KeplerOptions kepler_opts;
  auto* kepler = app.add_subcommand("kepler", "integrate a bound Kepler orbit");
  kepler->set_help_flag("--help", "print this help message and exit");
  kepler->add_option("--mu", kepler_opts.mu, "reduced mass")->required();
  kepler->add_option("--mass-product", kepler_opts.mass_product, "m1 m2")->required();
  kepler->add_option("--h", kepler_opts.h, "energy (< 0)")->required();
  kepler->add_option("--ecc", kepler_opts.ecc, "eccentricity in [0, 1]")->required();
  kepler->add_option("--periods", kepler_opts.periods, "number of orbital periods")->required();
  kepler->add_option("--steps-per-period", kepler_opts.steps_per_period, "RK4 steps per period");
  kepler->add_option("--out", kepler_opts.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  if (*simulate) {
    std::optional<Mode> override_mode;
    if (!mode.empty()) override_mode = parse_mode(mode);
    return cmd_simulate(config, out_dir, override_mode, std::cerr);
  }
  if (*verify) {
    if (*tol_opt) verify_opts.tol = tol;
    return cmd_verify(verify_opts, std::cout, std::cerr);
  }
  return cmd_kepler(kepler_opts, std::cout, std::cerr);
}
