#include <CLI11.hpp>

#include <algorithm>
#include <iostream>

#include "vending/commands.hpp"
#include "vending/fm.hpp"

using namespace vending;
using namespace vending::cli;

int main(int argc, char** argv) {
  CLI::App app{"Rate-distortion-cost regions of cascade vending-machine source coding"};
  app.require_subcommand(1);

  std::string config_path;
  auto add_config = [&](CLI::App* sub) { sub->add_option("config", config_path, "JSON run config")->required(); };

  auto* eval = app.add_subcommand("eval", "Rate corner of an explicit decision");
  add_config(eval);
  auto* frontier = app.add_subcommand("frontier", "Scalarized frontier as CSV");
  add_config(frontier);
  auto* member = app.add_subcommand("membership", "Search for a witness of a rate point");
  add_config(member);
  auto* oracle = app.add_subcommand("oracle", "Optimizer against exhaustive lattice search");
  add_config(oracle);

  auto* fm = app.add_subcommand("fm", "Fourier-Motzkin projection of the rate-split system");
  std::string order = "default";
  FmCommand fm_opt;
  fm->add_option("--order", order, "default, reversed, or a comma list of split rates")->capture_default_str();
  fm->add_option("--drop-nonneg", fm_opt.drop_nonneg, "split rates whose nonnegativity is dropped")
      ->delimiter(',');

  auto* suite = app.add_subcommand("suite", "Degeneracy and structural invariant battery");
  SuiteCommand suite_opt;
  std::string family = "both";
  suite->add_option("--family", family, "cascade, broadcast or both")
      ->check(CLI::IsMember({"cascade", "broadcast", "both"}))
      ->capture_default_str();
  suite->add_option("--seed", suite_opt.seed)->capture_default_str();
  suite->add_option("--instances", suite_opt.instances)->check(CLI::PositiveNumber)->capture_default_str();
  suite->add_option("--decisions", suite_opt.decisions)->check(CLI::PositiveNumber)->capture_default_str();
  suite->add_option("--resolution", suite_opt.grid.resolution)->check(CLI::PositiveNumber)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*fm) {
      if (order == "reversed") {
        fm_opt.order = fm::kSplitRates;
        std::reverse(fm_opt.order.begin(), fm_opt.order.end());
      } else if (order != "default") {
        fm_opt.order = CLI::detail::split(order, ',');
      }
      return cmd_fm(fm_opt, std::cout);
    }
    if (*suite) {
      if (family == "cascade") suite_opt.families = {ModelFamily::cascade};
      if (family == "broadcast") suite_opt.families = {ModelFamily::broadcast};
      return cmd_suite(suite_opt, std::cout);
    }
    const RunConfig c = load_config(config_path);
    if (*eval) return cmd_eval(c, std::cout);
    if (*frontier) return cmd_frontier(c, std::cout);
    if (*member) return cmd_membership(c, std::cout);
    if (*oracle) return cmd_oracle(c, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const GuardExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
