#pragma once

// Subcommand bodies of the command-line front end. Each returns a process
// exit status and writes its report to `out`.

#include <cstdint>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "vending/config.hpp"
#include "vending/oracle.hpp"

namespace vending::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitInfeasible = 2,  // infeasible or nothing found
  kExitMismatch = 3,    // golden mismatch or failed check
};

int cmd_eval(const RunConfig& c, std::ostream& out);

// CSV goes to c.csv_path when set, otherwise to `out`.
int cmd_frontier(const RunConfig& c, std::ostream& out);
std::string frontier_csv(const RunConfig& c, int& status);

int cmd_membership(const RunConfig& c, std::ostream& out);

struct FmCommand {
  std::vector<std::string> order;  // empty: default order
  std::set<std::string> drop_nonneg;
};

int cmd_fm(const FmCommand& opt, std::ostream& out);

// Optimizer vs exhaustive lattice search at pinned u_size and resolution.
int cmd_oracle(const RunConfig& c, std::ostream& out);

struct SuiteCommand {
  std::vector<ModelFamily> families{ModelFamily::cascade, ModelFamily::broadcast};
  std::uint64_t seed = 1;
  int instances = 3;
  int decisions = 1000;
  GridSpec grid;
};

int cmd_suite(const SuiteCommand& opt, std::ostream& out);

std::vector<std::vector<double>> default_weights(bool cascade);

}  // namespace vending::cli
