#pragma once

// JSON run configuration. Pmfs are nested arrays in declared axis order:
//   cascade   source [x][y], vm_channel [a][y][z], decision.kernel [x][y][x1][a][u]
//   broadcast source [x],    vm_channel [a][x][y], decision.action [x][a],
//             decision.recon [x][x1][x2]
// Distortions are [x][xhat] arrays or "hamming"; cost is an [a] array or "zero".

#include <nlohmann/json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "vending/broadcast.hpp"
#include "vending/cascade.hpp"
#include "vending/models.hpp"
#include "vending/oracle.hpp"
#include "vending/search.hpp"

namespace vending {

constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

using ModelSpec = std::variant<CascadeVendingModel, BroadcastCRModel>;
using DecisionSpec = std::variant<CascadeDecision, BroadcastDecision>;

struct RunConfig {
  int schema_version = kSchemaVersion;
  ModelSpec model;
  std::optional<ConstraintBudget> budget;
  SearchConfig search;
  std::vector<std::vector<double>> weights;  // pairs (cascade) or triples (broadcast)
  std::optional<DecisionSpec> decision;
  std::optional<std::vector<double>> rates;  // membership target
  GridSpec oracle;
  std::string csv_path;
  std::string witness_path;

  bool is_cascade() const { return std::holds_alternative<CascadeVendingModel>(model); }
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& c);

nlohmann::json decision_json(const CascadeDecision& d, const CascadeVendingModel& m);
nlohmann::json decision_json(const BroadcastDecision& d, const BroadcastCRModel& m);

// FNV-1a over the kernel entries; identifies a witness decision.
std::string witness_hash(const CascadeDecision& d);
std::string witness_hash(const BroadcastDecision& d);

}  // namespace vending
