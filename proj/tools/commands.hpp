#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fedlay/dfl.hpp"
#include "fedlay/simnet.hpp"

namespace fedlay::cli {

struct Common {
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
};

struct TopoOptions {
  std::vector<std::string> kinds{"fedlay", "ring", "complete", "chord", "random_regular"};
  std::vector<std::size_t> n{300};
  std::vector<std::size_t> spaces{3, 4, 5, 6, 7};
  std::vector<std::size_t> degrees{6, 8, 10, 12, 14};
  std::size_t repeats = 1;
};

struct BestOfKOptions {
  std::vector<std::size_t> n{300};
  std::vector<std::size_t> degrees{6, 8, 10, 12, 14};
  std::size_t k = 100;
};

struct BuildOptions {
  std::vector<std::size_t> n{125, 500};
  std::size_t spaces = 5;
  std::string latency = "lognormal:350:0.3";
  std::size_t repeats = 1;
};

struct ChurnOptions {
  std::size_t n = 400;
  std::size_t spaces = 5;
  SimTime heartbeat = 1000;
  SimTime repair_period = 2000;
  std::string latency = "lognormal:350:0.3";
  std::string script;  // churn script path; overrides the counts below
  SimTime at = 10;
  std::size_t joins = 100;
  std::size_t failures = 0;
  std::size_t leaves = 0;
  SimTime duration = 30000;
  SimTime probe = 100;
  bool resets = true;
};

struct DflOptions {
  std::vector<std::string> topologies{"fedlay", "ring", "complete"};
  bool fedavg = true;
  dfl::DflConfig config;
  std::string latency = "lognormal:350:0.3";
};

// Each returns normally on success and throws the fedlay error types on
// failure. Outputs go to common.out.
void run_topo_metrics(const Common& common, const TopoOptions& opt);
void run_best_of_k(const Common& common, const BestOfKOptions& opt);
void run_build(const Common& common, const BuildOptions& opt);
void run_churn(const Common& common, const ChurnOptions& opt);
void run_dfl(const Common& common, const DflOptions& opt);

}  // namespace fedlay::cli
