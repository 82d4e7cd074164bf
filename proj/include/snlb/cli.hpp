#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace snlb {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kConfigSchema = "snlb.config/1";
inline constexpr const char* kManifestSchema = "snlb.manifest/1";

/// Every knob of every subcommand. Fields a subcommand does not read keep
/// their defaults and are still written to resolved-config.json.
struct RunConfig {
  std::string subcommand;

  struct GridCfg {
    int d = 4;
    int M = 0;  // 0: per-subcommand default, resolved before the run
    int pad_factor = 2;
  } grid;

  struct ModelCfg {
    int k = 3;
    int sign = 1;
    bool damped = false;
    double N = -1.0;  // cutoff; < 0 means the whole grid
  } model;

  struct IntegratorCfg {
    double dt = 0.01;
    double T = 1.0;
    std::string scheme = "strang";
    double threshold = 1e6;
    double s_prime = 1.99;
  } integrator;

  struct StochasticCfg {
    std::uint64_t seed = 1;
    std::size_t ensemble = 1;
  } stochastic;

  struct DiagnosticsCfg {
    std::vector<std::string> observables;
    int record_every = 1;  // node density: one record every this many steps
    bool snapshots = false;
  } diagnostics;

  // subcommand parameters
  struct ParamsCfg {
    std::string kind;           // noise: undamped|damped; variance: alpha|sigma; commutator: c1|c2|c3
    int n_max = 8;
    double t = 1.0;
    double s = 1.8;
    double amplitude = 1.0;
    std::string init;           // zero|hs|mu2|gibbs (empty: subcommand default)
    std::vector<double> Ns;
    std::size_t samples = 0;    // 0: subcommand default
    double sobolev = -0.25;
    double p = 4.0;
    int nodes = 64;
    bool scale_nodes = true;
    int space_points = 0;
    std::string data = "random";
    std::string family = "sparse";
    int band = 256;
    int per_shell = 6;
    double gamma = -1.0;
    double gamma0 = 0.05;
    double lebesgue_p = 40.0;
    bool smooth_i = false;
    double tolerance = 0.15;
    std::string sampler = "mh";
    long burn_in = 1000;
    long thinning = 10;
    double pcn_beta = 0.3;
    bool weighted = true;
    bool nonlinear = true;
    bool weak_order = true;
    bool noise = true;
    int box = -1;
  } params;

  std::string output;
  int threads = 0;  // 0: logical cores
  bool deterministic = false;
};

void to_json(nlohmann::ordered_json& j, const RunConfig& c);
void from_json(const nlohmann::ordered_json& j, RunConfig& c);

/// The ten subcommand names.
const std::vector<std::string>& subcommands();

/// Runs `fn(i)` for i in [0, count) on `threads` workers (0: logical cores).
/// Work is handed out by index, so results stored by index do not depend on
/// the thread count. The first exception is rethrown after all workers stop.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

/// Full command line entry point. Exit status 0 on success, 1 on validation
/// errors, 2 on numerical failure; failures print one line
///   snlb: status=<code> kind=<validation|numerical> subcommand=<name> reason="<text>"
/// on `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace snlb
