#pragma once

// Dataset and configuration files, output tables, and the command pipelines
// behind the CLI.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cmvdlm/causal.hpp"
#include "cmvdlm/comp.hpp"
#include "cmvdlm/datagen.hpp"
#include "cmvdlm/linalg.hpp"
#include "cmvdlm/mvdlm.hpp"

namespace cmvdlm::io {

inline constexpr const char* kVersion = "0.3.0";

// Time-indexed panel: header "time,<name>,...", one row per time.
struct Panel {
  std::vector<long long> time;
  std::vector<std::string> names;
  Matrix values;  // rows = times, cols = series

  int index_of(const std::string& name) const;  // throws kData
  int row_of_time(long long t) const;           // throws kData
};

Panel parse_dataset(std::istream& in, const std::string& source,
                    bool log_transform = false);
Panel load_dataset(const std::string& path, bool log_transform = false);
void write_dataset(const std::string& path, const Panel& panel);

// Unit x time panel for stratification: header "unit,<time>,...".
struct UnitPanel {
  std::vector<std::string> units;
  std::vector<std::string> times;
  Matrix values;  // rows = units
};

UnitPanel load_unit_panel(const std::string& path);

// Shortest round-trip formatting (17 significant digits).
std::string format_double(double x);

struct RunConfig {
  // [model]
  int p = 2;
  double r = 0.95;
  Vector F;  // empty -> (1, 0, ...)
  Matrix G;  // empty -> damped trend with r
  double delta = 0.8;
  double beta = 0.95;
  comp::ConditionalDofPolicy dof_policy = comp::ConditionalDofPolicy::kExperimental;
  // [partition]
  std::vector<std::string> controls;
  std::vector<std::string> experimental;
  // [causal]
  std::optional<long long> T;  // time label of the intervention
  double oam_delta = 0.7;
  double oam_beta = 0.85;
  causal::EffectMode effect_mode = causal::EffectMode::kRealizedVsCounterfactual;
  bool log_scale = false;
  int nsamples = 5000;
  std::uint64_t seed = 1;
  int lookahead = 0;  // horizons from T-1; 0 = through the end of the data
  // [init]
  mvdlm::InitConfig init;
  int warmup = 5;
  mvdlm::InitKind init_kind = mvdlm::InitKind::kPrior;
  // [simulate]
  datagen::SimConfig sim = datagen::SimConfig::defaults();
  std::vector<std::string> sim_names = {"C1", "C2", "E1", "E2"};

  mvdlm::ModelSpec model_spec(int q) const;
};

RunConfig parse_config(std::istream& in, const std::string& source);
RunConfig load_config(const std::string& path);  // empty path -> defaults

std::string config_json(const RunConfig& cfg);

// Quantile rows "time,series,p05,p25,p50,p75,p95".
void write_quantile_table(const std::string& path,
                          const std::vector<long long>& times,
                          const std::vector<std::string>& series,
                          const std::vector<causal::Ensemble>& ensembles,
                          bool exponentiate = false);

// Causal spec and initial state for a dataset in canonical (controls,
// experimentals) order. The first `cfg.warmup` rows give the initial level and
// are not filtered. T_row is the 1-based row of the intervention.
struct PreparedAnalysis {
  causal::CausalSpec spec;
  comp::CompState init;
};

PreparedAnalysis prepare_analysis(const RunConfig& cfg, const Matrix& data,
                                  int qc, int T_row);

void cmd_simulate(const RunConfig& cfg, const std::string& out_dir);
void cmd_causal(const RunConfig& cfg, const std::string& config_path,
                const std::string& data_path, const std::string& out_dir);
void cmd_filter(const RunConfig& cfg, const std::string& data_path,
                const std::string& out_dir);
// Labels units Hi/Lo on the given factor using the first `columns` time
// columns (all when 0). Optionally writes Hi/Lo group means.
void cmd_stratify(const std::string& panel_path, int factor, int columns,
                  const std::string& out_path, const std::string& means_path);

}  // namespace cmvdlm::io
