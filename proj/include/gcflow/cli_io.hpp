#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcflow/domain.hpp"
#include "gcflow/elliptic.hpp"
#include "gcflow/flow.hpp"
#include "gcflow/radial.hpp"

namespace gcflow::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numerical = 3, exit_non_convergence = 4 };

// ---- configuration -------------------------------------------------------

json load_config(const fs::path& path);

/// Sets a dotted key ("grid.nx") to `value`, parsed as JSON when it parses,
/// else stored as a string. Intermediate objects are created on demand.
void apply_override(json& config, const std::string& dotted_key, const std::string& value);

DomainSpec domain_from_config(const json& config);
GridSpec grid_from_config(const json& grid);
Polynomial2 initial_from_config(const json& config);
SpeedLaw law_from_config(const json& config);
FlowOptions flow_options_from_config(const json& config);
RelaxationOptions relaxation_from_config(const json& config);
std::vector<double> epsilons_from_config(const json& config);

/// Weight presets: constant {value}, inverse_power {a, k}, gaussian {a, b}.
radial::RadialWeight radial_weight_from_config(const json& weight, int n);
radial::RadialKernel radial_kernel_from_config(const json& radial);

// ---- number formatting ---------------------------------------------------

/// 17 significant digits, "." as decimal separator, locale independent.
/// NaN and infinities print as nan, inf, -inf.
std::string format_double(double v);
double parse_double(const std::string& s);

// ---- files ---------------------------------------------------------------

void write_trace_csv(const fs::path& path, const DiagnosticsTrace& trace);
std::vector<DiagnosticsSample> read_trace_csv(const fs::path& path);

void write_speeds_csv(const fs::path& path, const SpeedContinuation& c);
void write_radial_profile_csv(const fs::path& path, const radial::RadialProfile& p);
/// i, j, x, y, value over interior nodes.
void write_field_csv(const fs::path& path, const ScalarField& field);

struct FrameInfo {
  double vmin = 0.0;
  double vmax = 0.0;
  bool degenerate = false;
};

/// Binary P5 grayscale, row 0 = y_max, interior nodes min-max normalized,
/// other nodes 0. A range below 1e-30 gives an all-128 frame. Writes the
/// sidecar `<path>.minmax.json` as well.
FrameInfo write_frame(const ScalarField& field, const fs::path& path);

struct PgmImage {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::vector<unsigned char> pixels;
};
/// Strict P5 reader; throws Error(io) on any grammar violation.
PgmImage read_pgm(const fs::path& path);

/// frame_t<time>.pgm with the time printed as %.6f.
std::string frame_name(double t);

/// Exclusive lock on a run directory; released on destruction.
class RunLock {
 public:
  explicit RunLock(const fs::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path path_;
};

// ---- commands ------------------------------------------------------------

/// Each command writes its files into `out` and returns an exit code.
/// Errors escape as exceptions; `run_command` turns them into an error
/// record (error.json) and the matching exit code.
int cmd_flow(const json& config, const fs::path& out);
int cmd_translate(const json& config, const fs::path& out);
int cmd_radial(const json& config, const fs::path& out);
int cmd_compare(const json& config, const fs::path& out);

int run_command(const std::string& name, const json& config, const fs::path& out);

/// Built-in configurations by name: "ellipse_bowl", "disk_graph",
/// "paraboloid", "hyperboloid".
std::optional<json> preset_config(const std::string& name);

}  // namespace gcflow::io
