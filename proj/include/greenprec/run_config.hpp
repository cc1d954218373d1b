#pragma once

#include "greenprec/monte_carlo.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

namespace greenprec {

/// Everything a run needs: the experiment plan plus execution knobs that do
/// not influence results.
struct RunConfig {
    ExperimentPlan plan;
    int threads = 1;
    bool trace = false;

    void validate() const;
};

/// Flat key/value form. Every key is always present.
nlohmann::json to_json(const RunConfig& cfg);

/// Starts from `base` and applies the keys present in `j`. Accepts either a
/// flat config object or a manifest (object with a "config" member). Unknown
/// keys raise ConfigError.
RunConfig parse_run_config(const nlohmann::json& j, RunConfig base = {});

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Environment overrides: GREENPREC_<KEY> (key upper-cased), value parsed as
/// JSON, falling back to a plain string.
inline constexpr const char* kEnvPrefix = "GREENPREC_";
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
RunConfig apply_env_overrides(RunConfig cfg, const EnvLookup& lookup);
EnvLookup process_env();

/// RFC 4180 field quoting.
std::string csv_field(const std::string& s);

/// Shortest round-trip decimal form.
std::string format_number(double v);

/// lambda,precoder,ue_rank,avg_ber
void write_ber_csv(std::ostream& os, const RunResult& result);

/// lambda,avg_active_antennas,precoder,overall_avg_ber
void write_activity_csv(std::ostream& os, const RunResult& result);

/// iter-level trace of the first symbol per (setup, lambda).
void write_trace_csv(std::ostream& os, const RunResult& result);

nlohmann::json make_manifest(const RunConfig& cfg, const RunResult& result);

}  // namespace greenprec
