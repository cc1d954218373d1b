#include "greenprec/run_config.hpp"

#include "greenprec/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>

namespace greenprec {

namespace {

constexpr const char* kVersion = "1.0.0";

const std::set<std::string> kManifestSections{"config",  "derived",       "seeds",    "version",
                                              "timings_s", "precode_calls", "failures", "activity"};

template <class T>
T get_as(const nlohmann::json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(key, "has the wrong type");
    }
}

std::int64_t get_integer(const nlohmann::json& v, const std::string& key) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
    }
    throw ConfigError(key, "must be an integer");
}

std::optional<double> get_optional_number(const nlohmann::json& v, const std::string& key) {
    if (v.is_null()) return std::nullopt;
    if (!v.is_number()) throw ConfigError(key, "must be a number or null");
    return v.get<double>();
}

void apply_key(RunConfig& cfg, const std::string& key, const nlohmann::json& v) {
    auto& net = cfg.plan.network;
    auto& sol = cfg.plan.solver;
    auto number = [&]() {
        if (!v.is_number()) throw ConfigError(key, "must be a number");
        return v.get<double>();
    };
    auto integer = [&]() { return static_cast<int>(get_integer(v, key)); };

    if (key == "area_side_m") net.area_side_m = number();
    else if (key == "num_aps") net.num_aps = integer();
    else if (key == "antennas_per_ap") net.antennas_per_ap = integer();
    else if (key == "num_ues") net.num_ues = integer();
    else if (key == "bandwidth_hz") net.bandwidth_hz = number();
    else if (key == "height_diff_m") net.height_diff_m = number();
    else if (key == "pathloss_exponent") net.pathloss_exponent = number();
    else if (key == "gain_at_1km_db") net.gain_at_1km_db = number();
    else if (key == "shadow_std_db") net.shadow_std_db = number();
    else if (key == "angular_std_deg") net.angular_std_deg = number();
    else if (key == "downlink_power_w") net.downlink_power_w = number();
    else if (key == "noise_figure_db") net.noise_figure_db = number();
    else if (key == "normalize_to_noise") net.normalize_to_noise = get_as<bool>(v, key);
    else if (key == "lambdas") {
        if (!v.is_array()) throw ConfigError(key, "must be an array of numbers");
        cfg.plan.lambdas.clear();
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(key, "must be an array of numbers");
            cfg.plan.lambdas.push_back(e.get<double>());
        }
    } else if (key == "gamma_scale") sol.gamma_scale = number();
    else if (key == "psi") sol.psi = number();
    else if (key == "max_iters") sol.max_iters = integer();
    else if (key == "tolerance") sol.tolerance = get_optional_number(v, key);
    else if (key == "warm_start") sol.warm_start = get_as<bool>(v, key);
    else if (key == "bits_per_ue") cfg.plan.bits_per_ue = get_integer(v, key);
    else if (key == "num_setups") cfg.plan.num_setups = integer();
    else if (key == "precoders") {
        if (!v.is_array()) throw ConfigError(key, "must be an array of precoder names");
        cfg.plan.precoders.clear();
        for (const auto& e : v) {
            if (!e.is_string()) throw ConfigError(key, "must be an array of precoder names");
            const auto kind = parse_precoder(e.get<std::string>());
            if (!kind) throw ConfigError(key, "unknown precoder '" + e.get<std::string>() + "'");
            cfg.plan.precoders.push_back(*kind);
        }
    } else if (key == "seed") {
        const auto seed = get_integer(v, key);
        if (seed < 0) throw ConfigError(key, "must be >= 0");
        cfg.plan.master_seed = static_cast<std::uint64_t>(seed);
        net.seed = cfg.plan.master_seed;
    } else if (key == "tau_off") cfg.plan.tau_off = number();
    else if (key == "rzf_regularizer") cfg.plan.rzf_regularizer = get_optional_number(v, key);
    else if (key == "max_failure_rate") cfg.plan.max_failure_rate = number();
    else if (key == "threads") cfg.threads = integer();
    else if (key == "trace") cfg.trace = get_as<bool>(v, key);
    else if (key == "modulation") {
        if (get_as<std::string>(v, key) != "QPSK") throw ConfigError(key, "only QPSK is supported");
    } else throw ConfigError(key, "unknown configuration key");
}

}  // namespace

void RunConfig::validate() const {
    plan.validate();
    if (threads < 1) throw ConfigError("threads", "must be >= 1");
}

nlohmann::json to_json(const RunConfig& cfg) {
    const auto& net = cfg.plan.network;
    const auto& sol = cfg.plan.solver;
    nlohmann::json precoders = nlohmann::json::array();
    for (auto k : cfg.plan.precoders) precoders.push_back(std::string(to_string(k)));
    auto optional = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return nlohmann::json{
        {"area_side_m", net.area_side_m},
        {"num_aps", net.num_aps},
        {"antennas_per_ap", net.antennas_per_ap},
        {"num_ues", net.num_ues},
        {"bandwidth_hz", net.bandwidth_hz},
        {"height_diff_m", net.height_diff_m},
        {"pathloss_exponent", net.pathloss_exponent},
        {"gain_at_1km_db", net.gain_at_1km_db},
        {"shadow_std_db", net.shadow_std_db},
        {"angular_std_deg", net.angular_std_deg},
        {"downlink_power_w", net.downlink_power_w},
        {"noise_figure_db", net.noise_figure_db},
        {"normalize_to_noise", net.normalize_to_noise},
        {"lambdas", cfg.plan.lambdas},
        {"gamma_scale", sol.gamma_scale},
        {"psi", sol.psi},
        {"max_iters", sol.max_iters},
        {"tolerance", optional(sol.tolerance)},
        {"warm_start", sol.warm_start},
        {"bits_per_ue", cfg.plan.bits_per_ue},
        {"num_setups", cfg.plan.num_setups},
        {"precoders", precoders},
        {"seed", cfg.plan.master_seed},
        {"tau_off", cfg.plan.tau_off},
        {"rzf_regularizer", optional(cfg.plan.rzf_regularizer)},
        {"max_failure_rate", cfg.plan.max_failure_rate},
        {"modulation", "QPSK"},
        {"threads", cfg.threads},
        {"trace", cfg.trace},
    };
}

RunConfig parse_run_config(const nlohmann::json& j, RunConfig base) {
    if (!j.is_object()) throw ConfigError("<root>", "configuration must be a JSON object");
    const nlohmann::json* flat = &j;
    if (j.contains("config")) {
        for (const auto& [key, value] : j.items())
            if (!kManifestSections.contains(key)) throw ConfigError(key, "unknown manifest section");
        flat = &j.at("config");
        if (!flat->is_object()) throw ConfigError("config", "must be an object");
    }
    for (const auto& [key, value] : flat->items()) apply_key(base, key, value);
    base.validate();
    return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot read '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    return parse_run_config(j, std::move(base));
}

RunConfig apply_env_overrides(RunConfig cfg, const EnvLookup& lookup) {
    nlohmann::json overrides = nlohmann::json::object();
    const nlohmann::json current = to_json(cfg);
    for (const auto& [key, value] : current.items()) {
        std::string name = kEnvPrefix;
        for (char c : key) name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        const auto raw = lookup(name);
        if (!raw) continue;
        try {
            overrides[key] = nlohmann::json::parse(*raw);
        } catch (const nlohmann::json::parse_error&) {
            overrides[key] = *raw;
        }
    }
    if (overrides.empty()) return cfg;
    return parse_run_config(overrides, std::move(cfg));
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    };
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_ber_csv(std::ostream& os, const RunResult& result) {
    os << "lambda,precoder,ue_rank,avg_ber\r\n";
    for (const auto& e : result.entries) {
        for (std::size_t r = 0; r < e.per_ue_ranked_ber.size(); ++r) {
            os << format_number(e.lambda) << ',' << csv_field(std::string(to_string(e.kind))) << ',' << r + 1 << ','
               << format_number(e.per_ue_ranked_ber[r]) << "\r\n";
        }
    }
}

void write_activity_csv(std::ostream& os, const RunResult& result) {
    os << "lambda,avg_active_antennas,precoder,overall_avg_ber\r\n";
    for (const auto& e : result.entries) {
        os << format_number(e.lambda) << ',' << format_number(e.avg_active_antennas) << ','
           << csv_field(std::string(to_string(e.kind))) << ',' << format_number(e.overall_avg_ber) << "\r\n";
    }
}

void write_trace_csv(std::ostream& os, const RunResult& result) {
    os << "setup,lambda,iter,objective,residual\r\n";
    for (const auto& t : result.traces) {
        for (const auto& r : t.records) {
            os << t.setup << ',' << format_number(t.lambda) << ',' << r.iter << ',' << format_number(r.objective) << ','
               << format_number(r.residual) << "\r\n";
        }
    }
}

nlohmann::json make_manifest(const RunConfig& cfg, const RunResult& result) {
    const double sigma2_w = noise_variance(cfg.plan.network);
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& s : result.seed_manifest)
        seeds.push_back({{"setup", s.setup}, {"geometry_seed", s.geometry_seed}, {"channel_seed", s.channel_seed}});
    nlohmann::json activity = nlohmann::json::object();
    activity["avg_active_antennas"] = result.avg_active_antennas;
    activity["setup_active_antennas"] = result.setup_active;
    activity["monotone_checks"] = result.monotone_checks;
    activity["monotone_violations"] = result.monotone_violations;
    return nlohmann::json{
        {"config", to_json(cfg)},
        {"derived",
         {{"num_antennas", cfg.plan.network.num_antennas()},
          {"symbols_per_ue_per_setup", cfg.plan.symbols_per_setup()},
          {"noise_variance_w", sigma2_w},
          {"noise_variance_dbm", 10.0 * std::log10(sigma2_w * 1000.0)}}},
        {"seeds", {{"master_seed", cfg.plan.master_seed}, {"setups", seeds}}},
        {"version", {{"greenprec", kVersion}, {"json", NLOHMANN_JSON_VERSION_MAJOR * 10000 + NLOHMANN_JSON_VERSION_MINOR * 100 + NLOHMANN_JSON_VERSION_PATCH}}},
        {"timings_s", result.timings_s},
        {"precode_calls", result.precode_calls},
        {"failures", result.failures},
        {"activity", activity},
    };
}

}  // namespace greenprec
