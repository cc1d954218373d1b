#include "greenprec/cli.hpp"

#include "greenprec/errors.hpp"
#include "greenprec/prox_oracle.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace greenprec::cli {

namespace {

constexpr double kLinfTolerance = 1e-6;
constexpr double kGroupTolerance = 1e-8;

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

std::vector<double> parse_lambda_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_csv(s)) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw ConfigError("lambdas", "cannot parse '" + item + "' as a number");
        out.push_back(v);
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

RunConfig resolve_config(const std::optional<std::filesystem::path>& config_path, const RunOverrides& overrides,
                         const EnvLookup& env) {
    RunConfig cfg = config_path ? load_run_config(*config_path) : RunConfig{};
    cfg = apply_env_overrides(std::move(cfg), env);

    nlohmann::json flags = nlohmann::json::object();
    if (overrides.lambdas) flags["lambdas"] = *overrides.lambdas;
    if (overrides.bits_per_ue) flags["bits_per_ue"] = *overrides.bits_per_ue;
    if (overrides.setups) flags["num_setups"] = *overrides.setups;
    if (overrides.seed) flags["seed"] = *overrides.seed;
    if (overrides.precoders) flags["precoders"] = *overrides.precoders;
    if (overrides.threads) flags["threads"] = *overrides.threads;
    if (overrides.trace) flags["trace"] = true;
    return parse_run_config(flags, std::move(cfg));
}

int cmd_run(const std::optional<std::filesystem::path>& config_path, const std::filesystem::path& out_dir,
            const RunOverrides& overrides, std::ostream& out, std::ostream& err, const EnvLookup& env) {
    RunConfig cfg;
    try {
        cfg = resolve_config(config_path, overrides, env);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kValidationError;
    }

    try {
        std::filesystem::create_directories(out_dir);
        RunOptions options;
        options.threads = cfg.threads;
        options.trace = cfg.trace;
        int last_percent = -1;
        options.progress = [&err, &last_percent](const Progress& p) {
            const int percent = static_cast<int>(100 * p.symbols_done / std::max<std::int64_t>(1, p.symbols_total));
            if (percent == last_percent) return;
            last_percent = percent;
            err << percent << "% (" << p.symbols_done << '/' << p.symbols_total << " symbols), running BER "
                << std::setprecision(4) << p.running_ber << '\n';
        };
        const RunResult result = run_experiment(cfg.plan, options);

        // Render everything before touching the output directory.
        std::ostringstream ber, activity, trace;
        write_ber_csv(ber, result);
        write_activity_csv(activity, result);
        if (cfg.trace) write_trace_csv(trace, result);
        const std::string manifest = make_manifest(cfg, result).dump(2) + "\n";

        write_file(out_dir / "ber_per_ue.csv", ber.str());
        write_file(out_dir / "antenna_activity.csv", activity.str());
        write_file(out_dir / "manifest.json", manifest);
        if (cfg.trace) write_file(out_dir / "trace.csv", trace.str());

        out << "lambda,precoder,avg_active_antennas,overall_avg_ber\n";
        for (const auto& e : result.entries)
            out << format_number(e.lambda) << ',' << to_string(e.kind) << ',' << e.avg_active_antennas << ','
                << e.overall_avg_ber << '\n';
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kValidationError;
    } catch (const std::exception& e) {
        err << "run failed: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kSuccess;
}

int cmd_validate(const std::optional<std::filesystem::path>& config_path, std::ostream& out, std::ostream& err,
                 const EnvLookup& env) {
    try {
        const RunConfig cfg = resolve_config(config_path, {}, env);
        out << to_json(cfg).dump(2) << '\n';
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kValidationError;
    }
    return kSuccess;
}

int cmd_prox_check(int n_cases, std::uint64_t seed, std::ostream& out, std::ostream& err) {
    if (n_cases < 1) {
        err << "config error: n_cases: must be >= 1\n";
        return kValidationError;
    }
    const auto report = oracle::run_prox_check(n_cases, seed);
    out << "cases: " << report.cases << " (zero weight: " << report.zero_weight_cases << ")\n"
        << std::scientific << std::setprecision(3) << "linf_sq max deviation: " << report.linf_max_deviation
        << " (tolerance " << kLinfTolerance << ")\n"
        << "group_lasso max deviation: " << report.group_max_deviation << " (tolerance " << kGroupTolerance
        << ")\n";
    if (report.linf_max_deviation > kLinfTolerance || report.group_max_deviation > kGroupTolerance) {
        out << "FAIL\n";
        return kRuntimeError;
    }
    out << "PASS\n";
    return kSuccess;
}

int cmd_dump_channel(const std::optional<std::filesystem::path>& config_path, int setup, std::ostream& out,
                     std::ostream& err, const EnvLookup& env) {
    try {
        const RunConfig cfg = resolve_config(config_path, {}, env);
        if (setup < 0) throw ConfigError("setup", "must be >= 0");
        write_channel_text(out, setup_channel(cfg.plan, setup).channel);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kValidationError;
    } catch (const std::exception& e) {
        err << "dump failed: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kSuccess;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"One-bit group-sparse precoding for cell-free massive MIMO"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "results";
    std::string lambda_list, precoder_list;
    std::int64_t bits_per_ue = 0;
    int setups = 0, threads = 0;
    std::uint64_t seed = 0;
    bool trace = false;

    auto* run = app.add_subcommand("run", "Run an experiment plan and write CSV/JSON results");
    run->add_option("--config", config_path, "Run configuration (JSON)");
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    auto* o_lambda = run->add_option("--lambda", lambda_list, "Comma-separated lambda grid");
    auto* o_bits = run->add_option("--bits-per-ue", bits_per_ue, "Bits per UE per setup");
    auto* o_setups = run->add_option("--setups", setups, "Number of channel setups");
    auto* o_seed = run->add_option("--seed", seed, "Master seed");
    auto* o_prec = run->add_option("--precoders", precoder_list, "Comma-separated precoder list");
    auto* o_threads = run->add_option("--threads", threads, "Worker threads");
    run->add_flag("--trace", trace, "Write per-iteration solver trace");

    auto* validate = app.add_subcommand("validate", "Validate a configuration and print it resolved");
    validate->add_option("--config", config_path, "Run configuration (JSON)");

    int n_cases = 100;
    std::uint64_t check_seed = 1;
    auto* prox = app.add_subcommand("prox-check", "Compare proximal operators against brute-force search");
    prox->add_option("--cases", n_cases, "Number of random instances")->capture_default_str();
    prox->add_option("--seed", check_seed, "Seed")->capture_default_str();

    int dump_setup = 0;
    auto* dump = app.add_subcommand("dump-channel", "Print one setup's channel matrix as text");
    dump->add_option("--config", config_path, "Run configuration (JSON)");
    dump->add_option("--setup", dump_setup, "Setup index")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return kValidationError;
    }

    std::optional<std::filesystem::path> cfg_path;
    if (!config_path.empty()) cfg_path = config_path;

    if (run->parsed()) {
        RunOverrides ov;
        try {
            if (o_lambda->count() > 0) ov.lambdas = parse_lambda_list(lambda_list);
        } catch (const ConfigError& e) {
            err << "config error: " << e.what() << '\n';
            return kValidationError;
        }
        if (o_bits->count() > 0) ov.bits_per_ue = bits_per_ue;
        if (o_setups->count() > 0) ov.setups = setups;
        if (o_seed->count() > 0) ov.seed = seed;
        if (o_prec->count() > 0) ov.precoders = split_csv(precoder_list);
        if (o_threads->count() > 0) ov.threads = threads;
        ov.trace = trace;
        return cmd_run(cfg_path, out_dir, ov, out, err);
    }
    if (validate->parsed()) return cmd_validate(cfg_path, out, err);
    if (prox->parsed()) return cmd_prox_check(n_cases, check_seed, out, err);
    if (dump->parsed()) return cmd_dump_channel(cfg_path, dump_setup, out, err);
    return kValidationError;
}

}  // namespace greenprec::cli
