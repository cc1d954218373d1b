#include "greenprec/cli.hpp"
#include "greenprec/errors.hpp"
#include "greenprec/run_config.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace greenprec;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("greenprec_test_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

int run(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    args.insert(args.begin(), "greenprec");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

EnvLookup env_from(std::map<std::string, std::string> vars) {
    return [vars](const std::string& name) -> std::optional<std::string> {
        auto it = vars.find(name);
        if (it == vars.end()) return std::nullopt;
        return it->second;
    };
}

const char* kSmallConfig = R"({
  "num_aps": 12, "num_ues": 3, "area_side_m": 300.0,
  "lambdas": [1.0, 6.0], "bits_per_ue": 64, "num_setups": 2,
  "max_iters": 200, "precoders": ["GREEN", "RZF1", "RZF1_ALIGNED", "RZF1_ACR"]
})";

}  // namespace

TEST_CASE("validate command") {
    TempDir dir("validate");
    std::string out, err;
    CHECK(run({"validate"}, &out) == cli::kSuccess);
    const auto resolved = nlohmann::json::parse(out);
    CHECK(resolved.at("num_aps") == 100);
    CHECK(resolved.at("num_ues") == 60);

    write(dir.path / "k0.json", R"({"num_ues": 0})");
    CHECK(run({"validate", "--config", (dir.path / "k0.json").string()}, &out, &err) == cli::kValidationError);
    CHECK(err.find("num_ues") != std::string::npos);

    write(dir.path / "empty.json", R"({"lambdas": []})");
    CHECK(run({"validate", "--config", (dir.path / "empty.json").string()}, &out, &err) == cli::kValidationError);
    CHECK(err.find("lambdas") != std::string::npos);

    write(dir.path / "unknown.json", R"({"num_antennas": 4})");
    CHECK(run({"validate", "--config", (dir.path / "unknown.json").string()}, &out, &err) == cli::kValidationError);
    CHECK(err.find("num_antennas") != std::string::npos);

    write(dir.path / "broken.json", "{ not json");
    CHECK(run({"validate", "--config", (dir.path / "broken.json").string()}) == cli::kValidationError);
    CHECK(run({"validate", "--config", (dir.path / "missing.json").string()}) == cli::kValidationError);
    CHECK(run({"frobnicate"}) == cli::kValidationError);
    CHECK(run({"run", "--lambda", "1,abc"}, &out, &err) == cli::kValidationError);
}

TEST_CASE("defaults mirror the reference parameter set") {
    const nlohmann::json j = to_json(RunConfig{});
    CHECK(j.at("area_side_m") == 1000.0);
    CHECK(j.at("num_aps") == 100);
    CHECK(j.at("antennas_per_ap") == 1);
    CHECK(j.at("num_ues") == 60);
    CHECK(j.at("bandwidth_hz") == 20e6);
    CHECK(j.at("height_diff_m") == 10.0);
    CHECK(j.at("pathloss_exponent") == 3.67);
    CHECK(j.at("gain_at_1km_db") == -140.6);
    CHECK(j.at("shadow_std_db") == 4.0);
    CHECK(j.at("angular_std_deg") == 15.0);
    CHECK(j.at("downlink_power_w") == 1.0);
    CHECK(j.at("gamma_scale") == 0.1);
    CHECK(j.at("bits_per_ue") == 1000000);
    CHECK(j.at("num_setups") == 10);
    CHECK(j.at("modulation") == "QPSK");
    CHECK(j.at("lambdas") == nlohmann::json({1.0, 10.0, 15.0, 20.0, 25.0}));
    CHECK(parse_run_config(j).plan.network.num_aps == 100);
}

TEST_CASE("configuration precedence") {
    TempDir dir("precedence");
    write(dir.path / "cfg.json", R"({"num_setups": 3, "seed": 5, "threads": 2})");
    const auto env = env_from({{"GREENPREC_SEED", "9"}, {"GREENPREC_PRECODERS", R"(["GREEN"])"}});

    cli::RunOverrides none;
    RunConfig c = cli::resolve_config(dir.path / "cfg.json", none, env);
    CHECK(c.plan.num_setups == 3);
    CHECK(c.plan.master_seed == 9);  // env beats file
    CHECK(c.threads == 2);
    CHECK(c.plan.precoders == std::vector<PrecoderKind>{PrecoderKind::Green});

    cli::RunOverrides flags;
    flags.seed = 11;
    flags.setups = 4;
    c = cli::resolve_config(dir.path / "cfg.json", flags, env);
    CHECK(c.plan.master_seed == 11);  // flags beat env
    CHECK(c.plan.num_setups == 4);

    CHECK_THROWS_AS(cli::resolve_config(std::nullopt, none, env_from({{"GREENPREC_NUM_UES", "-2"}})), ConfigError);
    CHECK_THROWS_AS(cli::resolve_config(std::nullopt, none, env_from({{"GREENPREC_PRECODERS", R"(["ZF"])"}})),
                    ConfigError);
}

TEST_CASE("run writes all outputs and is reproducible") {
    TempDir dir("run");
    write(dir.path / "cfg.json", kSmallConfig);
    const std::string cfg = (dir.path / "cfg.json").string();
    std::string out, err;
    REQUIRE(run({"run", "--config", cfg, "--out", (dir.path / "a").string()}, &out, &err) == cli::kSuccess);
    REQUIRE(run({"run", "--config", cfg, "--out", (dir.path / "b").string(), "--threads", "3"}) == cli::kSuccess);

    for (const char* f : {"ber_per_ue.csv", "antenna_activity.csv", "manifest.json"})
        REQUIRE(fs::exists(dir.path / "a" / f));
    CHECK_FALSE(fs::exists(dir.path / "a" / "trace.csv"));

    const std::string ber = slurp(dir.path / "a" / "ber_per_ue.csv");
    CHECK(ber.rfind("lambda,precoder,ue_rank,avg_ber\r\n", 0) == 0);
    // 2 lambdas x 4 precoders x 3 UEs plus header
    CHECK(std::count(ber.begin(), ber.end(), '\n') == 25);
    const std::string act = slurp(dir.path / "a" / "antenna_activity.csv");
    CHECK(act.rfind("lambda,avg_active_antennas,precoder,overall_avg_ber\r\n", 0) == 0);

    CHECK(slurp(dir.path / "b" / "ber_per_ue.csv") == ber);
    CHECK(slurp(dir.path / "b" / "antenna_activity.csv") == act);

    // The manifest is itself a valid config that reproduces the run.
    const auto manifest = nlohmann::json::parse(slurp(dir.path / "a" / "manifest.json"));
    CHECK(manifest.at("config").at("num_aps") == 12);
    CHECK(manifest.at("derived").at("num_antennas") == 12);
    CHECK(manifest.at("seeds").at("setups").size() == 2);
    CHECK(manifest.contains("timings_s"));
    REQUIRE(run({"run", "--config", (dir.path / "a" / "manifest.json").string(), "--out", (dir.path / "c").string()}) ==
            cli::kSuccess);
    CHECK(slurp(dir.path / "c" / "ber_per_ue.csv") == ber);
    CHECK(slurp(dir.path / "c" / "antenna_activity.csv") == act);
}

TEST_CASE("smoke run with flag overrides and trace") {
    TempDir dir("smoke");
    write(dir.path / "cfg.json", R"({"num_aps": 10, "num_ues": 2, "max_iters": 100})");
    std::string out, err;
    REQUIRE(run({"run", "--config", (dir.path / "cfg.json").string(), "--out", (dir.path / "o").string(), "--lambda",
                 "1", "--bits-per-ue", "1000", "--setups", "1", "--precoders", "GREEN,RZF1", "--trace"},
                &out, &err) == cli::kSuccess);
    CHECK(fs::exists(dir.path / "o" / "trace.csv"));
    const auto manifest = nlohmann::json::parse(slurp(dir.path / "o" / "manifest.json"));
    CHECK(manifest.at("config").at("bits_per_ue") == 1000);
    CHECK(manifest.at("config").at("lambdas") == nlohmann::json({1.0}));
    CHECK(manifest.at("config").at("trace") == true);
    CHECK(out.find("GREEN") != std::string::npos);
}

TEST_CASE("failed runs leave no partial outputs") {
    TempDir dir("abort");
    write(dir.path / "cfg.json",
          R"({"num_aps": 8, "num_ues": 2, "lambdas": [1e9], "bits_per_ue": 64, "num_setups": 1, "precoders": ["GREEN"]})");
    std::string out, err;
    CHECK(run({"run", "--config", (dir.path / "cfg.json").string(), "--out", (dir.path / "o").string()}, &out, &err) ==
          cli::kRuntimeError);
    CHECK_FALSE(fs::exists(dir.path / "o" / "ber_per_ue.csv"));
    CHECK_FALSE(fs::exists(dir.path / "o" / "manifest.json"));
    CHECK(err.find("failure rate") != std::string::npos);
}

TEST_CASE("prox-check command") {
    std::string out;
    CHECK(run({"prox-check", "--cases", "100", "--seed", "3"}, &out) == cli::kSuccess);
    CHECK(out.find("PASS") != std::string::npos);
    CHECK(out.find("zero weight: 20") != std::string::npos);
    CHECK(run({"prox-check", "--cases", "0"}) == cli::kValidationError);
}

TEST_CASE("dump-channel command") {
    TempDir dir("dump");
    write(dir.path / "cfg.json", R"({"num_aps": 5, "num_ues": 2})");
    std::string out;
    REQUIRE(run({"dump-channel", "--config", (dir.path / "cfg.json").string(), "--setup", "1"}, &out) ==
            cli::kSuccess);
    std::istringstream in(out);
    const ChannelMatrix ch = read_channel_text(in);
    CHECK(ch.num_ues() == 2);
    CHECK(ch.num_antennas() == 5);
    CHECK(run({"dump-channel", "--setup", "-1"}) == cli::kValidationError);
}

TEST_CASE("CSV helpers") {
    CHECK(csv_field("GREEN") == "GREEN");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(format_number(15.0) == "15");
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1e-7) == "1e-07");
}
