#include "greenprec/monte_carlo.hpp"

#include "greenprec/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numbers>
#include <thread>

namespace greenprec {

ComplexVector qpsk_modulate(std::span<const std::uint8_t> bits) {
    if (bits.size() % 2 != 0) throw std::invalid_argument("qpsk_modulate: need exactly two bits per UE");
    const double a = 1.0 / std::numbers::sqrt2;
    ComplexVector s(static_cast<Eigen::Index>(bits.size() / 2));
    for (Eigen::Index k = 0; k < s.size(); ++k) {
        const auto b0 = bits[static_cast<std::size_t>(2 * k)];
        const auto b1 = bits[static_cast<std::size_t>(2 * k + 1)];
        s[k] = Complex(a * (1.0 - 2.0 * b0), a * (1.0 - 2.0 * b1));
    }
    return s;
}

std::pair<std::uint8_t, std::uint8_t> qpsk_demodulate(Complex s_hat) {
    return {static_cast<std::uint8_t>(s_hat.real() < 0.0), static_cast<std::uint8_t>(s_hat.imag() < 0.0)};
}

ComplexVector draw_noise(int num_ues, double sigma2, RandomStream& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5 * sigma2));
    ComplexVector n(num_ues);
    for (int k = 0; k < num_ues; ++k) {
        const double re = normal(rng);
        const double im = normal(rng);
        n[k] = Complex(re, im);
    }
    return n;
}

ComplexVector transmit_symbol(const PrecodeSolution& sol, const ChannelMatrix& channel,
                              const ComplexVector& noise) {
    return sol.beta * (channel.h * sol.x + noise);
}

ComplexVector transmit_symbol(const PrecodeSolution& sol, const ChannelMatrix& channel, RandomStream& rng) {
    return transmit_symbol(sol, channel, draw_noise(channel.num_ues(), channel.sigma2, rng));
}

std::vector<PrecoderKind> all_precoders() {
    return {PrecoderKind::Green,       PrecoderKind::Rzf1,    PrecoderKind::Squid,   PrecoderKind::Rzf1Aligned,
            PrecoderKind::SquidAligned, PrecoderKind::Rzf1Acr, PrecoderKind::SquidAcr};
}

void ExperimentPlan::validate() const {
    network.validate();
    if (lambdas.empty()) throw ConfigError("lambdas", "must not be empty");
    for (double l : lambdas)
        if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("lambdas", "entries must be finite and >= 0");
    if (bits_per_ue < 2 || bits_per_ue % 2 != 0) throw ConfigError("bits_per_ue", "must be a positive even number");
    if (num_setups < 1) throw ConfigError("num_setups", "must be >= 1");
    if (precoders.empty()) throw ConfigError("precoders", "must not be empty");
    for (std::size_t i = 0; i < precoders.size(); ++i)
        for (std::size_t j = i + 1; j < precoders.size(); ++j)
            if (precoders[i] == precoders[j]) throw ConfigError("precoders", "duplicate entry");
    if (!(solver.gamma_scale > 0.0) || !std::isfinite(solver.gamma_scale))
        throw ConfigError("gamma_scale", "must be > 0");
    if (!(solver.psi > 0.0 && solver.psi < 2.0)) throw ConfigError("psi", "must lie in (0, 2)");
    if (solver.max_iters < 1) throw ConfigError("max_iters", "must be >= 1");
    if (solver.tolerance && !(*solver.tolerance >= 0.0)) throw ConfigError("tolerance", "must be >= 0");
    if (!(tau_off >= 0.0 && tau_off < 1.0)) throw ConfigError("tau_off", "must lie in [0, 1)");
    if (rzf_regularizer && !(*rzf_regularizer > 0.0)) throw ConfigError("rzf_regularizer", "must be > 0");
    if (!(max_failure_rate >= 0.0 && max_failure_rate <= 1.0))
        throw ConfigError("max_failure_rate", "must lie in [0, 1]");
}

SolverConfig make_solver_config(const ExperimentPlan& plan, const ChannelMatrix& channel, double lambda) {
    SolverConfig cfg;
    cfg.lambda = lambda;
    cfg.gamma = default_step_size(channel.largest_singular_value_sq, plan.solver.gamma_scale);
    cfg.psi = plan.solver.psi;
    cfg.max_iters = plan.solver.max_iters;
    cfg.tolerance = plan.solver.tolerance.value_or(default_tolerance(channel.num_antennas()));
    cfg.kappa = infinity_norm_weight(plan.network.antennas_per_ap, channel.num_ues(), channel.sigma2,
                                     plan.network.downlink_power_w);
    return cfg;
}

const PrecoderResult& RunResult::find(double lambda, PrecoderKind kind) const {
    for (const auto& e : entries)
        if (e.lambda == lambda && e.kind == kind) return e;
    throw std::out_of_range("RunResult::find: no entry for " + std::string(to_string(kind)));
}

ChannelRealization setup_channel(const ExperimentPlan& plan, int setup) {
    auto geo_rng = derive_stream(plan.master_seed, StreamTag::Geometry, {static_cast<std::uint64_t>(setup)});
    auto ch_rng = derive_stream(plan.master_seed, StreamTag::Channel, {static_cast<std::uint64_t>(setup)});
    return generate_channel(plan.network, geo_rng, ch_rng);
}

namespace {

constexpr std::int64_t kBlockSymbols = 32;

using Clock = std::chrono::steady_clock;

struct SetupContext {
    ChannelRealization realization;
    PowerModel power;
    std::vector<SolverConfig> solver_cfg;  // per lambda
    std::optional<GreenPrecoder> green;
    double rzf_regularizer = 0.0;
};

struct WorkItem {
    int setup = 0;
    std::int64_t first = 0;
    std::int64_t count = 0;
};

// Counters for one block; indices [lambda][precoder][ue] flattened.
struct BlockResult {
    std::vector<std::int64_t> errors;
    std::vector<std::int64_t> active;    // [lambda][precoder], summed over symbols
    std::vector<std::int64_t> failures;  // [lambda][precoder]
    std::vector<std::int64_t> green_active;  // [lambda]
    std::vector<std::int64_t> green_failures;  // [lambda]
    std::int64_t monotone_checks = 0;
    std::int64_t monotone_violations = 0;
    std::int64_t precode_calls = 0;
    std::vector<double> seconds;  // [precoder]
    std::vector<TraceEntry> traces;
};

// Single-antenna fallback used when a precoder yields no usable output: the
// strongest group of the relaxed solution if there is one, otherwise the
// strongest matched-filter response among the allowed antennas.
PrecodeSolution fallback_solution(const ComplexVector& s, const ChannelMatrix& channel, const Mask& allowed,
                                  const PowerModel& power, const RealVector* relaxed) {
    const Eigen::Index m = channel.num_antennas();
    ComplexVector score = channel.h.adjoint() * s;
    if (relaxed != nullptr && relaxed->size() == 2 * m && !relaxed->isZero(0.0)) score = unlift(*relaxed);

    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!allowed[static_cast<std::size_t>(i)]) continue;
        if (best < 0 || std::abs(score[i]) > std::abs(score[best])) best = i;
    }
    if (best < 0) best = 0;

    PrecodeSolution sol;
    sol.active_mask.assign(static_cast<std::size_t>(m), false);
    sol.active_mask[static_cast<std::size_t>(best)] = true;
    sol.x = sign_quantize(score, sol.active_mask, power);
    finalize_solution(sol, s, channel);
    return sol;
}

}  // namespace

RunResult run_experiment(const ExperimentPlan& plan, const RunOptions& options) {
    plan.validate();
    const int K = plan.network.num_ues;
    const int M = plan.network.num_antennas();
    const std::size_t n_lambda = plan.lambdas.size();
    const std::size_t n_prec = plan.precoders.size();
    const std::int64_t symbols = plan.symbols_per_setup();
    const auto green_index = static_cast<std::size_t>(
        std::find(plan.precoders.begin(), plan.precoders.end(), PrecoderKind::Green) - plan.precoders.begin());
    const bool need_green = std::any_of(plan.precoders.begin(), plan.precoders.end(), [](PrecoderKind k) {
        return k == PrecoderKind::Green || is_aligned(k) || is_acr(k);
    });

    RunResult result;
    result.lambdas = plan.lambdas;
    result.precoders = plan.precoders;
    result.num_antennas = M;

    // Channels are drawn up front, one independent stream pair per setup.
    std::vector<SetupContext> setups(static_cast<std::size_t>(plan.num_setups));
    for (int st = 0; st < plan.num_setups; ++st) {
        auto& ctx = setups[static_cast<std::size_t>(st)];
        ctx.realization = setup_channel(plan, st);
        const ChannelMatrix& ch = ctx.realization.channel;
        ctx.power = {plan.network.downlink_power_w, plan.network.antennas_per_ap};
        for (double l : plan.lambdas) ctx.solver_cfg.push_back(make_solver_config(plan, ch, l));
        ctx.green.emplace(ch, ctx.power, plan.tau_off);
        ctx.rzf_regularizer = plan.rzf_regularizer.value_or(default_rzf_regularizer(K, ch.sigma2, ctx.power.power_w));
        result.seed_manifest.push_back(
            {st, derive_seed(plan.master_seed, StreamTag::Geometry, {static_cast<std::uint64_t>(st)}),
             derive_seed(plan.master_seed, StreamTag::Channel, {static_cast<std::uint64_t>(st)})});
    }

    std::vector<WorkItem> work;
    for (int st = 0; st < plan.num_setups; ++st)
        for (std::int64_t first = 0; first < symbols; first += kBlockSymbols)
            work.push_back({st, first, std::min(kBlockSymbols, symbols - first)});

    std::vector<BlockResult> blocks(work.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::int64_t> done{0};
    std::mutex progress_mutex;
    std::int64_t progress_errors = 0, progress_bits = 0;

    auto process = [&](const WorkItem& item, BlockResult& out) {
        const auto& ctx = setups[static_cast<std::size_t>(item.setup)];
        const ChannelMatrix& ch = ctx.realization.channel;
        const Mask all_on(static_cast<std::size_t>(M), true);

        out.errors.assign(n_lambda * n_prec * static_cast<std::size_t>(K), 0);
        out.active.assign(n_lambda * n_prec, 0);
        out.failures.assign(n_lambda * n_prec, 0);
        out.green_active.assign(n_lambda, 0);
        out.green_failures.assign(n_lambda, 0);
        out.seconds.assign(n_prec, 0.0);

        std::vector<RealVector> warm(n_lambda);
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(2 * K));

        for (std::int64_t t = item.first; t < item.first + item.count; ++t) {
            const auto sym = static_cast<std::uint64_t>(t);
            const auto setup = static_cast<std::uint64_t>(item.setup);
            auto bit_rng = derive_stream(plan.master_seed, StreamTag::Bits, {setup, sym});
            std::uniform_int_distribution<int> coin(0, 1);
            for (auto& b : bits) b = static_cast<std::uint8_t>(coin(bit_rng));
            const ComplexVector s = qpsk_modulate(bits);
            auto noise_rng = derive_stream(plan.master_seed, StreamTag::Noise, {setup, sym});
            const ComplexVector noise = draw_noise(K, ch.sigma2, noise_rng);

            auto count_errors = [&](std::size_t li, std::size_t pi, const PrecodeSolution& sol) {
                const ComplexVector s_hat = transmit_symbol(sol, ch, noise);
                std::int64_t* err = &out.errors[(li * n_prec + pi) * static_cast<std::size_t>(K)];
                for (int k = 0; k < K; ++k) {
                    const auto [b0, b1] = qpsk_demodulate(s_hat[k]);
                    err[k] += (b0 != bits[static_cast<std::size_t>(2 * k)]) +
                              (b1 != bits[static_cast<std::size_t>(2 * k + 1)]);
                }
                out.active[li * n_prec + pi] += static_cast<std::int64_t>(count_active(sol.active_mask));
            };

            // Runs one precoder, substituting the fallback on failure.
            auto timed = [&](std::size_t pi, std::size_t li, const Mask& allowed, auto&& fn) {
                const auto t0 = Clock::now();
                PrecodeSolution sol;
                ++out.precode_calls;
                try {
                    sol = fn();
                } catch (const PrecodeError&) {
                    ++out.failures[li * n_prec + pi];
                    sol = fallback_solution(s, ch, allowed, ctx.power, nullptr);
                } catch (const SolverDiverged&) {
                    ++out.failures[li * n_prec + pi];
                    sol = fallback_solution(s, ch, allowed, ctx.power, nullptr);
                }
                out.seconds[pi] += std::chrono::duration<double>(Clock::now() - t0).count();
                return sol;
            };

            // Lambda-independent baselines are computed once per symbol.
            std::vector<std::optional<PrecodeSolution>> shared(n_prec);
            for (std::size_t pi = 0; pi < n_prec; ++pi) {
                const PrecoderKind kind = plan.precoders[pi];
                if (kind == PrecoderKind::Rzf1) {
                    shared[pi] = timed(pi, 0, all_on, [&] { return rzf_precode(s, ch, all_on, ctx.power, ctx.rzf_regularizer); });
                } else if (kind == PrecoderKind::Squid) {
                    shared[pi] = timed(pi, 0, all_on, [&] {
                        return squid_precode(s, ch, all_on, ctx.solver_cfg[0], ctx.power, ctx.green->solver());
                    });
                }
            }

            std::int64_t prev_count = -1;
            for (std::size_t li = 0; li < n_lambda; ++li) {
                const SolverConfig& cfg = ctx.solver_cfg[li];
                PrecodeSolution green_sol;
                if (need_green) {
                    const auto t0 = Clock::now();
                    ++out.precode_calls;
                    SolverState state;
                    std::vector<TraceRecord> trace_records;
                    TraceSink sink;
                    if (options.trace && t == 0)
                        sink = [&trace_records](const TraceRecord& r) { trace_records.push_back(r); };
                    const RealVector* init = plan.solver.warm_start && warm[li].size() == 2 * M ? &warm[li] : nullptr;
                    try {
                        green_sol = ctx.green->precode(s, cfg, init, &state, sink);
                    } catch (const PrecodeError&) {
                        ++out.green_failures[li];
                        green_sol = fallback_solution(s, ch, all_on, ctx.power, &state.a_r);
                    } catch (const SolverDiverged&) {
                        ++out.green_failures[li];
                        green_sol = fallback_solution(s, ch, all_on, ctx.power, nullptr);
                    }
                    if (plan.solver.warm_start) warm[li] = state.c_r;
                    if (!trace_records.empty())
                        out.traces.push_back({item.setup, plan.lambdas[li], std::move(trace_records)});
                    if (green_index < n_prec)
                        out.seconds[green_index] += std::chrono::duration<double>(Clock::now() - t0).count();

                    const auto count = static_cast<std::int64_t>(count_active(green_sol.active_mask));
                    out.green_active[li] += count;
                    if (prev_count >= 0) {
                        ++out.monotone_checks;
                        if (count > prev_count) ++out.monotone_violations;
                    }
                    prev_count = count;
                }

                const int target = static_cast<int>(count_active(green_sol.active_mask));
                for (std::size_t pi = 0; pi < n_prec; ++pi) {
                    const PrecoderKind kind = plan.precoders[pi];
                    if (kind == PrecoderKind::Green) {
                        count_errors(li, pi, green_sol);
                    } else if (shared[pi]) {
                        count_errors(li, pi, *shared[pi]);
                    } else {
                        Mask mask = green_sol.active_mask;
                        if (is_acr(kind)) {
                            auto acr_rng = derive_stream(plan.master_seed, StreamTag::Acr,
                                                         {setup, sym, static_cast<std::uint64_t>(li)});
                            mask = acr_mask(target, M, acr_rng);
                        }
                        const bool rzf = kind == PrecoderKind::Rzf1Aligned || kind == PrecoderKind::Rzf1Acr;
                        const PrecodeSolution sol = timed(pi, li, mask, [&] {
                            if (rzf) return rzf_precode(s, ch, mask, ctx.power, ctx.rzf_regularizer);
                            return squid_precode(s, ch, mask, cfg, ctx.power, DavisYinSolver(ch.h_r, mask));
                        });
                        count_errors(li, pi, sol);
                    }
                }
            }
        }

        if (options.progress) {
            const std::int64_t total_done = done.fetch_add(item.count) + item.count;
            std::lock_guard lock(progress_mutex);
            for (int k = 0; k < K; ++k) progress_errors += out.errors[static_cast<std::size_t>(k)];
            progress_bits += 2 * item.count * K;
            options.progress({item.setup, total_done, symbols * plan.num_setups,
                              progress_bits > 0 ? static_cast<double>(progress_errors) / progress_bits : 0.0});
        }
    };

    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < work.size(); i = next.fetch_add(1)) process(work[i], blocks[i]);
    };

    const int threads = std::max(1, options.threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) {
            pool.emplace_back([&, i] {
                try {
                    worker();
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                    next.store(work.size());
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    // Reduction in work-list order; all counters are integers.
    const std::size_t cells = n_lambda * n_prec;
    std::vector<std::int64_t> setup_errors(static_cast<std::size_t>(plan.num_setups) * cells * K, 0);
    std::vector<std::int64_t> active(cells, 0), failures(cells, 0), green_failures(n_lambda, 0);
    std::vector<std::int64_t> green_active(static_cast<std::size_t>(plan.num_setups) * n_lambda, 0);
    std::vector<double> seconds(n_prec, 0.0);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& blk = blocks[b];
        const auto st = static_cast<std::size_t>(work[b].setup);
        for (std::size_t i = 0; i < blk.errors.size(); ++i) setup_errors[st * cells * K + i] += blk.errors[i];
        for (std::size_t i = 0; i < cells; ++i) {
            active[i] += blk.active[i];
            failures[i] += blk.failures[i];
        }
        for (std::size_t li = 0; li < n_lambda; ++li) {
            green_active[st * n_lambda + li] += blk.green_active[li];
            green_failures[li] += blk.green_failures[li];
        }
        for (std::size_t pi = 0; pi < n_prec; ++pi) seconds[pi] += blk.seconds[pi];
        result.monotone_checks += blk.monotone_checks;
        result.monotone_violations += blk.monotone_violations;
        result.precode_calls += blk.precode_calls;
        for (const auto& tr : blk.traces) result.traces.push_back(tr);
    }

    const double total_symbols = static_cast<double>(symbols) * plan.num_setups;
    for (std::size_t li = 0; li < n_lambda; ++li) {
        for (std::size_t pi = 0; pi < n_prec; ++pi) {
            const std::size_t cell = li * n_prec + pi;
            PrecoderResult pr;
            pr.lambda = plan.lambdas[li];
            pr.kind = plan.precoders[pi];
            pr.per_ue_avg_ber.assign(static_cast<std::size_t>(K), 0.0);
            // Per-setup BER over bits_per_ue bits, then the mean over setups.
            for (int st = 0; st < plan.num_setups; ++st) {
                for (int k = 0; k < K; ++k) {
                    const auto e = setup_errors[(static_cast<std::size_t>(st) * cells + cell) * K + static_cast<std::size_t>(k)];
                    pr.per_ue_avg_ber[static_cast<std::size_t>(k)] += static_cast<double>(e) / static_cast<double>(plan.bits_per_ue);
                }
            }
            for (double& v : pr.per_ue_avg_ber) v /= plan.num_setups;
            pr.per_ue_ranked_ber = pr.per_ue_avg_ber;
            std::sort(pr.per_ue_ranked_ber.begin(), pr.per_ue_ranked_ber.end());
            double sum = 0.0;
            for (double v : pr.per_ue_avg_ber) sum += v;
            pr.overall_avg_ber = sum / K;
            pr.avg_active_antennas = static_cast<double>(active[cell]) / total_symbols;
            pr.failures = pr.kind == PrecoderKind::Green ? green_failures[li] : failures[cell];
            result.failures += failures[cell];
            result.entries.push_back(std::move(pr));
        }
    }

    for (std::int64_t f : green_failures) result.failures += f;
    result.setup_active.assign(static_cast<std::size_t>(plan.num_setups), std::vector<double>(n_lambda, 0.0));
    result.avg_active_antennas.assign(n_lambda, need_green ? 0.0 : static_cast<double>(M));
    if (need_green) {
        for (int st = 0; st < plan.num_setups; ++st) {
            for (std::size_t li = 0; li < n_lambda; ++li) {
                const double a = static_cast<double>(green_active[static_cast<std::size_t>(st) * n_lambda + li]) / symbols;
                result.setup_active[static_cast<std::size_t>(st)][li] = a;
                result.avg_active_antennas[li] += a / plan.num_setups;
            }
        }
    }
    for (std::size_t pi = 0; pi < n_prec; ++pi) result.timings_s[std::string(to_string(plan.precoders[pi]))] = seconds[pi];

    if (result.precode_calls > 0 &&
        static_cast<double>(result.failures) > plan.max_failure_rate * static_cast<double>(result.precode_calls)) {
        throw RunAborted("precoder failure rate " +
                         std::to_string(static_cast<double>(result.failures) / result.precode_calls) +
                         " exceeds the configured limit");
    }
    return result;
}

}  // namespace greenprec
