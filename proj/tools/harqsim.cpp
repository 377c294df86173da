// harqsim: throughput sweeps, decision-region dumps and the acceptance suite.
//
//   harqsim sweep --schemes amc,harq-ir --snr-db -5:0.5:30 --a-tilde 4
//   harqsim thresholds --schemes harq-ir --regions optimized --snr-db 0:1:25
//   harqsim verify
//
// Options may also come from a flat key=value file (--config), keyed by the
// long flag name; flags on the command line win.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "harq/harq.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct RawOptions {
    std::string snr_db = "-5:0.5:30";
    std::vector<std::string> schemes{"amc"};
    std::string regions = "amc-exact";
    std::string fading = "fast";
    std::string combining = "ir";
    std::string a_tilde = "4";
    unsigned K = 4;
    std::vector<double> rates;
    std::uint64_t mc_blocks = 1000000;
    std::uint64_t seed = 1;
    std::uint64_t coherence_blocks = 100;
    double p_loss = 0.01;
    unsigned arq_rounds = 1;
    unsigned threads = 0;
    std::string output;
};

harq::SweepSpec to_spec(const RawOptions& o) {
    harq::SweepSpec s;
    harq::parse_snr_range(o.snr_db, s);
    s.schemes = o.schemes;
    s.region_source = harq::parse_region_source(o.regions);
    s.fading = harq::parse_fading(o.fading);
    s.pd_combining = harq::parse_combining(o.combining);
    s.a_tilde = harq::parse_a_tilde(o.a_tilde);
    s.K = o.K;
    if (!o.rates.empty()) s.rates = o.rates;
    s.mc_blocks = o.mc_blocks;
    s.seed = o.seed;
    s.coherence_blocks = o.coherence_blocks;
    s.p_loss = o.p_loss;
    s.arq_rounds = o.arq_rounds;
    s.threads = o.threads;
    s.validate();
    return s;
}

int write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return std::cout ? 0 : kExitFailure;
    }
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) {
        std::cerr << "harqsim: cannot write " << path << "\n";
        return kExitFailure;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AMC / HARQ throughput analysis and simulation"};
    app.set_config("--config", "", "flat key=value file with default option values");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);
    app.fallthrough();

    RawOptions o;
    app.add_option("--snr-db", o.snr_db, "average SNR range lo:step:hi in dB");
    app.add_option("--schemes", o.schemes, "amc,harq-rr,harq-ir,harq-2r-bound,pd-harq,vl-harq")->delimiter(',');
    app.add_option("--regions", o.regions, "amc-exact | amc-closed-form | per-target | optimized");
    app.add_option("--fading", o.fading, "fast | slow");
    app.add_option("--combining", o.combining, "rr | ir (pd-harq)");
    app.add_option("--a-tilde", o.a_tilde, "PER decay; 'inf' for threshold decoding");
    app.add_option("-K,--K", o.K, "maximum number of HARQ rounds");
    app.add_option("--rates", o.rates, "comma-separated rate set (bits/symbol)")->delimiter(',');
    app.add_option("--mc-blocks", o.mc_blocks, "Monte Carlo blocks per point");
    app.add_option("--seed", o.seed, "base RNG seed");
    app.add_option("--coherence-blocks", o.coherence_blocks, "slow fading: blocks per SNR draw");
    app.add_option("--p-loss", o.p_loss, "per-target regions: packet loss target");
    app.add_option("--arq-rounds", o.arq_rounds, "per-target regions: ARQ rounds M");
    app.add_option("--threads", o.threads, "worker threads (default: HARQ_THREADS or all cores)");
    app.add_option("-o,--output", o.output, "output CSV path (default stdout)");

    auto* sweep = app.add_subcommand("sweep", "throughput per (scheme, average SNR) as CSV");
    auto* thresholds = app.add_subcommand("thresholds", "decision regions per average SNR as CSV");
    auto* verify = app.add_subcommand("verify", "run the acceptance property suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (verify->parsed()) {
            harq::verify::VerifyOptions vo;
            vo.mc_blocks = o.mc_blocks;
            vo.seed = o.seed;
            if (vo.mc_blocks < 100000) throw harq::ConfigError("mc-blocks must be >= 100000");
            bool ok = true;
            harq::verify::run_all(vo, [&](const harq::verify::CriterionResult& r) {
                ok = ok && r.passed;
                std::cout << harq::verify::format_line(r) << std::endl;
            });
            return ok ? 0 : kExitFailure;
        }
        const harq::SweepSpec spec = to_spec(o);
        std::ostringstream out;
        if (sweep->parsed())
            harq::run_sweep(spec, out);
        else if (thresholds->parsed())
            harq::emit_thresholds(spec, out);
        return write_output(o.output, out.str());
    } catch (const harq::ConfigError& e) {
        std::cerr << "harqsim: invalid configuration: " << e.what() << "\n";
        return kExitConfig;
    } catch (const harq::NumericalError& e) {
        std::cerr << "harqsim: numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "harqsim: invalid configuration: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "harqsim: " << e.what() << "\n";
        return kExitFailure;
    }
}
