#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "dbft/cli/commands.hpp"

using namespace dbft;
using namespace dbft::cli;

namespace {

struct Common {
    std::optional<std::uint64_t> seed;
    std::optional<Time> max_time;
    std::string out;
    std::string trace;
    bool no_opt1 = false;
    bool no_opt2 = false;
    bool safe_only = false;
    bool naive_timer = false;

    Overrides overrides() const {
        Overrides o;
        o.seed = seed;
        o.max_time = max_time;
        o.no_opt1 = no_opt1;
        o.no_opt2 = no_opt2;
        o.safe_only = safe_only;
        o.naive_timer = naive_timer;
        return o;
    }
};

void add_common(CLI::App* sub, Common& c, bool with_trace) {
    sub->add_option("--seed", c.seed, "Override the seed");
    sub->add_option("--max-time", c.max_time, "Override the simulated time limit");
    sub->add_option("--out", c.out, "Write the main output to this file instead of stdout");
    if (with_trace) sub->add_option("--trace", c.trace, "Write the message trace to this file");
    sub->add_flag("--no-opt1", c.no_opt1, "Disable the round-1 skip for multivalue instances");
    sub->add_flag("--no-opt2", c.no_opt2, "Disable early halting after a decision");
    sub->add_flag("--safe-only", c.safe_only, "Run the safe algorithm without timers or coordinator");
    sub->add_flag("--naive-timer", c.naive_timer, "Safe algorithm with the timer armed at round entry");
}

class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw ConfigError("cannot write " + path);
        }
    }
    std::ostream& get() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Binary and multivalue Byzantine consensus simulator"};
    app.require_subcommand(1);

    Common c;
    std::string path;
    std::string summary_path;
    bool full = false;
    Time gst = 150;

    auto* run = app.add_subcommand("run", "Run one scenario");
    run->add_option("scenario", path, "Scenario JSON file")->required();
    add_common(run, c, true);

    auto* sweep = app.add_subcommand("sweep", "Repeat a scenario over a parameter range and write CSV");
    sweep->add_option("sweep", path, "Sweep JSON file")->required();
    sweep->add_option("--summary", summary_path, "Write per-point mean/max to this file instead of stderr");
    add_common(sweep, c, false);

    auto* fuzz = app.add_subcommand("fuzz", "Randomised safety suite");
    fuzz->add_option("config", path, "Fuzz JSON file")->required();
    add_common(fuzz, c, true);

    auto* replay = app.add_subcommand("replay", "Replay a recorded schedule");
    replay->add_option("schedule", path, "Schedule file")->required();
    replay->add_flag("--full", full, "Run the schedule's generator against the full algorithm instead");
    replay->add_option("--gst", gst, "Stabilisation time used with --full");
    add_common(replay, c, false);

    auto* chain = app.add_subcommand("chain", "Decide a sequence of blocks");
    chain->add_option("config", path, "Chain JSON file")->required();
    add_common(chain, c, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        Output out(c.out);
        const Overrides ov = c.overrides();
        if (*run) return cmd_run(load_json(path), ov, out.get(), c.trace);
        if (*sweep) {
            if (summary_path.empty()) return cmd_sweep(load_json(path), ov, out.get(), std::cerr);
            Output summary(summary_path);
            return cmd_sweep(load_json(path), ov, out.get(), summary.get());
        }
        if (*fuzz) return cmd_fuzz(load_json(path), ov, out.get(), c.trace);
        if (*replay) return cmd_replay(simnet::load_schedule(path), full, ov, out.get(), gst);
        if (*chain) return cmd_chain(load_json(path), ov, out.get());
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ProtocolError& e) {
        std::cerr << "protocol error: " << e.what() << '\n';
        return kSafetyViolation;
    }
    return kUsage;
}
