#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "fogsim/errors.hpp"
#include "fogsim/scenarios.hpp"

namespace fogsim::cli {

namespace fs = std::filesystem;

namespace {

void init_logging() {
    static std::once_flag once;
    std::call_once(once, [] {
        auto logger = spdlog::stderr_color_mt("fogsim");
        spdlog::set_default_logger(logger);
        spdlog::set_pattern("[%l] %v");
        spdlog::set_level(spdlog::level::warn);
        if (const char* env = std::getenv("FOGSIM_LOG")) spdlog::set_level(spdlog::level::from_str(env));
    });
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError(fmt::format("cannot read '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    out << text;
}

void write_reports(const fs::path& dir, const ScenarioResult& r) {
    fs::create_directories(dir);
    write_file(dir / "report.json", report_to_json(r.report));
    write_file(dir / "report.csv", report_to_csv(r.report));
    write_file(dir / "timing.json", timing_to_json(r.timing));
}

bool is_gateway_class(const std::string& cls) {
    return cls.size() >= 7 && cls.compare(cls.size() - 7, 7, "gateway") == 0;
}

struct EnergySplit {
    double cloud = 0;
    double gateways = 0;
    double edge = 0;
};

EnergySplit split_energy(const MetricsReport& r) {
    EnergySplit s;
    for (const auto& [cls, j] : r.class_energy) {
        if (cls == "cloud") s.cloud += j;
        else if (is_gateway_class(cls)) s.gateways += j;
        else s.edge += j;
    }
    return s;
}

std::string summary_line(const MetricsReport& r) {
    const auto delay = r.primary_loop_delay_ms();
    return fmt::format("loop_delay_ms={} network_usage={} energy_j={}", delay ? fmt::format("{:.3f}", *delay) : "n/a",
                       fmt::format("{:.6g}", r.network_usage), fmt::format("{:.6g}", r.total_energy()));
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(text);
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    if (out.empty()) throw ArgumentError(fmt::format("empty list '{}'", text));
    return out;
}

// Options shared by run and sweep.
struct Common {
    std::string scenario;
    std::optional<std::int64_t> duration_ms;
    std::uint64_t seed = 42;
    std::string distribution = "deterministic";
    double state_period_ms = 100;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--scenario", c.scenario, "Built-in scenario")->check(CLI::IsMember(scenario_names()));
    cmd->add_option("--duration-ms", c.duration_ms, "Simulated duration in ms")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", c.seed, "Random seed");
    cmd->add_option("--distribution", c.distribution, "Sensor inter-arrival distribution")
        ->check(CLI::IsMember({"deterministic", "exponential"}));
    cmd->add_option("--state-period-ms", c.state_period_ms, "Period of the game-state edges (eeg)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", c.out, "Output directory");
}

Duration duration_for(const Common& c, const std::string& scenario) {
    return c.duration_ms ? Duration::millis(*c.duration_ms) : default_duration(scenario);
}

struct RunFlags {
    Common common;
    int config = 1;
    std::string headset = "A";
    std::string placement = "edgeward";
    std::string topology;
    std::string app;
};

int cmd_run(const RunFlags& f, CLI::App& cmd, std::ostream& out, std::ostream& err) {
    const bool custom = !f.topology.empty() || !f.app.empty();
    if (custom == !f.common.scenario.empty()) {
        err << "run: give either --scenario or both --topology and --app\n" << cmd.help();
        return kBadFlags;
    }
    if (custom && (f.topology.empty() || f.app.empty())) {
        err << "run: --topology and --app go together\n" << cmd.help();
        return kBadFlags;
    }

    ScenarioResult result;
    if (custom) {
        PhysicalTopology topo;
        std::optional<ApplicationGraph> graph;
        std::vector<PlacementConstraint> constraints;
        try {
            topo = parse_topology_json(read_file(f.topology));
            auto doc = parse_application_json(read_file(f.app));
            graph.emplace(build_application(std::move(doc.spec)));
            for (const auto& p : doc.pins) constraints.push_back({p.module, p.target});
        } catch (const ParseError& e) {
            err << e.what() << "\n";
            return kInvalidInput;
        } catch (const ValidationError& e) {
            err << e.what() << "\n";
            return kInvalidInput;
        }
        const Duration duration = f.common.duration_ms ? Duration::millis(*f.common.duration_ms) : Duration::seconds(60);
        result = run_custom(topo, *graph, constraints, f.placement, duration, f.common.seed);
    } else {
        ScenarioSpec spec;
        spec.name = f.common.scenario;
        spec.config = f.config;
        spec.headset = parse_headset(f.headset);
        spec.placement = f.placement;
        spec.seed = f.common.seed;
        spec.distribution = parse_distribution(f.common.distribution);
        spec.state_period_ms = f.common.state_period_ms;
        spec.duration = duration_for(f.common, spec.name);
        result = run_scenario(spec);
    }
    if (result.report.tuples.undeliverable > 0) {
        spdlog::warn("{} tuples could not be delivered", result.report.tuples.undeliverable);
    }
    if (!f.common.out.empty()) write_reports(f.common.out, result);
    out << summary_line(result.report) << "\n";
    return kOk;
}

struct SweepFlags {
    Common common;
    std::string configs = "1..5";
    std::string placements = "cloud,edgeward";
    std::string headsets = "A,B";
    unsigned jobs = 1;
};

struct Cell {
    ScenarioSpec spec;
    std::string variant;
    std::optional<ScenarioResult> result;
    std::string failure;
};

int cmd_sweep(const SweepFlags& f, CLI::App& cmd, std::ostream& out, std::ostream& err) {
    if (f.common.scenario.empty()) {
        err << "sweep: --scenario is required\n" << cmd.help();
        return kBadFlags;
    }
    const auto configs = parse_range(f.configs);
    const auto placements = split_list(f.placements);
    for (const auto& p : placements) PolicyRegistry::instance().create(p);  // rejects unknown names early
    std::vector<std::string> variants = {"-"};
    if (f.common.scenario == "eeg") variants = split_list(f.headsets);

    std::vector<Cell> cells;
    for (int c : configs) {
        groups_for_config(c);
        for (const auto& v : variants) {
            for (const auto& p : placements) {
                Cell cell;
                cell.spec.name = f.common.scenario;
                cell.spec.config = c;
                if (v != "-") cell.spec.headset = parse_headset(v);
                cell.variant = v == "-" ? v : headset_name(cell.spec.headset);
                cell.spec.placement = p;
                cell.spec.seed = f.common.seed;
                cell.spec.distribution = parse_distribution(f.common.distribution);
                cell.spec.state_period_ms = f.common.state_period_ms;
                cell.spec.duration = duration_for(f.common, cell.spec.name);
                cells.push_back(std::move(cell));
            }
        }
    }
    std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
        return std::tie(a.spec.config, a.variant, a.spec.placement) <
               std::tie(b.spec.config, b.variant, b.spec.placement);
    });

    const fs::path out_dir = f.common.out.empty() ? fs::path("fogsim-sweep") : fs::path(f.common.out);
    std::atomic<std::size_t> next{0};
    std::mutex io;
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            Cell& cell = cells[i];
            try {
                cell.result = run_scenario(cell.spec);
                const auto dir = out_dir / fmt::format("{}-c{}-{}-{}", cell.spec.name, cell.spec.config,
                                                       cell.variant, cell.spec.placement);
                std::lock_guard lock(io);
                write_reports(dir, *cell.result);
            } catch (const std::exception& e) {
                cell.failure = e.what();
                std::lock_guard lock(io);
                spdlog::error("cell {} c{} {} {} failed: {}", cell.spec.name, cell.spec.config, cell.variant,
                              cell.spec.placement, e.what());
            }
        }
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(f.jobs, static_cast<unsigned>(cells.size())));
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::string csv =
        "scenario,config,variant,placement,loop_delay_ms,network_usage,energy_cloud_j,energy_gateways_j,"
        "energy_edge_j,wall_ms,status\r\n";
    bool failed = false;
    for (const auto& cell : cells) {
        std::string metrics = ",,,,,,";
        std::string status = "ok";
        if (cell.result) {
            const auto& r = cell.result->report;
            const auto delay = r.primary_loop_delay_ms();
            const auto e = split_energy(r);
            metrics = fmt::format("{},{},{},{},{},{}", delay ? fmt::format("{}", *delay) : "", r.network_usage, e.cloud,
                                  e.gateways, e.edge, cell.result->timing.wall_ms);
        } else {
            failed = true;
            status = "failed: " + cell.failure;
        }
        csv += fmt::format("{},{},{},{},{},{}\r\n", cell.spec.name, cell.spec.config, cell.variant,
                           cell.spec.placement, metrics, csv_field(status));
    }
    fs::create_directories(out_dir);
    write_file(out_dir / "sweep.csv", csv);
    out << fmt::format("{} cells, {} failed; wrote {}\n", cells.size(),
                       std::count_if(cells.begin(), cells.end(), [](const Cell& c) { return !c.result; }),
                       (out_dir / "sweep.csv").string());
    return failed ? kCellFailed : kOk;
}

struct ValidateFlags {
    std::string topology;
    std::string app;
};

int cmd_validate(const ValidateFlags& f, CLI::App& cmd, std::ostream& out, std::ostream& err) {
    if (f.topology.empty() && f.app.empty()) {
        err << "validate: give --topology and/or --app\n" << cmd.help();
        return kBadFlags;
    }
    std::vector<std::string> problems;
    std::optional<PhysicalTopology> topo;
    std::optional<ApplicationDocument> doc;
    if (!f.topology.empty()) {
        try {
            topo = parse_topology_json(read_file(f.topology));
        } catch (const ParseError& e) {
            problems.push_back(e.what());
        } catch (const ValidationError& e) {
            problems.push_back(e.what());
        }
    }
    if (!f.app.empty()) {
        try {
            doc = parse_application_json(read_file(f.app));
            for (const auto& v : check_application(doc->spec)) {
                problems.push_back(fmt::format("application: {}: {}", v.entity, v.message));
            }
        } catch (const ParseError& e) {
            problems.push_back(e.what());
        }
    }
    if (topo && doc) {
        for (const auto& pin : doc->pins) {
            try {
                resolve_constraint_target(*topo, {pin.module, pin.target});
            } catch (const ConfigError& e) {
                problems.push_back(e.what());
            }
        }
    }
    if (problems.empty()) {
        out << "OK\n";
        return kOk;
    }
    for (const auto& p : problems) err << p << "\n";
    return kInvalidInput;
}

}  // namespace

std::vector<int> parse_range(const std::string& text) {
    auto to_int = [&](const std::string& s) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size()) throw ArgumentError(fmt::format("bad range '{}'", text));
        return v;
    };
    const auto dots = text.find("..");
    if (dots == std::string::npos) return {to_int(text)};
    const int a = to_int(text.substr(0, dots));
    const int b = to_int(text.substr(dots + 2));
    if (b < a) throw ArgumentError(fmt::format("empty range '{}'", text));
    std::vector<int> out;
    for (int v = a; v <= b; ++v) out.push_back(v);
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    init_logging();
    CLI::App app{"Fog/edge/IoT discrete-event simulator", "fogsim"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run_cmd = app.add_subcommand("run", "Run one scenario or a topology/application pair");
    add_common(run_cmd, run_flags.common);
    run_cmd->add_option("--config", run_flags.config, "Scenario size 1..5")->check(CLI::Range(1, 5));
    run_cmd->add_option("--headset", run_flags.headset, "EEG headset")->check(CLI::IsMember({"A", "B"}));
    run_cmd->add_option("--placement", run_flags.placement, "Placement policy");
    run_cmd->add_option("--topology", run_flags.topology, "Topology JSON")->check(CLI::ExistingFile);
    run_cmd->add_option("--app", run_flags.app, "Application JSON")->check(CLI::ExistingFile);

    SweepFlags sweep_flags;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a grid of scenario cells");
    add_common(sweep_cmd, sweep_flags.common);
    sweep_cmd->add_option("--configs", sweep_flags.configs, "Config range, e.g. 1..5");
    sweep_cmd->add_option("--placements", sweep_flags.placements, "Comma-separated policies");
    sweep_cmd->add_option("--headsets", sweep_flags.headsets, "Comma-separated headsets (eeg)");
    sweep_cmd->add_option("--jobs", sweep_flags.jobs, "Parallel cells")->check(CLI::PositiveNumber);

    ValidateFlags validate_flags;
    auto* validate_cmd = app.add_subcommand("validate", "Check topology and application files");
    validate_cmd->add_option("--topology", validate_flags.topology, "Topology JSON")->check(CLI::ExistingFile);
    validate_cmd->add_option("--app", validate_flags.app, "Application JSON")->check(CLI::ExistingFile);

    auto* list_cmd = app.add_subcommand("list-scenarios", "List built-in scenarios");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return kBadFlags;
    }

    try {
        if (*run_cmd) return cmd_run(run_flags, *run_cmd, out, err);
        if (*sweep_cmd) return cmd_sweep(sweep_flags, *sweep_cmd, out, err);
        if (*validate_cmd) return cmd_validate(validate_flags, *validate_cmd, out, err);
        if (*list_cmd) {
            for (const auto& name : scenario_names()) {
                out << fmt::format("{}  configs 1..5  default duration {} s\n", name,
                                   default_duration(name).count_us() / 1'000'000);
            }
            out << "placements: " << fmt::format("{}", fmt::join(PolicyRegistry::instance().names(), ", ")) << "\n";
            return kOk;
        }
    } catch (const PlacementError& e) {
        err << "placement failed: " << e.what() << "\n";
        return kPlacementFailed;
    } catch (const ValidationError& e) {
        err << e.what() << "\n";
        return kInvalidInput;
    } catch (const ParseError& e) {
        err << e.what() << "\n";
        return kInvalidInput;
    } catch (const ArgumentError& e) {
        err << e.what() << "\n";
        return kBadFlags;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kCellFailed;
    }
    return kBadFlags;
}

}  // namespace fogsim::cli
