#include "fogsim/scenarios.hpp"

#include <chrono>
#include <fmt/format.h>

#include "fogsim/errors.hpp"

namespace fogsim {

namespace {

// ---------------------------------------------------------------------------
// Case-study constants. Each value appears here once.
// ---------------------------------------------------------------------------

// Device table of the game case study (CPU GHz x 1000 = MIPS, RAM GB x 1024 = MB).
constexpr double kGatewayMips = 3000;        // WiFi and ISP gateway, 3.0 GHz
constexpr double kPhoneMips = 1600;          // smartphone, 1.6 GHz
constexpr double kGatewayRamMb = 4096;       // 4 GB
constexpr double kPhoneRamMb = 1024;         // 1 GB
constexpr double kServerBusyW = 107.339;     // cloud VM and gateways, busy
constexpr double kServerIdleW = 83.433;      // cloud VM and gateways, idle
constexpr double kPhoneBusyW = 87.53;        // smartphone, busy
constexpr double kPhoneIdleW = 82.44;        // smartphone, idle

// Cloud root: finite so that it can become a bottleneck (model default).
constexpr double kCloudMips = 40000;
constexpr double kCloudRamMb = 4096;         // cloud VM RAM, 4 GB (device table)

// Game sensor table.
constexpr double kHeadsetAMi = 2000;         // headset A tuple CPU length
constexpr double kHeadsetAIntervalMs = 10;   // headset A inter-arrival
constexpr double kHeadsetBMi = 2500;         // headset B tuple CPU length
constexpr double kHeadsetBIntervalMs = 5;    // headset B inter-arrival

// Game edge table: (cpu MI, network bytes).
constexpr double kEegBytes = 500;            // EEG
constexpr double kSensorMi = 3500, kSensorBytes = 500;                      // _SENSOR
constexpr double kPlayerStateMi = 1000, kPlayerStateBytes = 1000;           // PLAYER_GAME_STATE
constexpr double kConcentrationMi = 14, kConcentrationBytes = 500;          // CONCENTRATION
constexpr double kGlobalStateMi = 1000, kGlobalStateBytes = 1000;           // GLOBAL_GAME_STATE
constexpr double kGlobalUpdateMi = 1000, kGlobalUpdateBytes = 500;          // GLOBAL_STATE_UPDATE
constexpr double kSelfUpdateMi = 1000, kSelfUpdateBytes = 500;              // SELF_STATE_UPDATE

// Game link table (ms).
constexpr double kHeadsetToPhoneMs = 6;
constexpr double kPhoneToWifiMs = 2;
constexpr double kWifiToIspMs = 4;
constexpr double kIspToCloudMs = 100;
constexpr int kPhonesPerGateway = 4;         // "each gateway connected to 4 smartphones"

// Surveillance edge table: (cpu MI, network bytes).
constexpr double kRawVideoMi = 1000, kRawVideoBytes = 20000;                // RAW_VIDEO_STREAM
constexpr double kMotionMi = 2000, kMotionBytes = 2000;                     // MOTION_VIDEO_STREAM
constexpr double kDetectedMi = 500, kDetectedBytes = 2000;                  // DETECTED_OBJECT
constexpr double kLocationMi = 1000, kLocationBytes = 100;                  // OBJECT_LOCATION
constexpr double kPtzMi = 100, kPtzBytes = 100;                             // PTZ_PARAMS

// Surveillance sensor table.
constexpr double kCameraIntervalMs = 5;

// Surveillance link table (ms).
constexpr double kCameraToAreaMs = 2;
constexpr double kAreaToIspMs = 2;
constexpr int kCamerasPerArea = 4;           // "each surveilled area has four smart cameras"
constexpr double kSurveillanceDurationS = 1000;  // "a period of 1000 seconds"

// Not given by the case studies; model defaults.
constexpr double kCameraMips = 500;
constexpr double kDetectedSelectivity = 0.05;
constexpr double kLinkBw = 10000;            // bytes per ms
constexpr double kBackboneBw = 100000;       // ISP uplink and cloud downlink
constexpr double kStorageMb = 10000;
constexpr double kDisplayLatencyMs = 0;
constexpr double kGameDurationS = 3 * 3600;  // game runs last 3 hours

// ---------------------------------------------------------------------------

FogDevice make_device(std::string name, std::optional<std::string> parent, double mips, double ram, double busy,
                      double idle, double latency_ms, std::string cls) {
    FogDevice d;
    d.name = std::move(name);
    d.parent = std::move(parent);
    d.mips = mips;
    d.ram_mb = ram;
    d.storage_mb = kStorageMb;
    d.uplink_bw = kLinkBw;
    d.downlink_bw = kLinkBw;
    d.busy_power_w = busy;
    d.idle_power_w = idle;
    d.uplink_latency_ms = latency_ms;
    d.device_class = std::move(cls);
    return d;
}

// Cloud and ISP gateway; every scenario shares this spine.
void add_spine(std::vector<FogDevice>& devices) {
    auto cloud = make_device("cloud", std::nullopt, kCloudMips, kCloudRamMb, kServerBusyW, kServerIdleW, 0, "cloud");
    cloud.uplink_bw = 0;
    cloud.downlink_bw = kBackboneBw;
    devices.push_back(std::move(cloud));
    auto isp = make_device("isp-gateway", "cloud", kGatewayMips, kGatewayRamMb, kServerBusyW, kServerIdleW,
                           kIspToCloudMs, "isp_gateway");
    isp.uplink_bw = kBackboneBw;
    devices.push_back(std::move(isp));
}

AppEdge edge(std::string src, std::string dst, std::string type, double mi, double bytes, Direction dir,
             EdgeKind kind = EdgeKind::event, double period = 0) {
    AppEdge e;
    e.source = std::move(src);
    e.destination = std::move(dst);
    e.tuple_type = std::move(type);
    e.cpu_mi = mi;
    e.nw_bytes = bytes;
    e.direction = dir;
    e.kind = kind;
    e.period_ms = period;
    return e;
}

AppModule module(std::string name, std::vector<SelectivityRule> rules = {}) {
    AppModule m;
    m.name = std::move(name);
    m.selectivity = std::move(rules);
    return m;
}

SelectivityRule rule(std::string in, std::string out, double p = 1.0) {
    return SelectivityRule{std::move(in), std::move(out), SelectivityModel{p}};
}

std::string group_tag(int g) { return fmt::format("{:02d}", g); }

}  // namespace

int groups_for_config(int config) {
    if (config < 1 || config > 5) throw ArgumentError(fmt::format("config must be 1..5, got {}", config));
    return 1 << (config - 1);
}

std::string headset_name(Headset h) { return h == Headset::A ? "A" : "B"; }

Headset parse_headset(std::string_view s) {
    if (s == "A" || s == "a") return Headset::A;
    if (s == "B" || s == "b") return Headset::B;
    throw ArgumentError(fmt::format("unknown headset '{}' (expected A or B)", s));
}

TransmitKind parse_distribution(std::string_view s) {
    if (s == "deterministic") return TransmitKind::deterministic;
    if (s == "exponential") return TransmitKind::exponential;
    throw ArgumentError(fmt::format("unknown distribution '{}'", s));
}

std::string_view to_string(TransmitKind k) {
    return k == TransmitKind::deterministic ? "deterministic" : "exponential";
}

std::vector<std::string> scenario_names() { return {"eeg", "surveillance"}; }

Duration default_duration(const std::string& scenario) {
    if (scenario == "eeg") return Duration::seconds(static_cast<std::int64_t>(kGameDurationS));
    if (scenario == "surveillance") return Duration::seconds(static_cast<std::int64_t>(kSurveillanceDurationS));
    throw ArgumentError(fmt::format("unknown scenario '{}'", scenario));
}

BuiltScenario build_eeg(int config, Headset headset, TransmitKind distribution, double state_period_ms) {
    const int gateways = groups_for_config(config);
    if (!(state_period_ms > 0)) throw ArgumentError("state period must be positive");
    const double eeg_mi = headset == Headset::A ? kHeadsetAMi : kHeadsetBMi;
    const double interval = headset == Headset::A ? kHeadsetAIntervalMs : kHeadsetBIntervalMs;

    std::vector<FogDevice> devices;
    std::vector<Sensor> sensors;
    std::vector<Actuator> actuators;
    add_spine(devices);
    for (int g = 1; g <= gateways; ++g) {
        const std::string gw = "wifi-gateway-" + group_tag(g);
        devices.push_back(make_device(gw, "isp-gateway", kGatewayMips, kGatewayRamMb, kServerBusyW, kServerIdleW,
                                      kWifiToIspMs, "wifi_gateway"));
        for (int p = 1; p <= kPhonesPerGateway; ++p) {
            const std::string suffix = fmt::format("{}-{}", group_tag(g), p);
            const std::string phone = "phone-" + suffix;
            devices.push_back(make_device(phone, gw, kPhoneMips, kPhoneRamMb, kPhoneBusyW, kPhoneIdleW,
                                          kPhoneToWifiMs, "smartphone"));
            sensors.push_back(Sensor{"eeg-" + suffix, "EEG", phone, kHeadsetToPhoneMs,
                                     TransmitDistribution{distribution, interval}, eeg_mi, kEegBytes});
            actuators.push_back(Actuator{"display-" + suffix, "DISPLAY", phone, kDisplayLatencyMs});
        }
    }

    ApplicationSpec app;
    app.name = "eeg-tractor-beam";
    app.sensor_types = {"EEG"};
    app.actuator_types = {"DISPLAY"};
    app.modules = {
        module("Client", {rule("EEG", "_SENSOR"), rule("CONCENTRATION", "SELF_STATE_UPDATE"),
                          rule("GLOBAL_GAME_STATE", "GLOBAL_STATE_UPDATE")}),
        module("Concentration Calculator", {rule("_SENSOR", "CONCENTRATION")}),
        module("Coordinator"),
    };
    app.edges = {
        edge("EEG", "Client", "EEG", eeg_mi, kEegBytes, Direction::up),
        edge("Client", "Concentration Calculator", "_SENSOR", kSensorMi, kSensorBytes, Direction::up),
        edge("Concentration Calculator", "Coordinator", "PLAYER_GAME_STATE", kPlayerStateMi, kPlayerStateBytes,
             Direction::up, EdgeKind::periodic, state_period_ms),
        edge("Concentration Calculator", "Client", "CONCENTRATION", kConcentrationMi, kConcentrationBytes,
             Direction::down),
        edge("Coordinator", "Client", "GLOBAL_GAME_STATE", kGlobalStateMi, kGlobalStateBytes, Direction::down,
             EdgeKind::periodic, state_period_ms),
        edge("Client", "DISPLAY", "GLOBAL_STATE_UPDATE", kGlobalUpdateMi, kGlobalUpdateBytes, Direction::down),
        edge("Client", "DISPLAY", "SELF_STATE_UPDATE", kSelfUpdateMi, kSelfUpdateBytes, Direction::down),
    };
    app.loops = {AppLoop{"brain-state-to-display", {"EEG", "Client", "Concentration Calculator", "Client", "DISPLAY"}}};

    return BuiltScenario{PhysicalTopology(std::move(devices), std::move(sensors), std::move(actuators)),
                         build_application(std::move(app)),
                         {{"Client", "smartphone"}, {"Coordinator", "cloud"}}};
}

BuiltScenario build_surveillance(int config, TransmitKind distribution) {
    const int areas = groups_for_config(config);

    std::vector<FogDevice> devices;
    std::vector<Sensor> sensors;
    add_spine(devices);
    for (int a = 1; a <= areas; ++a) {
        const std::string gw = "area-gateway-" + group_tag(a);
        devices.push_back(make_device(gw, "isp-gateway", kGatewayMips, kGatewayRamMb, kServerBusyW, kServerIdleW,
                                      kAreaToIspMs, "area_gateway"));
        for (int c = 1; c <= kCamerasPerArea; ++c) {
            const std::string suffix = fmt::format("{}-{}", group_tag(a), c);
            const std::string cam = "camera-" + suffix;
            devices.push_back(make_device(cam, gw, kCameraMips, kPhoneRamMb, kPhoneBusyW, kPhoneIdleW,
                                          kCameraToAreaMs, "camera"));
            // The camera's own sensor: attached with no link delay.
            sensors.push_back(Sensor{"video-" + suffix, "RAW_VIDEO_STREAM", cam, 0,
                                     TransmitDistribution{distribution, kCameraIntervalMs}, kRawVideoMi,
                                     kRawVideoBytes});
        }
    }

    ApplicationSpec app;
    app.name = "intelligent-surveillance";
    app.sensor_types = {"RAW_VIDEO_STREAM"};
    app.modules = {
        module("Motion Detector", {rule("RAW_VIDEO_STREAM", "MOTION_VIDEO_STREAM")}),
        module("Object Detector", {rule("MOTION_VIDEO_STREAM", "DETECTED_OBJECT", kDetectedSelectivity),
                                   rule("MOTION_VIDEO_STREAM", "OBJECT_LOCATION")}),
        module("Object Tracker", {rule("OBJECT_LOCATION", "PTZ_PARAMS")}),
        module("User Interface"),
        module("PTZ Control"),
    };
    app.edges = {
        edge("RAW_VIDEO_STREAM", "Motion Detector", "RAW_VIDEO_STREAM", kRawVideoMi, kRawVideoBytes, Direction::up),
        edge("Motion Detector", "Object Detector", "MOTION_VIDEO_STREAM", kMotionMi, kMotionBytes, Direction::up),
        edge("Object Detector", "User Interface", "DETECTED_OBJECT", kDetectedMi, kDetectedBytes, Direction::up),
        edge("Object Detector", "Object Tracker", "OBJECT_LOCATION", kLocationMi, kLocationBytes, Direction::up),
        edge("Object Tracker", "PTZ Control", "PTZ_PARAMS", kPtzMi, kPtzBytes, Direction::down),
    };
    app.loops = {AppLoop{"camera-to-ptz",
                         {"RAW_VIDEO_STREAM", "Motion Detector", "Object Detector", "Object Tracker", "PTZ Control"}}};

    return BuiltScenario{PhysicalTopology(std::move(devices), std::move(sensors), {}),
                         build_application(std::move(app)),
                         {{"Motion Detector", "camera"}, {"PTZ Control", "camera"}}};
}

BuiltScenario build_scenario(const ScenarioSpec& spec) {
    if (spec.name == "eeg") return build_eeg(spec.config, spec.headset, spec.distribution, spec.state_period_ms);
    if (spec.name == "surveillance") return build_surveillance(spec.config, spec.distribution);
    throw ArgumentError(fmt::format("unknown scenario '{}' (known: eeg, surveillance)", spec.name));
}

namespace {

ScenarioResult simulate(BuiltScenario built, const std::string& policy_name, Duration duration, std::uint64_t seed,
                        const std::string& context) {
    if (duration <= Duration{}) throw ArgumentError("duration must be positive");
    const auto start = std::chrono::steady_clock::now();
    auto policy = PolicyRegistry::instance().create(policy_name);
    PlacementMap placement;
    try {
        placement = policy->place(built.app, built.topology, built.constraints);
    } catch (const PlacementError& e) {
        throw PlacementError(e.module(), e.residual_demand(), fmt::format("{}: {}", context, e.what()));
    }
    RuntimeConfig cfg;
    cfg.seed = seed;
    Simulation sim(std::move(built.topology), std::move(built.app), placement, cfg);
    sim.run_until(SimTime::zero() + duration);
    ScenarioResult result{sim.finalize(), std::move(placement), {}};
    result.timing.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    result.timing.peak_rss_kb = peak_rss_kb();
    result.report.labels["placement"] = policy_name;
    result.report.labels["seed"] = std::to_string(seed);
    return result;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioSpec& spec) {
    const std::string variant = spec.name == "eeg" ? headset_name(spec.headset) : "-";
    const std::string context =
        fmt::format("scenario {} config {} variant {} placement {}", spec.name, spec.config, variant, spec.placement);
    auto result = simulate(build_scenario(spec), spec.placement, spec.duration, spec.seed, context);
    auto& labels = result.report.labels;
    labels["scenario"] = spec.name;
    labels["config"] = std::to_string(spec.config);
    labels["variant"] = variant;
    labels["distribution"] = std::string(to_string(spec.distribution));
    if (spec.name == "eeg") labels["state_period_ms"] = fmt::format("{}", spec.state_period_ms);
    return result;
}

ScenarioResult run_custom(const PhysicalTopology& topology, const ApplicationGraph& app,
                          const std::vector<PlacementConstraint>& constraints, const std::string& placement,
                          Duration duration, std::uint64_t seed) {
    auto result = simulate(BuiltScenario{topology, app, constraints}, placement, duration, seed,
                           fmt::format("application {}", app.name()));
    result.report.labels["scenario"] = "custom";
    result.report.labels["application"] = app.name();
    return result;
}

}  // namespace fogsim
