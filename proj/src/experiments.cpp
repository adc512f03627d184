#include "cascade/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "cascade/csv.hpp"

namespace cascade {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs task(i) for i in [0, n) on up to `workers` threads; rethrows the
// first failure after all threads have joined.
template <typename Task>
void parallelFor(std::size_t n, unsigned workers, Task task) {
    workers = static_cast<unsigned>(std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            task(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failureLock;
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        task(i);
                    } catch (...) {
                        std::lock_guard lock(failureLock);
                        if (!failure) {
                            failure = std::current_exception();
                        }
                    }
                }
            });
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

void requireCfg(bool ok, const std::string& what) {
    if (!ok) {
        throw InvalidParameter("config: " + what);
    }
}

bool onGrid(double t, const TimeGrid& g) {
    const double x = (t - g.tStart()) / g.dt();
    return std::abs(x - std::round(x)) <= 1e-9 * std::max(1.0, std::abs(x));
}

PulseSpec withArea(PulseSpec p, double area) {
    p.area = area;
    return p;
}

std::optional<FitResult> tryFit(const TimeSeries& s, const FitWindow& w) {
    try {
        return fitMonoexponential(s, w.start, w.end);
    } catch (const InvalidParameter&) {
        return std::nullopt;
    }
}

double g2OrNaN(const CorrelationMap& map, const FluxTrace& flux) {
    try {
        return g2Bar(map, flux);
    } catch (const UndefinedStatistics&) {
        return kNaN;
    }
}

// Everything one pulse area produces for both generations.
struct AreaResult {
    FluxTrace in;   // detected (jittered when configured), main grid
    FluxTrace out;
    CorrelationMap mapIn;  // detected, map grid
    CorrelationMap mapOut;
    FluxTrace axisIn;  // detected flux on the map grid
    FluxTrace axisOut;
};

AreaResult simulateArea(const ExperimentConfig& cfg, const SystemParams& system, double area,
                        unsigned mapWorkers) {
    const PulseSpec pulse = withArea(cfg.pulse, area);
    const Liouvillian single = liouvillianSingle(system, pulse);
    const Liouvillian cascaded = liouvillianCascaded(system, pulse);
    const Trajectory trajIn = propagate(single, groundState(1), cfg.grid);
    const Trajectory trajOut = propagate(cascaded, groundState(2), cfg.grid);
    const FluxTrace rawIn = fluxFirst(trajIn, system);
    const FluxTrace rawOut = fluxSecond(trajOut, system);

    const double w = g2Weight(system);
    CorrelationMap mapIn = correlationMap(single, ops::sigmaMinus(), w, groundState(1),
                                          cfg.map_grid, cfg.grid.dt(), mapWorkers);
    CorrelationMap mapOut = correlationMap(cascaded, collectiveJump(system), w, groundState(2),
                                           cfg.map_grid, cfg.grid.dt(), mapWorkers);
    FluxTrace axisIn = restrictTo(rawIn, cfg.map_grid);
    FluxTrace axisOut = restrictTo(rawOut, cfg.map_grid);

    if (!cfg.apply_jitter) {
        return {rawIn, rawOut, std::move(mapIn), std::move(mapOut), std::move(axisIn),
                std::move(axisOut)};
    }
    const double fwhm = system.jitter_fwhm;
    return {convolveJitter(rawIn, fwhm),   convolveJitter(rawOut, fwhm),
            convolveJitter(mapIn, fwhm),   convolveJitter(mapOut, fwhm),
            convolveJitter(axisIn, fwhm),  convolveJitter(axisOut, fwhm)};
}

double clampTiny(double v) { return (v < 0.0 && v > -1e-12) ? 0.0 : v; }

csv::Table fluxTable(const FluxTrace& f) {
    csv::Table t{{"t_ps", "flux_per_ps"}, {}};
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        t.rows.push_back({f.grid.at(i), clampTiny(f.values[i])});
    }
    return t;
}

csv::Table mapTable(const CorrelationMap& m) {
    csv::Table t{{"t1_ps", "t2_ps", "g2"}, {}};
    t.rows.reserve(m.size() * m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m.size(); ++j) {
            t.rows.push_back({m.axis.at(i), m.axis.at(j), clampTiny(m(i, j))});
        }
    }
    return t;
}

json fitJson(const std::optional<FitResult>& f) {
    if (!f) {
        return nullptr;
    }
    return json{{"amplitude", f->amplitude}, {"tau_ps", f->tau}, {"rms_residual", f->rmsResidual}};
}

json windowJson(const FitWindow& w) { return json::array({w.start, w.end}); }

json gridJson(const TimeGrid& g) {
    return json{{"t_start", g.tStart()}, {"t_end", g.tEnd()}, {"dt", g.dt()}};
}

TimeGrid gridFromJson(const json& j, const TimeGrid& fallback) {
    for (const auto& [key, _] : j.items()) {
        requireCfg(key == "t_start" || key == "t_end" || key == "dt", "unknown grid key '" + key + "'");
    }
    return TimeGrid(j.value("t_start", fallback.tStart()), j.value("t_end", fallback.tEnd()),
                    j.value("dt", fallback.dt()));
}

FitWindow windowFromJson(const json& j) {
    requireCfg(j.is_array() && j.size() == 2, "fit windows are [start, end] pairs");
    return FitWindow{j[0].get<double>(), j[1].get<double>()};
}

void writeJson(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << j.dump(2) << '\n';
}

}  // namespace

// --- configuration ----------------------------------------------------------

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig cfg;
    for (int k = 0; k <= 32; ++k) {
        cfg.scan.push_back(k * std::numbers::pi / 8.0);
    }
    for (int k = 0; k <= 24; ++k) {
        cfg.gate_starts.push_back(25.0 * k);
    }
    cfg.loss_sweep = {0.25, 0.5, 0.75, 1.0};
    return cfg;
}

void ExperimentConfig::validate() const {
    system.validate();
    pulse.validate();
    requireCfg(map_grid.tStart() == grid.tStart(), "map_grid must start where grid starts");
    requireCfg(map_grid.tEnd() <= grid.tEnd() + 1e-9 * grid.dt(), "map_grid must end within grid");
    requireCfg(onGrid(map_grid.tEnd(), grid), "map_grid end must lie on grid");
    const double ratio = map_grid.dt() / grid.dt();
    requireCfg(ratio >= 1.0 - 1e-12 && std::abs(ratio - std::round(ratio)) <= 1e-9 * ratio,
               "map_grid dt must be a multiple of grid dt");
    requireCfg(map_grid.dt() <= pulse.tau_p / 5.0 + 1e-12,
               "map_grid dt must resolve the pulse (dt <= tau_p / 5)");
    for (double a : scan) {
        requireCfg(std::isfinite(a) && a >= 0.0, "scan areas must be non-negative");
    }
    for (double t : gate_starts) {
        requireCfg(t >= map_grid.tStart() && t < map_grid.tEnd(), "gate_starts must lie inside map_grid");
    }
    for (double e : loss_sweep) {
        requireCfg(e > 0.0 && e <= 1.0, "loss_sweep values must lie in (0, 1]");
    }
    for (const FitWindow* w : {&fit_first_peak, &fit_second_peak, &fit_diagonal}) {
        requireCfg(w->end > w->start, "fit windows need start < end");
    }
    requireCfg(band_half_width > 0.0, "band_half_width must be positive");
}

ExperimentConfig configFromJson(const json& j) {
    requireCfg(j.is_object(), "top level must be an object");
    ExperimentConfig cfg = ExperimentConfig::defaults();
    static const std::set<std::string> known = {
        "system", "pulse", "grid", "map_grid", "scan", "gate_starts", "loss_sweep",
        "output_dir", "apply_jitter", "fit_windows", "band_half_width"};
    for (const auto& [key, _] : j.items()) {
        requireCfg(known.contains(key), "unknown key '" + key + "'");
    }
    try {
        if (j.contains("system")) {
            const json& s = j.at("system");
            static const std::set<std::string> keys = {"Gamma", "gamma_d", "B", "delta_L",
                                                       "eta_re", "eta_loss_prime", "jitter_fwhm"};
            for (const auto& [key, _] : s.items()) {
                requireCfg(keys.contains(key), "unknown system key '" + key + "'");
            }
            SystemParams& p = cfg.system;
            p.Gamma = s.value("Gamma", p.Gamma);
            p.gamma_d = s.value("gamma_d", p.gamma_d);
            p.B = s.value("B", p.B);
            p.delta_L = s.value("delta_L", p.delta_L);
            p.eta_re = s.value("eta_re", p.eta_re);
            p.eta_loss_prime = s.value("eta_loss_prime", p.eta_loss_prime);
            p.jitter_fwhm = s.value("jitter_fwhm", p.jitter_fwhm);
        }
        if (j.contains("pulse")) {
            const json& s = j.at("pulse");
            for (const auto& [key, _] : s.items()) {
                requireCfg(key == "area" || key == "tau_p" || key == "t_c",
                           "unknown pulse key '" + key + "'");
            }
            cfg.pulse.area = s.value("area", cfg.pulse.area);
            cfg.pulse.tau_p = s.value("tau_p", cfg.pulse.tau_p);
            cfg.pulse.t_c = s.value("t_c", cfg.pulse.t_c);
        }
        if (j.contains("grid")) {
            cfg.grid = gridFromJson(j.at("grid"), cfg.grid);
        }
        if (j.contains("map_grid")) {
            cfg.map_grid = gridFromJson(j.at("map_grid"), cfg.map_grid);
        }
        if (j.contains("scan")) {
            cfg.scan = j.at("scan").get<std::vector<double>>();
        }
        if (j.contains("gate_starts")) {
            cfg.gate_starts = j.at("gate_starts").get<std::vector<double>>();
        }
        if (j.contains("loss_sweep")) {
            cfg.loss_sweep = j.at("loss_sweep").get<std::vector<double>>();
        }
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
        cfg.apply_jitter = j.value("apply_jitter", cfg.apply_jitter);
        cfg.band_half_width = j.value("band_half_width", cfg.band_half_width);
        if (j.contains("fit_windows")) {
            const json& w = j.at("fit_windows");
            for (const auto& [key, _] : w.items()) {
                requireCfg(key == "first_peak" || key == "second_peak" || key == "diagonal",
                           "unknown fit window '" + key + "'");
            }
            if (w.contains("first_peak")) cfg.fit_first_peak = windowFromJson(w.at("first_peak"));
            if (w.contains("second_peak")) cfg.fit_second_peak = windowFromJson(w.at("second_peak"));
            if (w.contains("diagonal")) cfg.fit_diagonal = windowFromJson(w.at("diagonal"));
        }
    } catch (const json::exception& e) {
        throw InvalidParameter(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

json configToJson(const ExperimentConfig& cfg) {
    const SystemParams& p = cfg.system;
    return json{
        {"system",
         {{"Gamma", p.Gamma},
          {"gamma_d", p.gamma_d},
          {"B", p.B},
          {"delta_L", p.delta_L},
          {"eta_re", p.eta_re},
          {"eta_loss_prime", p.eta_loss_prime},
          {"jitter_fwhm", p.jitter_fwhm}}},
        {"pulse", {{"area", cfg.pulse.area}, {"tau_p", cfg.pulse.tau_p}, {"t_c", cfg.pulse.t_c}}},
        {"grid", gridJson(cfg.grid)},
        {"map_grid", gridJson(cfg.map_grid)},
        {"scan", cfg.scan},
        {"gate_starts", cfg.gate_starts},
        {"loss_sweep", cfg.loss_sweep},
        {"output_dir", cfg.output_dir},
        {"apply_jitter", cfg.apply_jitter},
        {"band_half_width", cfg.band_half_width},
        {"fit_windows",
         {{"first_peak", windowJson(cfg.fit_first_peak)},
          {"second_peak", windowJson(cfg.fit_second_peak)},
          {"diagonal", windowJson(cfg.fit_diagonal)}}},
    };
}

ExperimentConfig loadConfig(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidParameter("config " + path.string() + ": " + e.what());
    }
    return configFromJson(j);
}

unsigned workersFromEnvironment() {
    if (const char* env = std::getenv("CASCADE_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) {
            return static_cast<unsigned>(v);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

double g2Weight(const SystemParams& params) { return 0.25 * params.Gamma * params.Gamma; }

// --- drivers ----------------------------------------------------------------

FluxRun runFlux(const ExperimentConfig& cfg) {
    cfg.validate();
    const SystemParams& system = cfg.system;
    const Trajectory trajIn = propagate(liouvillianSingle(system, cfg.pulse), groundState(1), cfg.grid);
    const Trajectory trajOut =
        propagate(liouvillianCascaded(system, cfg.pulse), groundState(2), cfg.grid);

    FluxTrace in = fluxFirst(trajIn, system);
    FluxTrace out = fluxSecond(trajOut, system);
    FluxTrace inJitter = cfg.apply_jitter ? convolveJitter(in, system.jitter_fwhm) : in;
    FluxTrace outJitter = cfg.apply_jitter ? convolveJitter(out, system.jitter_fwhm) : out;
    auto firstPeak = tryFit(outJitter, cfg.fit_first_peak);
    auto secondPeak = tryFit(outJitter, cfg.fit_second_peak);
    return FluxRun{std::move(in),        std::move(out), std::move(inJitter),
                   std::move(outJitter), firstPeak,      secondPeak};
}

ScanRow scanRow(const ExperimentConfig& cfg, const SystemParams& system, double area,
                unsigned mapWorkers) {
    const AreaResult r = simulateArea(cfg, system, area, mapWorkers);
    ScanRow row;
    row.area = area;
    row.n_in = integrate(r.in);
    row.n_out = integrate(r.out);
    row.g2_in = g2OrNaN(r.mapIn, r.axisIn);
    row.g2_out = g2OrNaN(r.mapOut, r.axisOut);
    row.delta_g2 = row.g2_out - row.g2_in;
    return row;
}

std::vector<ScanRow> runScan(const ExperimentConfig& cfg, unsigned workers) {
    cfg.validate();
    if (cfg.scan.empty()) {
        throw InvalidParameter("scan: no pulse areas configured");
    }
    std::vector<ScanRow> rows(cfg.scan.size());
    parallelFor(cfg.scan.size(), workers,
                [&](std::size_t i) { rows[i] = scanRow(cfg, cfg.system, cfg.scan[i], 1); });
    return rows;
}

double diagonalBandFraction(const CorrelationMap& map, double halfWidth) {
    double band = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < map.size(); ++i) {
        for (std::size_t j = 0; j < map.size(); ++j) {
            const double v = map(i, j);
            total += v;
            if (std::abs(map.axis.at(i) - map.axis.at(j)) < halfWidth) {
                band += v;
            }
        }
    }
    return total > 0.0 ? band / total : kNaN;
}

MapRun runG2Map(const ExperimentConfig& cfg, unsigned workers) {
    cfg.validate();
    const SystemParams& system = cfg.system;
    const double w = g2Weight(system);
    CorrelationMap in = correlationMap(liouvillianSingle(system, cfg.pulse), ops::sigmaMinus(), w,
                                       groundState(1), cfg.map_grid, cfg.grid.dt(), workers);
    CorrelationMap out = correlationMap(liouvillianCascaded(system, cfg.pulse),
                                        collectiveJump(system), w, groundState(2), cfg.map_grid,
                                        cfg.grid.dt(), workers);
    CorrelationMap inJitter = cfg.apply_jitter ? convolveJitter(in, system.jitter_fwhm) : in;
    CorrelationMap outJitter = cfg.apply_jitter ? convolveJitter(out, system.jitter_fwhm) : out;
    const auto fit = tryFit(diagonal(out), cfg.fit_diagonal);
    const auto fitJitter = tryFit(diagonal(outJitter), cfg.fit_diagonal);
    const double bandIn = diagonalBandFraction(in, cfg.band_half_width);
    const double bandOut = diagonalBandFraction(out, cfg.band_half_width);
    return MapRun{std::move(in), std::move(out), std::move(inJitter), std::move(outJitter),
                  fit,           fitJitter,      bandIn,              bandOut};
}

std::vector<GatedRow> runGated(const ExperimentConfig& cfg, unsigned workers) {
    cfg.validate();
    const AreaResult r = simulateArea(cfg, cfg.system, cfg.pulse.area, workers);
    std::vector<GatedRow> rows;
    for (double t : cfg.gate_starts) {
        rows.push_back({t, g2BarGated(r.mapIn, r.axisIn, t), g2BarGated(r.mapOut, r.axisOut, t)});
    }
    return rows;
}

LossProbe runLossProbe(const ExperimentConfig& cfg, unsigned workers) {
    cfg.validate();
    if (cfg.loss_sweep.empty()) {
        throw InvalidParameter("probe-loss: loss_sweep is empty");
    }
    auto shapeOf = [&](const SystemParams& system) {
        FluxTrace f = fluxSecond(
            propagate(liouvillianCascaded(system, cfg.pulse), groundState(2), cfg.grid), system);
        if (cfg.apply_jitter) {
            f = convolveJitter(f, system.jitter_fwhm);
        }
        const double n = integrate(f);
        for (double& v : f.values) {
            v = n > 0.0 ? v / n : 0.0;
        }
        return f;
    };
    SystemParams reference = cfg.system;
    reference.eta_loss_prime = 1.0;
    const FluxTrace referenceShape = shapeOf(reference);

    LossProbe probe;
    probe.rows.resize(cfg.loss_sweep.size());
    parallelFor(cfg.loss_sweep.size(), workers, [&](std::size_t i) {
        SystemParams system = cfg.system;
        system.eta_loss_prime = cfg.loss_sweep[i];
        const ScanRow row = scanRow(cfg, system, cfg.pulse.area, 1);
        const FluxTrace shape = shapeOf(system);
        double distance = 0.0;
        for (std::size_t k = 0; k < shape.values.size(); ++k) {
            distance = std::max(distance, std::abs(shape.values[k] - referenceShape.values[k]));
        }
        probe.rows[i] = {system.eta_loss_prime, row.n_out, row.g2_out, distance};
    });
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& r : probe.rows) {
        lo = std::min(lo, r.g2_out);
        hi = std::max(hi, r.g2_out);
    }
    probe.g2OutSpread = hi > 0.0 ? (hi - lo) / hi : kNaN;
    return probe;
}

// --- artifacts --------------------------------------------------------------

std::vector<std::string> runCommand(const std::string& command, const ExperimentConfig& cfg,
                                    unsigned workers) {
    cfg.validate();
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    std::vector<std::string> files;
    auto emitCsv = [&](const std::string& name, const csv::Table& t) {
        csv::write(dir / name, t);
        files.push_back(name);
    };
    auto emitJson = [&](const std::string& name, const json& j) {
        writeJson(dir / name, j);
        files.push_back(name);
    };

    if (command == "flux") {
        const FluxRun run = runFlux(cfg);
        emitCsv("flux_in.csv", fluxTable(run.in));
        emitCsv("flux_out.csv", fluxTable(run.out));
        if (cfg.apply_jitter) {
            emitCsv("flux_in_jitter.csv", fluxTable(run.inJitter));
            emitCsv("flux_out_jitter.csv", fluxTable(run.outJitter));
        }
        // Each detected trace divided by its own maximum.
        csv::Table normalized{{"t_ps", "flux_in_normalized", "flux_out_normalized"}, {}};
        const double maxIn = *std::max_element(run.inJitter.values.begin(), run.inJitter.values.end());
        const double maxOut = *std::max_element(run.outJitter.values.begin(), run.outJitter.values.end());
        for (std::size_t i = 0; i < run.in.values.size(); ++i) {
            normalized.rows.push_back({run.in.grid.at(i),
                                       maxIn > 0.0 ? clampTiny(run.inJitter.values[i]) / maxIn : 0.0,
                                       maxOut > 0.0 ? clampTiny(run.outJitter.values[i]) / maxOut : 0.0});
        }
        emitCsv("flux_normalized.csv", normalized);
        emitJson("flux_fit.json", json{{"n_in", integrate(run.inJitter)},
                                       {"n_out", integrate(run.outJitter)},
                                       {"first_peak", fitJson(run.firstPeak)},
                                       {"first_peak_window", windowJson(cfg.fit_first_peak)},
                                       {"second_peak", fitJson(run.secondPeak)},
                                       {"second_peak_window", windowJson(cfg.fit_second_peak)},
                                       {"jitter_applied", cfg.apply_jitter}});
    } else if (command == "scan") {
        csv::Table t{{"area_rad", "n_in", "n_out", "g2_in", "g2_out", "delta_g2"}, {}};
        for (const ScanRow& r : runScan(cfg, workers)) {
            t.rows.push_back({r.area, r.n_in, r.n_out, r.g2_in, r.g2_out, r.delta_g2});
        }
        emitCsv("rabi_scan.csv", t);
    } else if (command == "g2map") {
        const MapRun run = runG2Map(cfg, workers);
        emitCsv("g2map_in.csv", mapTable(run.in));
        emitCsv("g2map_out.csv", mapTable(run.out));
        if (cfg.apply_jitter) {
            emitCsv("g2map_in_jitter.csv", mapTable(run.inJitter));
            emitCsv("g2map_out_jitter.csv", mapTable(run.outJitter));
        }
        emitJson("diagonal_fit.json",
                 json{{"raw", fitJson(run.diagonalFit)},
                      {"jitter", cfg.apply_jitter ? fitJson(run.diagonalFitJitter) : json(nullptr)},
                      {"window", windowJson(cfg.fit_diagonal)},
                      {"band_half_width", cfg.band_half_width},
                      {"band_fraction_in", run.bandFractionIn},
                      {"band_fraction_out", run.bandFractionOut}});
    } else if (command == "gated") {
        csv::Table t{{"t_start_ps", "g2_in_gated", "g2_out_gated"}, {}};
        for (const GatedRow& r : runGated(cfg, workers)) {
            t.rows.push_back({r.t_start, r.g2_in, r.g2_out});
        }
        emitCsv("gated_g2.csv", t);
    } else if (command == "probe-loss") {
        const LossProbe probe = runLossProbe(cfg, workers);
        csv::Table t{{"eta_loss_prime", "n_out", "g2_out", "shape_distance"}, {}};
        for (const LossProbeRow& r : probe.rows) {
            t.rows.push_back({r.eta_loss_prime, r.n_out, r.g2_out, r.shape_distance});
        }
        emitCsv("loss_probe.csv", t);
        emitJson("loss_probe_summary.json", json{{"g2_out_relative_spread", probe.g2OutSpread}});
    } else {
        throw InvalidParameter("unknown command '" + command + "'");
    }

    std::vector<std::string> listed = files;
    listed.push_back("manifest.json");
    writeJson(dir / "manifest.json",
              json{{"command", command}, {"files", listed}, {"config", configToJson(cfg)}});
    return listed;
}

}  // namespace cascade
