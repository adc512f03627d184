#pragma once

// End-to-end drivers behind the command-line tool. Each driver has a pure
// compute function returning in-memory results and a write function that
// emits the CSV/JSON artifacts under an output directory.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cascade/lindblad.hpp"
#include "cascade/observables.hpp"

namespace cascade {

struct FitWindow {
    double start = 0.0;
    double end = 0.0;
};

struct ExperimentConfig {
    SystemParams system;
    PulseSpec pulse;
    TimeGrid grid{0.0, 2000.0, 0.5};
    TimeGrid map_grid{0.0, 1200.0, 4.0};
    std::vector<double> scan;         // pulse areas, rad
    std::vector<double> gate_starts;  // ps
    std::vector<double> loss_sweep;   // eta'_loss values for probe-loss
    std::string output_dir = "out";
    bool apply_jitter = true;

    FitWindow fit_first_peak{260.0, 400.0};
    FitWindow fit_second_peak{1000.0, 1600.0};
    FitWindow fit_diagonal{300.0, 800.0};
    double band_half_width = 30.0;  // ps, diagonal band of the G2 maps

    /// Fitted device parameters, 0..4pi scan in pi/8 steps, gates 0..600 ps.
    static ExperimentConfig defaults();

    void validate() const;
};

ExperimentConfig configFromJson(const nlohmann::json& j);
nlohmann::json configToJson(const ExperimentConfig& cfg);
ExperimentConfig loadConfig(const std::filesystem::path& path);

/// Worker count from CASCADE_WORKERS, else hardware concurrency.
unsigned workersFromEnvironment();

double g2Weight(const SystemParams& params);

// --- flux -------------------------------------------------------------------

struct FluxRun {
    FluxTrace in;
    FluxTrace out;
    FluxTrace inJitter;   // equal to `in` when jitter is off
    FluxTrace outJitter;  // equal to `out` when jitter is off
    // Fits of the detected output over the configured windows; empty when
    // the window holds no positive signal (e.g. zero pulse area).
    std::optional<FitResult> firstPeak;
    std::optional<FitResult> secondPeak;
};

FluxRun runFlux(const ExperimentConfig& cfg);

// --- scan -------------------------------------------------------------------

struct ScanRow {
    double area = 0.0;
    double n_in = 0.0;   // integrated input flux (photons)
    double n_out = 0.0;  // integrated output flux (photons)
    double g2_in = 0.0;  // NaN when the flux vanishes
    double g2_out = 0.0;
    double delta_g2 = 0.0;
};

/// Both generations at one pulse area; correlation maps are built
/// single-threaded unless `mapWorkers` says otherwise.
ScanRow scanRow(const ExperimentConfig& cfg, const SystemParams& system, double area,
                unsigned mapWorkers = 1);

/// Rows ordered as cfg.scan, areas distributed over `workers` threads.
std::vector<ScanRow> runScan(const ExperimentConfig& cfg, unsigned workers);

// --- g2 maps ----------------------------------------------------------------

struct MapRun {
    CorrelationMap in;
    CorrelationMap out;
    CorrelationMap inJitter;
    CorrelationMap outJitter;
    std::optional<FitResult> diagonalFit;        // raw output diagonal
    std::optional<FitResult> diagonalFitJitter;  // detected output diagonal
    double bandFractionIn = 0.0;  // raw maps
    double bandFractionOut = 0.0;
};

MapRun runG2Map(const ExperimentConfig& cfg, unsigned workers);

/// Share of the map integral within |t1 - t2| < halfWidth.
double diagonalBandFraction(const CorrelationMap& map, double halfWidth);

// --- gated statistics -------------------------------------------------------

struct GatedRow {
    double t_start = 0.0;
    double g2_in = 0.0;
    double g2_out = 0.0;
};

std::vector<GatedRow> runGated(const ExperimentConfig& cfg, unsigned workers);

// --- loss probe -------------------------------------------------------------

struct LossProbeRow {
    double eta_loss_prime = 0.0;
    double n_out = 0.0;
    double g2_out = 0.0;
    double shape_distance = 0.0;  // max |normalized flux - normalized reference flux|, 1/ps
};

struct LossProbe {
    std::vector<LossProbeRow> rows;
    double g2OutSpread = 0.0;  // (max - min) / max over the sweep
};

LossProbe runLossProbe(const ExperimentConfig& cfg, unsigned workers);

// --- artifact writers -------------------------------------------------------

/// Runs `command` (flux, scan, g2map, gated, probe-loss) and writes its files
/// plus manifest.json into cfg.output_dir. Returns the produced file names.
std::vector<std::string> runCommand(const std::string& command, const ExperimentConfig& cfg,
                                    unsigned workers);

}  // namespace cascade
