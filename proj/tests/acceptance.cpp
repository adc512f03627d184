// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Drives the same code paths as cascade-sim with default settings.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include <unistd.h>

#include "cascade/csv.hpp"
#include "cascade/experiments.hpp"
#include "oracles.hpp"

using namespace cascade;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const fs::path& workDir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("cascade_acceptance_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

unsigned workers() { return workersFromEnvironment(); }

PulseSpec withArea(double area) {
    PulseSpec p;
    p.area = area;
    return p;
}

oracle::Generator oracleGenerator(bool cascaded, const SystemParams& p, const PulseSpec& pulse) {
    auto build = [cascaded, p](double om) {
        return cascaded ? oracle::superCascaded(p, om) : oracle::superSingle(p, om);
    };
    return [q = oracle::QuadraticGenerator(build), pulse](double t) { return q(gaussianRabi(pulse, t)); };
}

double relDiff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

// Vertex of the parabola through (x-h, y0), (x, y1), (x+h, y2).
std::pair<double, double> vertex(double x, double h, double y0, double y1, double y2) {
    const double den = y0 - 2.0 * y1 + y2;
    const double off = den == 0.0 ? 0.0 : 0.5 * h * (y0 - y2) / den;
    const double val = y1 - 0.25 * (y0 - y2) * off / h;
    return {x + off, val};
}

// --- shared runs ------------------------------------------------------------

const std::vector<ScanRow>& scanRows() {
    static const std::vector<ScanRow> rows = [] {
        ExperimentConfig cfg = ExperimentConfig::defaults();
        cfg.output_dir = (workDir() / "scan").string();
        runCommand("scan", cfg, workers());
        const csv::Table t = csv::read(workDir() / "scan" / "rabi_scan.csv");
        std::vector<ScanRow> out;
        for (const auto& r : t.rows) out.push_back({r[0], r[1], r[2], r[3], r[4], r[5]});
        return out;
    }();
    return rows;
}

const ScanRow& rowAt(double area) {
    const auto& rows = scanRows();
    for (const auto& r : rows)
        if (std::abs(r.area - area) < 1e-9) return r;
    throw std::runtime_error(fmt("scan has no row at area %.6f", area));
}

// --- criteria ---------------------------------------------------------------

Outcome integrator() {
    const SystemParams p;
    const PulseSpec pulse;
    const double h = 0.1;
    const TimeGrid g(0.0, 2000.0, h);
    double worst = 0.0;
    for (bool cascaded : {false, true}) {
        const Liouvillian L(cascaded ? Liouvillian::Kind::Cascaded : Liouvillian::Kind::Single, p, pulse);
        const DensityMatrix rho0 = groundState(cascaded ? 2 : 1);
        const auto tr = propagate(L, rho0, g);
        const auto ref = oracle::magnusTrajectory(oracleGenerator(cascaded, p, pulse), rho0.matrix(),
                                                  0.0, h, g.steps());
        for (std::size_t i = 0; i < g.size(); ++i)
            worst = std::max(worst, maxAbsDiff(tr.states[i].matrix(), ref[i]));
    }

    // observables at dt = 0.5 and 0.25 ps
    ExperimentConfig coarse = ExperimentConfig::defaults();
    ExperimentConfig fine = coarse;
    fine.grid = TimeGrid(0.0, 2000.0, 0.25);
    coarse.apply_jitter = fine.apply_jitter = false;
    double drift = 0.0;
    for (double area : {pi, 2.0 * pi}) {
        const ScanRow a = scanRow(coarse, coarse.system, area, workers());
        const ScanRow b = scanRow(fine, fine.system, area, workers());
        for (auto [x, y] : {std::pair{a.n_in, b.n_in}, {a.n_out, b.n_out}, {a.g2_in, b.g2_in},
                            {a.g2_out, b.g2_out}})
            drift = std::max(drift, relDiff(x, y));
    }
    return {worst <= 1e-8 && drift <= 1e-6,
            fmt("max |rho_rk4 - rho_oracle| = %.2e (<= 1e-8); dt halving max rel change = %.2e (<= 1e-6)",
                worst, drift)};
}

Outcome analyticLimits() {
    const SystemParams p;
    const TimeGrid g(0.0, 2000.0, 0.5);

    double ground = 0.0;
    for (int n : {1, 2}) {
        const Liouvillian L(n == 1 ? Liouvillian::Kind::Single : Liouvillian::Kind::Cascaded, p, withArea(0.0));
        for (const auto& s : propagate(L, groundState(n), g).states)
            ground = std::max(ground, maxAbsDiff(s.matrix(), groundState(n).matrix()));
    }

    ComplexMatrix excited(2);
    excited(1, 1) = 1.0;
    double decay = 0.0;
    const auto tr = propagate(liouvillianSingle(p, withArea(0.0)), DensityMatrix(excited), g);
    for (std::size_t i = 0; i < g.size(); ++i)
        decay = std::max(decay, std::abs(tr.states[i].matrix()(1, 1).real() - std::exp(-p.Gamma * g.at(i))));

    SystemParams mirror = p;
    mirror.eta_re = 1.0;
    const auto trm = propagate(liouvillianCascaded(mirror, PulseSpec{}), groundState(2), g);
    const FluxTrace a = fluxFirst(trm, mirror), b = fluxSecond(trm, mirror);
    double mirrorDiff = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) mirrorDiff = std::max(mirrorDiff, std::abs(a.values[i] - b.values[i]));

    SystemParams cut = p;
    cut.eta_re = 0.0;
    cut.eta_loss_prime = 0.0;
    const auto trc = propagate(liouvillianCascaded(cut, PulseSpec{}), groundState(2), g);
    const auto trs = propagate(liouvillianSingle(cut, PulseSpec{}), groundState(1), g);
    const ComplexMatrix n2 = embed(ops::sigmaPlus() * ops::sigmaMinus(), 2, 2);
    double pop2 = 0.0, sys1 = 0.0;
    const FluxTrace f1 = fluxFirst(trc, cut), fs = fluxFirst(trs, cut);
    for (std::size_t i = 0; i < g.size(); ++i) {
        pop2 = std::max(pop2, std::abs(trc.states[i].expectation(n2)));
        sys1 = std::max(sys1, std::abs(f1.values[i] - fs.values[i]));
    }
    const bool ok = ground <= 1e-12 && decay <= 1e-8 && mirrorDiff <= 1e-10 && pop2 == 0.0 && sys1 <= 1e-12;
    return {ok, fmt("ground drift %.1e; decay err %.1e; mirror diff %.1e; eta_loss=0: P_e2 max %.1e, "
                    "emitter-1 flux vs single %.1e",
                    ground, decay, mirrorDiff, pop2, sys1)};
}

Outcome fluxStructure() {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.output_dir = (workDir() / "flux").string();
    runCommand("flux", cfg, workers());
    const csv::Table t = csv::read(workDir() / "flux" / "flux_out_jitter.csv");
    std::vector<std::pair<double, double>> maxima, minima;
    for (std::size_t i = 1; i + 1 < t.rows.size(); ++i) {
        const double y0 = t.rows[i - 1][1], y1 = t.rows[i][1], y2 = t.rows[i + 1][1];
        if (y1 > y0 && y1 >= y2) maxima.emplace_back(t.rows[i][0], y1);
        if (y1 < y0 && y1 <= y2) minima.emplace_back(t.rows[i][0], y1);
    }
    bool shape = maxima.size() == 2 && minima.size() == 1 && maxima[0].first < minima[0].first &&
                 minima[0].first < maxima[1].first;

    const auto fit = nlohmann::json::parse(slurp(workDir() / "flux" / "flux_fit.json"));
    if (fit["first_peak"].is_null() || fit["second_peak"].is_null())
        return {false, "peak fits failed"};
    const double tau1 = fit["first_peak"]["tau_ps"], tau2 = fit["second_peak"]["tau_ps"];
    const double life = 1.0 / cfg.system.Gamma;
    std::map<double, std::string> ordered;
    for (const auto& [tm, v] : maxima) ordered[tm] = "max";
    for (const auto& [tm, v] : minima) ordered[tm] = "min";
    std::string where = "extrema:";
    for (const auto& [tm, kind] : ordered) where += fmt(" %s@%.1f", kind.c_str(), tm);
    return {shape && tau1 < life && tau2 > life,
            fmt("%s ps; first-peak tau %.1f ps < %.0f, second-peak tau %.1f ps > %.0f", where.c_str(), tau1,
                life, tau2, life)};
}

Outcome signFlip() {
    const ScanRow& a = rowAt(pi);
    const ScanRow& b = rowAt(2.0 * pi);
    return {a.delta_g2 > 0.0 && b.delta_g2 < 0.0,
            fmt("pi: g2_in %.4f g2_out %.4f delta %+.4f; 2pi: g2_in %.4f g2_out %.4f delta %+.4f", a.g2_in,
                a.g2_out, a.delta_g2, b.g2_in, b.g2_out, b.delta_g2)};
}

Outcome rabiStructure() {
    const auto& rows = scanRows();
    const double h = rows[1].area - rows[0].area;
    auto refine = [&](std::size_t i) {
        return vertex(rows[i].area, h, rows[i - 1].n_in, rows[i].n_in, rows[i + 1].n_in);
    };
    std::size_t top = 1;
    for (std::size_t i = 1; i + 1 < rows.size(); ++i)
        if (rows[i].n_in > rows[top].n_in) top = i;
    // local extrema nearest 2pi and 3pi
    std::size_t low = 0, third = 0;
    for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
        const bool isMin = rows[i].n_in < rows[i - 1].n_in && rows[i].n_in <= rows[i + 1].n_in;
        const bool isMax = rows[i].n_in > rows[i - 1].n_in && rows[i].n_in >= rows[i + 1].n_in;
        if (isMin && (low == 0 || std::abs(rows[i].area - 2 * pi) < std::abs(rows[low].area - 2 * pi))) low = i;
        if (isMax && (third == 0 || std::abs(rows[i].area - 3 * pi) < std::abs(rows[third].area - 3 * pi))) third = i;
    }
    if (low == 0 || third == 0 || third == top) return {false, "no minimum near 2pi or second maximum near 3pi"};
    const auto [aTop, nTop] = refine(top);
    const auto [aLow, nLow] = refine(low);
    const auto [aThird, nThird] = refine(third);
    const bool ok = std::abs(aTop / pi - 1.0) <= 0.1 && std::abs(aLow / (2 * pi) - 1.0) <= 0.1 &&
                    std::abs(aThird / (3 * pi) - 1.0) <= 0.1 && nThird < nTop;
    return {ok, fmt("n_in peak %.4f at %.3f pi; minimum %.4f at %.3f pi; 3pi peak %.4f at %.3f pi", nTop,
                    aTop / pi, nLow, aLow / pi, nThird, aThird / pi)};
}

// Both map criteria share one 2pi run.
const nlohmann::json& diagonalFit() {
    static const nlohmann::json j = [] {
        ExperimentConfig cfg = ExperimentConfig::defaults();
        cfg.pulse.area = 2.0 * pi;
        cfg.output_dir = (workDir() / "g2map").string();
        runCommand("g2map", cfg, workers());
        return nlohmann::json::parse(slurp(workDir() / "g2map" / "diagonal_fit.json"));
    }();
    return j;
}

Outcome stimulatedDiagonal() {
    const auto& j = diagonalFit();
    if (j["raw"].is_null()) return {false, "diagonal fit failed"};
    const double life = 227.0;
    const double tau = j["raw"]["tau_ps"];
    const double tauJ = j["jitter"].is_null() ? NAN : j["jitter"]["tau_ps"].get<double>();
    return {tau >= 0.4 * life && tau <= 0.6 * life,
            fmt("output diagonal tau %.1f ps in [%.1f, %.1f] (jittered map: %.1f ps)", tau, 0.4 * life, 0.6 * life,
                tauJ)};
}

// Frozen from the default 2pi run (0.0929); regression guard for the raw
// first-generation map with a 30 ps half-width band.
constexpr double kInputBandThreshold = 0.0930;

Outcome inputDiagonal() {
    const csv::Table in = csv::read(workDir() / "g2map" / "g2map_in.csv");
    double mx = 0.0, diag = 0.0;
    for (const auto& r : in.rows) {
        mx = std::max(mx, r[2]);
        if (r[0] == r[1]) diag = std::max(diag, std::abs(r[2]));
    }
    // the pi map as well
    ExperimentConfig cfg = ExperimentConfig::defaults();
    const MapRun run = runG2Map(cfg, workers());
    double diagPi = 0.0;
    for (std::size_t i = 0; i < run.in.size(); ++i) diagPi = std::max(diagPi, std::abs(run.in(i, i)));

    const auto& j = diagonalFit();
    const double bandIn = j["band_fraction_in"], bandOut = j["band_fraction_out"];
    const bool ok = diag <= 1e-12 * mx && diagPi <= 1e-12 * run.in.maxValue() && bandIn < kInputBandThreshold &&
                    bandIn < bandOut;
    return {ok, fmt("first-generation diagonal max %.1e (2pi), %.1e (pi); band |dt|<30 ps: input %.4f < %.4f, "
                    "output %.4f",
                    diag, diagPi, bandIn, kInputBandThreshold, bandOut)};
}

Outcome gated() {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    const double before = cfg.pulse.t_c - 2.0 * cfg.pulse.tau_p;
    const double after = cfg.pulse.t_c + 2.0 * cfg.pulse.tau_p;
    cfg.gate_starts = {0.0, before, after};
    cfg.output_dir = (workDir() / "gated").string();
    runCommand("gated", cfg, workers());
    const csv::Table t = csv::read(workDir() / "gated" / "gated_g2.csv");
    const double dropIn = 1.0 - t.rows[2][1] / t.rows[1][1];
    const double dropOut = 1.0 - t.rows[2][2] / t.rows[1][2];
    return {dropIn > dropOut,
            fmt("g2_in %.4f -> %.4f (drop %.1f%%), g2_out %.4f -> %.4f (drop %.1f%%) for t_start %.0f -> %.0f ps",
                t.rows[1][1], t.rows[2][1], 100 * dropIn, t.rows[1][2], t.rows[2][2], 100 * dropOut, before,
                after)};
}

Outcome scalarFormulas() {
    const double a = indistinguishability(0.900, 0.0173);
    const double b = indistinguishability(0.704, 0.034);
    const double ra = std::round(a * 1e4) / 1e4, rb = std::round(b * 1e4) / 1e4;
    return {ra == 0.9334 && rb == 0.7640, fmt("I(0.900, 0.0173) = %.6f; I(0.704, 0.034) = %.6f", a, b)};
}

Outcome determinism() {
    std::string failed;
    int compared = 0;
    for (const std::string command : {"flux", "scan", "g2map", "gated", "probe-loss"}) {
        ExperimentConfig cfg = ExperimentConfig::defaults();
        if (command == "g2map") cfg.pulse.area = 2.0 * pi;
        std::map<std::string, std::string> first;
        // the scan is long; its first run is the one behind the scan criteria
        if (command == "scan") {
            scanRows();
            for (const auto& f : {"rabi_scan.csv", "manifest.json"}) first[f] = slurp(workDir() / "scan" / f);
        }
        for (int pass = command == "scan" ? 1 : 0; pass < 2; ++pass) {
            cfg.output_dir = (workDir() / (command == "scan" ? "scan" : "det_" + command)).string();
            const auto files = runCommand(command, cfg, pass == 0 ? workers() : 1);
            for (const auto& f : files) {
                const std::string bytes = slurp(fs::path(cfg.output_dir) / f);
                if (pass == 0) {
                    first[f] = bytes;
                } else {
                    ++compared;
                    if (bytes != first[f]) failed += " " + command + "/" + f;
                }
            }
        }
    }
    return {failed.empty(), failed.empty() ? fmt("%d files byte-identical across repeated runs", compared)
                                           : "differs:" + failed};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"integrator correctness", integrator},
        {"analytic limits", analyticLimits},
        {"output flux structure", fluxStructure},
        {"photon-statistics sign flip", signFlip},
        {"Rabi structure", rabiStructure},
        {"stimulated-emission diagonal", stimulatedDiagonal},
        {"input-map diagonal suppression", inputDiagonal},
        {"gated statistics", gated},
        {"scalar formulas", scalarFormulas},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failures;
        std::printf("criterion %zu %s %s: %s [%.1f s]\n", i + 1, o.pass ? "PASS" : "FAIL",
                    criteria[i].first.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    fs::remove_all(workDir());
    return failures == 0 ? 0 : 1;
}
