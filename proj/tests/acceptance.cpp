// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "qdf/analysis.hpp"
#include "qdf/correlations.hpp"
#include "qdf/dynamics.hpp"
#include "qdf/error.hpp"
#include "qdf/photostream.hpp"
#include "qdf/regression.hpp"
#include "qdf/time_grid.hpp"

using namespace qdf;

namespace {

constexpr double kPi = 3.141592653589793;

int failures = 0;

void report(int id, bool pass, const std::string& what) {
    std::printf("[%s] %2d  %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Every filtered g2 reported below, with its epsilon and truncation checks.
struct Point {
    double g2{0.0};
    double eps_change{0.0};
    double trunc_change{0.0};
};

struct Ledger {
    double worst_eps{0.0};
    double worst_trunc{0.0};
    std::string worst_eps_at, worst_trunc_at;
    void add(const Point& p, const std::string& tag) {
        if (p.eps_change > worst_eps) worst_eps = p.eps_change, worst_eps_at = tag;
        if (p.trunc_change > worst_trunc) worst_trunc = p.trunc_change, worst_trunc_at = tag;
    }
} checks;

FilterOptions plain() {
    FilterOptions o;
    o.check_convergence = false;
    return o;
}

Point evaluate(const SystemModel& m, const Observed& obs, SensorConfig s, const std::string& tag) {
    Point p;
    p.g2 = filtered_g2_zero(m, obs, s, plain()).g2;
    SensorConfig half = s;
    half.coupling *= 0.5;
    p.eps_change = std::abs(filtered_g2_zero(m, obs, half, plain()).g2 - p.g2) / p.g2;
    SensorConfig more = s;
    more.truncation = 3;
    p.trunc_change = std::abs(filtered_g2_zero(m, obs, more, plain()).g2 - p.g2) / p.g2;
    checks.add(p, tag);
    return p;
}

SystemModel two_level(double tau) {
    GaussianPulse p;
    p.length = tau;
    p.area = kPi;
    return build_two_level({}, p);
}

std::map<std::pair<double, double>, Point> two_level_cache;

double tl(double tau, double gamma) {
    const auto key = std::make_pair(tau, gamma);
    auto it = two_level_cache.find(key);
    if (it == two_level_cache.end()) {
        SensorConfig s;
        s.bandwidth = gamma;
        it = two_level_cache
                 .emplace(key, evaluate(two_level(tau), std::string("sigma"), s,
                                        fmt("two-level tau=%g Gamma=%g", tau, gamma)))
                 .first;
    }
    return it->second.g2;
}

// ---------------------------------------------------------------------------

void criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> taus = {0.02, 0.05, 0.1, 0.2};
    double best_tau = taus.front();
    for (double tau : taus)
        if (tl(tau, 1.0) < tl(best_tau, 1.0)) best_tau = tau;
    const double ratio = tl(best_tau, 20.0) / tl(best_tau, 1.0);
    const double secs = seconds_since(t0);
    report(1, ratio >= 4.0 && ratio <= 12.0 && secs < 600.0,
           fmt("filter gain at tau*=%g: g2(20)/g2(1) = %.4g / %.4g = %.3f, want [4, 12]; %.0f s",
               best_tau, tl(best_tau, 20.0), tl(best_tau, 1.0), ratio, secs));
}

void criterion2() {
    const double a = tl(1.0, 0.1), b = tl(1.0, 1.0), c = tl(1.0, 20.0);
    const double lo = std::min({a, b, c}), hi = std::max({a, b, c});
    const double spread = hi / lo - 1.0;
    report(2, spread <= 0.2,
           fmt("long-pulse plateau tau=1: g2(0.1, 1, 20) = %.4g, %.4g, %.4g; spread %.1f%%, want <= 20%%",
               a, b, c, 100.0 * spread));
}

void criterion3() {
    const std::vector<double> gammas = {0.05, 0.1, 0.2, 0.5, 1, 2, 5, 10, 20, 50, 100};
    bool pass = true;
    std::string detail;
    for (double tau : {0.02, 0.05, 0.2}) {
        std::vector<double> g;
        for (double gm : gammas) g.push_back(tl(tau, gm));
        const auto kmin = static_cast<std::size_t>(std::min_element(g.begin(), g.end()) - g.begin());
        // Walking down from Gamma = 100 to the minimum, no step may rise by more than 2%.
        bool monotone = true;
        for (std::size_t k = kmin; k + 1 < g.size(); ++k)
            if (g[k] > 1.02 * g[k + 1]) monotone = false;
        const double plateau = std::abs(g[1] - g[0]) / std::min(g[0], g[1]);
        pass = pass && monotone && plateau <= 0.3;
        detail += fmt(" tau=%g: min at Gamma=%g, %s, |g2(0.1)-g2(0.05)|=%.1f%%;", tau, gammas[kmin],
                      monotone ? "monotone" : "NOT monotone", 100.0 * plateau);
    }
    report(3, pass, "filter-width curves" + detail);
}

void criterion4() {
    const auto cfg = BiexcitonConfig::two_photon_resonant(300.0);
    const double tau = 0.01;
    const double area = two_photon_pi_area(cfg, tau);
    GaussianPulse pulse;
    pulse.length = tau;
    pulse.area = area;
    const SystemModel ladder = build_biexciton(cfg, pulse);
    const std::vector<double> gammas = {0.3, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 10.0};
    std::vector<double> g;
    std::string values;
    for (double gm : gammas) {
        SensorConfig s;
        s.bandwidth = gm;
        s.detuning = 0.5 * cfg.binding_energy;
        g.push_back(evaluate(ladder, ObservationVector::exciton_v(), s,
                             fmt("biexciton Gamma=%g", gm)).g2);
        values += fmt(" %g:%.3g", gm, g.back());
    }
    const auto kmin = static_cast<std::size_t>(std::min_element(g.begin(), g.end()) - g.begin());
    const double arg = gammas[kmin];
    const bool narrower_worse = kmin > 0 && g.front() > g[kmin];
    report(4, arg >= 1.5 && arg <= 4.0 && narrower_worse,
           fmt("ladder dip (area %.5f): argmin Gamma = %g, want [1.5, 4] with rising g2 below;", area, arg) +
               values);
}

void criterion5() {
    bool pass = true;
    std::string detail;
    for (double tau : {0.02, 0.05, 0.2, 1.0}) {
        const SystemModel m = two_level(tau);
        const double bare = unfiltered_g2_zero(m, m.output("sigma"), plain());
        const double wide = tl(tau, 100.0);
        const double dev = std::abs(wide - bare) / bare;
        pass = pass && dev <= 0.05;
        detail += fmt(" tau=%g: %.4g vs %.4g (%.1f%%);", tau, wide, bare, 100.0 * dev);
    }
    report(5, pass, "Gamma=100 vs unfiltered, want within 5%:" + detail);
}

void criterion6() {
    double drift = 0.0, herm = 0.0, min_eig = 1.0;
    auto run = [&](const SystemModel& m) {
        const auto tr = propagate(m, pure_state(m.dimension, 0), linspace(0.0, default_horizon(m), 400));
        const auto r = physicality_report(tr);
        drift = std::max(drift, r.max_trace_drift);
        herm = std::max(herm, r.max_hermiticity_violation);
        min_eig = std::min(min_eig, r.min_eigenvalue);
    };
    int runs = 0;
    for (double tau : {0.02, 0.05, 0.1, 0.2, 1.0}) {
        run(two_level(tau));
        ++runs;
        for (double gm : {0.05, 1.0, 20.0, 100.0}) {
            SensorConfig s;
            s.bandwidth = gm;
            run(attach_sensor(two_level(tau), "sigma", s));
            ++runs;
        }
    }
    const auto cfg = BiexcitonConfig::two_photon_resonant(300.0);
    GaussianPulse pulse;
    pulse.length = 0.01;
    pulse.area = two_photon_pi_area(cfg, 0.01);
    for (double gm : {0.3, 2.5, 10.0}) {
        SensorConfig s;
        s.bandwidth = gm;
        s.detuning = 150.0;
        run(attach_sensor(build_biexciton(cfg, pulse), ObservationVector::exciton_v(), s));
        ++runs;
    }
    report(6, drift < 1e-8 && herm < 1e-10 && min_eig >= -1e-8,
           fmt("physicality over %d runs: trace drift %.2e (< 1e-8), hermiticity %.2e (< 1e-10), "
               "min eigenvalue %.2e (>= -1e-8)",
               runs, drift, herm, min_eig));
}

void criterion7() {
    report(7, checks.worst_eps < 5e-3 && checks.worst_trunc < 1e-3,
           fmt("sensor independence: worst eps->eps/2 change %.2e (< 5e-3) at %s; worst truncation "
               "2->3 change %.2e (< 1e-3) at %s",
               checks.worst_eps, checks.worst_eps_at.c_str(), checks.worst_trunc,
               checks.worst_trunc_at.c_str()));
}

void criterion8() {
    const double tau = 0.05;
    const SystemModel m = two_level(tau);
    const double t0 = GaussianPulse{kPi, tau, {}}.center();
    const TimeGrid grid = correlation_grid(m, default_horizon(m));
    const auto r = two_time_g2_map(m, m.output("sigma"), grid.nodes);
    double diag = 0.0, total = 0.0, strip = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        diag = std::max(diag, std::abs(r.g2.at(i, i)));
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double w = grid.weights[i] * grid.weights[j] * r.g2.at(i, j);
            total += w;
            if (std::abs(grid.nodes[i] - t0) < 3.0 * tau || std::abs(grid.nodes[j] - t0) < 3.0 * tau)
                strip += w;
        }
    }
    report(8, diag == 0.0 && strip / total >= 0.9,
           fmt("G2 map tau=%g: max |diagonal| = %g (want 0), strip mass %.4f (want >= 0.9)", tau, diag,
               strip / total));
}

void criterion9() {
    const auto t0 = std::chrono::steady_clock::now();
    StreamConfig cfg;
    cfg.n_pulses = 10000000;
    cfg.p_single = 0.3;
    const double signal_rate = cfg.p_single / (cfg.rep_period * 1e-9);
    cfg.noise_rate = signal_rate / 3400.0;
    const auto clicks = synthesize_stream(cfg, 20240611);
    const auto est = estimate_g2(correlate(clicks.detector1, clicks.detector2));

    // Expected window sums per pulse pair, detectors split 50/50.
    const double W = est.window_ns, rep = cfg.rep_period, p = cfg.p_single;
    const double rn = cfg.noise_rate * 1e-9;  // per ns
    const double noise_terms = p * rn * W / 2.0 + rn * rn * W * rep / 4.0;
    const double oracle = noise_terms / (p * p / 4.0 + noise_terms);
    const double z = (est.value - oracle) / est.sigma;
    const double nominal = 2.0 / 3400.0;
    const double secs = seconds_since(t0);
    report(9, std::abs(z) <= 3.0 && secs < 300.0,
           fmt("HBT floor: g2 = %.3e +- %.1e, oracle %.3e (z = %.2f, want |z| <= 3); "
               "2/3400 = %.2e (z = %.1f); %.0f s",
               est.value, est.sigma, oracle, z, nominal, (est.value - nominal) / est.sigma, secs));
}

void criterion10() {
    CoincidenceHistogram h;
    h.bin_width = 5;
    h.half_bins = 4000;
    h.counts.assign(8001, 0);
    h.counts[4000] = 50;
    h.counts[4000 - 2620] = 100000;
    h.counts[4000 + 2620] = 100000;
    const auto e = estimate_g2(h, 13.1, 6.5);
    const double sigma = std::sqrt(50.0 / 1e10 + 2500.0 * 2e5 / (4.0 * 1e20));
    report(10, e.value == 5.0e-4 && std::abs(e.sigma - sigma) <= 1e-12 * sigma,
           fmt("estimator: %.10g (want exactly 5e-4), sigma %.6e (want %.6e)", e.value, e.sigma, sigma));
}

void criterion11() {
    CascadeParams truth;
    truth.gamma_2x = 1.0 / 158.0;
    truth.gamma_x = 1.0 / 294.0;
    truth.irf_sigma = 40.0;
    truth.amplitude = 2e5;
    truth.offset = 300.0;
    std::vector<double> t;
    for (double x = 0.0; x <= 2500.0; x += 4.0) t.push_back(x);

    int within = 0, covered_2x = 0, covered_x = 0, ok = 0;
    const int seeds = 100;
    for (int seed = 0; seed < seeds; ++seed) {
        std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(seed));
        std::vector<double> y(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) {
            std::poisson_distribution<long> pd(std::max(cascade_model(truth, Branch::Exciton, t[i]), 1e-12));
            y[i] = static_cast<double>(pd(rng));
        }
        CascadeParams init = truth;
        init.gamma_2x *= 1.15;
        init.gamma_x *= 0.9;
        init.irf_sigma = 55.0;
        init.amplitude *= 0.9;
        init.offset = 280.0;
        try {
            const auto r = fit_lifetimes(t, y, init, Branch::Exciton);
            ++ok;
            const double t2x = 1.0 / r.params.gamma_2x, tx = 1.0 / r.params.gamma_x;
            const double s2x = r.uncertainties.gamma_2x / (r.params.gamma_2x * r.params.gamma_2x);
            const double sx = r.uncertainties.gamma_x / (r.params.gamma_x * r.params.gamma_x);
            if (std::abs(t2x - 158.0) <= 0.02 * 158.0 && std::abs(tx - 294.0) <= 0.02 * 294.0) ++within;
            if (std::abs(t2x - 158.0) <= s2x) ++covered_2x;
            if (std::abs(tx - 294.0) <= sx) ++covered_x;
        } catch (const Error&) {
        }
    }
    const bool pass = within == seeds && covered_2x >= 95 && covered_x >= 95;
    report(11, pass,
           fmt("lifetime round trip over %d seeds: %d fits, %d within 2%%; 1-sigma coverage tau_2X %d%%, "
               "tau_X %d%% (want >= 95%%)",
               seeds, ok, within, covered_2x, covered_x));
}

void criterion12() {
    StreamConfig cfg;
    cfg.n_pulses = 2000000;
    cfg.p_single = 0.5;
    cfg.blinking = BlinkingConfig{{1.0}, 0.5};
    const auto blink = synthesize_stream(cfg, 77);
    const auto hb = correlate(blink.detector1, blink.detector2, 100, 5000000);
    const auto tone = dominant_tone(peak_sums(hb));

    cfg.blinking.reset();
    const auto steady = synthesize_stream(cfg, 78);
    const auto hs = correlate(steady.detector1, steady.detector2, 100, 5000000);
    const auto flat = side_peak_flatness(peak_sums(hs));

    const bool found = std::abs(tone.frequency_mhz - 1.0) <= tone.resolution_mhz &&
                       tone.power > tone.runner_up_power;
    report(12, found && flat.flat,
           fmt("blinking: tone %.3f MHz (resolution %.3f, power ratio %.1f over runner-up); "
               "steady stream chi2 z = %.2f (flat if z <= 3)",
               tone.frequency_mhz, tone.resolution_mhz, tone.power / tone.runner_up_power, flat.z));
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    auto guarded = [](int id, void (*f)()) {
        try {
            f();
        } catch (const std::exception& e) {
            report(id, false, std::string("threw: ") + e.what());
        }
    };
    guarded(10, criterion10);
    guarded(8, criterion8);
    guarded(1, criterion1);
    guarded(2, criterion2);
    guarded(3, criterion3);
    guarded(5, criterion5);
    guarded(4, criterion4);
    guarded(6, criterion6);
    guarded(7, criterion7);
    guarded(9, criterion9);
    guarded(11, criterion11);
    guarded(12, criterion12);
    std::printf("%d criteria failed; %.0f s total\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
