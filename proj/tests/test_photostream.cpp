#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "qdf/error.hpp"
#include "qdf/photostream.hpp"

using namespace qdf;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("photostream") {

TEST_CASE("single photons never coincide at zero delay") {
    StreamConfig cfg;
    cfg.n_pulses = 200000;
    cfg.p_single = 0.5;
    const auto s = synthesize_stream(cfg, 7);
    const auto h = correlate(s.detector1, s.detector2);
    const auto e = estimate_g2(h);
    CHECK(e.center_sum == 0.0);
    CHECK(e.value == 0.0);
    CHECK(e.side_sums[0] > 0.0);
}

TEST_CASE("click counts follow the emission probabilities") {
    StreamConfig cfg;
    cfg.n_pulses = 1000000;
    cfg.p_single = 0.1;
    cfg.detection_efficiency = 0.5;
    const auto s = synthesize_stream(cfg, 11);
    const double n = static_cast<double>(s.detector1.size() + s.detector2.size());
    const double p = 0.05;
    const double mean = 1e6 * p, sd = std::sqrt(1e6 * p * (1 - p));
    CHECK(std::abs(n - mean) < 5.0 * sd);
    // Each click picks a detector with probability one half.
    const double d1 = static_cast<double>(s.detector1.size());
    CHECK(std::abs(d1 - 0.5 * n) < 5.0 * std::sqrt(0.25 * n));
}

TEST_CASE("noise clicks are Poisson with the configured rate") {
    StreamConfig cfg;
    cfg.n_pulses = 1000000;
    cfg.p_single = 0.0;
    cfg.noise_rate = 2e5;
    const auto s = synthesize_stream(cfg, 3);
    const double n = static_cast<double>(s.detector1.size() + s.detector2.size());
    const double mean = cfg.noise_rate * 1e-9 * cfg.rep_period * 1e6;
    CHECK(std::abs(n - mean) < 5.0 * std::sqrt(mean));
}

TEST_CASE("streams are deterministic and independent of execution") {
    StreamConfig cfg;
    cfg.n_pulses = 300000;
    cfg.p_single = 0.3;
    cfg.p_double = 0.01;
    cfg.noise_rate = 1e5;
    const auto a = synthesize_stream(cfg, 42, Execution::Serial);
    const auto b = synthesize_stream(cfg, 42, Execution::Parallel);
    const auto c = synthesize_stream(cfg, 43, Execution::Parallel);
    CHECK(a.detector1 == b.detector1);
    CHECK(a.detector2 == b.detector2);
    CHECK(a.detector1 != c.detector1);
    CHECK(std::is_sorted(a.detector1.begin(), a.detector1.end()));

    const auto ha = correlate(a.detector1, a.detector2, 5, 30000, Execution::Serial);
    const auto hb = correlate(a.detector1, a.detector2, 5, 30000, Execution::Parallel);
    CHECK(ha.counts == hb.counts);
}

TEST_CASE("pair emission matches the counting oracle") {
    // Per pulse: a pair with probability pd, else a single with probability ps.
    // Zero-delay coincidences: pd / 2; cross-pulse: (m / 2)^2 with m the mean
    // photon number, so g2 = 2 pd / m^2.
    StreamConfig cfg;
    cfg.n_pulses = 1000000;
    cfg.p_single = 0.1;
    cfg.p_double = 0.01;
    const auto s = synthesize_stream(cfg, 5);
    const auto e = estimate_g2(correlate(s.detector1, s.detector2));
    const double m = 2.0 * cfg.p_double + (1.0 - cfg.p_double) * cfg.p_single;
    const double expect = 2.0 * cfg.p_double / (m * m);
    MESSAGE("g2 " << e.value << " +- " << e.sigma << " oracle " << expect);
    CHECK(std::abs(e.value - expect) < 5.0 * e.sigma);
}

TEST_CASE("uncorrelated clicks give a flat comb-free histogram") {
    StreamConfig cfg;
    cfg.n_pulses = 2000000;
    cfg.p_single = 0.0;
    cfg.noise_rate = 4e6;
    const auto s = synthesize_stream(cfg, 9);
    const auto h = correlate(s.detector1, s.detector2, 100, 100000);
    const auto e = estimate_g2(h);
    CHECK(std::abs(e.value - 1.0) < 5.0 * e.sigma);
    const auto f = side_peak_flatness(peak_sums(h));
    MESSAGE("z " << f.z);
    CHECK(f.flat);
}

TEST_CASE("correlate matches brute force") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::int64_t> t(0, 200000);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<std::int64_t> a(400), b(300);
        for (auto& x : a) x = t(rng);
        for (auto& x : b) x = t(rng);
        a[1] = a[0];  // ties
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        const std::int64_t w = 7, span = 3000;
        const auto h = correlate(a, b, w, span);
        std::vector<std::uint64_t> ref(h.counts.size(), 0);
        for (auto x : a)
            for (auto y : b) {
                const double k = std::floor((static_cast<double>(y - x) + 0.5 * w) / w);
                if (std::abs(k) <= static_cast<double>(h.half_bins))
                    ++ref[static_cast<std::size_t>(k + static_cast<double>(h.half_bins))];
            }
        CHECK(h.counts == ref);
        CHECK(h.span() >= span);
    }
}

TEST_CASE("bin edges are half-open") {
    const auto h = correlate({0}, {-3, 2, 3, 7}, 5, 10);
    // bin 0 holds [-2.5, 2.5): -3 is in bin -1, 2 in 0, 3 and 7 in 1.
    CHECK(h.counts[static_cast<std::size_t>(h.half_bins - 1)] == 1);
    CHECK(h.counts[static_cast<std::size_t>(h.half_bins)] == 1);
    CHECK(h.counts[static_cast<std::size_t>(h.half_bins + 1)] == 2);
}

TEST_CASE("invalid inputs") {
    CHECK(code_of([] { correlate({2, 1}, {0}); }) == ErrorCode::UnsortedInput);
    CHECK(code_of([] { correlate({0}, {3, 1}); }) == ErrorCode::UnsortedInput);
    CoincidenceHistogram h;
    h.bin_width = 100;
    h.half_bins = 100;
    h.counts.assign(201, 1);
    CHECK(code_of([&] { estimate_g2(h, 13.1, 14.0); }) == ErrorCode::WindowOverlap);
    CHECK(code_of([&] { estimate_g2(h, 13.1, 6.5); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { g2_from_sums(3.0, 0.0, 0.0); }) == ErrorCode::ZeroEmission);
    StreamConfig bad;
    bad.p_double = 0.5;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("estimator error propagation") {
    const auto e = g2_from_sums(50.0, 1e5, 1e5);
    CHECK(e.value == doctest::Approx(5e-4));
    CHECK(e.sigma == doctest::Approx(std::sqrt(50.0) / 1e5).epsilon(1e-3));
}

TEST_CASE("excluded peaks are left out of the sums") {
    CoincidenceHistogram h;
    h.bin_width = 100;
    h.half_bins = 400;
    h.counts.assign(801, 1);
    const auto full = estimate_g2(h);
    const auto cut = estimate_g2(h, 13.1, 6.5, {{0.0, 1.0}});
    CHECK(cut.center_sum == full.center_sum - 21.0);
    CHECK(cut.side_sums == full.side_sums);
}

TEST_CASE("blinking imprints its frequency on the side peaks") {
    StreamConfig cfg;
    cfg.n_pulses = 1000000;
    cfg.p_single = 0.5;
    cfg.blinking = BlinkingConfig{{5.0}, 0.6};
    const auto s = synthesize_stream(cfg, 21);
    const auto h = correlate(s.detector1, s.detector2, 100, 5000000);
    const auto sums = peak_sums(h);
    const auto tone = dominant_tone(sums);
    MESSAGE("tone " << tone.frequency_mhz << " MHz, resolution " << tone.resolution_mhz);
    CHECK(std::abs(tone.frequency_mhz - 5.0) <= tone.resolution_mhz);
    CHECK(tone.power > 10.0 * tone.runner_up_power);
    CHECK_FALSE(side_peak_flatness(sums).flat);

    // Same source without blinking: sub-Poissonian scatter still counts as flat.
    cfg.blinking.reset();
    const auto steady = synthesize_stream(cfg, 22);
    const auto fs = side_peak_flatness(peak_sums(correlate(steady.detector1, steady.detector2, 100, 5000000)));
    MESSAGE("steady z " << fs.z);
    CHECK(fs.flat);
    CHECK(fs.z < 0.0);
}

TEST_CASE("acceptance stays in range") {
    StreamConfig cfg;
    CHECK(cfg.acceptance(123.0) == 1.0);
    cfg.blinking = BlinkingConfig{{1.0, 3.0}, 0.4};
    for (double t = 0.0; t < 2000.0; t += 7.3) {
        const double a = cfg.acceptance(t);
        CHECK(a >= 0.6 - 1e-12);
        CHECK(a <= 1.0 + 1e-12);
    }
    CHECK(cfg.acceptance(0.0) == doctest::Approx(0.6));
}

TEST_CASE("histogram CSV round trip") {
    const auto h = correlate({0, 100, 250}, {40, 90, 300}, 20, 200);
    std::ostringstream out;
    write_histogram_csv(out, h);
    CHECK(out.str().rfind("delay_ps,counts\n", 0) == 0);
    std::istringstream in(out.str());
    const auto r = read_histogram_csv(in);
    CHECK(r.bin_width == h.bin_width);
    CHECK(r.half_bins == h.half_bins);
    CHECK(r.counts == h.counts);
    std::istringstream broken("delay_ps,counts\n0,1\nx,2\n");
    CHECK(code_of([&] { read_histogram_csv(broken); }) == ErrorCode::IoError);
}

}
