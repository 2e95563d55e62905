#include "qdf/photostream.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include <omp.h>

#include "qdf/error.hpp"

namespace qdf {

void StreamConfig::validate() const {
    require(rep_period > 0.0, ErrorCode::InvalidArgument, "rep_period must be > 0");
    require(n_pulses >= 0, ErrorCode::InvalidArgument, "n_pulses must be >= 0");
    require(p_double >= 0.0 && p_double <= p_single && p_single <= 1.0,
            ErrorCode::InvalidArgument, "need 0 <= p_double <= p_single <= 1");
    require(emitter_lifetime >= 0.0 && pulse_sigma >= 0.0 && noise_rate >= 0.0,
            ErrorCode::InvalidArgument, "lifetime, pulse_sigma and noise_rate must be >= 0");
    require(detection_efficiency >= 0.0 && detection_efficiency <= 1.0,
            ErrorCode::InvalidArgument, "detection_efficiency must lie in [0, 1]");
    if (blinking) {
        require(blinking->depth >= 0.0 && blinking->depth <= 1.0, ErrorCode::InvalidArgument,
                "blinking depth must lie in [0, 1]");
        require(!blinking->frequencies_mhz.empty(), ErrorCode::InvalidArgument,
                "blinking needs at least one frequency");
        for (double f : blinking->frequencies_mhz)
            require(f > 0.0, ErrorCode::InvalidArgument, "blinking frequencies must be > 0");
    }
}

double StreamConfig::acceptance(double t_ns) const {
    if (!blinking || blinking->depth == 0.0) return 1.0;
    double m = 0.0;
    for (double f : blinking->frequencies_mhz)
        m += 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * f * 1e-3 * t_ns));
    return 1.0 - blinking->depth * m / static_cast<double>(blinking->frequencies_mhz.size());
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_block_seed(std::uint64_t seed, std::uint64_t block, std::uint64_t lane) {
    return splitmix64(splitmix64(splitmix64(seed) ^ block) ^ (lane + 1));
}

namespace {

struct BlockClicks {
    std::vector<std::int64_t> d1, d2;
};

BlockClicks synthesize_block(const StreamConfig& cfg, std::uint64_t seed, long long block) {
    BlockClicks out;
    const long long first = block * kStreamBlock;
    const long long last = std::min(cfg.n_pulses, first + kStreamBlock);

    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto detect = [&](std::mt19937_64& rng, double t_ns, bool signal) {
        if (signal && cfg.blinking && uni(rng) >= cfg.acceptance(t_ns)) return;
        if (uni(rng) >= cfg.detection_efficiency) return;
        const auto ps = static_cast<std::int64_t>(std::llround(t_ns * 1000.0));
        (uni(rng) < 0.5 ? out.d1 : out.d2).push_back(ps);
    };

    std::mt19937_64 rng(stream_block_seed(seed, static_cast<std::uint64_t>(block), 0));
    std::normal_distribution<double> jitter(0.0, 1.0);
    std::exponential_distribution<double> unit_exp(1.0);
    for (long long k = first; k < last; ++k) {
        const double tk = static_cast<double>(k) * cfg.rep_period;
        if (uni(rng) < cfg.p_double) {
            const double ta = tk + cfg.pulse_sigma * jitter(rng);
            const double tb = ta + cfg.emitter_lifetime * unit_exp(rng);
            detect(rng, ta, true);
            detect(rng, tb, true);
        } else if (uni(rng) < cfg.p_single) {
            detect(rng, tk + cfg.emitter_lifetime * unit_exp(rng), true);
        }
    }

    if (cfg.noise_rate > 0.0 && last > first) {
        std::mt19937_64 noise(stream_block_seed(seed, static_cast<std::uint64_t>(block), 1));
        const double t0 = static_cast<double>(first) * cfg.rep_period;
        const double duration = static_cast<double>(last - first) * cfg.rep_period;
        std::poisson_distribution<long long> count(cfg.noise_rate * 1e-9 * duration);
        const long long n = count(noise);
        for (long long i = 0; i < n; ++i) detect(noise, t0 + duration * uni(noise), false);
    }
    return out;
}

}  // namespace

ClickStreams synthesize_stream(const StreamConfig& config, std::uint64_t seed,
                               Execution execution) {
    config.validate();
    const long long blocks = (config.n_pulses + kStreamBlock - 1) / kStreamBlock;
    std::vector<BlockClicks> parts(static_cast<std::size_t>(blocks));
    if (execution == Execution::Serial) {
        for (long long b = 0; b < blocks; ++b)
            parts[static_cast<std::size_t>(b)] = synthesize_block(config, seed, b);
    } else {
#pragma omp parallel for schedule(dynamic, 1)
        for (long long b = 0; b < blocks; ++b)
            parts[static_cast<std::size_t>(b)] = synthesize_block(config, seed, b);
    }

    ClickStreams s;
    std::size_t n1 = 0, n2 = 0;
    for (const auto& p : parts) {
        n1 += p.d1.size();
        n2 += p.d2.size();
    }
    s.detector1.reserve(n1);
    s.detector2.reserve(n2);
    for (const auto& p : parts) {
        s.detector1.insert(s.detector1.end(), p.d1.begin(), p.d1.end());
        s.detector2.insert(s.detector2.end(), p.d2.begin(), p.d2.end());
    }
    std::sort(s.detector1.begin(), s.detector1.end());
    std::sort(s.detector2.begin(), s.detector2.end());
    return s;
}

std::uint64_t CoincidenceHistogram::total() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
}

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

// Adds all coincidences of clicks1[begin, end) into counts.
void correlate_range(const std::vector<std::int64_t>& c1, const std::vector<std::int64_t>& c2,
                     std::size_t begin, std::size_t end, std::int64_t w, std::int64_t half,
                     std::vector<std::uint64_t>& counts) {
    // 2 * delay must lie in [-(2 half + 1) w, (2 half + 1) w).
    const std::int64_t reach = (2 * half + 1) * w;
    if (begin >= end) return;
    auto lo = std::lower_bound(c2.begin(), c2.end(), c1[begin] - reach / 2 - 1) - c2.begin();
    const auto n2 = static_cast<std::ptrdiff_t>(c2.size());
    for (std::size_t i = begin; i < end; ++i) {
        const std::int64_t t1 = c1[i];
        while (lo < n2 && 2 * (c2[static_cast<std::size_t>(lo)] - t1) < -reach) ++lo;
        for (std::ptrdiff_t j = lo; j < n2; ++j) {
            const std::int64_t d = c2[static_cast<std::size_t>(j)] - t1;
            if (2 * d >= reach) break;
            const std::int64_t k = floor_div(2 * d + w, 2 * w);
            ++counts[static_cast<std::size_t>(k + half)];
        }
    }
}

}  // namespace

CoincidenceHistogram correlate(const std::vector<std::int64_t>& clicks1,
                               const std::vector<std::int64_t>& clicks2, std::int64_t bin_width,
                               std::int64_t span, Execution execution) {
    require(bin_width > 0, ErrorCode::InvalidArgument, "bin width must be > 0");
    require(span >= 0, ErrorCode::InvalidArgument, "span must be >= 0");
    require(std::is_sorted(clicks1.begin(), clicks1.end()) &&
                std::is_sorted(clicks2.begin(), clicks2.end()),
            ErrorCode::UnsortedInput, "click lists must be sorted");

    CoincidenceHistogram h;
    h.bin_width = bin_width;
    h.half_bins = (span + bin_width - 1) / bin_width;
    const auto nbins = static_cast<std::size_t>(2 * h.half_bins + 1);
    h.counts.assign(nbins, 0);

    if (execution == Execution::Serial) {
        correlate_range(clicks1, clicks2, 0, clicks1.size(), bin_width, h.half_bins, h.counts);
        return h;
    }

    const int threads = omp_get_max_threads();
    std::vector<std::vector<std::uint64_t>> partial(static_cast<std::size_t>(threads));
    const std::size_t n = clicks1.size();
#pragma omp parallel num_threads(threads)
    {
        const auto id = static_cast<std::size_t>(omp_get_thread_num());
        const auto nt = static_cast<std::size_t>(omp_get_num_threads());
        auto& local = partial[id];
        local.assign(nbins, 0);
        const std::size_t begin = n * id / nt;
        const std::size_t end = n * (id + 1) / nt;
        correlate_range(clicks1, clicks2, begin, end, bin_width, h.half_bins, local);
    }
    for (const auto& p : partial)
        for (std::size_t k = 0; k < p.size(); ++k) h.counts[k] += p[k];
    return h;
}

namespace {

bool masked(double delay_ns, const std::vector<ExcludedPeak>& excluded) {
    for (const auto& e : excluded)
        if (std::abs(delay_ns - e.position_ns) <= e.half_width_ns) return true;
    return false;
}

double window_sum(const CoincidenceHistogram& hist, double center_ns, double window_ns,
                  const std::vector<ExcludedPeak>& excluded) {
    const double half = 0.5 * window_ns;
    double s = 0.0;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        const double d = 1e-3 * static_cast<double>(hist.delay(i));
        if (std::abs(d - center_ns) <= half + 1e-9 && !masked(d, excluded))
            s += static_cast<double>(hist.counts[i]);
    }
    return s;
}

void check_windows(const CoincidenceHistogram& hist, double rep_period_ns, double window_ns) {
    require(rep_period_ns > 0.0 && window_ns > 0.0, ErrorCode::InvalidArgument,
            "rep period and window must be > 0");
    require(window_ns <= rep_period_ns, ErrorCode::WindowOverlap,
            "summation window exceeds the repetition period");
    require(1e-3 * static_cast<double>(hist.span()) + 1e-9 >= rep_period_ns + 0.5 * window_ns,
            ErrorCode::InvalidArgument, "histogram span does not cover the side peaks");
}

}  // namespace

G2Estimate g2_from_sums(double center_sum, double side_minus, double side_plus,
                        double window_ns) {
    require(center_sum >= 0.0 && side_minus >= 0.0 && side_plus >= 0.0,
            ErrorCode::InvalidArgument, "peak sums must be >= 0");
    const double mean = 0.5 * (side_minus + side_plus);
    require(mean > 0.0, ErrorCode::ZeroEmission, "side peaks are empty");
    G2Estimate e;
    e.center_sum = center_sum;
    e.side_sums = {side_minus, side_plus};
    e.window_ns = window_ns;
    e.value = center_sum / mean;
    // var(C) = C, var(mean) = (S1 + S2) / 4.
    const double m2 = mean * mean;
    e.sigma = std::sqrt(center_sum / m2 +
                        center_sum * center_sum * (side_minus + side_plus) / (4.0 * m2 * m2));
    return e;
}

G2Estimate estimate_g2(const CoincidenceHistogram& hist, double rep_period_ns, double window_ns,
                       const std::vector<ExcludedPeak>& excluded) {
    check_windows(hist, rep_period_ns, window_ns);
    G2Estimate e = g2_from_sums(window_sum(hist, 0.0, window_ns, excluded),
                                window_sum(hist, -rep_period_ns, window_ns, excluded),
                                window_sum(hist, rep_period_ns, window_ns, excluded), window_ns);
    e.excluded = excluded;
    return e;
}

std::vector<PeakSum> peak_sums(const CoincidenceHistogram& hist, double rep_period_ns,
                               double window_ns, const std::vector<ExcludedPeak>& excluded) {
    check_windows(hist, rep_period_ns, window_ns);
    const double span = 1e-3 * static_cast<double>(hist.span());
    const int m = static_cast<int>(std::floor((span - 0.5 * window_ns + 1e-9) / rep_period_ns));
    // One pass over the bins, assigning each to its nearest peak.
    std::vector<PeakSum> out;
    for (int k = -m; k <= m; ++k) out.push_back({k, 0.0});
    const double half = 0.5 * window_ns;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        if (hist.counts[i] == 0) continue;
        const double d = 1e-3 * static_cast<double>(hist.delay(i));
        const int k = static_cast<int>(std::lround(d / rep_period_ns));
        if (k < -m || k > m) continue;
        if (std::abs(d - k * rep_period_ns) <= half + 1e-9 && !masked(d, excluded))
            out[static_cast<std::size_t>(k + m)].sum += static_cast<double>(hist.counts[i]);
    }
    return out;
}

ToneReport dominant_tone(const std::vector<PeakSum>& sums, double rep_period_ns) {
    std::vector<double> x;
    for (const auto& s : sums)
        if (s.index >= 1) x.push_back(s.sum);
    require(x.size() >= 4, ErrorCode::InvalidArgument, "need at least four side peaks");
    const auto n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);

    ToneReport r;
    r.resolution_mhz = 1e3 / (static_cast<double>(n) * rep_period_ns);
    for (std::size_t k = 1; k <= n / 2; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j)
            acc += (x[j] - mean) *
                   std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * j) /
                                       static_cast<double>(n));
        const double p = std::norm(acc);
        if (p > r.power) {
            r.runner_up_power = r.power;
            r.power = p;
            r.frequency_mhz = static_cast<double>(k) * r.resolution_mhz;
        } else if (p > r.runner_up_power) {
            r.runner_up_power = p;
        }
    }
    return r;
}

FlatnessReport side_peak_flatness(const std::vector<PeakSum>& sums) {
    std::vector<double> x;
    for (const auto& s : sums)
        if (s.index != 0) x.push_back(s.sum);
    require(x.size() >= 2, ErrorCode::InvalidArgument, "need at least two side peaks");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());

    FlatnessReport f;
    f.dof = static_cast<int>(x.size()) - 1;
    if (mean == 0.0) {
        f.flat = true;
        return f;
    }
    for (double v : x) f.chi2 += (v - mean) * (v - mean) / mean;
    f.z = (f.chi2 - f.dof) / std::sqrt(2.0 * f.dof);
    // Only excess scatter signals structure; a single-photon source is
    // sub-Poissonian and gives chi2 below dof.
    f.flat = f.z <= 3.0;
    return f;
}

void write_histogram_csv(std::ostream& out, const CoincidenceHistogram& hist) {
    out << "delay_ps,counts\n";
    for (std::size_t i = 0; i < hist.counts.size(); ++i)
        out << hist.delay(i) << ',' << hist.counts[i] << '\n';
}

CoincidenceHistogram read_histogram_csv(std::istream& in) {
    std::string line;
    std::vector<std::int64_t> delays;
    std::vector<std::uint64_t> counts;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (lineno == 1 && line.find_first_of("0123456789-") != 0) continue;  // header
        std::istringstream ss(line);
        long long d = 0;
        unsigned long long c = 0;
        char comma = 0;
        if (!(ss >> d >> comma >> c) || comma != ',')
            throw Error(ErrorCode::IoError, "malformed histogram row at line " +
                                                std::to_string(lineno) + ": '" + line + "'");
        delays.push_back(d);
        counts.push_back(c);
    }
    require(delays.size() >= 3 && delays.size() % 2 == 1, ErrorCode::IoError,
            "histogram needs an odd number (>= 3) of bins");
    CoincidenceHistogram h;
    h.bin_width = delays[1] - delays[0];
    h.half_bins = static_cast<std::int64_t>(delays.size() / 2);
    require(h.bin_width > 0, ErrorCode::IoError, "histogram delays must increase");
    for (std::size_t i = 0; i < delays.size(); ++i)
        require(delays[i] == h.delay(i), ErrorCode::IoError,
                "histogram bins must be uniform and centered on zero delay");
    h.counts = std::move(counts);
    return h;
}

void write_clicks_csv(std::ostream& out, const ClickStreams& clicks) {
    out << "detector,timestamp_ps\n";
    for (auto t : clicks.detector1) out << "1," << t << '\n';
    for (auto t : clicks.detector2) out << "2," << t << '\n';
}

}  // namespace qdf
