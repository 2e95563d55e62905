// photostream.hpp: Monte Carlo HBT detection chain and peak-sum g2 estimation
//
// Times inside a StreamConfig are in ns; click timestamps and histogram
// delays are integer picoseconds.

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "qdf/regression.hpp"

namespace qdf {

struct BlinkingConfig {
    std::vector<double> frequencies_mhz;
    double depth{0.0};  // acceptance swings between 1 - depth and 1
};

struct StreamConfig {
    double rep_period{13.1};  // ns
    long long n_pulses{1000000};
    double p_single{0.1};
    double p_double{0.0};
    double emitter_lifetime{0.294};  // ns
    double pulse_sigma{0.01};        // ns
    double noise_rate{0.0};          // photons / s before splitting and detection
    double detection_efficiency{1.0};
    std::optional<BlinkingConfig> blinking;

    void validate() const;
    /// Blinking acceptance a(t) in [0, 1]; 1 without blinking.
    double acceptance(double t_ns) const;
};

struct ClickStreams {
    std::vector<std::int64_t> detector1;  // ps, sorted
    std::vector<std::int64_t> detector2;
};

/// Pulses are processed in blocks of kStreamBlock; block b draws from its own
/// generator seeded with stream_block_seed(seed, b), so the result does not
/// depend on how blocks are distributed over threads.
inline constexpr long long kStreamBlock = 65536;
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t stream_block_seed(std::uint64_t seed, std::uint64_t block, std::uint64_t lane);

ClickStreams synthesize_stream(const StreamConfig& config, std::uint64_t seed,
                               Execution execution = Execution::Parallel);

/// Odd number of bins centered on multiples of bin_width; bin k holds delays
/// t2 - t1 in [(k - 1/2) w, (k + 1/2) w).
struct CoincidenceHistogram {
    std::int64_t bin_width{5};  // ps
    std::int64_t half_bins{0};
    std::vector<std::uint64_t> counts;

    std::int64_t span() const { return half_bins * bin_width; }
    std::int64_t delay(std::size_t index) const {
        return (static_cast<std::int64_t>(index) - half_bins) * bin_width;
    }
    std::uint64_t total() const;
};

/// All pairwise delays t2 - t1 within +-span (rounded up to whole bins).
/// Throws UnsortedInput unless both lists are nondecreasing.
CoincidenceHistogram correlate(const std::vector<std::int64_t>& clicks1,
                               const std::vector<std::int64_t>& clicks2,
                               std::int64_t bin_width = 5, std::int64_t span = 20000,
                               Execution execution = Execution::Parallel);

struct ExcludedPeak {
    double position_ns{0.0};
    double half_width_ns{0.0};
};

struct G2Estimate {
    double value{0.0};
    double sigma{0.0};
    double center_sum{0.0};
    std::array<double, 2> side_sums{};  // at -rep_period, +rep_period
    double window_ns{6.5};
    std::vector<ExcludedPeak> excluded;
};

/// Center-peak sum over the mean of the two neighbouring side-peak sums, each
/// summed over +-window/2, with Poisson error propagation.
G2Estimate estimate_g2(const CoincidenceHistogram& hist, double rep_period_ns = 13.1,
                       double window_ns = 6.5, const std::vector<ExcludedPeak>& excluded = {});

/// Same estimator applied to raw sums (the histogram-free core).
G2Estimate g2_from_sums(double center_sum, double side_minus, double side_plus,
                        double window_ns = 6.5);

struct PeakSum {
    int index{0};  // delay = index * rep_period
    double sum{0.0};
};

/// Window sums of every peak fully inside the histogram span.
std::vector<PeakSum> peak_sums(const CoincidenceHistogram& hist, double rep_period_ns = 13.1,
                               double window_ns = 6.5,
                               const std::vector<ExcludedPeak>& excluded = {});

struct ToneReport {
    double frequency_mhz{0.0};
    double power{0.0};
    double runner_up_power{0.0};
    double resolution_mhz{0.0};
};

/// Strongest nonzero frequency in the positive-delay side-peak sequence.
ToneReport dominant_tone(const std::vector<PeakSum>& sums, double rep_period_ns = 13.1);

struct FlatnessReport {
    double chi2{0.0};
    int dof{0};
    double z{0.0};  // (chi2 - dof) / sqrt(2 dof)
    bool flat{false};
};

/// Poisson consistency of the side-peak sums with a constant level; flat unless
/// chi2 exceeds its expectation by more than 3 standard deviations.
FlatnessReport side_peak_flatness(const std::vector<PeakSum>& sums);

void write_histogram_csv(std::ostream& out, const CoincidenceHistogram& hist);
CoincidenceHistogram read_histogram_csv(std::istream& in);
void write_clicks_csv(std::ostream& out, const ClickStreams& clicks);

}  // namespace qdf
