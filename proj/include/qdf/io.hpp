// io.hpp: CSV readers and writers for sweep, spectrum and time-series data

#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "qdf/correlations.hpp"

namespace qdf {

/// axis_value,g2,epsilon_used,converged
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

/// detuning_over_gamma,normalized_intensity
void write_spectrum_csv(std::ostream& out, const SweepResult& spectrum);

/// Two numeric columns with an optional header line; '#' starts a comment.
std::pair<std::vector<double>, std::vector<double>> read_two_column_csv(std::istream& in);

}  // namespace qdf
