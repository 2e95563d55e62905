#include "qdf/io.hpp"

#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "qdf/error.hpp"

namespace qdf {

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
    const auto prec = out.precision(std::numeric_limits<double>::max_digits10);
    out << "axis_value,g2,epsilon_used,converged\n";
    for (std::size_t i = 0; i < sweep.axis.size(); ++i)
        out << sweep.axis[i] << ',' << sweep.values[i] << ',' << sweep.epsilon_used[i] << ','
            << (sweep.converged[i] ? "true" : "false") << '\n';
    out.precision(prec);
}

void write_spectrum_csv(std::ostream& out, const SweepResult& spectrum) {
    const auto prec = out.precision(std::numeric_limits<double>::max_digits10);
    out << "detuning_over_gamma,normalized_intensity\n";
    for (std::size_t i = 0; i < spectrum.axis.size(); ++i)
        out << spectrum.axis[i] << ',' << spectrum.values[i] << '\n';
    out.precision(prec);
}

std::pair<std::vector<double>, std::vector<double>> read_two_column_csv(std::istream& in) {
    std::vector<double> a, b;
    std::string line;
    long lineno = 0;
    bool seen_data = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ss(line);
        double x = 0.0, y = 0.0;
        char comma = 0;
        if (ss >> x >> comma >> y && comma == ',') {
            a.push_back(x);
            b.push_back(y);
            seen_data = true;
        } else if (!seen_data && a.empty()) {
            continue;  // header
        } else {
            throw Error(ErrorCode::IoError,
                        "malformed row at line " + std::to_string(lineno) + ": '" + line + "'");
        }
    }
    return {std::move(a), std::move(b)};
}

}  // namespace qdf
