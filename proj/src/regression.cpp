#include "qdf/regression.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "qdf/dynamics.hpp"
#include "qdf/error.hpp"
#include "qdf/lindblad.hpp"

namespace qdf {

namespace {

// tr(a b) without forming the product.
double trace_product(const Matrix& a, const Matrix& b) {
    return a.transpose().cwiseProduct(b).sum().real();
}

void check_times(const std::vector<double>& times) {
    require(times.size() >= 2, ErrorCode::InvalidArgument, "time grid needs at least two points");
    require(times.front() >= 0.0, ErrorCode::InvalidArgument, "time grid must start at t >= 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        require(times[i] > times[i - 1], ErrorCode::InvalidArgument,
                "time grid must be strictly increasing");
}

}  // namespace

RegressionResult two_time_g2_map(const SystemModel& system, const Matrix& emit,
                                 const std::vector<double>& times,
                                 const IntegratorConfig& config, Execution execution) {
    check_times(times);
    LindbladEngine engine(system, config);
    const Matrix e = engine.scaled_jump(emit);
    const Matrix e_adj = e.adjoint();
    const Matrix n_op = engine.scaled_observable(emit.adjoint() * emit);
    const auto n = static_cast<Eigen::Index>(times.size());

    std::vector<Matrix> forward;
    forward.reserve(times.size());
    {
        Evolution evo(engine);
        Matrix x = engine.to_scaled(pure_state(system.dimension, 0));
        double t = 0.0;
        for (double target : times) {
            evo.advance(t, target, x);
            forward.push_back(x);
        }
    }

    RegressionResult result;
    result.g2.times = times;
    result.g2.values = Eigen::MatrixXd::Zero(n, n);
    result.intensity.resize(times.size());
    for (Eigen::Index i = 0; i < n; ++i)
        result.intensity[static_cast<std::size_t>(i)] =
            trace_product(n_op, forward[static_cast<std::size_t>(i)]);

    Eigen::MatrixXd& g = result.g2.values;
    auto row = [&](Eigen::Index i) {
        Matrix x = e * forward[static_cast<std::size_t>(i)] * e_adj;
        // The collapsed state evolves linearly; carry it at unit size.
        const double beta = x.cwiseAbs().maxCoeff();
        if (beta == 0.0) return;
        x /= beta;
        g(i, i) = beta * trace_product(n_op, x);
        Evolution evo(engine);
        double t = times[static_cast<std::size_t>(i)];
        for (Eigen::Index j = i + 1; j < n; ++j) {
            evo.advance(t, times[static_cast<std::size_t>(j)], x);
            const double v = beta * trace_product(n_op, x);
            g(i, j) = v;
            g(j, i) = v;
        }
    };

    if (execution == Execution::Serial) {
        for (Eigen::Index i = 0; i < n; ++i) row(i);
    } else {
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1)
        for (Eigen::Index i = 0; i < n; ++i) {
            try {
                row(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
        for (const auto& err : errors)
            if (err) std::rethrow_exception(err);
    }
    return result;
}

double integrate_map(const CorrelationGrid& grid, const std::vector<double>& weights) {
    require(weights.size() == grid.times.size(), ErrorCode::DimensionMismatch,
            "weights do not match the correlation grid");
    const Eigen::Map<const Eigen::VectorXd> w(weights.data(),
                                              static_cast<Eigen::Index>(weights.size()));
    return w.dot(grid.values * w);
}

IntegratedMoments integrate_moments(const SystemModel& system, const Matrix& emit, double horizon,
                                    const IntegratorConfig& config, bool with_pairs) {
    require(horizon > 0.0, ErrorCode::InvalidArgument, "horizon must be > 0");
    LindbladEngine engine(system, config);
    const int d = engine.dimension();
    const Eigen::Index dd = static_cast<Eigen::Index>(d) * d;

    Matrix e = engine.scaled_jump(emit);
    Matrix n_op = engine.scaled_observable(emit.adjoint() * emit);
    const double e_norm = e.cwiseAbs().maxCoeff();
    const double n_norm = n_op.cwiseAbs().maxCoeff();
    if (e_norm == 0.0 || n_norm == 0.0) return {};
    e /= e_norm;
    n_op /= n_norm;
    const Matrix e_adj = e.adjoint();

    // Layout: [vec x, vec y, p, q] with dy = L y + e x e^dagger, dp = tr(n x), dq = tr(n y).
    const Eigen::Index size = 2 * dd + 2;
    StateVector state = StateVector::Zero(size);
    {
        Matrix x0 = engine.to_scaled(pure_state(d, 0));
        state.head(dd) = Eigen::Map<const StateVector>(x0.data(), dd);
    }

    auto rhs = [&](double t, const StateVector& s, StateVector& ds) {
        const Eigen::Map<const Matrix> xm(s.data(), d, d);
        const Eigen::Map<const Matrix> ym(s.data() + dd, d, d);
        const Matrix x = xm;
        const Matrix y = ym;
        Matrix lx(d, d), ly(d, d);
        engine.apply(t, x, lx);
        engine.apply(t, y, ly);
        ly.noalias() += e * x * e_adj;
        ds.head(dd) = Eigen::Map<const StateVector>(lx.data(), dd);
        ds.segment(dd, dd) = Eigen::Map<const StateVector>(ly.data(), dd);
        ds(2 * dd) = trace_product(n_op, x);
        ds(2 * dd + 1) = trace_product(n_op, y);
    };
    OdeStepper stepper(config, rhs, size);

    double t = 0.0;
    double free_from = horizon;
    if (config.exact_free_evolution)
        free_from = system.drive_window() ? std::clamp(engine.drive_end(), 0.0, horizon) : 0.0;
    if (free_from > 0.0) {
        const double cap = system.drive_window() ? engine.driven_step_cap()
                                                 : std::numeric_limits<double>::infinity();
        stepper.advance(t, free_from, state, cap);
    }
    if (t < horizon) {
        const Matrix& l = engine.free_generator();
        Matrix m = Matrix::Zero(size, size);
        m.block(0, 0, dd, dd) = l;
        m.block(dd, dd, dd, dd) = l;
        m.block(dd, 0, dd, dd) = Eigen::kroneckerProduct(e.conjugate(), e);
        const Matrix nt = n_op.transpose();
        m.block(2 * dd, 0, 1, dd) = Eigen::Map<const Matrix>(nt.data(), 1, dd);
        m.block(2 * dd + 1, dd, 1, dd) = Eigen::Map<const Matrix>(nt.data(), 1, dd);
        const Matrix scaled = m * (horizon - t);
        const Matrix p = scaled.exp();
        state = p * state;
    }

    IntegratedMoments r;
    r.intensity_integral = n_norm * state(2 * dd).real();
    if (with_pairs) r.pair_integral = 2.0 * n_norm * e_norm * e_norm * state(2 * dd + 1).real();
    return r;
}

void write_correlation_csv(std::ostream& out, const CorrelationGrid& grid) {
    const auto prec = out.precision(std::numeric_limits<double>::max_digits10);
    out << "time_unit=1/gamma_sigma\n";
    out << "t1,t2,value\n";
    const auto n = grid.times.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out << grid.times[i] << ',' << grid.times[j] << ',' << grid.at(i, j) << '\n';
    out.precision(prec);
}

}  // namespace qdf
