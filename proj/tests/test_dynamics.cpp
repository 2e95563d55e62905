#include <doctest.h>

#include <cmath>

#include "qdf/dynamics.hpp"
#include "qdf/error.hpp"
#include "qdf/integrator.hpp"
#include "qdf/lindblad.hpp"

using namespace qdf;

namespace {

SystemModel free_two_level() {
    GaussianPulse p;
    p.area = 0.0;
    return build_two_level({}, p);
}

double rk4_decay_error(double step) {
    IntegratorConfig cfg;
    cfg.method = IntegratorMethod::FixedRK4;
    cfg.exact_free_evolution = false;
    cfg.fixed_step = step;
    const auto tr = propagate(free_two_level(), pure_state(2, 1), {0.0, 2.0}, cfg);
    return std::abs(tr.states.back()(1, 1).real() - std::exp(-2.0));
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("free decay of the excited state") {
    const auto times = linspace(0.0, 12.0, 121);
    for (bool exact : {true, false}) {
        IntegratorConfig cfg;
        cfg.exact_free_evolution = exact;
        const auto tr = propagate(free_two_level(), pure_state(2, 1), times, cfg);
        const Matrix sigma = ket_bra(2, 0, 1);
        const auto pe = expectation(tr, sigma.adjoint() * sigma);
        for (std::size_t i = 0; i < times.size(); ++i)
            CHECK(std::abs(pe[i].real() - std::exp(-times[i])) < 1e-7);
        const auto one = expectation(tr, Matrix::Identity(2, 2));
        for (const auto& v : one) CHECK(std::abs(v - 1.0) < 1e-8);
        const auto rep = physicality_report(tr);
        CHECK(rep.max_trace_drift < 1e-8);
    }
}

TEST_CASE("cascade populations of the undriven ladder") {
    GaussianPulse p;
    p.area = 0.0;
    const SystemModel m = build_biexciton({}, p);
    const auto times = linspace(0.0, 10.0, 101);
    const auto tr = propagate(m, pure_state(4, 3), times);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        CHECK(std::abs(tr.states[i](2, 2).real() - (std::exp(-t) - std::exp(-2.0 * t))) < 1e-6);
        CHECK(std::abs(tr.states[i](1, 1).real() - (std::exp(-t) - std::exp(-2.0 * t))) < 1e-6);
    }
}

TEST_CASE("Rabi inversion under the adaptive integrator") {
    GaussianPulse p;
    p.length = 0.02;
    const auto m = build_two_level({}, p);
    const auto tr = propagate(m, pure_state(2, 0), linspace(0.0, 0.3, 301));
    double best = 0.0;
    for (const auto& rho : tr.states) best = std::max(best, rho(1, 1).real());
    // Emission during the few-tau rise costs a few percent.
    CHECK(best >= 0.96);
    const auto rep = physicality_report(tr);
    CHECK(rep.max_trace_drift < 1e-8);
    CHECK(rep.max_hermiticity_violation < 1e-10);
    CHECK(rep.min_eigenvalue >= -1e-8);
}

TEST_CASE("RK4 error falls ~16x when the step is halved") {
    const double e1 = rk4_decay_error(0.1);
    const double e2 = rk4_decay_error(0.05);
    const double ratio = e1 / e2;
    MESSAGE("RK4 error ratio " << ratio);
    CHECK(ratio > 14.0);
    CHECK(ratio < 18.0);
}

TEST_CASE("coarse fixed-step run is less physical than the default run") {
    GaussianPulse p;
    p.length = 0.05;
    const auto m = build_two_level({}, p);
    const auto times = linspace(0.0, 2.0, 201);

    IntegratorConfig coarse;
    coarse.method = IntegratorMethod::FixedRK4;
    coarse.exact_free_evolution = false;
    coarse.min_steps_per_pulse = 20;
    coarse.fixed_step = 0.1;
    const auto rc = physicality_report(propagate(m, pure_state(2, 0), times, coarse));
    const auto rt = physicality_report(propagate(m, pure_state(2, 0), times));

    // RK methods conserve the trace exactly (it is a linear invariant), so the
    // accuracy loss shows up in positivity rather than in the trace.
    MESSAGE("coarse: drift " << rc.max_trace_drift << " min eig " << rc.min_eigenvalue);
    MESSAGE("tight:  drift " << rt.max_trace_drift << " min eig " << rt.min_eigenvalue);
    CHECK(rt.max_trace_drift < 1e-8);
    CHECK(rt.min_eigenvalue >= -1e-8);
    CHECK(rc.min_eigenvalue < rt.min_eigenvalue);
}

TEST_CASE("propagate input validation") {
    const auto m = free_two_level();
    CHECK_THROWS_AS(propagate(m, pure_state(2, 0), {}), Error);
    CHECK_THROWS_AS(propagate(m, pure_state(2, 0), {1.0, 0.5}), Error);
    CHECK_THROWS_AS(propagate(m, pure_state(3, 0), {0.0, 1.0}), Error);
    Matrix bad = pure_state(2, 0);
    bad(1, 1) = -0.5;
    CHECK_THROWS_AS(propagate(m, bad, {0.0, 1.0}), Error);
    const auto tr = propagate(m, pure_state(2, 0), {0.0, 1.0});
    CHECK_THROWS_AS(expectation(tr, Matrix::Identity(3, 3)), Error);
}

TEST_CASE("integrator configuration invariants") {
    IntegratorConfig c;
    c.rel_tol = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.min_steps_per_pulse = 10;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("adaptive stepper reports underflow") {
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-14;
    cfg.abs_tol = 1e-300;
    // dy/dt = y^2 blows up at t = 1.
    OdeStepper st(cfg, [](double, const StateVector& y, StateVector& dy) { dy = y.cwiseProduct(y); }, 1);
    StateVector y(1);
    y(0) = 1.0;
    double t = 0.0;
    CHECK_THROWS_AS(st.advance(t, 2.0, y, 1.0), Error);
}

TEST_CASE("adaptive stepper integrates a rotation accurately") {
    OdeStepper st({}, [](double, const StateVector& y, StateVector& dy) {
        dy = std::complex<double>(0.0, 1.0) * y;
    }, 1);
    StateVector y(1);
    y(0) = 1.0;
    double t = 0.0;
    st.advance(t, 10.0, y, 1e9);
    CHECK(std::abs(y(0) - std::polar(1.0, 10.0)) < 1e-8);
    CHECK(t == 10.0);
}

TEST_CASE("default horizon") {
    GaussianPulse p;
    p.length = 0.05;
    const auto m = build_two_level({}, p);
    CHECK(default_horizon(m) == doctest::Approx(0.2 + 12.0));
    SensorConfig s;
    s.bandwidth = 0.1;
    CHECK(default_horizon(attach_sensor(m, "sigma", s)) == doctest::Approx(0.2 + 120.0));
}

}
