// lindblad.hpp: master-equation generator and propagation engine
//
// States are held in a diagonally rescaled representation
//     rho = S x S,   S = diag(system.state_scale)
// so that weakly populated sensor sectors carry O(1) numbers. The generator
// keeps its Lindblad form in x: dx/dt = K x + x K^dagger + sum_c c x c^dagger
// with K = S^-1 (-i H - 1/2 sum r L^dagger L) S and c = sqrt(r) S^-1 L S.

#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "qdf/integrator.hpp"
#include "qdf/model.hpp"

namespace qdf {

class LindbladEngine {
public:
    LindbladEngine(const SystemModel& system, const IntegratorConfig& config);

    int dimension() const { return dim_; }
    const IntegratorConfig& config() const { return cfg_; }
    const SystemModel& system() const { return system_; }

    /// out = L(t) x for a scaled state x.
    void apply(double t, const Matrix& x, Matrix& out) const;

    Matrix to_scaled(const Matrix& rho) const;
    Matrix from_scaled(const Matrix& x) const;
    /// Operator whose trace against x equals tr(A rho).
    Matrix scaled_observable(const Matrix& a) const;
    /// Operator e' with (e rho e^dagger) in scaled form equal to e' x e'^dagger.
    Matrix scaled_jump(const Matrix& e) const;
    double scaled_trace(const Matrix& x) const;

    /// Drive-free generator as a d^2 x d^2 matrix on column-major vec(x).
    const Matrix& free_generator() const { return free_; }
    /// exp(free_generator * h), computed once per distinct h and shared.
    const Matrix& free_propagator(double h) const;

    /// True inside the union hull of the drive supports.
    bool driven_at(double t) const;
    double drive_begin() const { return drive_begin_; }
    double drive_end() const { return drive_end_; }
    /// Step cap inside the driven window.
    double driven_step_cap() const { return driven_cap_; }

private:
    SystemModel system_;
    IntegratorConfig cfg_;
    int dim_;
    Eigen::ArrayXd scale_;
    Matrix k_static_;
    std::vector<Matrix> drive_ops_;  // -i S^-1 op S
    std::vector<Matrix> jumps_;
    std::vector<Matrix> jumps_adj_;
    Matrix free_;
    bool driven_{false};
    double drive_begin_{0.0};
    double drive_end_{0.0};
    double driven_cap_{0.0};

    mutable std::mutex cache_mutex_;
    mutable std::map<double, std::unique_ptr<Matrix>> cache_;
};

/// Propagates one scaled state. Each instance is sequential; create one per
/// independent trajectory.
class Evolution {
public:
    explicit Evolution(const LindbladEngine& engine);

    /// Advances x from t to t_end (t_end >= t), landing exactly on t_end.
    void advance(double& t, double t_end, Matrix& x);

    long accepted_steps() const { return stepper_.accepted_steps(); }

private:
    void advance_ode(double& t, double t_end, Matrix& x, double cap);

    const LindbladEngine& engine_;
    OdeStepper stepper_;
    StateVector buffer_;
    double last_t_{0.0};
    bool stepper_live_{false};
};

}  // namespace qdf
