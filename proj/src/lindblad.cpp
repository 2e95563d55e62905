#include "qdf/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "qdf/error.hpp"

namespace qdf {

LindbladEngine::LindbladEngine(const SystemModel& system, const IntegratorConfig& config)
    : system_(system), cfg_(config), dim_(system.dimension) {
    cfg_.validate();
    require(dim_ > 0, ErrorCode::InvalidArgument, "system has zero dimension");
    require(system.static_hamiltonian.rows() == dim_ && system.static_hamiltonian.cols() == dim_,
            ErrorCode::DimensionMismatch, "static Hamiltonian does not match dimension");
    require(static_cast<int>(system.state_scale.size()) == dim_, ErrorCode::DimensionMismatch,
            "state_scale does not match dimension");

    scale_ = Eigen::Map<const Eigen::ArrayXd>(system.state_scale.data(), dim_);
    require((scale_ > 0.0).all(), ErrorCode::InvalidArgument, "state_scale must be positive");

    auto similar = [&](const Matrix& op) -> Matrix {
        // S^-1 op S
        Matrix r = op;
        for (int j = 0; j < dim_; ++j)
            for (int i = 0; i < dim_; ++i) r(i, j) *= scale_(j) / scale_(i);
        return r;
    };

    Matrix k = cplx{0.0, -1.0} * system.static_hamiltonian;
    for (const auto& c : system.channels) {
        require(c.rate >= 0.0, ErrorCode::InvalidArgument, "channel rates must be >= 0");
        require(c.jump.rows() == dim_ && c.jump.cols() == dim_, ErrorCode::DimensionMismatch,
                "jump operator '" + c.label + "' does not match dimension");
        if (c.rate == 0.0) continue;
        k -= 0.5 * c.rate * (c.jump.adjoint() * c.jump);
        jumps_.push_back(similar(std::sqrt(c.rate) * c.jump));
        jumps_adj_.push_back(jumps_.back().adjoint());
    }
    k_static_ = similar(k);

    for (const auto& d : system.drives) {
        require(d.op.rows() == dim_ && d.op.cols() == dim_, ErrorCode::DimensionMismatch,
                "drive operator does not match dimension");
        drive_ops_.push_back(similar(cplx{0.0, -1.0} * d.op));
    }

    if (auto w = system.drive_window()) {
        driven_ = true;
        drive_begin_ = w->first;
        drive_end_ = w->second;
        // min_steps_per_pulse steps across t0 +- 4 tau.
        driven_cap_ = 8.0 * system.shortest_drive_width() / cfg_.min_steps_per_pulse;
    }

    const Matrix id = Matrix::Identity(dim_, dim_);
    free_ = Eigen::kroneckerProduct(id, k_static_);
    free_ += Eigen::kroneckerProduct(k_static_.conjugate(), id);
    for (const auto& c : jumps_) free_ += Eigen::kroneckerProduct(c.conjugate(), c);
}

void LindbladEngine::apply(double t, const Matrix& x, Matrix& out) const {
    Matrix k = k_static_;
    if (driven_at(t))
        for (std::size_t i = 0; i < drive_ops_.size(); ++i)
            k += system_.drives[i].envelope(t) * drive_ops_[i];
    out.noalias() = k * x;
    out.noalias() += x * k.adjoint();
    for (std::size_t i = 0; i < jumps_.size(); ++i) out.noalias() += jumps_[i] * x * jumps_adj_[i];
}

Matrix LindbladEngine::to_scaled(const Matrix& rho) const {
    require(rho.rows() == dim_ && rho.cols() == dim_, ErrorCode::DimensionMismatch,
            "state does not match system dimension");
    Matrix x = rho;
    for (int j = 0; j < dim_; ++j)
        for (int i = 0; i < dim_; ++i) x(i, j) /= scale_(i) * scale_(j);
    return x;
}

Matrix LindbladEngine::from_scaled(const Matrix& x) const {
    Matrix rho = x;
    for (int j = 0; j < dim_; ++j)
        for (int i = 0; i < dim_; ++i) rho(i, j) *= scale_(i) * scale_(j);
    return rho;
}

Matrix LindbladEngine::scaled_observable(const Matrix& a) const {
    require(a.rows() == dim_ && a.cols() == dim_, ErrorCode::DimensionMismatch,
            "operator does not match system dimension");
    return from_scaled(a);
}

Matrix LindbladEngine::scaled_jump(const Matrix& e) const {
    require(e.rows() == dim_ && e.cols() == dim_, ErrorCode::DimensionMismatch,
            "operator does not match system dimension");
    Matrix r = e;
    for (int j = 0; j < dim_; ++j)
        for (int i = 0; i < dim_; ++i) r(i, j) *= scale_(j) / scale_(i);
    return r;
}

double LindbladEngine::scaled_trace(const Matrix& x) const {
    double tr = 0.0;
    for (int i = 0; i < dim_; ++i) tr += scale_(i) * scale_(i) * x(i, i).real();
    return tr;
}

bool LindbladEngine::driven_at(double t) const {
    return driven_ && t >= drive_begin_ && t < drive_end_;
}

const Matrix& LindbladEngine::free_propagator(double h) const {
    require(h >= 0.0 && std::isfinite(h), ErrorCode::InvalidArgument,
            "propagation interval must be finite and >= 0");
    std::lock_guard lock(cache_mutex_);
    // Steps that differ only by rounding share one exponential.
    const double tol = 1e-12 * std::max(h, 1e-300);
    auto it = cache_.lower_bound(h - tol);
    if (it != cache_.end() && it->first <= h + tol) return *it->second;
    Matrix scaled = free_ * h;
    auto p = std::make_unique<Matrix>(scaled.exp());
    return *cache_.emplace(h, std::move(p)).first->second;
}

Evolution::Evolution(const LindbladEngine& engine)
    : engine_(engine),
      stepper_(
          engine.config(),
          [&engine](double t, const StateVector& y, StateVector& dy) {
              const int d = engine.dimension();
              Matrix x = Eigen::Map<const Matrix>(y.data(), d, d);
              Matrix out(d, d);
              engine.apply(t, x, out);
              dy = Eigen::Map<const StateVector>(out.data(), out.size());
          },
          static_cast<Eigen::Index>(engine.dimension()) * engine.dimension()) {}

void Evolution::advance_ode(double& t, double t_end, Matrix& x, double cap) {
    const Eigen::Map<const StateVector> flat(x.data(), x.size());
    // The cached first stage is only valid if x is exactly what we left behind.
    if (!stepper_live_ || t != last_t_ || buffer_.size() != flat.size() || buffer_ != flat) stepper_.invalidate();
    buffer_ = flat;
    stepper_.advance(t, t_end, buffer_, cap);
    x = Eigen::Map<const Matrix>(buffer_.data(), x.rows(), x.cols());
    last_t_ = t;
    stepper_live_ = true;
}

void Evolution::advance(double& t, double t_end, Matrix& x) {
    require(t_end >= t, ErrorCode::InvalidArgument, "cannot propagate backwards in time");
    const auto& cfg = engine_.config();
    while (t < t_end) {
        if (engine_.driven_at(t)) {
            const double seg = std::min(t_end, engine_.drive_end());
            advance_ode(t, seg, x, engine_.driven_step_cap());
            continue;
        }
        const double seg = (t < engine_.drive_begin()) ? std::min(t_end, engine_.drive_begin())
                                                       : t_end;
        if (cfg.exact_free_evolution) {
            const Matrix& p = engine_.free_propagator(seg - t);
            StateVector v = p * Eigen::Map<const StateVector>(x.data(), x.size());
            x = Eigen::Map<const Matrix>(v.data(), x.rows(), x.cols());
            t = seg;
            stepper_live_ = false;
        } else {
            advance_ode(t, seg, x, std::numeric_limits<double>::infinity());
        }
    }
}

}  // namespace qdf
