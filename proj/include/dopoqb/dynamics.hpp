// dynamics.hpp — Lindblad master-equation right-hand side and an adaptive
// Dormand–Prince 5(4) integrator with state-validity guards.

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "dopoqb/fock.hpp"

namespace dopoqb {

/// Raised when the integrator cannot continue; carries the time at which
/// integration failed.
struct IntegrationError : std::runtime_error {
    double t_fail;
    IntegrationError(const std::string& what, double t)
        : std::runtime_error(what), t_fail(t) {}
};

struct Collapse {
    double rate;
    Operator op;
};

namespace detail {

// C += alpha * A * B, A sparse (compressed CSC), B and C dense col-major.
// Written against raw re/im pairs so the inner updates vectorize.
inline void spmm_acc_left(Complex alpha, const SparseMatrix& A, const DenseMatrix& B,
                          DenseMatrix& C) {
    const Index n = A.rows(), cols = B.cols();
    const auto* outer = A.outerIndexPtr();
    const auto* inner = A.innerIndexPtr();
    const Complex* vals = A.valuePtr();
    for (Index j = 0; j < cols; ++j) {
        const Complex* bcol = B.data() + j * n;
        Complex* ccol = C.data() + j * n;
        for (Index k = 0; k < n; ++k) {
            const Complex b = alpha * bcol[k];
            for (auto p = outer[k]; p < outer[k + 1]; ++p) {
                const Complex v = vals[p];
                Complex& c = ccol[inner[p]];
                c += Complex(v.real() * b.real() - v.imag() * b.imag(),
                             v.real() * b.imag() + v.imag() * b.real());
            }
        }
    }
}

// C += alpha * B * A, contiguous complex axpy per nonzero of A.
inline void spmm_acc_right(Complex alpha, const DenseMatrix& B, const SparseMatrix& A,
                           DenseMatrix& C) {
    const Index n = B.rows();
    const auto* outer = A.outerIndexPtr();
    const auto* inner = A.innerIndexPtr();
    const Complex* vals = A.valuePtr();
    for (Index j = 0; j < A.cols(); ++j) {
        double* c = reinterpret_cast<double*>(C.data() + j * n);
        for (auto p = outer[j]; p < outer[j + 1]; ++p) {
            const Complex av = alpha * vals[p];
            const double ar = av.real(), ai = av.imag();
            const double* b = reinterpret_cast<const double*>(B.data() + inner[p] * n);
            for (Index i = 0; i < n; ++i) {
                c[2 * i] += ar * b[2 * i] - ai * b[2 * i + 1];
                c[2 * i + 1] += ar * b[2 * i + 1] + ai * b[2 * i];
            }
        }
    }
}

// y <- (y + y†)/2 in place.
inline void hermitize(DenseMatrix& y) {
    const Index n = y.rows();
    for (Index j = 0; j < n; ++j) {
        y(j, j) = Complex(y(j, j).real(), 0.0);
        for (Index i = j + 1; i < n; ++i) {
            const Complex m = 0.5 * (y(i, j) + std::conj(y(j, i)));
            y(i, j) = m;
            y(j, i) = std::conj(m);
        }
    }
}

}  // namespace detail

/// Hamiltonian plus (rate, collapse operator) pairs: the full generator
/// d rho/dt = -i[H,rho] + sum_j g_j (L_j rho L_j† - ½{L_j†L_j, rho}).
class LindbladModel {
public:
    LindbladModel(Operator hamiltonian, std::vector<Collapse> collapses,
                  double herm_tol = 1e-12)
        : h_(std::move(hamiltonian)), collapses_(std::move(collapses)) {
        if (!h_.is_hermitian(herm_tol))
            throw std::invalid_argument("LindbladModel: Hamiltonian is not Hermitian");
        for (const Collapse& c : collapses_) {
            if (c.rate < 0.0)
                throw std::invalid_argument("LindbladModel: negative collapse rate");
            if (c.op.dims() != h_.dims())
                throw DimensionError("LindbladModel: collapse operator on a different space");
        }
        // Cache the non-Hermitian drift H_eff = H - (i/2) sum g L†L; the RHS
        // is then -i(H_eff rho - rho H_eff†) + sum g L rho L†.
        SparseMatrix heff = h_.matrix();
        for (const Collapse& c : collapses_) {
            SparseMatrix ldl = SparseMatrix(c.op.matrix().adjoint()) * c.op.matrix();
            heff = heff - Complex(0.0, 0.5 * c.rate) * ldl;
            adjoints_.emplace_back(c.op.matrix().adjoint());
            adjoints_.back().makeCompressed();
        }
        heff_ = heff;
        heff_dag_ = heff.adjoint();
        heff_.makeCompressed();
        heff_dag_.makeCompressed();
    }

    const Operator& hamiltonian() const { return h_; }
    const std::vector<Collapse>& collapses() const { return collapses_; }
    const Dims& dims() const { return h_.dims(); }
    Index order() const { return h_.order(); }

    /// d rho/dt for a raw (not necessarily unit-trace) matrix.
    void apply_rhs(const DenseMatrix& rho, DenseMatrix& out, DenseMatrix& work) const {
        out.setZero();
        detail::spmm_acc_left(Complex(0.0, -1.0), heff_, rho, out);
        detail::spmm_acc_right(Complex(0.0, 1.0), rho, heff_dag_, out);
        for (std::size_t j = 0; j < collapses_.size(); ++j) {
            work.setZero();
            detail::spmm_acc_left(Complex(1.0, 0.0), collapses_[j].op.matrix(), rho, work);
            detail::spmm_acc_right(Complex(collapses_[j].rate, 0.0), work, adjoints_[j], out);
        }
    }

private:
    Operator h_;
    std::vector<Collapse> collapses_;
    std::vector<SparseMatrix> adjoints_;
    SparseMatrix heff_, heff_dag_;
};

inline DenseMatrix rhs(const LindbladModel& model, const DensityMatrix& rho) {
    if (rho.order() != model.order())
        throw std::invalid_argument("rhs: state and model dimensions differ");
    DenseMatrix out(rho.order(), rho.order()), work(rho.order(), rho.order());
    model.apply_rhs(rho.matrix(), out, work);
    return out;
}

struct IntegratorOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
    double fixed_step = 0.0;  // > 0 disables adaptivity and uses this step
    ValidityTolerances state_tol = ValidityTolerances::evolution();
};

/// Sampled trajectory of a master-equation integration.
struct Trajectory {
    std::vector<double> times;
    std::vector<DensityMatrix> states;
};

namespace detail {

// Dormand–Prince 5(4) coefficients (FSAL).
struct Dopri5Tableau {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // b(5th) - b(4th), for the embedded error estimate
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

/// Adaptive embedded RK45 on a matrix-valued ODE. `Rhs` fills dy from y;
/// `PostStep` is applied to the state after every accepted step.
template <class Rhs, class PostStep>
class Dopri5Stepper {
public:
    Dopri5Stepper(Rhs rhs, PostStep post, const IntegratorOptions& opts, const DenseMatrix& y0)
        : rhs_(std::move(rhs)), post_(std::move(post)), opts_(opts) {
        const Index r = y0.rows(), c = y0.cols();
        for (DenseMatrix* m : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_, &err_, &work_})
            m->resize(r, c);
        have_k1_ = false;
        h_ = 0.0;
    }

    /// Advance y in place from t to t_target.
    void advance_to(double& t, DenseMatrix& y, double t_target) {
        using T = Dopri5Tableau;
        if (t_target <= t) return;
        if (opts_.fixed_step > 0.0) h_ = opts_.fixed_step;
        if (h_ <= 0.0) h_ = initial_step(y);

        while (t < t_target) {
            const bool clipped = t + h_ >= t_target;
            const double h = clipped ? t_target - t : h_;

            if (!have_k1_) {
                rhs_(y, k1_, work_);
                have_k1_ = true;
            }
            ytmp_ = y + h * T::a21 * k1_;
            rhs_(ytmp_, k2_, work_);
            ytmp_ = y + h * (T::a31 * k1_ + T::a32 * k2_);
            rhs_(ytmp_, k3_, work_);
            ytmp_ = y + h * (T::a41 * k1_ + T::a42 * k2_ + T::a43 * k3_);
            rhs_(ytmp_, k4_, work_);
            ytmp_ = y + h * (T::a51 * k1_ + T::a52 * k2_ + T::a53 * k3_ + T::a54 * k4_);
            rhs_(ytmp_, k5_, work_);
            ytmp_ = y + h * (T::a61 * k1_ + T::a62 * k2_ + T::a63 * k3_ + T::a64 * k4_ +
                             T::a65 * k5_);
            rhs_(ytmp_, k6_, work_);
            // 5th-order solution; also the last stage node (FSAL)
            ytmp_ = y + h * (T::b1 * k1_ + T::b3 * k3_ + T::b4 * k4_ + T::b5 * k5_ +
                             T::b6 * k6_);
            rhs_(ytmp_, k7_, work_);

            if (opts_.fixed_step > 0.0) {
                y.swap(ytmp_);
                k1_.swap(k7_);
                post_(y);
                t = clipped ? t_target : t + h;
                continue;
            }

            err_ = h * (T::e1 * k1_ + T::e3 * k3_ + T::e4 * k4_ + T::e5 * k5_ + T::e6 * k6_ +
                        T::e7 * k7_);
            const double err = error_norm(y, ytmp_);

            if (err <= 1.0) {
                t = clipped ? t_target : t + h;
                y.swap(ytmp_);
                k1_.swap(k7_);
                post_(y);
                const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
                const double facmax = just_rejected_ ? 1.0 : 5.0;
                just_rejected_ = false;
                h_ = h * std::min(facmax, std::max(0.2, grow));
                h_ = std::min(h_, opts_.max_step);
            } else {
                just_rejected_ = true;
                h_ = h * std::max(0.2, std::isfinite(err) ? 0.9 * std::pow(err, -0.2) : 0.2);
                have_k1_ = true;  // k1 still valid at unchanged (t, y)
                if (h_ < 1e-14 * std::max(1.0, std::abs(t)))
                    throw IntegrationError("step size underflow", t);
            }
        }
    }

private:
    // per-entry control: the worst-scaled entry decides acceptance
    double error_norm(const DenseMatrix& y, const DenseMatrix& ynew) const {
        const Index count = y.size();
        const double* ya = reinterpret_cast<const double*>(y.data());
        const double* yb = reinterpret_cast<const double*>(ynew.data());
        const double* ea = reinterpret_cast<const double*>(err_.data());
        const double atol = opts_.atol, rtol = opts_.rtol;
        double worst = 0.0;
        for (Index i = 0; i < count; ++i) {
            const double m2 = std::max(ya[2 * i] * ya[2 * i] + ya[2 * i + 1] * ya[2 * i + 1],
                                       yb[2 * i] * yb[2 * i] + yb[2 * i + 1] * yb[2 * i + 1]);
            const double scale = atol + rtol * std::sqrt(m2);
            const double e2 = ea[2 * i] * ea[2 * i] + ea[2 * i + 1] * ea[2 * i + 1];
            const double q = e2 / (scale * scale);
            if (!(q >= 0.0)) return std::numeric_limits<double>::infinity();  // NaN guard
            worst = std::max(worst, q);
        }
        return std::sqrt(worst);
    }

    double initial_step(const DenseMatrix& y) {
        rhs_(y, k1_, work_);
        have_k1_ = true;
        const double dy = k1_.cwiseAbs().maxCoeff();
        const double scale = opts_.atol + opts_.rtol * std::max(1.0, y.cwiseAbs().maxCoeff());
        const double h0 = dy > 0.0 ? 0.01 * std::sqrt(scale / dy) : 1e-6;
        return std::min(h0, opts_.max_step);
    }

    Rhs rhs_;
    PostStep post_;
    IntegratorOptions opts_;
    DenseMatrix k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, err_, work_;
    double h_;
    bool have_k1_;
    bool just_rejected_ = false;
};

}  // namespace detail

/// Integrate the master equation, invoking `observer(t, state)` at every
/// multiple of sample_dt (t = 0 and t = t_end included). Sampled states are
/// validated against opts.state_tol; failures surface as IntegrationError.
inline void evolve(const LindbladModel& model, const DensityMatrix& rho0, double t_end,
                   double sample_dt, const IntegratorOptions& opts,
                   const std::function<void(double, const DensityMatrix&)>& observer) {
    if (t_end <= 0.0) throw std::invalid_argument("evolve: t_end must be positive");
    if (sample_dt <= 0.0) throw std::invalid_argument("evolve: sample_dt must be positive");
    if (rho0.dims() != model.dims())
        throw std::invalid_argument("evolve: state and model dimensions differ");

    auto rhs_fn = [&model](const DenseMatrix& y, DenseMatrix& dy, DenseMatrix& work) {
        model.apply_rhs(y, dy, work);
    };
    // Accumulating floating-point asymmetry is removed after every accepted
    // step; physics is unchanged beyond roundoff.
    auto post = [](DenseMatrix& y) { detail::hermitize(y); };

    detail::Dopri5Stepper<decltype(rhs_fn), decltype(post)> stepper(rhs_fn, post, opts,
                                                                    rho0.matrix());

    DenseMatrix y = rho0.matrix();
    double t = 0.0;

    auto sample = [&](double ts, const DenseMatrix& m) {
        try {
            observer(ts, DensityMatrix(m, model.dims(), opts.state_tol));
        } catch (const StateValidationError& e) {
            std::ostringstream os;
            os << "evolve: invalid state at t=" << ts << ": " << e.what();
            throw IntegrationError(os.str(), ts);
        }
    };

    sample(0.0, y);
    const auto n_samples = static_cast<long>(std::ceil(t_end / sample_dt - 1e-9));
    for (long k = 1; k <= n_samples; ++k) {
        const double ts = std::min(k * sample_dt, t_end);
        stepper.advance_to(t, y, ts);
        sample(ts, y);
    }
}

/// Convenience wrapper collecting the full sampled trajectory. Memory grows
/// with order^2 per sample; large composites should prefer the observer form.
inline Trajectory evolve(const LindbladModel& model, const DensityMatrix& rho0, double t_end,
                         double sample_dt, const IntegratorOptions& opts = {}) {
    Trajectory traj;
    evolve(model, rho0, t_end, sample_dt, opts,
           [&traj](double t, const DensityMatrix& state) {
               traj.times.push_back(t);
               traj.states.push_back(state);
           });
    return traj;
}

}  // namespace dopoqb
