// dopo.hpp — Degenerate-OPO charging model: Hamiltonian construction,
// mean-field threshold analysis and the charging experiment drivers.

#pragma once

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "dopoqb/dynamics.hpp"
#include "dopoqb/fock.hpp"
#include "dopoqb/work.hpp"

namespace dopoqb {

struct InstabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Charging-stage parameters. Defaults: delta = 0, kappa/gamma_s = 0.5,
/// gamma_p/gamma_s = 16, truncations N_s = 32, N_p = 9.
struct DopoParams {
    double kappa = 0.5;     // signal-pump nonlinear coupling
    double gamma_s = 1.0;   // signal loss rate (sets the time unit)
    double gamma_p = 16.0;  // pump loss rate
    double f_p = 3.0;       // pump drive amplitude, units sqrt(gamma_s)
    double delta = 0.0;     // detuning omega_s - omega_p/2
    Index n_s = 32;         // signal Fock truncation
    Index n_p = 9;          // pump Fock truncation

    void validate() const {
        if (gamma_s <= 0.0 || gamma_p <= 0.0)
            throw std::invalid_argument("DopoParams: loss rates must be positive");
        if (kappa < 0.0) throw std::invalid_argument("DopoParams: coupling must be >= 0");
        if (f_p < 0.0) throw std::invalid_argument("DopoParams: drive amplitude must be >= 0");
        if (n_s < 2 || n_p < 2)
            throw std::invalid_argument("DopoParams: truncations must be at least 2");
    }
};

/// H = delta a_s†a_s + i(kappa/2 a_s†² a_p + sqrt(gamma_p) F_p a_p† - h.c.)
/// on dims [n_s, n_p], with photon-loss collapses (gamma_s, a_s), (gamma_p, a_p).
inline LindbladModel build_model(const DopoParams& p) {
    p.validate();
    const Operator a_s = kron(annihilation(p.n_s), identity(p.n_p));
    const Operator a_p = kron(identity(p.n_s), annihilation(p.n_p));
    const Operator nonherm =
        Complex(0.0, 0.5 * p.kappa) * (a_s.adjoint() * a_s.adjoint() * a_p) +
        Complex(0.0, std::sqrt(p.gamma_p) * p.f_p) * a_p.adjoint();
    const Operator h = p.delta * (a_s.adjoint() * a_s) + nonherm + nonherm.adjoint();
    return LindbladModel(h, {{p.gamma_s, a_s}, {p.gamma_p, a_p}});
}

/// Pump threshold gamma_s sqrt(gamma_p) / (4 kappa); above it the signal
/// mean field at zero becomes unstable.
inline double threshold(const DopoParams& p) {
    p.validate();
    return p.gamma_s * std::sqrt(p.gamma_p) / (4.0 * p.kappa);
}

struct MeanFieldState {
    Complex alpha_s{0.0, 0.0};
    Complex alpha_p{0.0, 0.0};
};

struct MeanFieldTrajectory {
    std::vector<double> times;
    std::vector<MeanFieldState> states;
};

/// Below-threshold stationary pump amplitude 2 F_p / sqrt(gamma_p).
inline Complex pump_steady_amplitude(const DopoParams& p) {
    return Complex(2.0 * p.f_p / std::sqrt(p.gamma_p), 0.0);
}

/// Stability exponents of the alpha_s = 0 fixed point,
/// lambda± = -gamma_s/2 ± kappa |alpha_p|.
inline std::pair<double, double> stability_exponents(const DopoParams& p, Complex alpha_p) {
    const double g = p.kappa * std::abs(alpha_p);
    return {-0.5 * p.gamma_s + g, -0.5 * p.gamma_s - g};
}

/// Semiclassical amplitude equations
///   d alpha_s/dt = -(i delta + gamma_s/2) alpha_s + kappa alpha_s* alpha_p
///   d alpha_p/dt = -(gamma_p/2) alpha_p - (kappa/2) alpha_s² + sqrt(gamma_p) F_p
/// integrated with the shared adaptive RK45 controller.
inline MeanFieldTrajectory meanfield_evolve(const DopoParams& p, const MeanFieldState& s0,
                                            double t_end, double sample_dt,
                                            double rtol = 1e-10, double atol = 1e-12) {
    p.validate();
    if (t_end <= 0.0) throw std::invalid_argument("meanfield_evolve: t_end must be positive");
    if (sample_dt <= 0.0) throw std::invalid_argument("meanfield_evolve: sample_dt must be positive");

    auto rhs_fn = [&p](const DenseMatrix& y, DenseMatrix& dy, DenseMatrix&) {
        const Complex as = y(0, 0), ap = y(1, 0);
        dy.resize(2, 1);
        dy(0, 0) = -(Complex(0.0, p.delta) + 0.5 * p.gamma_s) * as + p.kappa * std::conj(as) * ap;
        dy(1, 0) = -0.5 * p.gamma_p * ap - 0.5 * p.kappa * as * as + std::sqrt(p.gamma_p) * p.f_p;
    };
    auto guard = [](DenseMatrix& y) {
        if (y.cwiseAbs().maxCoeff() > 1e6)
            throw InstabilityError("meanfield_evolve: amplitude diverged beyond 1e6");
    };

    IntegratorOptions opts;
    opts.rtol = rtol;
    opts.atol = atol;
    DenseMatrix y(2, 1);
    y(0, 0) = s0.alpha_s;
    y(1, 0) = s0.alpha_p;
    detail::Dopri5Stepper<decltype(rhs_fn), decltype(guard)> stepper(rhs_fn, guard, opts, y);

    MeanFieldTrajectory traj;
    double t = 0.0;
    traj.times.push_back(0.0);
    traj.states.push_back(s0);
    const auto n_samples = static_cast<long>(std::ceil(t_end / sample_dt - 1e-9));
    for (long k = 1; k <= n_samples; ++k) {
        const double ts = std::min(k * sample_dt, t_end);
        stepper.advance_to(t, y, ts);
        traj.times.push_back(ts);
        traj.states.push_back({y(0, 0), y(1, 0)});
    }
    return traj;
}

/// Sampled charging record: ergotropy components, average power, mode
/// populations and field amplitudes, plus truncation/integrator diagnostics.
struct ErgotropyTrajectory {
    std::vector<double> times;
    std::vector<double> total;        // W
    std::vector<double> coherent;     // W^c
    std::vector<double> incoherent;   // W^i
    std::vector<double> power;        // P = W/t
    std::vector<double> n_signal;     // <a_s† a_s>
    std::vector<double> n_pump;       // <a_p† a_p>
    std::vector<Complex> alpha_signal;
    std::vector<Complex> alpha_pump;
    std::vector<double> top_pop_signal;  // population of the highest kept level
    std::vector<double> top_pop_pump;
    double max_trace_drift = 0.0;
    double min_eigenvalue = 0.0;
    bool truncation_warning = false;  // top-level population exceeded 1e-4
};

namespace detail {

/// Observable kit shared by the charging drivers.
struct ChargeObserver {
    const DopoParams& p;
    Operator h_s, num_s, num_p, a_s, a_p;
    ErgotropyTrajectory& out;

    ChargeObserver(const DopoParams& params, ErgotropyTrajectory& traj)
        : p(params),
          h_s(params.gamma_s * number(params.n_s)),  // omega_s expressed in gamma_s units
          num_s(number(params.n_s)),
          num_p(number(params.n_p)),
          a_s(annihilation(params.n_s)),
          a_p(annihilation(params.n_p)),
          out(traj) {}

    void operator()(double t, const DensityMatrix& rho) {
        const DensityMatrix rho_s = partial_trace(rho, {0});
        const DensityMatrix rho_p = partial_trace(rho, {1});
        const ErgotropyBreakdown w = split(rho_s, h_s);
        out.times.push_back(t);
        out.total.push_back(w.total);
        out.coherent.push_back(w.coherent);
        out.incoherent.push_back(w.incoherent);
        out.n_signal.push_back(expectation(rho_s, num_s).real());
        out.n_pump.push_back(expectation(rho_p, num_p).real());
        out.alpha_signal.push_back(expectation(rho_s, a_s));
        out.alpha_pump.push_back(expectation(rho_p, a_p));
        const double tops = rho_s.matrix()(p.n_s - 1, p.n_s - 1).real();
        const double topp = rho_p.matrix()(p.n_p - 1, p.n_p - 1).real();
        out.top_pop_signal.push_back(tops);
        out.top_pop_pump.push_back(topp);
        if (tops > 1e-4 || topp > 1e-4) out.truncation_warning = true;
        out.max_trace_drift =
            std::max(out.max_trace_drift, std::abs(rho.matrix().trace() - Complex(1.0)));
        out.min_eigenvalue = std::min(out.min_eigenvalue, rho.min_eigenvalue());
    }
};

}  // namespace detail

/// Charge the battery from the two-mode vacuum and record the ergotropy
/// trajectory of the reduced signal state.
inline ErgotropyTrajectory charge(const DopoParams& p, double t_end, double sample_dt,
                                  const IntegratorOptions& opts = {}) {
    const LindbladModel model = build_model(p);
    const DensityMatrix rho0 = kron(vacuum(p.n_s), vacuum(p.n_p));
    ErgotropyTrajectory traj;
    detail::ChargeObserver obs(p, traj);
    evolve(model, rho0, t_end, sample_dt, opts,
           [&obs](double t, const DensityMatrix& rho) { obs(t, rho); });
    traj.power = avg_power(traj.total, traj.times);
    return traj;
}

/// Charge until t_off, then switch the pump drive off instantaneously
/// (F_p -> 0, everything else unchanged) and continue to t_end.
inline ErgotropyTrajectory charge_with_switchoff(const DopoParams& p, double t_off, double t_end,
                                                 double sample_dt,
                                                 const IntegratorOptions& opts = {}) {
    if (!(t_off > 0.0 && t_off < t_end))
        throw std::invalid_argument("charge_with_switchoff: need 0 < t_off < t_end");
    const LindbladModel on = build_model(p);
    const DensityMatrix rho0 = kron(vacuum(p.n_s), vacuum(p.n_p));

    ErgotropyTrajectory traj;
    detail::ChargeObserver obs(p, traj);
    DenseMatrix at_off;
    evolve(on, rho0, t_off, sample_dt, opts, [&](double t, const DensityMatrix& rho) {
        obs(t, rho);
        at_off = rho.matrix();
    });

    DopoParams off_params = p;
    off_params.f_p = 0.0;
    const LindbladModel off = build_model(off_params);
    const DensityMatrix rho_off(at_off, on.dims(), opts.state_tol);
    evolve(off, rho_off, t_end - t_off, sample_dt, opts, [&](double t, const DensityMatrix& rho) {
        if (t == 0.0) return;  // already recorded as the t_off sample
        obs(t_off + t, rho);
    });
    traj.power = avg_power(traj.total, traj.times);
    return traj;
}

}  // namespace dopoqb
