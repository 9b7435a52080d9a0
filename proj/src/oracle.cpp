#include "hmw/oracle.hpp"

#include "hmw/error.hpp"
#include "hmw/kernels.hpp"
#include "hmw/phases.hpp"

#include <cmath>

namespace hmw {

std::complex<double> ComplexFringeAmplitude::value() const {
    return std::polar(modulus, argument);
}

ComplexFringeAmplitude ComplexFringeAmplitude::from(std::complex<double> z) {
    return {std::abs(z), std::arg(z)};
}

namespace {

double mean_stark_residual(double v_volts, const StarkCalibration& cal) {
    const double ku = cal.phi_upper_per_v2;
    const double kl = cal.phi_lower_per_v2;
    return cal.residual_per_v2 * v_volts * v_volts +
           2.0 * v_volts * (ku * cal.contact_upper_v + kl * cal.contact_lower_v) +
           ku * cal.contact_upper_v * cal.contact_upper_v +
           kl * cal.contact_lower_v * cal.contact_lower_v;
}

std::complex<double> amplitude_on_grids(const FieldConfiguration& cfg, const Scenario& sc,
                                        const VelocityGrid& vgrid, const std::vector<double>& y,
                                        const std::vector<double>& yw) {
    const std::size_t ny = y.size();
    const double V = cfg.v_volts;
    const double vm = sc.beam.mean_velocity;

    const auto set = pair_phase_set(cfg.i_amps, cfg.i_comp_amps, sc.zeeman);
    const auto weights = pair_weights(sc.chi);
    const double phi_hmw = hmw_phase(V, cfg.i_amps, sc.hmw_per_va);
    const double phi_s_mean = mean_stark_residual(V, sc.stark);

    // resample profiles if the caller supplied a refined y-grid
    std::vector<double> prof_d(ny), prof_s(ny), prof_z(ny);
    const bool native = ny == sc.beam.y.size();
    for (std::size_t i = 0; i < ny; ++i) {
        double dv, gv, cv, zv;
        if (native) {
            dv = sc.profiles.diffraction[i];
            gv = sc.profiles.stark_geom[i];
            cv = sc.profiles.stark_contact[i];
            zv = sc.profiles.zeeman[i];
        } else {
            // linear interpolation on the native grid
            const auto& yn = sc.beam.y;
            const double t = (y[i] - yn.front()) / (yn.back() - yn.front());
            const double fpos = t * static_cast<double>(yn.size() - 1);
            const std::size_t k = std::min(static_cast<std::size_t>(fpos), yn.size() - 2);
            const double f = fpos - static_cast<double>(k);
            auto lerp = [&](const std::vector<double>& p) {
                return p[k] * (1.0 - f) + p[k + 1] * f;
            };
            dv = lerp(sc.profiles.diffraction);
            gv = lerp(sc.profiles.stark_geom);
            cv = lerp(sc.profiles.stark_contact);
            zv = lerp(sc.profiles.zeeman);
        }
        prof_d[i] = dv;
        prof_s[i] = gv * V * V + cv * V;
        prof_z[i] = zv;
    }

    std::vector<double> phase(ny);
    std::complex<double> total{0.0, 0.0};
    // fixed summation order: pairs, then members, then velocities
    for (int m : kPairLabels) {
        const int idx = pair_index(m);
        const double phi_z = set.phi_z[idx];
        const double dz_scale = set.dz_scale[idx];
        const double phi_ac = ac_phase(m, V, sc.ac_per_v);
        const double member_w[2] = {weights.plus[idx], weights.minus[idx]};
        const double member_sign[2] = {1.0, -1.0};
        for (int mem = 0; mem < 2; ++mem) {
            const double sgn = member_sign[mem];
            const double base0 = sgn * (phi_z + phi_ac) + phi_hmw;
            std::complex<double> member_sum{0.0, 0.0};
            for (std::size_t iv = 0; iv < vgrid.v.size(); ++iv) {
                const double r = vm / vgrid.v[iv];
                const double base = base0 + phi_s_mean * r;
                for (std::size_t i = 0; i < ny; ++i) {
                    phase[i] = base + prof_d[i] + prof_s[i] * r + sgn * dz_scale * prof_z[i];
                }
                const auto acc = kernels::phasor_sum(yw.data(), phase.data(), ny);
                member_sum += vgrid.w[iv] * std::complex<double>(acc.re, acc.im);
            }
            total += member_w[mem] * member_sum;
        }
    }
    return total;
}

} // namespace

ComplexFringeAmplitude brute_force_signal_grid(const FieldConfiguration& cfg, const Scenario& sc,
                                               const VelocityGrid& vgrid,
                                               const std::vector<double>& y,
                                               const std::vector<double>& yw) {
    return ComplexFringeAmplitude::from(amplitude_on_grids(cfg, sc, vgrid, y, yw));
}

ComplexFringeAmplitude brute_force_signal(const FieldConfiguration& cfg, const Scenario& sc) {
    const auto vgrid = supersonic_velocity_grid(sc.beam.mean_velocity, sc.beam.speed_ratio, 101);
    return brute_force_signal_grid(cfg, sc, vgrid, sc.beam.y, sc.beam.y_weight);
}

OracleRelative oracle_relative(const FieldConfiguration& cfg, const Scenario& sc) {
    const auto vgrid = supersonic_velocity_grid(sc.beam.mean_velocity, sc.beam.speed_ratio, 101);
    const auto a = amplitude_on_grids(cfg, sc, vgrid, sc.beam.y, sc.beam.y_weight);
    FieldConfiguration zero;
    const auto a0 = amplitude_on_grids(zero, sc, vgrid, sc.beam.y, sc.beam.y_weight);
    OracleRelative rel;
    rel.ratio = a / a0;
    rel.v_rel = std::abs(rel.ratio);
    rel.phase = std::arg(rel.ratio);
    return rel;
}

ReducedPoint brute_force_reduced(double v_volts, double i_amps, const Scenario& sc) {
    const auto vgrid = supersonic_velocity_grid(sc.beam.mean_velocity, sc.beam.speed_ratio, 101);
    const double ic = sc.compensator.current_for(i_amps);
    auto amp = [&](double V, double I, double IC, ConfigLabel label) {
        FieldConfiguration cfg{V, I, IC, label};
        return amplitude_on_grids(cfg, sc, vgrid, sc.beam.y, sc.beam.y_weight);
    };

    const auto a00 = amp(0.0, 0.0, 0.0, ConfigLabel::zero_zero);
    const auto av0 = amp(v_volts, 0.0, 0.0, ConfigLabel::v_zero);
    const auto avi = amp(v_volts, i_amps, ic, ConfigLabel::v_i);
    const auto a0i = amp(0.0, i_amps, ic, ConfigLabel::zero_i);
    const auto ami = amp(-v_volts, i_amps, ic, ConfigLabel::mv_i);
    const auto am0 = amp(-v_volts, 0.0, 0.0, ConfigLabel::mv_zero);

    auto vis = [](std::complex<double> z) { return std::abs(z); };
    auto ph = [](std::complex<double> z) { return std::arg(z); };

    ReducedPoint r;
    r.v_volts = v_volts;
    r.i_amps = i_amps;
    r.n_scans = 0;
    r.ve = {vis(av0) / vis(a00), 0.0};
    r.phie = {ph(av0) - ph(a00), 0.0};
    r.vb = {vis(a0i) / vis(a00), 0.0};
    r.phib = {ph(a0i) - ph(a00), 0.0};
    r.veb = {vis(avi) * vis(a00) / (vis(av0) * vis(a0i)), 0.0};
    r.phieb = {ph(avi) - ph(av0) - ph(a0i) + ph(a00), 0.0};
    r.has_minus_v = true;
    r.ve_m = {vis(am0) / vis(a00), 0.0};
    r.phie_m = {ph(am0) - ph(a00), 0.0};
    r.veb_m = {vis(ami) * vis(a00) / (vis(am0) * vis(a0i)), 0.0};
    r.phieb_m = {ph(ami) - ph(am0) - ph(a0i) + ph(a00), 0.0};
    r.chi_estimate = sc.chi;
    return r;
}

ConvergenceReport oracle_convergence_check(const std::vector<FieldConfiguration>& cfgs,
                                           const Scenario& sc, double tol) {
    const auto v1 = supersonic_velocity_grid(sc.beam.mean_velocity, sc.beam.speed_ratio, 101);
    const auto v2 = supersonic_velocity_grid(sc.beam.mean_velocity, sc.beam.speed_ratio, 201);
    const std::size_t ny2 = 2 * sc.beam.y.size() - 1;
    std::vector<double> y2(ny2);
    for (std::size_t i = 0; i < ny2; ++i) {
        y2[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(ny2 - 1);
    }
    const auto w2 = simpson_weights(ny2);

    ConvergenceReport rep;
    for (const auto& cfg : cfgs) {
        const auto a = amplitude_on_grids(cfg, sc, v1, sc.beam.y, sc.beam.y_weight);
        const auto b = amplitude_on_grids(cfg, sc, v2, y2, w2);
        rep.max_modulus_shift = std::max(rep.max_modulus_shift, std::fabs(std::abs(a) - std::abs(b)));
        double da = std::remainder(std::arg(a) - std::arg(b), 2.0 * M_PI);
        rep.max_argument_shift = std::max(rep.max_argument_shift, std::fabs(da));
    }
    if (rep.max_modulus_shift > tol || rep.max_argument_shift > tol) {
        fail_oracle("oracle grids not converged: modulus shift " +
                    std::to_string(rep.max_modulus_shift) + ", argument shift " +
                    std::to_string(rep.max_argument_shift));
    }
    return rep;
}

std::complex<double> pair_amplitude(int pair_m, const FieldConfiguration& cfg, const Scenario& sc) {
    const auto vgrid = supersonic_velocity_grid(sc.beam.mean_velocity, sc.beam.speed_ratio, 101);
    const auto set = pair_phase_set(cfg.i_amps, cfg.i_comp_amps, sc.zeeman);
    const int idx = pair_index(pair_m);
    const double V = cfg.v_volts;
    const double vm = sc.beam.mean_velocity;
    const double phi_hmw = hmw_phase(V, cfg.i_amps, sc.hmw_per_va);
    const double phi_ac = ac_phase(pair_m, V, sc.ac_per_v);
    const double phi_s_mean = mean_stark_residual(V, sc.stark);

    const std::size_t ny = sc.beam.y.size();
    std::vector<double> phase(ny);
    std::complex<double> total{0.0, 0.0};
    for (double sgn : {1.0, -1.0}) {
        std::complex<double> msum{0.0, 0.0};
        for (std::size_t iv = 0; iv < vgrid.v.size(); ++iv) {
            const double r = vm / vgrid.v[iv];
            const double base = sgn * (set.phi_z[idx] + phi_ac) + phi_hmw + phi_s_mean * r;
            for (std::size_t i = 0; i < ny; ++i) {
                const double s = sc.profiles.stark_geom[i] * V * V +
                                 sc.profiles.stark_contact[i] * V;
                phase[i] = base + sc.profiles.diffraction[i] + s * r +
                           sgn * set.dz_scale[idx] * sc.profiles.zeeman[i];
            }
            const auto acc = kernels::phasor_sum(sc.beam.y_weight.data(), phase.data(), ny);
            msum += vgrid.w[iv] * std::complex<double>(acc.re, acc.im);
        }
        total += 0.5 * msum;
    }
    return total;
}

} // namespace hmw
