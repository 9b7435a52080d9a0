#include "hmw/signal_model.hpp"

#include "hmw/kernels.hpp"

#include <cmath>

namespace hmw {

namespace {

double mean_stark_phase(double v_volts, const StarkCalibration& cal) {
    // both capacitors on, voltage ratio tuned: residual quadratic term plus the
    // V-odd and constant contact-potential parts
    const double ku = cal.phi_upper_per_v2;
    const double kl = cal.phi_lower_per_v2;
    return cal.residual_per_v2 * v_volts * v_volts +
           2.0 * v_volts * (ku * cal.contact_upper_v + kl * cal.contact_lower_v) +
           ku * cal.contact_upper_v * cal.contact_upper_v +
           kl * cal.contact_lower_v * cal.contact_lower_v;
}

} // namespace

DNTerms dn_terms(const FieldConfiguration& cfg, const Scenario& sc) {
    const BeamModel& beam = sc.beam;
    const std::size_t n = beam.y.size();
    const double* w = beam.y_weight.data();
    const double* d = sc.profiles.diffraction.data();
    const double V = cfg.v_volts;

    std::vector<double> sg(n), scv(n);
    for (std::size_t i = 0; i < n; ++i) {
        sg[i] = sc.profiles.stark_geom[i] * V * V;
        scv[i] = sc.profiles.stark_contact[i] * V;
    }
    std::vector<double> s_full(n), dpsg(n), dps(n);
    for (std::size_t i = 0; i < n; ++i) {
        s_full[i] = sg[i] + scv[i];
        dpsg[i] = d[i] + sg[i];
        dps[i] = d[i] + s_full[i];
    }

    using kernels::wdot2;
    using kernels::wdot3;
    const double dd = wdot2(w, d, d, n);
    const double d_sg = wdot2(w, d, sg.data(), n);
    const double d_sc = wdot2(w, d, scv.data(), n);
    const double sg_sg = wdot2(w, sg.data(), sg.data(), n);
    const double sc_sc = wdot2(w, scv.data(), scv.data(), n);
    const double sg_sc = wdot2(w, sg.data(), scv.data(), n);
    const double dps2 = wdot2(w, dps.data(), dps.data(), n);
    const double dpsg2 = dd + 2.0 * d_sg + sg_sg;
    const double dps3 = wdot3(w, dps.data(), dps.data(), dps.data(), n);
    const double dpsg3 = wdot3(w, dpsg.data(), dpsg.data(), dpsg.data(), n);

    const auto set = pair_phase_set(cfg.i_amps, cfg.i_comp_amps, sc.zeeman);

    DNTerms out;
    out.d0_b0 = 1.0 + std::cos(sc.zeeman.j0) + 2.0 * std::cos(0.5 * sc.zeeman.j0);
    out.d_ac_b0 = -(sc.ac_per_v * V) * (std::sin(sc.zeeman.j0) + std::sin(0.5 * sc.zeeman.j0));

    std::vector<double> z(n), dpsgz(n);
    for (int m : kPairLabels) {
        const int idx = pair_index(m);
        const double zs = set.dz_scale[idx];
        for (std::size_t i = 0; i < n; ++i) {
            z[i] = zs * sc.profiles.zeeman[i];
            dpsgz[i] = dpsg[i];
        }
        const double zz = wdot2(w, z.data(), z.data(), n);
        const double d_z = wdot2(w, d, z.data(), n);
        const double sg_z = wdot2(w, sg.data(), z.data(), n);
        const double sc_z = wdot2(w, scv.data(), z.data(), n);
        const double z3 = wdot3(w, z.data(), z.data(), z.data(), n);
        const double ddz = wdot3(w, d, d, z.data(), n);
        const double d_zz = wdot3(w, d, z.data(), z.data(), n);
        const double sg_zz = wdot3(w, sg.data(), z.data(), z.data(), n);
        const double sc_zz = wdot3(w, scv.data(), z.data(), z.data(), n);
        const double ssz_gg = wdot3(w, sg.data(), sg.data(), z.data(), n);
        const double ssz_gc = wdot3(w, sg.data(), scv.data(), z.data(), n);
        const double ssz_cc = wdot3(w, scv.data(), scv.data(), z.data(), n);
        const double d_sg_z = wdot3(w, d, sg.data(), z.data(), n);
        const double d_sc_z = wdot3(w, d, scv.data(), z.data(), n);
        const double dpsg_zz = wdot3(w, dpsgz.data(), z.data(), z.data(), n);

        auto& p = out.pair[idx];
        p.phi_z = set.phi_z[idx];
        p.phi_ac = ac_phase(m, V, sc.ac_per_v);
        const double C = std::cos(p.phi_z);
        const double S = std::sin(p.phi_z);

        p.d0 = C;
        p.d_main = (1.0 - 0.5 * dps2) * C;
        p.dz = -0.5 * zz * C + (z3 + 3.0 * ddz) / 6.0 * S;
        p.nz = d_z * S + d_zz * C;

        p.d_pp = (0.5 * (ssz_gg + ssz_cc) + d_sg_z) * S;
        p.d_mp = (ssz_gc + d_sc_z) * S;
        p.d_pm = -p.phi_ac * (d_sc + sg_sc) * S;
        p.d_mm = p.phi_ac * ((-1.0 + 0.5 * (dpsg2 + sc_sc + zz)) * S +
                             (z3 / 6.0 + d_sg_z + 0.5 * (ssz_gg + ssz_cc + ddz)) * C);

        p.n_pp = sg_z * S + 0.5 * sg_zz * C;
        p.n_mp = sc_z * S + 0.5 * sc_zz * C;
        p.n_pm = -p.phi_ac * sc_z * C;
        p.n_mm = p.phi_ac * ((sg_z + d_z) * C - (dpsg3 / 6.0 + 0.5 * dpsg_zz) * S);

        out.d0 += p.d0;
        out.d_main += p.d_main;
        out.dz += p.dz;
        out.nz += p.nz;
        out.d_pp += p.d_pp;
        out.d_mp += p.d_mp;
        out.d_pm += p.d_pm;
        out.d_mm += p.d_mm;
        out.n_pp += p.n_pp;
        out.n_mp += p.n_mp;
        out.n_pm += p.n_pm;
        out.n_mm += p.n_mm;
    }

    out.d = out.d_main + out.dz + out.d_pp + out.d_mp + out.d_pm + out.d_mm;
    out.n = (dps3 / 6.0) * out.d0 + out.nz + out.n_pp + out.n_mp + out.n_pm + out.n_mm;
    out.d0_collapsed = std::fabs(out.d0) < 0.05;
    out.theta = out.d0_collapsed ? 0.0 : out.n / out.d0;
    out.theta_exact = std::atan2(out.n, out.d);
    return out;
}

namespace {

struct ConfigModel {
    double vis = 0.0;
    double phase = 0.0;
    DNTerms dn;
};

ConfigModel config_model(const FieldConfiguration& cfg, const Scenario& sc) {
    ConfigModel m;
    m.dn = dn_terms(cfg, sc);
    const auto vstark =
        velocity_visibility(mean_stark_phase(cfg.v_volts, sc.stark), 1, sc.beam);
    m.vis = 0.25 * m.dn.d * std::abs(vstark);
    const double theta = m.dn.d0_collapsed ? m.dn.theta_exact : m.dn.theta;
    m.phase = std::arg(vstark) + hmw_phase(cfg.v_volts, cfg.i_amps, sc.hmw_per_va) - theta;
    return m;
}

} // namespace

ModelPrediction predict(const FieldConfiguration& cfg, const Scenario& sc) {
    const auto cm = config_model(cfg, sc);
    FieldConfiguration zero;
    const auto c0 = config_model(zero, sc);

    ModelPrediction p;
    p.vis_factor = cm.vis;
    p.phase = cm.phase;
    p.v_rel = cm.vis / c0.vis;
    p.phase_rel = cm.phase - c0.phase;
    p.theta = cm.dn.theta;
    p.theta_exact = cm.dn.theta_exact;
    p.d0_collapsed = cm.dn.d0_collapsed;
    const double n_over_d0 = cm.dn.d0_collapsed ? 1.0 : std::fabs(cm.dn.n / cm.dn.d0);
    const double d_shift = std::fabs(cm.dn.d0) > 0.0
                               ? std::fabs(cm.dn.d - cm.dn.d0) / std::fabs(cm.dn.d0)
                               : 1.0;
    p.valid = !cm.dn.d0_collapsed && n_over_d0 <= 0.3 && d_shift <= 0.5;
    return p;
}

ReducedPoint predict_reduced(double v_volts, double i_amps, const Scenario& sc) {
    ReducedPoint r;
    r.v_volts = v_volts;
    r.i_amps = i_amps;
    r.n_scans = 0;

    const auto comp = sc.compensator;
    auto reduced_at = [&](double V) {
        FieldConfiguration c_vi{V, i_amps, comp.current_for(i_amps),
                                V >= 0 ? ConfigLabel::v_i : ConfigLabel::mv_i};
        FieldConfiguration c_v0{V, 0.0, 0.0,
                                V >= 0 ? ConfigLabel::v_zero : ConfigLabel::mv_zero};
        const auto dn_vi = dn_terms(c_vi, sc);
        const auto dn_v0 = dn_terms(c_v0, sc);

        struct Out {
            double ve, phie, veb, phieb;
            bool collapsed;
        } o{};
        const auto vs_v = velocity_visibility(mean_stark_phase(V, sc.stark), 1, sc.beam);
        const auto vs_0 = velocity_visibility(mean_stark_phase(0.0, sc.stark), 1, sc.beam);

        // E-only quantities from the I = 0 legs
        const std::size_t n = sc.beam.y.size();
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = sc.profiles.stark_geom[i] * V * V + sc.profiles.stark_contact[i] * V;
        }
        const double ss = kernels::wdot2(sc.beam.y_weight.data(), s.data(), s.data(), n);
        const double ds = kernels::wdot2(sc.beam.y_weight.data(),
                                         sc.profiles.diffraction.data(), s.data(), n);
        const double dd = kernels::wdot2(sc.beam.y_weight.data(),
                                         sc.profiles.diffraction.data(),
                                         sc.profiles.diffraction.data(), n);
        std::vector<double> dps(n);
        for (std::size_t i = 0; i < n; ++i) dps[i] = sc.profiles.diffraction[i] + s[i];
        const double dps3 = kernels::wdot3(sc.beam.y_weight.data(), dps.data(), dps.data(),
                                           dps.data(), n);
        const double d3 = kernels::wdot3(sc.beam.y_weight.data(), sc.profiles.diffraction.data(),
                                         sc.profiles.diffraction.data(),
                                         sc.profiles.diffraction.data(), n);
        (void)dd;

        o.ve = (1.0 - 0.5 * ss - ds + dn_v0.d_ac_b0 / dn_v0.d0_b0) * std::abs(vs_v) /
               std::abs(vs_0);
        o.phie = std::arg(vs_v) - std::arg(vs_0) - (dps3 - d3) / 6.0;

        const double d0 = dn_vi.d0;
        o.collapsed = dn_vi.d0_collapsed;
        const double dpm_sum = dn_vi.d_pp + dn_vi.d_mp + dn_vi.d_pm + dn_vi.d_mm;
        const double npm_sum = dn_vi.n_pp + dn_vi.n_mp + dn_vi.n_pm + dn_vi.n_mm;
        o.veb = 1.0 + dpm_sum / d0 - dn_vi.d_ac_b0 / dn_vi.d0_b0;
        o.phieb = hmw_phase(V, i_amps, sc.hmw_per_va) - npm_sum / d0;
        return o;
    };

    const auto plus = reduced_at(v_volts);
    r.ve = {plus.ve, 0.0};
    r.phie = {plus.phie, 0.0};
    r.veb = {plus.veb, 0.0};
    r.phieb = {plus.phieb, 0.0};

    // B-only quantities
    FieldConfiguration c_0i{0.0, i_amps, comp.current_for(i_amps), ConfigLabel::zero_i};
    FieldConfiguration zero;
    const auto dn_0i = dn_terms(c_0i, sc);
    const auto dn_00 = dn_terms(zero, sc);
    r.vb = {(dn_0i.d / dn_00.d), 0.0};
    r.phib = {-(dn_0i.nz / dn_0i.d0), 0.0};

    const auto minus = reduced_at(-v_volts);
    r.has_minus_v = true;
    r.ve_m = {minus.ve, 0.0};
    r.phie_m = {minus.phie, 0.0};
    r.veb_m = {minus.veb, 0.0};
    r.phieb_m = {minus.phieb, 0.0};
    r.chi_estimate = sc.chi;
    return r;
}

double predict_parity_combination(ParityPrediction which, double v_volts, double i_amps,
                                  const Scenario& sc) {
    FieldConfiguration cfg{v_volts, i_amps, sc.compensator.current_for(i_amps),
                           ConfigLabel::v_i};
    const auto dn = dn_terms(cfg, sc);
    const double d0 = dn.d0;
    switch (which) {
        case ParityPrediction::mb_de_phase: return -dn.n_mp / d0;
        case ParityPrediction::db_me_phase: return -dn.n_pm / d0;
        case ParityPrediction::me_phase: return -(dn.n_pp + dn.n_pm) / d0;
        case ParityPrediction::db_phase:
            return hmw_phase(v_volts, i_amps, sc.hmw_per_va) - (dn.n_pm + dn.n_mm) / d0;
        case ParityPrediction::de_vis: return (dn.d_mp + dn.d_mm) / d0;
        case ParityPrediction::mb_de_vis: return dn.d_mp / d0;
        case ParityPrediction::db_me_vis: return dn.d_pm / d0;
        case ParityPrediction::db_de_vis: return dn.d_mm / d0;
        case ParityPrediction::mb_me_vis: return 1.0 + dn.d_pp / d0;
    }
    return 0.0;
}

std::complex<double> model_b_only(double i_amps, double i_comp_amps, double chi,
                                  const ZeemanCalibration& cal) {
    const auto weights = pair_weights(chi);
    auto amplitude = [&](double I, double IC) {
        const auto set = pair_phase_set(I, IC, cal);
        std::complex<double> a{0.0, 0.0};
        for (int m : kPairLabels) {
            const int idx = pair_index(m);
            const double wp = weights.plus[idx];
            const double wm = weights.minus[idx];
            a += std::complex<double>((wp + wm) * std::cos(set.phi_z[idx]),
                                      (wp - wm) * std::sin(set.phi_z[idx]));
        }
        return a;
    };
    return amplitude(i_amps, i_comp_amps) / amplitude(0.0, 0.0);
}

} // namespace hmw
