#include "hmw/analysis.hpp"

#include "hmw/error.hpp"
#include "hmw/kernels.hpp"
#include "hmw/levmar.hpp"
#include "hmw/phases.hpp"
#include "hmw/rng.hpp"
#include "hmw/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>
#include <stdexcept>

namespace hmw {

namespace {

Measured half_sum(const Measured& a, const Measured& b, double sb) {
    return {0.5 * (a.value + sb * b.value),
            0.5 * std::sqrt(a.sigma * a.sigma + b.sigma * b.sigma)};
}

} // namespace

Measured parity_me(const Measured& plus_v, const Measured& minus_v) { return half_sum(plus_v, minus_v, 1.0); }
Measured parity_de(const Measured& plus_v, const Measured& minus_v) { return half_sum(plus_v, minus_v, -1.0); }
Measured parity_mb(const Measured& plus_i, const Measured& minus_i) { return half_sum(plus_i, minus_i, 1.0); }
Measured parity_db(const Measured& plus_i, const Measured& minus_i) { return half_sum(plus_i, minus_i, -1.0); }

ParityCombination parity(const SignQuad& q, double abs_v, double abs_i) {
    ParityCombination out;
    out.abs_v = abs_v;
    out.abs_i = abs_i;
    const Measured me_plus_i = parity_me(q.pp, q.mp);
    const Measured me_minus_i = parity_me(q.pm, q.mm);
    const Measured de_plus_i = parity_de(q.pp, q.mp);
    const Measured de_minus_i = parity_de(q.pm, q.mm);
    out.mb_me = parity_mb(me_plus_i, me_minus_i);
    out.db_me = parity_db(me_plus_i, me_minus_i);
    out.mb_de = parity_mb(de_plus_i, de_minus_i);
    out.db_de = parity_db(de_plus_i, de_minus_i);
    out.me_p = me_plus_i;
    out.de_p = de_plus_i;
    out.db_p = parity_db(q.pp, q.pm);
    return out;
}

Measured corrected_visibility(const Measured& veb, const Measured& delta_e_ve) {
    const double denom = 1.0 - delta_e_ve.value;
    if (std::fabs(denom) < 0.5) {
        throw std::invalid_argument("corrected_visibility: nonphysical AC correction");
    }
    const double val = veb.value / denom;
    const double s1 = veb.sigma / denom;
    const double s2 = veb.value * delta_e_ve.sigma / (denom * denom);
    return {val, std::sqrt(s1 * s1 + s2 * s2)};
}

StrayCorrection stray_correction(double v_volts, double i_amps, const Scenario& cal) {
    const auto set = pair_phase_set(i_amps, cal.compensator.current_for(i_amps), cal.zeeman);
    const std::size_t n = cal.beam.y.size();
    const double* w = cal.beam.y_weight.data();

    std::vector<double> sg(n);
    for (std::size_t i = 0; i < n; ++i) {
        sg[i] = cal.profiles.stark_geom[i] * v_volts * v_volts;
    }
    const double sg_sg = kernels::wdot2(w, sg.data(), sg.data(), n);
    const double d_sg = kernels::wdot2(w, cal.profiles.diffraction.data(), sg.data(), n);
    // the diffraction dispersion is not measured directly; reuse the Stark-Zeeman
    // correlations rescaled by r, both profiles taken linear in y
    const double r = sg_sg > 0.0 ? d_sg / sg_sg : 0.0;
    const double sg3 = kernels::wdot3(w, sg.data(), sg.data(), sg.data(), n);

    StrayCorrection out;
    double d0 = 0.0, nmm = 0.0;
    std::vector<double> z(n);
    for (int m : kPairLabels) {
        const int idx = pair_index(m);
        for (std::size_t i = 0; i < n; ++i) z[i] = set.dz_scale[idx] * cal.profiles.zeeman[i];
        const double sg_z = kernels::wdot2(w, sg.data(), z.data(), n);
        const double sg_zz = kernels::wdot3(w, sg.data(), z.data(), z.data(), n);
        const double phi_ac = ac_phase(m, v_volts, cal.ac_per_v);
        const double C = std::cos(set.phi_z[idx]);
        const double S = std::sin(set.phi_z[idx]);
        const double d_z_sub = r * sg_z;
        const double dps3_sub = (1.0 + r) * (1.0 + r) * (1.0 + r) * sg3;
        const double dps_zz_sub = (1.0 + r) * sg_zz;
        d0 += C;
        nmm += phi_ac * ((sg_z + d_z_sub) * C - (dps3_sub / 6.0 + 0.5 * dps_zz_sub) * S);
    }
    out.d0_collapsed = std::fabs(d0) < 0.05;
    out.value = out.d0_collapsed ? 0.0 : nmm / d0;
    out.large = std::fabs(out.value) > 0.010;
    return out;
}

HMWResult extract_slope(const std::vector<SlopePoint>& points, const std::string& cut_tag) {
    if (points.size() < 3) throw std::invalid_argument("extract_slope: need at least 3 points");
    Eigen::Matrix2d xtwx = Eigen::Matrix2d::Zero();
    Eigen::Vector2d xtwy = Eigen::Vector2d::Zero();
    for (const auto& p : points) {
        const double w = 1.0 / std::max(p.y.sigma * p.y.sigma, 1e-300);
        const Eigen::Vector2d x(p.vi, 1.0);
        xtwx += w * x * x.transpose();
        xtwy += w * x * p.y.value;
    }
    if (std::fabs(xtwx.determinant()) < 1e-30 * xtwx(0, 0) * xtwx(1, 1) ||
        xtwx.determinant() == 0.0) {
        throw std::invalid_argument("extract_slope: singular design (no spread in V*I)");
    }
    const Eigen::Matrix2d cov = xtwx.inverse();
    const Eigen::Vector2d beta = cov * xtwy;

    HMWResult res;
    res.alpha = {beta[0], std::sqrt(cov(0, 0))};
    res.beta = {beta[1], std::sqrt(cov(1, 1))};
    res.cov_alpha_beta = cov(0, 1);
    res.n_points = static_cast<int>(points.size());
    res.cut_tag = cut_tag;
    for (const auto& p : points) {
        const double fitv = beta[0] * p.vi + beta[1];
        res.residuals.push_back(p.y.value - fitv);
        const double w = 1.0 / std::max(p.y.sigma * p.y.sigma, 1e-300);
        res.chi2 += w * (p.y.value - fitv) * (p.y.value - fitv);
    }
    return res;
}

// --- Stark / velocity calibration -------------------------------------------

namespace {

// velocity-average factor for a Stark phase k*v2 at mean velocity; returns the
// residual against the linear phase so no unwrapping is needed
std::complex<double> stark_velocity_residual(double phase, double speed_ratio, double vm) {
    const auto grid = supersonic_velocity_grid(vm, speed_ratio, 101);
    const std::size_t n = grid.v.size();
    std::vector<double> arg(n);
    for (std::size_t i = 0; i < n; ++i) arg[i] = phase * (vm / grid.v[i] - 1.0);
    const auto acc = kernels::phasor_sum(grid.w.data(), arg.data(), n);
    return {acc.re, acc.im};
}

} // namespace

StarkCalibrationFit fit_stark_calibration(const std::vector<StarkScanPoint>& data,
                                          double mean_velocity) {
    if (data.size() < 4) throw std::invalid_argument("fit_stark_calibration: too few points");
    double v2_max = 0.0;
    for (const auto& p : data) v2_max = std::max(v2_max, p.v2);
    if (!(v2_max > 0.0)) throw std::invalid_argument("fit_stark_calibration: no voltage range");

    // slope init from the last point's unwrapped phase
    double k0 = 0.0;
    for (const auto& p : data) {
        if (p.v2 == v2_max) k0 = p.phase.value / p.v2;
    }
    Eigen::VectorXd p0(2);
    p0 << 8.0, (k0 == 0.0 ? -1e-3 : k0);

    auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        const auto eval = [&](double s, double k, Eigen::VectorXd& out) {
            out.resize(2 * data.size());
            for (std::size_t j = 0; j < data.size(); ++j) {
                const double phase = k * data[j].v2;
                const auto z = stark_velocity_residual(phase, std::max(s, 1.2), mean_velocity);
                const double vis = std::abs(z);
                const double ph = phase + std::arg(z);
                out[2 * j] = (vis - data[j].vis.value) / data[j].vis.sigma;
                out[2 * j + 1] = (ph - data[j].phase.value) / data[j].phase.sigma;
            }
        };
        eval(p[0], p[1], r);
        if (J) {
            J->resize(r.size(), 2);
            Eigen::VectorXd rp;
            const double hs = 1e-5 * std::max(1.0, std::fabs(p[0]));
            eval(p[0] + hs, p[1], rp);
            J->col(0) = (rp - r) / hs;
            const double hk = 1e-7 * std::max(1e-4, std::fabs(p[1]));
            eval(p[0], p[1] + hk, rp);
            J->col(1) = (rp - r) / hk;
        }
    };

    auto res = levmar(residual, p0);
    if (!res.converged) fail_fit("fit_stark_calibration: no convergence");

    const int dof = static_cast<int>(2 * data.size()) - 2;
    const double scale2 = dof > 0 ? std::max(res.chi2 / dof, 0.0) : 1.0;
    StarkCalibrationFit fit;
    fit.speed_ratio = {res.params[0], std::sqrt(res.covariance(0, 0) * scale2)};
    fit.phi_per_v2 = {res.params[1], std::sqrt(res.covariance(1, 1) * scale2)};
    fit.chi2 = res.chi2;
    fit.iterations = res.iterations;
    return fit;
}

VisibilityPolynomialFit fit_visibility_polynomial(const std::vector<double>& v_volts,
                                                  const std::vector<Measured>& ve) {
    if (v_volts.size() != ve.size()) {
        throw std::invalid_argument("fit_visibility_polynomial: size mismatch");
    }
    std::set<double> distinct(v_volts.begin(), v_volts.end());
    if (distinct.size() < 6) {
        throw std::invalid_argument("fit_visibility_polynomial: need at least 6 distinct voltages");
    }
    const std::size_t n = v_volts.size();
    Eigen::MatrixXd x(n, 4);
    Eigen::VectorXd y(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double s = ve[j].sigma > 0.0 ? ve[j].sigma : 1.0;
        double pw = v_volts[j];
        for (int i = 0; i < 4; ++i) {
            x(j, i) = pw / s;
            pw *= v_volts[j];
        }
        y[j] = (1.0 - ve[j].value) / s;
    }
    const Eigen::MatrixXd xtx = x.transpose() * x;
    const Eigen::VectorXd sol = xtx.ldlt().solve(x.transpose() * y);
    const Eigen::MatrixXd cov = xtx.inverse();

    VisibilityPolynomialFit fit;
    const Eigen::VectorXd resid = y - x * sol;
    fit.chi2 = resid.squaredNorm();
    for (int i = 0; i < 4; ++i) fit.k[i] = {sol[i], std::sqrt(cov(i, i))};
    return fit;
}

// --- global Zeeman fit -------------------------------------------------------

GlobalZeemanFit global_zeeman_fit(const std::vector<ZeemanDataPoint>& data,
                                  const ZeemanCalibration& init) {
    if (data.empty()) throw std::invalid_argument("global_zeeman_fit: no data");
    std::set<int> series_ids;
    for (const auto& p : data) series_ids.insert(p.series);
    std::vector<int> series(series_ids.begin(), series_ids.end());
    const int ns = static_cast<int>(series.size());
    auto series_slot = [&](int id) {
        return static_cast<int>(std::lower_bound(series.begin(), series.end(), id) -
                                series.begin());
    };
    for (const auto& p : data) {
        int count = 0;
        for (const auto& q : data) {
            if (q.series == p.series) ++count;
        }
        if (count < 3) throw std::invalid_argument("global_zeeman_fit: under-determined series");
    }

    const int np = 7 + ns;
    Eigen::VectorXd p0(np);
    p0 << init.j0, init.i0, init.a_j1, init.a_j2, init.a_j3, init.i0c, init.a_j1c,
        Eigen::VectorXd::Zero(ns);

    auto unpack = [](const Eigen::VectorXd& p) {
        return ZeemanCalibration{p[0], p[1], p[2], p[3], p[4], p[5], p[6]};
    };

    // Re/Im residuals stay smooth through the visibility collapses where the
    // modulus/phase coordinates hit the arg() branch cut. Per-point whitening
    // uses the exact 2x2 covariance of (Re, Im) induced by the data errors.
    struct Whiten {
        double re = 0.0, im = 0.0;   // data point
        double l11 = 1.0, l21 = 0.0, l22 = 1.0;  // Cholesky of the covariance
    };
    std::vector<Whiten> white(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) {
        const auto& d = data[j];
        const double c = std::cos(d.phib.value), s = std::sin(d.phib.value);
        white[j].re = d.vb.value * c;
        white[j].im = d.vb.value * s;
        const double sv2 = d.vb.sigma * d.vb.sigma;
        const double sp2 = d.vb.value * d.vb.value * d.phib.sigma * d.phib.sigma;
        const double c11 = c * c * sv2 + s * s * sp2;
        const double c21 = s * c * (sv2 - sp2);
        const double c22 = s * s * sv2 + c * c * sp2;
        const double l11 = std::sqrt(std::max(c11, 1e-30));
        const double l21 = c21 / l11;
        const double l22 = std::sqrt(std::max(c22 - l21 * l21, 1e-30));
        white[j].l11 = l11;
        white[j].l21 = l21;
        white[j].l22 = l22;
    }

    auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        auto eval = [&](const Eigen::VectorXd& q, Eigen::VectorXd& out) {
            const ZeemanCalibration cal = unpack(q);
            out.resize(2 * data.size());
            for (std::size_t j = 0; j < data.size(); ++j) {
                const auto& d = data[j];
                const double chi = q[7 + series_slot(d.series)];
                const auto model = model_b_only(d.i_amps, d.i_comp_amps, chi, cal);
                const double d1 = model.real() - white[j].re;
                const double d2 = model.imag() - white[j].im;
                const double y1 = d1 / white[j].l11;
                out[2 * j] = y1;
                out[2 * j + 1] = (d2 - white[j].l21 * y1) / white[j].l22;
            }
        };
        eval(p, r);
        if (J) {
            J->resize(r.size(), np);
            Eigen::VectorXd rp;
            for (int k = 0; k < np; ++k) {
                Eigen::VectorXd q = p;
                const double h = 1e-6 * std::max(1e-3, std::fabs(p[k]));
                q[k] += h;
                eval(q, rp);
                J->col(k) = (rp - r) / h;
            }
        }
    };

    LevMarOptions opt;
    opt.max_iterations = 400;
    auto res = levmar(residual, p0, opt);
    if (!res.converged) fail_fit("global_zeeman_fit: no convergence");

    const int dof = static_cast<int>(2 * data.size()) - np;
    if (dof <= 0) throw std::invalid_argument("global_zeeman_fit: under-determined");
    const double scale2 = std::max(res.chi2 / dof, 0.0);

    GlobalZeemanFit fit;
    fit.calibration = unpack(res.params);
    auto sig = [&](int i) { return std::sqrt(std::max(res.covariance(i, i) * scale2, 0.0)); };
    fit.sigma = {sig(0), sig(1), sig(2), sig(3), sig(4), sig(5), sig(6)};
    for (int s = 0; s < ns; ++s) {
        fit.chi_per_series.push_back({res.params[7 + s], sig(7 + s)});
    }
    fit.chi2 = res.chi2;
    fit.dof = dof;
    fit.iterations = res.iterations;
    return fit;
}

std::vector<ZeemanDataPoint> synthesize_zeeman_dataset(const Scenario& sc, int n_series,
                                                       std::uint64_t seed, double sigma_v,
                                                       double sigma_phi) {
    Rng rng(derive_seed(seed, 0x5a, 0));
    std::vector<ZeemanDataPoint> data;
    for (int s = 0; s < n_series; ++s) {
        std::vector<std::pair<double, double>> currents;  // (I, IC)
        switch (s % 4) {
            case 0:
                // compensated sweep, low currents bracketing the coil offset
                for (double i : {0.2, 0.4, 0.7}) currents.push_back({i, sc.compensator.current_for(i)});
                for (int k = 1; k <= 15; ++k) {
                    currents.push_back({static_cast<double>(k),
                                        sc.compensator.current_for(static_cast<double>(k))});
                }
                break;
            case 1:
                // HMW coil only; the V-shape kink near 0.3 A must sit inside the data
                for (double i : {0.1, 0.2, 0.3, 0.45, 0.6, 0.8}) currents.push_back({i, 0.0});
                for (int k = 2; k <= 11; ++k) currents.push_back({0.5 * k, 0.0});
                break;
            case 2:
                // compensator only, bracketing its small offset current
                for (double ic : {0.005, 0.01, 0.015, 0.05, 0.1, 0.2, 0.4, 0.7}) {
                    currents.push_back({0.0, ic});
                }
                for (int k = 2; k <= 10; ++k) currents.push_back({0.0, 0.5 * k});
                break;
            default:
                for (int k = 1; k <= 12; ++k) {
                    currents.push_back({static_cast<double>(k),
                                        std::min(k / 2.5, sc.compensator.cap_amp)});
                }
                break;
        }
        for (const auto& [i_amps, ic] : currents) {
            const auto z = model_b_only(i_amps, ic, sc.chi, sc.zeeman);
            const double vb = std::abs(z);
            // the fringe phase is unmeasurable through the visibility collapses
            if (vb < 0.10) continue;
            ZeemanDataPoint pt;
            pt.series = s;
            pt.i_amps = i_amps;
            pt.i_comp_amps = ic;
            const double ph = std::arg(z);
            pt.vb = {vb + rng.normal(0.0, sigma_v), sigma_v};
            pt.phib = {ph + rng.normal(0.0, sigma_phi), sigma_phi};
            data.push_back(pt);
        }
    }
    return data;
}

std::vector<StarkScanPoint> synthesize_stark_dataset(const Scenario& sc, CapacitorArm arm,
                                                     int n_points, std::uint64_t seed,
                                                     double sigma_v, double sigma_phi) {
    Rng rng(derive_seed(seed, 0x57, 0));
    const double k = arm == CapacitorArm::upper ? sc.stark.phi_upper_per_v2
                                                : sc.stark.phi_lower_per_v2;
    const double s_ratio = sc.beam.speed_ratio;
    // span voltages up to where the velocity average pulls visibility near 0.2
    const double phase_max = 2.0 * s_ratio * 1.30;
    const double v2_max = phase_max / std::fabs(k);
    std::vector<StarkScanPoint> data;
    for (int j = 1; j <= n_points; ++j) {
        const double v2 = v2_max * j / n_points;
        const double phase = k * v2;
        const auto z = stark_velocity_residual(phase, s_ratio, sc.beam.mean_velocity);
        StarkScanPoint pt;
        pt.v2 = v2;
        pt.vis = {std::abs(z) + rng.normal(0.0, sigma_v), sigma_v};
        pt.phase = {phase + std::arg(z) + rng.normal(0.0, sigma_phi), sigma_phi};
        data.push_back(pt);
    }
    return data;
}

} // namespace hmw
