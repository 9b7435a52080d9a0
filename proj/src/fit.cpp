#include "hmw/fit.hpp"

#include "hmw/error.hpp"
#include "hmw/levmar.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>

namespace hmw {

namespace {

double wrap_pi(double x) { return std::remainder(x, 2.0 * M_PI); }

struct Designs {
    int n_params = 0;
    int n_bins = 0;
    int n_configs = 0;
};

} // namespace

ScanFit fit_scan(const FringeScan& scan, const FitOptions& opt) {
    const int nc = static_cast<int>(scan.configs.size());
    const int nb = static_cast<int>(scan.bins.size());
    if (nc < 1 || nb < 8) throw std::invalid_argument("fit_scan: empty scan");

    double x3_min = scan.bins.front().x3phi, x3_max = x3_min;
    std::vector<int> per_config(nc, 0);
    double counts_min = scan.bins.front().counts, counts_max = counts_min;
    for (const auto& b : scan.bins) {
        x3_min = std::min(x3_min, b.x3phi);
        x3_max = std::max(x3_max, b.x3phi);
        counts_min = std::min(counts_min, b.counts);
        counts_max = std::max(counts_max, b.counts);
        if (b.config < 0 || b.config >= nc) throw std::invalid_argument("fit_scan: bad config index");
        ++per_config[b.config];
    }
    if ((x3_max - x3_min) < 1.5 * 2.0 * M_PI) {
        throw std::invalid_argument("fit_scan: scan must cover at least 1.5 fringes");
    }
    for (int c = 0; c < nc; ++c) {
        if (per_config[c] < 20) {
            throw std::invalid_argument("fit_scan: every configuration needs at least 20 bins");
        }
    }
    if (counts_max == counts_min) throw std::invalid_argument("fit_scan: degenerate scan (flat counts)");

    const double dt = scan.bin_seconds;
    const int np = 1 + 3 * nc;

    // initialization: mean rate per config, fringe projection onto the known sweep
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(np);
    std::vector<double> mean_c(nc, 0.0);
    for (const auto& b : scan.bins) mean_c[b.config] += b.counts;
    for (int c = 0; c < nc; ++c) mean_c[c] /= per_config[c];
    std::vector<std::complex<double>> proj(nc, {0.0, 0.0});
    for (const auto& b : scan.bins) {
        proj[b.config] += (b.counts - mean_c[b.config]) *
                          std::complex<double>(std::cos(b.x3phi), -std::sin(b.x3phi));
    }
    for (int c = 0; c < nc; ++c) {
        const double denom = std::max(mean_c[c], 1e-12) * per_config[c];
        std::complex<double> zv = 2.0 * proj[c] / denom;
        p0[1 + 3 * c] = std::max(mean_c[c], 1e-12) / dt;
        p0[2 + 3 * c] = std::min(std::abs(zv), 0.98);
        p0[3 + 3 * c] = std::arg(zv);
    }

    // IRLS: bin variances frozen per round so each inner solve is a clean
    // weighted least-squares problem with a meaningful gradient criterion
    std::vector<double> sigma_bin(nb);
    for (int i = 0; i < nb; ++i) sigma_bin[i] = std::sqrt(std::max(scan.bins[i].counts, 1.0));

    auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        r.resize(nb);
        if (J) J->setZero(nb, np);
        const double drift = p[0];
        for (int i = 0; i < nb; ++i) {
            const auto& b = scan.bins[i];
            const int c = b.config;
            const double rate = p[1 + 3 * c];
            const double vis = p[2 + 3 * c];
            const double phi = p[3 + 3 * c];
            const double psi = b.x3phi + drift * b.t + phi;
            const double cosv = std::cos(psi), sinv = std::sin(psi);
            const double mu = rate * dt * (1.0 + vis * cosv);
            const double dmu_dphi = -rate * dt * vis * sinv;
            const double sig = sigma_bin[i];
            r[i] = (b.counts - mu) / sig;
            if (J) {
                (*J)(i, 0) = -dmu_dphi * b.t / sig;
                (*J)(i, 1 + 3 * c) = -dt * (1.0 + vis * cosv) / sig;
                (*J)(i, 2 + 3 * c) = -rate * dt * cosv / sig;
                (*J)(i, 3 + 3 * c) = -dmu_dphi / sig;
            }
        }
    };

    // model mean and phase sensitivity per bin at given parameters
    auto bin_model = [&](const Eigen::VectorXd& p, std::vector<double>& mu,
                         std::vector<double>& dmu_dphi) {
        mu.resize(nb);
        dmu_dphi.resize(nb);
        for (int i = 0; i < nb; ++i) {
            const auto& b = scan.bins[i];
            const int c = b.config;
            const double psi = b.x3phi + p[0] * b.t + p[3 + 3 * c];
            mu[i] = p[1 + 3 * c] * dt * (1.0 + p[2 + 3 * c] * std::cos(psi));
            dmu_dphi[i] = -p[1 + 3 * c] * dt * p[2 + 3 * c] * std::sin(psi);
        }
    };

    LevMarOptions lm_opt;
    lm_opt.max_iterations = opt.max_iterations;
    lm_opt.gradient_tol_rel = opt.gradient_tol_rel;

    const int dof = nb - np;
    double jitter2 = 0.0;
    LevMarResult res;
    std::vector<double> mu(nb), gphi(nb);
    const int rounds = opt.estimate_jitter ? 3 : 2;
    for (int round = 0; round < rounds; ++round) {
        res = levmar(residual, p0, lm_opt);
        if (round == rounds - 1) break;
        bin_model(res.params, mu, gphi);
        if (opt.estimate_jitter && round >= 1) {
            // residual variance beyond counting noise, expressed as a per-bin
            // phase jitter; zero when the Poisson weights already explain chi^2
            auto chi2_at = [&](double j2) {
                double s = 0.0;
                for (int i = 0; i < nb; ++i) {
                    const double d = scan.bins[i].counts - mu[i];
                    s += d * d / (std::max(mu[i], 1.0) + j2 * gphi[i] * gphi[i]);
                }
                return s;
            };
            jitter2 = 0.0;
            if (chi2_at(0.0) > dof) {
                double lo = 0.0, hi = 10.0;
                for (int it = 0; it < 80; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (chi2_at(mid) > dof ? lo : hi) = mid;
                }
                jitter2 = 0.5 * (lo + hi);
            }
        }
        for (int i = 0; i < nb; ++i) {
            sigma_bin[i] = std::sqrt(std::max(mu[i], 1.0) + jitter2 * gphi[i] * gphi[i]);
        }
    }

    if (!res.converged) {
        fail_fit("fit_scan: no convergence after " + std::to_string(res.iterations) +
                 " iterations");
    }

    // residual chi^2 scale keeps reported uncertainties honest when the noise
    // model is off
    const double scale2 = dof > 0 ? res.chi2 / dof : 1.0;
    Eigen::MatrixXd cov = res.covariance * scale2;

    ScanFit fit;
    fit.drift_rate = res.params[0];
    fit.sigma_drift = std::sqrt(std::max(cov(0, 0), 0.0));
    fit.configs.resize(nc);
    fit.field_configs = scan.configs;
    fit.chi2 = res.chi2;
    fit.dof = dof;
    fit.iterations = res.iterations;
    fit.jitter_estimate = std::sqrt(jitter2);
    fit.v_volts = scan.v_volts;
    fit.i_amps = scan.i_amps;
    fit.seed = scan.seed;
    fit.series = scan.series;

    // canonicalize: visibility >= 0, sign absorbed into the phase
    Eigen::VectorXd p = res.params;
    for (int c = 0; c < nc; ++c) {
        const int iv = 2 + 3 * c, ip = 3 + 3 * c;
        if (p[iv] < 0.0) {
            p[iv] = -p[iv];
            p[ip] = wrap_pi(p[ip] + M_PI);
            cov.row(iv) *= -1.0;
            cov.col(iv) *= -1.0;
        } else {
            p[ip] = wrap_pi(p[ip]);
        }
        auto& cf = fit.configs[c];
        cf.rate = p[1 + 3 * c];
        cf.visibility = p[iv];
        cf.phase = p[ip];
        cf.sigma_rate = std::sqrt(std::max(cov(1 + 3 * c, 1 + 3 * c), 0.0));
        cf.sigma_visibility = std::sqrt(std::max(cov(iv, iv), 0.0));
        cf.sigma_phase = std::sqrt(std::max(cov(ip, ip), 0.0));
    }
    fit.covariance = cov;
    return fit;
}

namespace {

int find_config(const ScanFit& fit, ConfigLabel label) {
    for (std::size_t i = 0; i < fit.field_configs.size(); ++i) {
        if (fit.field_configs[i].label == label) return static_cast<int>(i);
    }
    return -1;
}

struct Propagator {
    const ScanFit& fit;
    // gradient entries: (param index, d quantity / d param)
    Measured eval(double value, const std::vector<std::pair<int, double>>& grad) const {
        double var = 0.0;
        for (const auto& [i, gi] : grad) {
            for (const auto& [j, gj] : grad) var += gi * gj * fit.covariance(i, j);
        }
        return {value, std::sqrt(std::max(var, 0.0))};
    }
};

} // namespace

ReducedPoint reduce(const ScanFit& fit) {
    const int i00 = find_config(fit, ConfigLabel::zero_zero);
    const int iV0 = find_config(fit, ConfigLabel::v_zero);
    const int iVI = find_config(fit, ConfigLabel::v_i);
    const int i0I = find_config(fit, ConfigLabel::zero_i);
    if (i00 < 0 || iV0 < 0 || iVI < 0 || i0I < 0) {
        throw std::invalid_argument("reduce: required configurations (0,0),(V,0),(V,I),(0,I) missing");
    }
    const int imVI = find_config(fit, ConfigLabel::mv_i);
    const int imV0 = find_config(fit, ConfigLabel::mv_zero);

    auto vis = [&](int c) { return fit.configs[c].visibility; };
    auto ph = [&](int c) { return fit.configs[c].phase; };
    auto vidx = [&](int c) { return 2 + 3 * c; };
    auto pidx = [&](int c) { return 3 + 3 * c; };
    const Propagator prop{fit};

    ReducedPoint r;
    r.v_volts = fit.v_volts;
    r.i_amps = fit.i_amps;
    r.series = fit.series;
    r.n_scans = 1;

    auto vis_ratio = [&](int a, int b) {  // vis(a)/vis(b)
        const double val = vis(a) / vis(b);
        return prop.eval(val, {{vidx(a), 1.0 / vis(b)}, {vidx(b), -val / vis(b)}});
    };
    auto phase_diff = [&](int a, int b) {
        return prop.eval(wrap_pi(ph(a) - ph(b)), {{pidx(a), 1.0}, {pidx(b), -1.0}});
    };
    auto veb_of = [&](int ivi, int iv0) {
        const double val = vis(ivi) * vis(i00) / (vis(iv0) * vis(i0I));
        return prop.eval(val, {{vidx(ivi), val / vis(ivi)},
                               {vidx(i00), val / vis(i00)},
                               {vidx(iv0), -val / vis(iv0)},
                               {vidx(i0I), -val / vis(i0I)}});
    };
    auto phieb_of = [&](int ivi, int iv0) {
        const double val = wrap_pi(ph(ivi) - ph(iv0) - ph(i0I) + ph(i00));
        return prop.eval(val, {{pidx(ivi), 1.0}, {pidx(iv0), -1.0}, {pidx(i0I), -1.0}, {pidx(i00), 1.0}});
    };

    r.ve = vis_ratio(iV0, i00);
    r.phie = phase_diff(iV0, i00);
    r.vb = vis_ratio(i0I, i00);
    r.phib = phase_diff(i0I, i00);
    r.veb = veb_of(iVI, iV0);
    r.phieb = phieb_of(iVI, iV0);

    if (imVI >= 0 && imV0 >= 0) {
        r.has_minus_v = true;
        r.ve_m = vis_ratio(imV0, i00);
        r.phie_m = phase_diff(imV0, i00);
        r.veb_m = veb_of(imVI, imV0);
        r.phieb_m = phieb_of(imVI, imV0);
    }
    return r;
}

namespace {

struct Field {
    Measured ReducedPoint::* member;
    bool minus_only;
};

constexpr Field kFields[] = {
    {&ReducedPoint::ve, false},     {&ReducedPoint::phie, false},
    {&ReducedPoint::vb, false},     {&ReducedPoint::phib, false},
    {&ReducedPoint::veb, false},    {&ReducedPoint::phieb, false},
    {&ReducedPoint::ve_m, true},    {&ReducedPoint::phie_m, true},
    {&ReducedPoint::veb_m, true},   {&ReducedPoint::phieb_m, true},
};

Measured ivw_mean(const std::vector<const Measured*>& xs) {
    bool all_exact = true;
    for (const auto* x : xs) {
        if (x->sigma > 0.0) all_exact = false;
    }
    if (all_exact) {
        double m = 0.0;
        for (const auto* x : xs) m += x->value;
        return {m / static_cast<double>(xs.size()), 0.0};
    }
    double sw = 0.0, swx = 0.0;
    for (const auto* x : xs) {
        const double w = 1.0 / std::max(x->sigma * x->sigma, 1e-300);
        sw += w;
        swx += w * x->value;
    }
    return {swx / sw, 1.0 / std::sqrt(sw)};
}

} // namespace

ReducedPoint aggregate(const std::vector<ReducedPoint>& points) {
    if (points.empty()) throw std::invalid_argument("aggregate: empty series");
    if (points.size() == 1) return points.front();

    const bool minus = points.front().has_minus_v;
    auto build = [&](const std::vector<const ReducedPoint*>& sel) {
        ReducedPoint out = *sel.front();
        out.n_scans = static_cast<int>(sel.size());
        for (const auto& f : kFields) {
            if (f.minus_only && !minus) continue;
            std::vector<const Measured*> xs;
            xs.reserve(sel.size());
            for (const auto* p : sel) xs.push_back(&(p->*(f.member)));
            out.*(f.member) = ivw_mean(xs);
        }
        return out;
    };

    std::vector<const ReducedPoint*> all;
    all.reserve(points.size());
    for (const auto& p : points) all.push_back(&p);
    ReducedPoint first_pass = build(all);

    // flag > 5 sigma excursions against the first-pass mean
    std::vector<const ReducedPoint*> kept;
    for (const auto& p : points) {
        bool ok = true;
        for (const auto& f : kFields) {
            if (f.minus_only && !minus) continue;
            const Measured& x = p.*(f.member);
            const Measured& m = first_pass.*(f.member);
            if (x.sigma > 0.0 && std::fabs(x.value - m.value) > 5.0 * x.sigma) ok = false;
        }
        if (ok) kept.push_back(&p);
    }
    if (kept.empty() || kept.size() == points.size()) return first_pass;
    ReducedPoint out = build(kept);
    out.outlier = true;  // the aggregate had to drop flagged scans
    return out;
}

} // namespace hmw
