#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "rgflow/errors.hpp"
#include "rgflow/interp.hpp"
#include "rgflow/quadrature.hpp"

namespace rgflow::kernels {

inline constexpr double kPi = std::numbers::pi;

inline double pow_int(double x, int p) {
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= x;
    return r;
}

// Amplitude of the canonically normalized power-law covariance
// kappa(eps) r^{-(3-eps)/2} in three dimensions.
inline double kappa_eps(double eps) {
    if (!(eps >= 0.0 && eps < 3.0)) throw domain_error("kappa_eps: eps must lie in [0,3)");
    return std::pow(kPi, -1.5) * std::pow(2.0, -0.5 * (3.0 + eps)) *
           std::exp(std::lgamma(0.25 * (3.0 - eps)) - std::lgamma(0.25 * (3.0 + eps)));
}

enum class CutoffShape { Standard, Steep };

// Radial profile on [0, inf): zero beyond support_radius.
struct CutoffProfile {
    double support_radius = 0.0;
    bool closed_form = false;
    std::function<double(double)> value;
    double operator()(double r) const { return r >= support_radius ? 0.0 : value(r); }
};

namespace detail {

// Smooth step built from t -> e^{-1/t}; rises 0 -> 1 on [0,1].
inline double smooth_rise(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / x);
    const double b = std::exp(-1.0 / (1.0 - x));
    return a / (a + b);
}

inline double bump_value(double r, CutoffShape shape) {
    double x = (r - 0.25) / 0.25;
    if (x <= 0.0) return 1.0;
    if (x >= 1.0) return 0.0;
    if (shape == CutoffShape::Steep) x = x * x * (3.0 - 2.0 * x);
    return 1.0 - smooth_rise(x);
}

}  // namespace detail

// Smooth radial bump: 1 on r <= 1/4, 0 on r >= 1/2.
inline CutoffProfile make_bump(CutoffShape shape = CutoffShape::Standard) {
    CutoffProfile p;
    p.support_radius = 0.5;
    p.closed_form = true;
    p.value = [shape](double r) { return detail::bump_value(r, shape); };
    return p;
}

enum class WickKind { Phi2, Phi4, BilocalDiff2, BilocalSq2, BilocalCube3 };

// Wick-ordered polynomials with respect to a covariance with C(0) = c0 and
// off-diagonal value cxy; Gaussian expectations of all five vanish.
inline double wick_eval(WickKind kind, double phi_x, double phi_y, double c0, double cxy) {
    if (!(c0 >= std::abs(cxy))) throw domain_error("wick_eval: requires C(0) >= |C(x-y)|");
    const double x = phi_x, y = phi_y;
    switch (kind) {
        case WickKind::Phi2:
            return x * x - c0;
        case WickKind::Phi4:
            return x * x * x * x - 6.0 * c0 * x * x + 3.0 * c0 * c0;
        case WickKind::BilocalDiff2:
            return (x - y) * (x - y) - 2.0 * c0 + 2.0 * cxy;
        case WickKind::BilocalSq2: {
            const double d = x * x - y * y;
            return d * d - 4.0 * c0 * x * x - 4.0 * c0 * y * y + 8.0 * cxy * x * y +
                   4.0 * c0 * c0 - 4.0 * cxy * cxy;
        }
        case WickKind::BilocalCube3: {
            const double x3 = x * x * x, y3 = y * y * y;
            return x3 * y3 - 3.0 * c0 * x * y3 - 3.0 * c0 * x3 * y - 9.0 * cxy * x * x * y * y +
                   9.0 * c0 * c0 * x * y + 18.0 * cxy * cxy * x * y + 9.0 * c0 * cxy * x * x +
                   9.0 * c0 * cxy * y * y - 9.0 * c0 * c0 * cxy - 6.0 * cxy * cxy * cxy;
        }
    }
    throw usage_error("wick_eval: unknown kind");
}

struct EpsilonParams {
    double eps = 0.0;
    double kappa = 0.0;   // amplitude of the pure power law
    double lambda = 0.0;  // cutoff normalization multiplier, -> 1 as eps -> 0
};

namespace detail {

// Cumulative integral of t bump(t) on [0, 1/2]; constant beyond.
inline CubicHermite build_shell_cumulative(CutoffShape shape) {
    const int n = 1025;
    const double h = 0.5 / (n - 1);
    std::vector<double> vals(n, 0.0), ders(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double t = i * h;
        ders[i] = t * bump_value(t, shape);
    }
    for (int i = 1; i < n; ++i) {
        auto f = [shape](double t) { return t * bump_value(t, shape); };
        vals[i] = vals[i - 1] + integrate(f, (i - 1) * h, i * h, 1e-16, 1e-13).value;
    }
    return CubicHermite(0.0, 0.5, std::move(vals), std::move(ders));
}

}  // namespace detail

struct CutoffPair {
    CutoffProfile bump;
    CutoffProfile u0;
    double u0_at_zero = 0.0;
};

// The normalized cutoff: u0 is the radial self-convolution of the bump in
// three dimensions, scaled so that its scale amplitude
// int_0^inf t^{1/2} u0(t) dt equals kappa(0).  With that normalization the
// multiscale decomposition of the power-law covariance is canonical.
inline CutoffPair build_cutoff(CutoffShape shape = CutoffShape::Standard) {
    CutoffPair out;
    out.bump = make_bump(shape);

    const CubicHermite G = detail::build_shell_cumulative(shape);
    const double g_half = G(0.5);

    // radial self-convolution in 3d reduced to shell integrals
    auto conv_raw = [&](double r) -> double {
        if (r >= 1.0) return 0.0;
        if (r < 1e-7) {
            auto f = [shape](double s) {
                const double b = detail::bump_value(s, shape);
                return s * s * b * b;
            };
            return 4.0 * kPi * integrate(f, 0.0, 0.5, 1e-15, 1e-12).value;
        }
        auto f = [&](double s) {
            const double hi = (r + s >= 0.5) ? g_half : G(r + s);
            const double lo = G(std::abs(r - s));
            return s * detail::bump_value(s, shape) * (hi - lo);
        };
        return (2.0 * kPi / r) * integrate(f, 0.0, 0.5, 1e-15, 1e-12).value;
    };

    const int n = 4001;
    const double h = 1.0 / (n - 1);
    std::vector<double> vals(n, 0.0);
    for (int i = 0; i < n; ++i) vals[i] = conv_raw(i * h);
    vals.back() = 0.0;
    CubicSpline raw(0.0, 1.0, vals, 0.0, 0.0);

    // scale amplitude int_0^1 t^{1/2} u(t) dt, substituted t = y^2
    auto amp0 = [&](double y) { return 2.0 * y * y * raw(y * y); };
    const double a0 = integrate_panels(amp0, {0.0, 0.25, 0.5, 0.75, 1.0}, 1e-15, 1e-12).value;
    if (!(a0 > 0.0)) throw numerical_error("build_cutoff: degenerate convolution amplitude");
    const double scale = kappa_eps(0.0) / a0;
    for (double& v : vals) v *= scale;
    auto spline = std::make_shared<CubicSpline>(0.0, 1.0, vals, 0.0, 0.0);

    out.u0.support_radius = 1.0;
    out.u0.closed_form = false;
    out.u0.value = [spline](double r) { return r >= 1.0 ? 0.0 : std::max(0.0, (*spline)(r)); };
    out.u0_at_zero = vals.front();
    return out;
}

// Scale amplitude of a profile at exponent eps: int_0^1 t^{(1-eps)/2} u(t) dt.
inline double scale_amplitude(const CutoffProfile& u, double eps) {
    auto f = [&](double y) { return 2.0 * std::pow(y, 2.0 - eps) * u(y * y); };
    return integrate_panels(f, {0.0, 0.25, 0.5, 0.75, 1.0}, 1e-15, 1e-12).value;
}

// Normalization multiplier for the eps-deformed cutoff u_eps = lambda * u0.
inline double lambda_eps(const CutoffProfile& u0, double eps) {
    const double a = scale_amplitude(u0, eps);
    if (!(a > 0.0)) throw numerical_error("lambda_eps: amplitude integral underflow");
    return kappa_eps(eps) / a;
}

// All scale-decomposed covariance kernels at fixed (L, eps), radial.
// Immutable after construction; all evaluators are pure.
class KernelSet {
  public:
    KernelSet(int L, double eps, CutoffShape shape = CutoffShape::Standard)
        : L_(L), eps_(eps), shape_(shape) {
        if (L < 2) throw domain_error("KernelSet: L must be an integer >= 2");
        if (!(eps >= 0.0 && eps < 1.0)) throw domain_error("KernelSet: eps must lie in [0,1)");
        cutoff_ = build_cutoff(shape);
        kappa_ = kappa_eps(eps);
        two_phi_ = 0.5 * (3.0 - eps);
        lambda_ = lambda_eps(cutoff_.u0, eps);

        // cumulative scale amplitude W(y) = int_0^y 2 t^{2-eps} u_eps(t^2) dt,
        // so that U(x) = W(sqrt(x)); renormalized to end exactly at kappa so
        // the w kernels vanish identically beyond their support.
        const int n = 2001;
        const double h = 1.0 / (n - 1);
        std::vector<double> w(n, 0.0), d(n, 0.0);
        auto g = [&](double y) { return 2.0 * std::pow(y, 2.0 - eps_) * lambda_ * cutoff_.u0(y * y); };
        for (int i = 1; i < n; ++i)
            w[i] = w[i - 1] + integrate(g, (i - 1) * h, i * h, 1e-17, 1e-13).value;
        const double factor = kappa_ / w.back();
        lambda_ *= factor;
        for (int i = 0; i < n; ++i) {
            w[i] *= factor;
            const double y = i * h;
            d[i] = 2.0 * std::pow(y, 2.0 - eps_) * lambda_ * cutoff_.u0(y * y);
        }
        w_small_edge_ = 4.0 * h;
        W_ = CubicHermite(0.0, 1.0, std::move(w), std::move(d));

        u_eps0_ = lambda_ * cutoff_.u0_at_zero;
        c0_ = u_eps0_ / two_phi_;
        gamma0_ = u_eps0_ * (1.0 - std::pow(double(L_), -two_phi_)) / two_phi_;
        a_ = beta_coefficient(2, 36.0);
        b_ = beta_coefficient(3, 48.0);
    }

    int L() const { return L_; }
    double eps() const { return eps_; }
    double phi_dim() const { return 0.25 * (3.0 - eps_); }
    double kappa() const { return kappa_; }
    double lambda() const { return lambda_; }
    EpsilonParams epsilon_params() const { return {eps_, kappa_, lambda_}; }
    const CutoffPair& cutoff() const { return cutoff_; }

    double u_eps(double t) const { return t >= 1.0 ? 0.0 : lambda_ * cutoff_.u0(t); }
    double u_eps0() const { return u_eps0_; }

    // UV-cutoff covariance: scales in [1, inf).
    double C(double r) const {
        if (r < 0.0) throw domain_error("C: radius must be nonnegative");
        if (r == 0.0) return c0_;
        return std::pow(r, -two_phi_) * U(std::min(r, 1.0));
    }

    // single-scale slice: scales in [1, L]; vanishes identically for r >= L
    double Gamma(double r) const {
        if (r < 0.0) throw domain_error("Gamma: radius must be nonnegative");
        if (r >= double(L_)) return 0.0;
        if (r == 0.0) return gamma0_;
        return std::pow(r, -two_phi_) * (U(std::min(r, 1.0)) - U(std::min(r / L_, 1.0)));
    }

    // rescaled covariance L^{2 phi} C(L r)
    double C_L(double r) const {
        if (r < 0.0) throw domain_error("C_L: radius must be nonnegative");
        if (r == 0.0) return std::pow(double(L_), two_phi_) * c0_;
        return std::pow(r, -two_phi_) * U(std::min(L_ * r, 1.0));
    }

    // pure power law kappa r^{-2 phi}
    double C_tilde(double r) const {
        if (!(r > 0.0)) throw domain_error("C_tilde: radius must be positive");
        return kappa_ * std::pow(r, -two_phi_);
    }

    double C0() const { return c0_; }
    double Gamma0() const { return gamma0_; }

    // v^(p) = C_L^p - C^p, supported in r <= 1
    double v(int p, double r) const {
        if (p < 1 || p > 4) throw usage_error("v: p must lie in {1,2,3,4}");
        if (r < 0.0) throw domain_error("v: radius must be nonnegative");
        if (r == 0.0) return pow_int(C_L(0.0), p) - pow_int(c0_, p);
        if (r >= 1.0) return 0.0;
        const double u1 = U(std::min(L_ * r, 1.0));
        const double u2 = U(r);
        return std::pow(r, -p * two_phi_) * (pow_int(u1, p) - pow_int(u2, p));
    }

    // w^(p) = Ctilde^p - C^p, supported in r <= 1, defined for r != 0
    double w(int p, double r) const {
        if (p < 1 || p > 3) throw usage_error("w: p must lie in {1,2,3}");
        if (!(r > 0.0)) throw domain_error("w: defined for positive radius only");
        if (r >= 1.0) return 0.0;
        return std::pow(r, -p * two_phi_) * (pow_int(kappa_, p) - pow_int(U(r), p));
    }

    // Relative error of the full scale integral int_0^inf (dl/l) l^{-2 phi}
    // u_eps(r/l) against the closed form kappa r^{-2 phi}.  Integrated in l
    // on dyadic panels; the constant-argument far tail is added analytically.
    double riesz_check(double r) const {
        if (!(r > 0.0)) throw domain_error("riesz_check: radius must be positive");
        auto f = [&](double l) { return std::pow(l, -1.0 - two_phi_) * u_eps(r / l); };
        std::vector<double> breaks;
        double edge = r;
        for (int k = 0; k <= 17; ++k) {  // out to l = r * 2^17 ~ 1.3e5 r
            breaks.push_back(edge);
            edge *= 2.0;
        }
        double integral = integrate_panels(f, breaks, 1e-300, 1e-10, 12000).value;
        const double B = breaks.back();
        integral += u_eps0_ * std::pow(B, -two_phi_) / two_phi_;  // u(r/l) ~ u(0) beyond B
        const double closed = kappa_ * std::pow(r, -two_phi_);
        return std::abs(integral - closed) / closed;
    }

    double a_coeff() const { return a_; }
    double b_coeff() const { return b_; }

    // Amplitude normalization entering the beta-function coefficients; fixed
    // so that a(L, eps) -> log L / (18 pi^2) as eps -> 0.
    static constexpr double beta_amplitude_scale() { return 1.0 / 18.0; }

  private:
    // U(x) = int_0^x t^{(1-eps)/2} u_eps(t) dt, clipped to U(1) = kappa.
    double U(double x) const {
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return kappa_;
        const double y = std::sqrt(x);
        if (y < w_small_edge_) {
            auto g = [&](double t) { return 2.0 * std::pow(t, 2.0 - eps_) * lambda_ * cutoff_.u0(t * t); };
            return integrate(g, 0.0, y, 1e-18, 1e-11).value;
        }
        return W_(y);
    }

    double beta_coefficient(int p, double prefactor) const {
        const double amp = beta_amplitude_scale();
        auto f = [&](double r) {
            const double u1 = U(std::min(L_ * r, 1.0));
            const double u2 = U(r);
            return r * r * std::pow(r, -p * two_phi_) * (pow_int(u1, p) - pow_int(u2, p));
        };
        const QuadResult q =
            integrate_panels(f, {0.0, 1.0 / L_, 1.0}, 1e-14, 1e-10);
        return prefactor * 4.0 * kPi * pow_int(amp, p) * q.value;
    }

    int L_;
    double eps_;
    CutoffShape shape_;
    CutoffPair cutoff_;
    double kappa_ = 0.0, lambda_ = 0.0, two_phi_ = 0.0;
    double u_eps0_ = 0.0, c0_ = 0.0, gamma0_ = 0.0, a_ = 0.0, b_ = 0.0;
    double w_small_edge_ = 0.0;
    CubicHermite W_;
};

}  // namespace rgflow::kernels
