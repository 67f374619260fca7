#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rgflow/errors.hpp"

namespace rgflow {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;  // estimated absolute error
    long evaluations = 0;
};

namespace detail {

// Gauss-Kronrod 15(7) abscissae and weights on [-1,1] (QUADPACK dqk15).
inline constexpr double kGK15X[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kGK15WK[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGK15WG[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
inline void gk15(const F& f, double a, double b, double& kronrod, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    fv[7] = f(c);
    for (int i = 0; i < 7; ++i) {
        const double dx = h * kGK15X[i];
        fv[i] = f(c - dx);
        fv[14 - i] = f(c + dx);
    }
    double resk = kGK15WK[7] * fv[7];
    double resg = kGK15WG[3] * fv[7];
    for (int i = 0; i < 7; ++i) {
        resk += kGK15WK[i] * (fv[i] + fv[14 - i]);
        if (i % 2 == 1) resg += kGK15WG[i / 2] * (fv[i] + fv[14 - i]);
    }
    kronrod = resk * h;
    const double diff = std::abs(resk - resg) * std::abs(h);
    // QUADPACK-style sharpened error estimate
    err = diff;
    if (diff > 0.0) {
        double resabs = 0.0;
        for (int i = 0; i < 7; ++i) resabs += kGK15WK[i] * (std::abs(fv[i]) + std::abs(fv[14 - i]));
        resabs += kGK15WK[7] * std::abs(fv[7]);
        resabs *= std::abs(h);
        const double scale = std::pow(200.0 * diff / (resabs + 1e-300), 1.5);
        if (scale < 1.0) err = resabs * scale;
    }
}

}  // namespace detail

// Adaptive bisection on [a,b] until the summed Kronrod error estimate meets
// abs_tol or rel_tol.  Throws numerical_error when the interval budget runs out.
template <class F>
QuadResult integrate(const F& f, double a, double b, double abs_tol = 1e-12,
                     double rel_tol = 1e-10, int max_intervals = 4000) {
    struct Seg {
        double a, b, value, error;
    };
    QuadResult out;
    if (a == b) return out;
    std::vector<Seg> segs;
    double v, e;
    detail::gk15(f, a, b, v, e);
    out.evaluations = 15;
    segs.push_back({a, b, v, e});
    while (true) {
        double total = 0.0, err = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            total += segs[i].value;
            err += segs[i].error;
            if (segs[i].error > segs[worst].error) worst = i;
        }
        if (err <= abs_tol || err <= rel_tol * std::abs(total)) {
            out.value = total;
            out.error = err;
            return out;
        }
        if ((int)segs.size() >= max_intervals) {
            throw numerical_error("adaptive quadrature did not converge: est. error " +
                                  std::to_string(err) + " on [" + std::to_string(a) + "," +
                                  std::to_string(b) + "] after " + std::to_string(segs.size()) +
                                  " intervals");
        }
        Seg s = segs[worst];
        const double m = 0.5 * (s.a + s.b);
        Seg left{s.a, m, 0, 0}, right{m, s.b, 0, 0};
        detail::gk15(f, left.a, left.b, left.value, left.error);
        detail::gk15(f, right.a, right.b, right.value, right.error);
        out.evaluations += 30;
        segs[worst] = left;
        segs.push_back(right);
    }
}

// Integrate with forced panel boundaries (support edges, kinks).
template <class F>
QuadResult integrate_panels(const F& f, const std::vector<double>& breaks, double abs_tol = 1e-12,
                            double rel_tol = 1e-10, int max_intervals = 4000) {
    QuadResult out;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        QuadResult r = integrate(f, breaks[i], breaks[i + 1], abs_tol / (breaks.size() - 1),
                                 rel_tol, max_intervals);
        out.value += r.value;
        out.error += r.error;
        out.evaluations += r.evaluations;
    }
    return out;
}

}  // namespace rgflow
