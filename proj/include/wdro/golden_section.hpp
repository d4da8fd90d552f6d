#pragma once

#include <cmath>
#include <utility>

namespace wdro {

struct LineMinimum {
    double x = 0.0;
    double value = 0.0;
    double lo = 0.0;  // final bracket
    double hi = 0.0;
    int evaluations = 0;
};

// Golden-section search for a convex (unimodal) f on [lo, hi]. Shrinks the
// bracket until its width is <= tol and reports f at the bracket midpoint.
template <class F>
LineMinimum golden_section_minimize(F&& f, double lo, double hi, double tol, int max_iterations = 300) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    LineMinimum r;
    if (hi < lo) std::swap(lo, hi);
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    double fc = f(c);
    double fd = f(d);
    r.evaluations = 2;
    for (int it = 0; it < max_iterations && hi - lo > tol; ++it) {
        if (fc <= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
        ++r.evaluations;
    }
    r.lo = lo;
    r.hi = hi;
    r.x = 0.5 * (lo + hi);
    r.value = f(r.x);
    ++r.evaluations;
    return r;
}

}  // namespace wdro
