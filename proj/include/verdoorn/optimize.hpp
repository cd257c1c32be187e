#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "verdoorn/errors.hpp"

namespace verdoorn {

struct MaximizeResult {
    double x = 0.0;
    double value = 0.0;
    int evaluations = 0;
};

/// Maximizes a smooth scalar function on [lo, hi]: golden-section search
/// down to a narrow bracket, then successive parabolic refinement until the
/// step falls below xtol. Derivative-free, so spectrum-edge blowups of the
/// concentrated likelihood never enter a derivative.
template <typename F>
MaximizeResult maximize_scalar(F&& f, double lo, double hi, double xtol = 1e-9) {
    if (!(hi > lo)) throw ParameterError("maximize_scalar: empty interval");
    const double inv_phi = 0.6180339887498948482;

    MaximizeResult res;
    auto eval = [&](double x) {
        ++res.evaluations;
        return f(x);
    };

    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = eval(x1);
    double f2 = eval(x2);
    const double golden_width = std::max(xtol, 1e-7 * (hi - lo));
    while (b - a > golden_width) {
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = eval(x2);
        }
        if (res.evaluations > 400) break;
    }
    double best_x = f1 >= f2 ? x1 : x2;
    double best_f = std::max(f1, f2);

    // Parabolic polish inside the final bracket.
    double left = a, right = b;
    double fl = eval(left), fr = eval(right);
    for (int iter = 0; iter < 40; ++iter) {
        const double d1 = (best_x - left) * (best_f - fr);
        const double d2 = (best_x - right) * (best_f - fl);
        const double denom = 2.0 * (d2 - d1);
        if (denom == 0.0) break;
        double cand = best_x - ((best_x - right) * d2 - (best_x - left) * d1) / denom;
        cand = std::clamp(cand, lo, hi);
        const double step = std::abs(cand - best_x);
        const double fc = eval(cand);
        if (fc > best_f) {
            if (cand < best_x) {
                right = best_x;
                fr = best_f;
            } else {
                left = best_x;
                fl = best_f;
            }
            best_x = cand;
            best_f = fc;
        } else {
            if (cand < best_x) {
                left = cand;
                fl = fc;
            } else {
                right = cand;
                fr = fc;
            }
        }
        if (step < xtol) break;
    }

    res.x = best_x;
    res.value = best_f;
    return res;
}

}  // namespace verdoorn
