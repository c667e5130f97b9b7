#pragma once
#include <vector>

namespace glv {

// J_m and its derivative. Thin wrappers over the standard library Bessel
// functions with the derivative built from the recurrence.
double besselJ(int m, double x);
double besselJp(int m, double x);

// All orders 0..n at once by downward recurrence (Miller normalization).
// Far cheaper than n separate calls; out must hold n+1 doubles. besselI_all
// returns unscaled I_m, so arguments above ~690 overflow to inf (callers
// treat non-finite as "drop this basis member").
void besselJ_all(int n, double x, double* out);
void besselI_all(int n, double x, double* out);

// First `count` positive zeros of J_m' (x = 0 is never included, even for
// m = 0 where J_0'(0) = 0; the constant radial mode is handled separately
// by callers). Bracketing scan plus bisection, |residual interval| < 1e-12.
std::vector<double> besselJp_zeros(int m, int count);

} // namespace glv
