#include "glv/bessel.hpp"
#include "glv/errors.hpp"
#include <cmath>

namespace glv {

double besselJ(int m, double x) {
    if (x < 0) {
        // J_m(-x) = (-1)^m J_m(x)
        double v = std::cyl_bessel_j(double(m), -x);
        return (m % 2 == 0) ? v : -v;
    }
    return std::cyl_bessel_j(double(m), x);
}

double besselJp(int m, double x) {
    if (m == 0) return -besselJ(1, x);
    if (x == 0.0) return m == 1 ? 0.5 : 0.0;
    return 0.5 * (besselJ(m - 1, x) - besselJ(m + 1, x));
}

void besselJ_all(int n, double x, double* out) {
    double ax = std::abs(x);
    if (ax < 0.1) {
        // four series terms; relative error below 1e-13 on this range
        double u = 0.25 * ax * ax, half = 0.5 * ax, pw = 1.0;
        for (int m = 0; m <= n; ++m) {
            double t1 = u / (m + 1.0);
            double t2 = t1 * u / (2.0 * (m + 2.0));
            double t3 = t2 * u / (3.0 * (m + 3.0));
            out[m] = pw * (1.0 - t1 + t2 - t3);
            pw *= half / (m + 1.0);
        }
    } else {
        int start = n + 20 + (int)(1.25 * ax);
        if (start % 2) ++start;
        double bjp = 0.0, bj = 1e-300, sum = 0.0;
        for (int i = 0; i <= n; ++i) out[i] = 0.0;
        for (int k = start; k >= 1; --k) {
            double bjm = (2.0 * k / ax) * bj - bjp;
            bjp = bj;
            bj = bjm;
            int ord = k - 1;
            if (ord <= n) out[ord] = bj;
            if (ord > 0 && ord % 2 == 0) sum += 2.0 * bj;
            if (std::abs(bj) > 1e250) {
                bjp *= 1e-250;
                bj *= 1e-250;
                sum *= 1e-250;
                for (int i = ord; i <= n; ++i) out[i] *= 1e-250;
            }
        }
        sum += bj; // J_0 completes the normalizer J_0 + 2 J_2 + 2 J_4 + ...
        for (int i = 0; i <= n; ++i) out[i] /= sum;
    }
    if (x < 0)
        for (int i = 1; i <= n; i += 2) out[i] = -out[i];
}

void besselI_all(int n, double x, double* out) {
    double ax = std::abs(x);
    if (ax < 0.1) {
        double u = 0.25 * ax * ax, half = 0.5 * ax, pw = 1.0;
        for (int m = 0; m <= n; ++m) {
            double t1 = u / (m + 1.0);
            double t2 = t1 * u / (2.0 * (m + 2.0));
            double t3 = t2 * u / (3.0 * (m + 3.0));
            out[m] = pw * (1.0 + t1 + t2 + t3);
            pw *= half / (m + 1.0);
        }
    } else {
        int start = n + 16 + (int)(1.15 * ax);
        double bip = 0.0, bi = 1e-300, sum = 0.0;
        for (int i = 0; i <= n; ++i) out[i] = 0.0;
        for (int k = start; k >= 1; --k) {
            double bim = (2.0 * k / ax) * bi + bip;
            bip = bi;
            bi = bim;
            int ord = k - 1;
            if (ord <= n) out[ord] = bi;
            if (ord > 0) sum += 2.0 * bi;
            if (std::abs(bi) > 1e250) {
                bip *= 1e-250;
                bi *= 1e-250;
                sum *= 1e-250;
                for (int i = ord; i <= n; ++i) out[i] *= 1e-250;
            }
        }
        sum += bi; // I_0 + 2 sum I_k = e^x
        double ex = std::exp(ax);
        for (int i = 0; i <= n; ++i) out[i] = out[i] / sum * ex;
    }
    if (x < 0)
        for (int i = 1; i <= n; i += 2) out[i] = -out[i];
}

std::vector<double> besselJp_zeros(int m, int count) {
    if (count <= 0) return {};
    std::vector<double> zeros;
    zeros.reserve(count);

    // First zero of J_m' sits near m + 0.81*m^(1/3); successive zeros are
    // asymptotically pi apart. Scan with a step well below that spacing.
    double x = (m == 0) ? 0.5 : std::max(0.5, 0.5 * m);
    const double step = 0.05;
    double f_prev = besselJp(m, x);
    const double x_max = m + 1.0 + (count + 2) * 3.2 + 10.0;

    while ((int)zeros.size() < count && x < x_max) {
        double x_next = x + step;
        double f_next = besselJp(m, x_next);
        if (f_prev == 0.0) {
            zeros.push_back(x);
        } else if (f_prev * f_next < 0.0) {
            double a = x, b = x_next;
            while (b - a > 1e-13) {
                double c = 0.5 * (a + b);
                double fc = besselJp(m, c);
                if (fc == 0.0) { a = b = c; break; }
                (besselJp(m, a) * fc < 0.0 ? b : a) = c;
            }
            zeros.push_back(0.5 * (a + b));
        }
        x = x_next;
        f_prev = f_next;
    }
    if ((int)zeros.size() < count)
        throw Error("besselJp_zeros: scan exhausted before finding requested zeros");
    return zeros;
}

} // namespace glv
