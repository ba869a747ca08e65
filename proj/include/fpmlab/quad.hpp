#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace fpmlab::quad {

// Gauss-Legendre nodes/weights on [-1,1], Newton iteration on P_n.
struct GaussLegendre {
    std::vector<double> x, w;

    explicit GaussLegendre(int npts) : x(npts), w(npts) {
        const int m = (npts + 1) / 2;
        for (int i = 0; i < m; ++i) {
            double z = std::cos(M_PI * (i + 0.75) / (npts + 0.5));
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = 0.0;
                for (int j = 0; j < npts; ++j) {
                    double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
                }
                pp = npts * (z * p0 - p1) / (z * z - 1.0);
                double dz = p0 / pp;
                z -= dz;
                if (std::abs(dz) < 1e-15) break;
            }
            x[i] = -z;
            x[npts - 1 - i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
            w[npts - 1 - i] = w[i];
        }
    }

    template <class F>
    double integrate(F&& f, double a, double b) const {
        const double c = 0.5 * (b - a), m = 0.5 * (a + b);
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * f(m + c * x[i]);
        return c * acc;
    }
};

inline const GaussLegendre& gl8() {
    static const GaussLegendre g(8);
    return g;
}
inline const GaussLegendre& gl48() {
    static const GaussLegendre g(48);
    return g;
}
inline const GaussLegendre& gl96() {
    static const GaussLegendre g(96);
    return g;
}

} // namespace fpmlab::quad
