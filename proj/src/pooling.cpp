#include "sec/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sec {

namespace {

void check_class(const ProbField& f, int cls) {
    if (cls < 0 || cls >= f.classes) throw FieldError("pooling: class id out of range");
    if (f.locations() < 1) throw FieldError("pooling: empty field");
}

}  // namespace

GwrpResult gwrp_forward(const ProbField& f, int cls, double d) {
    check_class(f, cls);
    if (d < 0.0 || d > 1.0) throw FieldError("gwrp: decay outside [0,1]");

    const int n = f.locations();
    GwrpResult res;
    res.order.height = f.height;
    res.order.width = f.width;
    res.order.classes = f.classes;
    res.order.cls = cls;
    res.order.index.resize(n);
    std::iota(res.order.index.begin(), res.order.index.end(), 0);
    std::stable_sort(res.order.index.begin(), res.order.index.end(),
                     [&](int a, int b) { return f.at(a, cls) > f.at(b, cls); });

    double num = 0.0, z = 0.0, w = 1.0;  // w = d^(j-1), 0^0 = 1
    for (int j = 0; j < n; ++j) {
        num += w * f.at(res.order.index[j], cls);
        z += w;
        w *= d;
    }
    res.score = num / z;
    return res;
}

GradField gwrp_backward(const RankOrder& order, double d, double dL_dscore) {
    if (order.index.empty() ||
        order.index.size() != static_cast<size_t>(order.height) * order.width)
        throw FieldError("gwrp_backward: stale or mismatched rank order");
    if (d < 0.0 || d > 1.0) throw FieldError("gwrp: decay outside [0,1]");

    const int n = static_cast<int>(order.index.size());
    double z = 0.0, w = 1.0;
    for (int j = 0; j < n; ++j) {
        z += w;
        w *= d;
    }

    GradField grad(order.height, order.width, order.classes);
    w = 1.0;
    for (int j = 0; j < n; ++j) {
        grad.at(order.index[j], order.cls) = dL_dscore * w / z;
        w *= d;
    }
    return grad;
}

double gmp(const ProbField& f, int cls) {
    check_class(f, cls);
    double m = f.at(0, cls);
    for (int u = 1; u < f.locations(); ++u) m = std::max(m, f.at(u, cls));
    return m;
}

double gap(const ProbField& f, int cls) {
    check_class(f, cls);
    double s = 0.0;
    for (int u = 0; u < f.locations(); ++u) s += f.at(u, cls);
    return s / f.locations();
}

namespace {

// Fraction of the total geometric weight carried by the first m ranks.
double mass_fraction_at(int n, int m, double d) {
    double top = 0.0, total = 0.0, w = 1.0;
    for (int j = 0; j < n; ++j) {
        if (j < m) top += w;
        total += w;
        w *= d;
    }
    return top / total;
}

}  // namespace

double solve_decay(int n, double top_fraction, double mass_fraction) {
    if (n < 2) throw FieldError("solve_decay: n must be >= 2");
    if (top_fraction <= 0.0 || top_fraction >= 1.0 || mass_fraction <= 0.0 ||
        mass_fraction >= 1.0)
        throw FieldError("solve_decay: fractions must be in (0,1)");
    if (mass_fraction < top_fraction) throw FieldError("infeasible mass fraction");
    if (mass_fraction == top_fraction) return 1.0;

    const int m = static_cast<int>(std::ceil(top_fraction * n));
    // At d=1 the mass fraction reaches its minimum m/n; below that the
    // target is unreachable and d=1 is the closest admissible value.
    if (mass_fraction <= static_cast<double>(m) / n) return 1.0;

    double lo = 0.0, hi = 1.0;  // mass fraction decreasing in d: 1 at d->0, m/n at d=1
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double res = mass_fraction_at(n, m, mid) - mass_fraction;
        if (std::abs(res) < 1e-10) return mid;
        if (res > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace sec
