#pragma once

#include "sec/field.hpp"

namespace sec {

// Geometric decay ratios for the three class groups used by the expansion
// loss: present foreground (d_plus), absent foreground (d_minus) and
// background (d_bg).
struct DecayParams {
    double d_plus = 0.996;
    double d_minus = 0.0;
    double d_bg = 0.999;
};

// Locations of one class sorted by descending probability, ties broken by
// ascending location index. Records the field shape so the backward pass
// can rebuild a full gradient field.
struct RankOrder {
    int height = 0;
    int width = 0;
    int classes = 0;
    int cls = 0;
    std::vector<int> index;  // index[j] = location holding rank j
};

struct GwrpResult {
    double score = 0.0;
    RankOrder order;
};

// Weighted rank pooling: score = sum_j d^(j-1) f[order_j, c] / Z(d) with
// Z(d) = sum_j d^(j-1) and the convention 0^0 = 1, so d=0 is the maximum
// and d=1 the mean.
GwrpResult gwrp_forward(const ProbField& f, int cls, double d);

// Gradient of the pooled score with respect to the probability field, with
// the ranking permutation frozen at its forward value. Weights are
// d^(j-1)/Z(d); all other classes receive zero gradient.
GradField gwrp_backward(const RankOrder& order, double d, double dL_dscore);

// Global max / average pooling baselines.
double gmp(const ProbField& f, int cls);
double gap(const ProbField& f, int cls);

// Finds d in (0, 1] such that the top ceil(q*n) ranks carry fraction p of
// the total geometric weight, by bisection on the (strictly decreasing)
// mass-fraction function. Throws on p < q.
double solve_decay(int n, double top_fraction, double mass_fraction);

}  // namespace sec
