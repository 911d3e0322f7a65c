#include "scene/bdrate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace scene {

RdCurve RdCurve::from_points(std::vector<RdPoint> pts) {
    if (pts.size() < 4) {
        throw ValueError("RD curve needs at least 4 points for the cubic fit, got " +
                         std::to_string(pts.size()));
    }
    for (const RdPoint& p : pts) {
        if (!(p.bitrate_kbps > 0.0)) {
            throw ValueError("RD point bitrate must be > 0");
        }
        if (!std::isfinite(p.metric)) {
            throw ValueError("RD point metric must be finite");
        }
    }
    std::sort(pts.begin(), pts.end(),
              [](const RdPoint& a, const RdPoint& b) { return a.bitrate_kbps < b.bitrate_kbps; });
    RdCurve curve;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].bitrate_kbps == pts[i - 1].bitrate_kbps) {
            throw ValueError("RD curve has duplicate bitrate " +
                             std::to_string(pts[i].bitrate_kbps));
        }
        if (pts[i].metric < pts[i - 1].metric && curve.warnings.empty()) {
            curve.warnings.push_back("metric not monotone in bitrate near " +
                                     std::to_string(pts[i].bitrate_kbps) + " kbps");
        }
    }
    curve.points = std::move(pts);
    return curve;
}

double RdCurve::min_metric() const {
    double m = points[0].metric;
    for (const auto& p : points) {
        m = std::min(m, p.metric);
    }
    return m;
}

double RdCurve::max_metric() const {
    double m = points[0].metric;
    for (const auto& p : points) {
        m = std::max(m, p.metric);
    }
    return m;
}

namespace {

struct FitInput {
    std::vector<double> metric;     // x, strictly increasing
    std::vector<double> log_rate;   // y = log10(bitrate)
};

FitInput prepare(const RdCurve& curve, std::vector<std::string>& warnings) {
    std::vector<std::pair<double, double>> xy;
    for (const auto& p : curve.points) {
        xy.emplace_back(p.metric, std::log10(p.bitrate_kbps));
    }
    std::sort(xy.begin(), xy.end());
    // the fit needs log-rate as a function of metric; equal metric values are
    // separated by the minimal representable nudge
    for (std::size_t i = 1; i < xy.size(); ++i) {
        if (xy[i].first <= xy[i - 1].first) {
            const double nudged = std::nextafter(xy[i - 1].first,
                                                 std::numeric_limits<double>::infinity());
            warnings.push_back("duplicate metric value " + std::to_string(xy[i].first) +
                               " perturbed by minimal epsilon");
            xy[i].first = nudged;
        }
    }
    FitInput f;
    for (const auto& [x, y] : xy) {
        f.metric.push_back(x);
        f.log_rate.push_back(y);
    }
    return f;
}

// Least-squares cubic in (x - x0) for conditioning; returns the integral of
// the polynomial over [lo, hi].
struct CubicFit {
    double x0 = 0.0;
    Eigen::Vector4d coeff;  // c0 + c1 u + c2 u^2 + c3 u^3, u = x - x0

    double integral(double lo, double hi) const {
        auto anti = [&](double x) {
            const double u = x - x0;
            return coeff[0] * u + coeff[1] * u * u / 2.0 + coeff[2] * u * u * u / 3.0 +
                   coeff[3] * u * u * u * u / 4.0;
        };
        return anti(hi) - anti(lo);
    }
};

CubicFit fit_cubic(const FitInput& f) {
    const auto n = static_cast<Eigen::Index>(f.metric.size());
    CubicFit fit;
    fit.x0 = f.metric[0];
    Eigen::MatrixXd a(n, 4);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = f.metric[static_cast<std::size_t>(i)] - fit.x0;
        a(i, 0) = 1.0;
        a(i, 1) = u;
        a(i, 2) = u * u;
        a(i, 3) = u * u * u;
        y(i) = f.log_rate[static_cast<std::size_t>(i)];
    }
    fit.coeff = a.colPivHouseholderQr().solve(y);
    return fit;
}

// Fritsch-Carlson monotone cubic Hermite slopes.
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> h(n - 1), delta(n - 1), d(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x[i + 1] - x[i];
        delta[i] = (y[i + 1] - y[i]) / h[i];
    }
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    return d;
}

// Exact integral of the PCHIP interpolant over [lo, hi] (clipped to data).
double pchip_integral(const FitInput& f, double lo, double hi) {
    const auto& x = f.metric;
    const auto& y = f.log_rate;
    const std::vector<double> d = pchip_slopes(x, y);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double a = std::max(lo, x[i]);
        const double b = std::min(hi, x[i + 1]);
        if (a >= b) {
            continue;
        }
        const double h = x[i + 1] - x[i];
        // Hermite basis antiderivatives on normalized t in [0, 1]
        auto anti = [&](double xx) {
            const double t = (xx - x[i]) / h;
            const double t2 = t * t;
            const double t3 = t2 * t;
            const double t4 = t3 * t;
            const double h00 = t - t3 + t4 / 2.0;               // int 2t^3-3t^2+1
            const double h10 = t2 / 2.0 - 2.0 * t3 / 3.0 + t4 / 4.0;  // int t^3-2t^2+t
            const double h01 = t3 - t4 / 2.0;                   // int -2t^3+3t^2
            const double h11 = t4 / 4.0 - t3 / 3.0;             // int t^3-t^2
            return h * (y[i] * h00 + h * d[i] * h10 + y[i + 1] * h01 + h * d[i + 1] * h11);
        };
        acc += anti(b) - anti(a);
    }
    return acc;
}

}  // namespace

BdRateResult bd_rate(const RdCurve& anchor, const RdCurve& test, BdInterp interp) {
    BdRateResult result;
    result.warnings = anchor.warnings;
    result.warnings.insert(result.warnings.end(), test.warnings.begin(), test.warnings.end());

    const FitInput fa = prepare(anchor, result.warnings);
    const FitInput ft = prepare(test, result.warnings);

    const double lo = std::max(fa.metric.front(), ft.metric.front());
    const double hi = std::min(fa.metric.back(), ft.metric.back());
    result.overlap_lo = lo;
    result.overlap_hi = hi;
    if (!(lo < hi)) {
        result.undefined_reason = "no overlapping metric interval";
        return result;
    }

    double int_anchor = 0.0;
    double int_test = 0.0;
    if (interp == BdInterp::cubic) {
        int_anchor = fit_cubic(fa).integral(lo, hi);
        int_test = fit_cubic(ft).integral(lo, hi);
    } else {
        int_anchor = pchip_integral(fa, lo, hi);
        int_test = pchip_integral(ft, lo, hi);
    }
    const double avg_diff = (int_test - int_anchor) / (hi - lo);
    result.percent = (std::pow(10.0, avg_diff) - 1.0) * 100.0;
    return result;
}

}  // namespace scene
