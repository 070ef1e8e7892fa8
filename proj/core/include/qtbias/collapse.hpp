// collapse.hpp — finite-size-scaling data-collapse quality measures and
// exponent fitting.
//
// Curves A(h, L) following A = h^a f(h / L^b) collapse onto one scaling
// function when y = A h^{-a} is plotted against x = h L^{-b}.  The measures
// below quantify the residual relative spread, either against a known f or
// against piecewise-linear interpolants of the other sets.  Exponents are
// signed; callers pick the sign convention that matches their rescaling.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace qtbias {

struct CollapsePoint {
    double h = 0.0;
    double a_value = 0.0;  // A(h, L)
};

struct CollapseSet {
    double l = 0.0;  // system-size parameter
    std::vector<CollapsePoint> points;  // h strictly increasing
};

struct CollapseDataset {
    std::vector<CollapseSet> sets;

    // >= 2 sets, >= 4 points per set, h > 0 strictly increasing, l > 0.
    void validate() const;
};

struct RescaledPoint {
    double x = 0.0;  // h * l^{-b}
    double y = 0.0;  // A * h^{-a}
};

std::vector<std::vector<RescaledPoint>> rescale(const CollapseDataset& ds, double a,
                                                double b);

struct MeasureOptions {
    double denominator_guard = 1e-12;  // |denominator| below this excludes the point
};

struct MeasureValue {
    double value = 0.0;
    std::int64_t points_used = 0;
    std::int64_t excluded = 0;
};

// Known-function form: sqrt mean of ((A h^{-a} - f(x)) / f(x))^2 over all
// points.  Throws EmptyMeasureError if the guard excludes everything.
MeasureValue measure_known(const CollapseDataset& ds,
                           const std::function<double(double)>& f, double a, double b,
                           const MeasureOptions& opt = {});

// Interpolation form: every set in turn acts as the basis of a
// piecewise-linear interpolant; points of the other sets inside its closed
// x-range contribute ((y - E_p(x)) / E_p(x))^2.  Throws NoOverlapError when
// no pair of sets overlaps.
MeasureValue measure(const CollapseDataset& ds, double a, double b,
                     const MeasureOptions& opt = {});

// m_ideal / m_noisy; +inf sentinel for a perfect (zero-measure) collapse.
double quality_factor(double m_noisy, double m_ideal);

struct FitOptions {
    double a_min = -4.0, a_max = 4.0;
    double b_min = -4.0, b_max = 4.0;
    int grid = 41;       // coarse scan resolution per axis
    int max_iter = 400;  // Nelder–Mead refinement iterations
};

struct CollapseResult {
    double a = 0.0;
    double b = 0.0;
    double m_value = 0.0;
    std::int64_t evaluations = 0;
    std::int64_t excluded = 0;  // at the optimum
};

// Coarse grid scan followed by deterministic Nelder–Mead refinement of
// measure(ds, a, b).  Grid points without overlap evaluate to +inf.
CollapseResult fit_exponents(const CollapseDataset& ds, const FitOptions& opt = {});

// CSV with columns L,h,A (header row optional); rows grouped by L into sets
// sorted by ascending L, points sorted by ascending h.
CollapseDataset parse_collapse_csv(const std::string& text);

}  // namespace qtbias
