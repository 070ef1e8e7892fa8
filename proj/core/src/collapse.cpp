#include "qtbias/collapse.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "qtbias/errors.hpp"

namespace qtbias {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Piecewise-linear interpolant over an ascending-x set; x must lie inside
// the closed range.
double interp(const std::vector<RescaledPoint>& pts, double x) {
    auto it = std::lower_bound(pts.begin(), pts.end(), x,
                               [](const RescaledPoint& p, double v) { return p.x < v; });
    if (it == pts.begin()) return pts.front().y;
    if (it == pts.end()) return pts.back().y;
    const RescaledPoint& hi = *it;
    const RescaledPoint& lo = *(it - 1);
    const double t = (x - lo.x) / (hi.x - lo.x);
    return lo.y + t * (hi.y - lo.y);
}

}  // namespace

void CollapseDataset::validate() const {
    if (sets.size() < 2) throw std::invalid_argument("CollapseDataset: need >= 2 sets");
    for (const CollapseSet& s : sets) {
        if (!(s.l > 0.0)) throw std::invalid_argument("CollapseDataset: l must be > 0");
        if (s.points.size() < 4)
            throw std::invalid_argument("CollapseDataset: each set needs >= 4 points");
        double prev = 0.0;
        for (const CollapsePoint& p : s.points) {
            if (!(p.h > prev))
                throw std::invalid_argument(
                    "CollapseDataset: h must be positive and strictly increasing");
            prev = p.h;
        }
    }
}

std::vector<std::vector<RescaledPoint>> rescale(const CollapseDataset& ds, double a,
                                                double b) {
    ds.validate();
    std::vector<std::vector<RescaledPoint>> out;
    out.reserve(ds.sets.size());
    for (const CollapseSet& s : ds.sets) {
        std::vector<RescaledPoint> pts;
        pts.reserve(s.points.size());
        const double lb = std::pow(s.l, -b);
        for (const CollapsePoint& p : s.points)
            pts.push_back({p.h * lb, p.a_value * std::pow(p.h, -a)});
        out.push_back(std::move(pts));
    }
    return out;
}

MeasureValue measure_known(const CollapseDataset& ds,
                           const std::function<double(double)>& f, double a, double b,
                           const MeasureOptions& opt) {
    const auto sets = rescale(ds, a, b);
    MeasureValue mv;
    double acc = 0.0;
    for (const auto& set : sets) {
        for (const RescaledPoint& p : set) {
            const double den = f(p.x);
            if (std::abs(den) < opt.denominator_guard) {
                ++mv.excluded;
                continue;
            }
            const double r = (p.y - den) / den;
            acc += r * r;
            ++mv.points_used;
        }
    }
    if (mv.points_used == 0) throw EmptyMeasureError();
    mv.value = std::sqrt(acc / static_cast<double>(mv.points_used));
    return mv;
}

MeasureValue measure(const CollapseDataset& ds, double a, double b,
                     const MeasureOptions& opt) {
    const auto sets = rescale(ds, a, b);
    MeasureValue mv;
    double acc = 0.0;
    bool any_overlap = false;
    for (std::size_t p = 0; p < sets.size(); ++p) {
        const auto& basis = sets[p];
        const double xlo = basis.front().x;
        const double xhi = basis.back().x;
        for (std::size_t i = 0; i < sets.size(); ++i) {
            if (i == p) continue;
            for (const RescaledPoint& pt : sets[i]) {
                if (pt.x < xlo || pt.x > xhi) continue;
                any_overlap = true;
                const double den = interp(basis, pt.x);
                if (std::abs(den) < opt.denominator_guard) {
                    ++mv.excluded;
                    continue;
                }
                const double r = (pt.y - den) / den;
                acc += r * r;
                ++mv.points_used;
            }
        }
    }
    if (!any_overlap) throw NoOverlapError();
    if (mv.points_used == 0) throw EmptyMeasureError();
    mv.value = std::sqrt(acc / static_cast<double>(mv.points_used));
    return mv;
}

double quality_factor(double m_noisy, double m_ideal) {
    if (m_noisy < 0.0 || m_ideal < 0.0)
        throw std::invalid_argument("quality_factor: measures must be >= 0");
    if (m_noisy == 0.0) return kInf;  // perfect collapse sentinel
    return m_ideal / m_noisy;
}

namespace {

struct Objective {
    const CollapseDataset& ds;
    MeasureOptions opt;
    std::int64_t evals = 0;
    std::int64_t last_excluded = 0;

    double operator()(double a, double b) {
        ++evals;
        try {
            const MeasureValue mv = measure(ds, a, b, opt);
            last_excluded = mv.excluded;
            return mv.value;
        } catch (const Error&) {
            return kInf;
        }
    }
};

struct Vertex {
    double a = 0.0, b = 0.0, f = kInf;
};

}  // namespace

CollapseResult fit_exponents(const CollapseDataset& ds, const FitOptions& opt) {
    ds.validate();
    if (opt.grid < 2) throw std::invalid_argument("fit_exponents: grid must be >= 2");
    Objective obj{ds, MeasureOptions{}};

    // Coarse scan.
    const double da = (opt.a_max - opt.a_min) / (opt.grid - 1);
    const double db = (opt.b_max - opt.b_min) / (opt.grid - 1);
    Vertex best;
    for (int i = 0; i < opt.grid; ++i) {
        for (int j = 0; j < opt.grid; ++j) {
            const double a = opt.a_min + i * da;
            const double b = opt.b_min + j * db;
            const double f = obj(a, b);
            if (f < best.f) best = {a, b, f};
        }
    }

    // Nelder–Mead refinement seeded at the best grid point.
    std::array<Vertex, 3> simplex{
        best,
        Vertex{best.a + da, best.b, obj(best.a + da, best.b)},
        Vertex{best.a, best.b + db, obj(best.a, best.b + db)},
    };
    auto order = [&] {
        std::sort(simplex.begin(), simplex.end(),
                  [](const Vertex& l, const Vertex& r) { return l.f < r.f; });
    };
    order();
    for (int it = 0; it < opt.max_iter; ++it) {
        const double size = std::max(
            std::max(std::abs(simplex[1].a - simplex[0].a), std::abs(simplex[2].a - simplex[0].a)),
            std::max(std::abs(simplex[1].b - simplex[0].b), std::abs(simplex[2].b - simplex[0].b)));
        if (size < 1e-8 && std::abs(simplex[2].f - simplex[0].f) < 1e-14) break;

        const double ca = 0.5 * (simplex[0].a + simplex[1].a);
        const double cb = 0.5 * (simplex[0].b + simplex[1].b);
        const Vertex& worst = simplex[2];
        Vertex refl{ca + (ca - worst.a), cb + (cb - worst.b), 0.0};
        refl.f = obj(refl.a, refl.b);
        if (refl.f < simplex[0].f) {
            Vertex expd{ca + 2.0 * (ca - worst.a), cb + 2.0 * (cb - worst.b), 0.0};
            expd.f = obj(expd.a, expd.b);
            simplex[2] = expd.f < refl.f ? expd : refl;
        } else if (refl.f < simplex[1].f) {
            simplex[2] = refl;
        } else {
            const Vertex& base = refl.f < worst.f ? refl : worst;
            Vertex contr{ca + 0.5 * (base.a - ca), cb + 0.5 * (base.b - cb), 0.0};
            contr.f = obj(contr.a, contr.b);
            if (contr.f < base.f) {
                simplex[2] = contr;
            } else {
                for (int k = 1; k < 3; ++k) {
                    simplex[k].a = simplex[0].a + 0.5 * (simplex[k].a - simplex[0].a);
                    simplex[k].b = simplex[0].b + 0.5 * (simplex[k].b - simplex[0].b);
                    simplex[k].f = obj(simplex[k].a, simplex[k].b);
                }
            }
        }
        order();
    }

    CollapseResult out;
    out.a = simplex[0].a;
    out.b = simplex[0].b;
    out.m_value = obj(out.a, out.b);  // re-evaluate to capture exclusions
    out.excluded = obj.last_excluded;
    out.evaluations = obj.evals;
    return out;
}

CollapseDataset parse_collapse_csv(const std::string& text) {
    std::map<double, std::vector<CollapsePoint>> groups;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string cell;
        double vals[3];
        int col = 0;
        bool numeric = true;
        while (std::getline(row, cell, ',') && col < 3) {
            try {
                vals[col] = std::stod(cell);
            } catch (...) {
                numeric = false;
                break;
            }
            ++col;
        }
        if (!numeric) {
            if (lineno == 1) continue;  // header row
            throw std::invalid_argument("collapse CSV: non-numeric row " +
                                        std::to_string(lineno));
        }
        if (col != 3)
            throw std::invalid_argument("collapse CSV: expected 3 columns at row " +
                                        std::to_string(lineno));
        groups[vals[0]].push_back({vals[1], vals[2]});
    }
    CollapseDataset ds;
    for (auto& [l, pts] : groups) {
        std::sort(pts.begin(), pts.end(),
                  [](const CollapsePoint& x, const CollapsePoint& y) { return x.h < y.h; });
        ds.sets.push_back({l, std::move(pts)});
    }
    ds.validate();
    return ds;
}

}  // namespace qtbias
