#include "qlab/quadrature.hpp"

#include "qlab/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>

namespace qlab {

namespace {

struct SimpsonFrame {
    double a, b, fa, fm, fb, whole, tol;
    int depth;
};

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int max_depth) {
    if (!(b > a)) return 0.0;
    // one-sided values at the ends, which are often jumps of the integrand
    const double fa = f(std::nextafter(a, b)), fb = f(std::nextafter(b, a)), fm = f((a + b) / 2);
    std::vector<SimpsonFrame> stack{{a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), tol, 0}};
    double total = 0;
    while (!stack.empty()) {
        auto fr = stack.back();
        stack.pop_back();
        const double m = (fr.a + fr.b) / 2;
        const double flm = f((fr.a + m) / 2), frm = f((m + fr.b) / 2);
        const double left = (m - fr.a) / 6 * (fr.fa + 4 * flm + fr.fm);
        const double right = (fr.b - m) / 6 * (fr.fm + 4 * frm + fr.fb);
        const double delta = left + right - fr.whole;
        // below rounding level further halving cannot help
        const double floor = 8 * std::numeric_limits<double>::epsilon() * (std::abs(left) + std::abs(right));
        if (std::abs(delta) <= std::max(15 * fr.tol, floor)) {
            total += left + right + delta / 15;
            continue;
        }
        if (fr.depth >= max_depth || !(m > fr.a && m < fr.b))
            throw QuadratureFailure("adaptive Simpson: tolerance unreachable on [" + std::to_string(fr.a) + ", " +
                                    std::to_string(fr.b) + "]");
        stack.push_back({fr.a, m, fr.fa, flm, fr.fm, left, fr.tol / 2, fr.depth + 1});
        stack.push_back({m, fr.b, fr.fm, frm, fr.fb, right, fr.tol / 2, fr.depth + 1});
    }
    return total;
}

namespace {

constexpr std::array<double, 8> kXgk = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                        0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Piece {
    double a, b, value, error;
    bool operator<(const Piece& o) const { return error < o.error; }
};

Piece gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = (a + b) / 2, h = (b - a) / 2;
    const double fc = f(c);
    double k = fc * kWgk[7], g = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double x = h * kXgk[j];
        const double s = f(c - x) + f(c + x);
        k += kWgk[j] * s;
        if (j % 2 == 1) g += kWg[j / 2] * s;
    }
    return {a, b, k * h, std::abs((k - g) * h)};
}

}  // namespace

double adaptive_gauss_kronrod(const std::function<double(double)>& f, double a, double b, double tol, int max_pieces) {
    if (!(b > a)) return 0.0;
    std::priority_queue<Piece> heap;
    heap.push(gk15(f, a, b));
    double value = heap.top().value, error = heap.top().error;
    int pieces = 1;
    while (error > tol) {
        if (pieces >= max_pieces) throw QuadratureFailure("adaptive Gauss-Kronrod: piece budget exhausted");
        Piece worst = heap.top();
        heap.pop();
        const double m = (worst.a + worst.b) / 2;
        if (!(m > worst.a && m < worst.b)) throw QuadratureFailure("adaptive Gauss-Kronrod: interval underflow");
        Piece l = gk15(f, worst.a, m), r = gk15(f, m, worst.b);
        value += l.value + r.value - worst.value;
        error += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
        ++pieces;
        // refresh the running sums now and then so cancellation cannot drift
        if (pieces % 4096 == 0) {
            auto copy = heap;
            value = error = 0;
            for (; !copy.empty(); copy.pop()) {
                value += copy.top().value;
                error += copy.top().error;
            }
        }
    }
    return value;
}

double integrate_piecewise(const std::function<double(double)>& f, double a, double b, std::vector<double> breaks,
                           double max_piece, double tol, bool gauss_kronrod) {
    if (!(b > a)) return 0.0;
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    std::vector<double> pts;
    for (double x : breaks) {
        if (x < a || x > b) continue;
        if (!pts.empty() && x <= pts.back()) continue;
        if (!pts.empty() && max_piece > 0) {
            const double len = x - pts.back();
            const double n = std::ceil(len / max_piece);
            if (n > 1 && n < 1e6) {
                const double start = pts.back();
                for (int i = 1; i < static_cast<int>(n); ++i) pts.push_back(start + len * i / n);
            }
        }
        pts.push_back(x);
    }
    double total = 0;
    const double span = b - a;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double share = tol * (pts[i + 1] - pts[i]) / span;
        total += gauss_kronrod ? adaptive_gauss_kronrod(f, pts[i], pts[i + 1], share)
                               : adaptive_simpson(f, pts[i], pts[i + 1], share);
    }
    return total;
}

}  // namespace qlab
