#include "pdmpfv/numerics.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace pdmpfv {

namespace {

double simpson(double fa, double fm, double fb, double width) {
    return width / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double fa, double b,
             double fb, double m, double fm, double whole, double rel_tol,
             double abs_tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(fa, flm, fm, m - a);
    const double right = simpson(fm, frm, fb, b - m);
    const double refined = left + right;
    const double err = refined - whole;
    if (depth <= 0 || std::abs(err) <= 15.0 * (rel_tol * std::abs(refined) + abs_tol)) {
        return refined + err / 15.0;
    }
    return adapt(f, a, fa, m, fm, lm, flm, left, rel_tol, 0.5 * abs_tol, depth - 1) +
           adapt(f, m, fm, b, fb, rm, frm, right, rel_tol, 0.5 * abs_tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol, double abs_tol, int max_depth) {
    if (!(b > a)) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(m);
    const double whole = simpson(fa, fm, fb, b - a);
    return adapt(f, a, fa, b, fb, m, fm, whole, rel_tol, abs_tol, max_depth);
}

void parallel_for_chunks(std::size_t n,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    std::size_t workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    workers = std::min(workers, n);
    if (workers == 1) {
        fn(0, n);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace pdmpfv
