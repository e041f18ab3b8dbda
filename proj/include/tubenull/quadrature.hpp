#pragma once

#include <cmath>
#include <queue>
#include <vector>

#include "tubenull/errors.hpp"

namespace tubenull {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  int max_depth = 40;
  std::size_t max_intervals = 200000;
};

/// Globally adaptive Simpson rule: the interval with the largest error
/// estimate is bisected until the summed estimate drops below abs_tol.
/// Integrands with isolated jumps (e.g. arc length across a kink) converge
/// because only the interval holding the jump keeps splitting.
template <typename F>
double adaptive_simpson(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  if (a == b) return 0.0;
  if (a > b) return -adaptive_simpson(f, b, a, opt);

  struct Piece {
    double a, b, fa, fm, fb, whole;
    double left, right, flm, frm;
    double err;
    int depth;
    bool operator<(const Piece& o) const { return err < o.err; }
  };
  auto simpson = [](double h, double fa, double fm, double fb) { return h / 6.0 * (fa + 4.0 * fm + fb); };
  auto refine = [&](double lo, double hi, double flo, double fmid, double fhi, double whole, int depth) {
    const double m = 0.5 * (lo + hi);
    Piece p{lo, hi, flo, fmid, fhi, whole, 0, 0, f(0.5 * (lo + m)), f(0.5 * (m + hi)), 0, depth};
    p.left = simpson(m - lo, flo, p.flm, fmid);
    p.right = simpson(hi - m, fmid, p.frm, fhi);
    // No /15 Richardson factor: near a slope jump the error only halves per
    // bisection, and |S2 - S1| is then the honest estimate.
    p.err = std::abs(p.left + p.right - whole);
    return p;
  };

  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  std::priority_queue<Piece> open;
  open.push(refine(a, b, fa, fm, fb, simpson(b - a, fa, fm, fb), 0));
  double total_err = open.top().err;
  std::size_t intervals = 1;
  while (total_err > opt.abs_tol) {
    Piece p = open.top();
    open.pop();
    total_err -= p.err;
    if (p.depth >= opt.max_depth || intervals >= opt.max_intervals)
      throw numeric_failure("adaptive Simpson did not reach tolerance");
    const double m = 0.5 * (p.a + p.b);
    Piece l = refine(p.a, m, p.fa, p.flm, p.fm, p.left, p.depth + 1);
    Piece r = refine(m, p.b, p.fm, p.frm, p.fb, p.right, p.depth + 1);
    total_err += l.err + r.err;
    open.push(l);
    open.push(r);
    ++intervals;
    if (total_err < 0.0) total_err = 0.0;
  }
  // Sum smallest contributions first for a stable result.
  std::vector<double> parts;
  parts.reserve(open.size());
  while (!open.empty()) {
    const Piece& p = open.top();
    parts.push_back(p.left + p.right);
    open.pop();
  }
  double sum = 0.0;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) sum += *it;
  return sum;
}

}  // namespace tubenull
