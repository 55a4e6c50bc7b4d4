#pragma once

// Analytic field builders (trigonometric modes, compact bumps, exponential
// gauge sections) with exact partials, plus grid-sampled closures with
// finite-difference partials for fixtures that arrive as node data.

#include <unsupported/Eigen/MatrixFunctions>

#include "conwave/bundle.hpp"

namespace conwave {

// scalar building block  f(p) = prod of per-axis factors, with exact jets
struct ScalarJetFn {
  std::function<double(const Point&)> v;
  std::function<double(const Point&, int)> d1;
  std::function<double(const Point&, int, int)> d2;
};

// C^2 bump profile b(r) = (1-r^2)^3 on |r|<1, 0 outside
inline void bump_profile(double r, double& b, double& db, double& ddb) {
  double q = 1 - r * r;
  if (q <= 0) {
    b = db = ddb = 0;
    return;
  }
  b = q * q * q;
  db = -6 * r * q * q;
  ddb = -6 * q * q + 24 * r * r * q;
}

// product of per-axis bumps centered at ctr with half-widths rad
inline ScalarJetFn make_bump_scalar(int n, Point ctr, std::array<double, 3> rad) {
  auto factor = [ctr, rad](const Point& p, int axis, double& b, double& db, double& ddb) {
    double r = (p[axis] - ctr[axis]) / rad[axis];
    bump_profile(r, b, db, ddb);
    db /= rad[axis];
    ddb /= rad[axis] * rad[axis];
  };
  ScalarJetFn f;
  int d = n + 1;
  f.v = [factor, d](const Point& p) {
    double out = 1;
    for (int a = 0; a < d; ++a) {
      double b, db, ddb;
      factor(p, a, b, db, ddb);
      out *= b;
    }
    return out;
  };
  f.d1 = [factor, d](const Point& p, int k) {
    double out = 1;
    for (int a = 0; a < d; ++a) {
      double b, db, ddb;
      factor(p, a, b, db, ddb);
      out *= (a == k) ? db : b;
    }
    return out;
  };
  f.d2 = [factor, d](const Point& p, int k, int l) {
    double out = 1;
    for (int a = 0; a < d; ++a) {
      double b, db, ddb;
      factor(p, a, b, db, ddb);
      if (a == k && a == l)
        out *= ddb;
      else if (a == k || a == l)
        out *= db;
      else
        out *= b;
    }
    return out;
  };
  return f;
}

// trig mode  cos(w.p + phase)  with exact jets
inline ScalarJetFn make_trig_scalar(int n, std::array<double, 3> w, double phase) {
  int d = n + 1;
  auto arg = [w, phase, d](const Point& p) {
    double a = phase;
    for (int k = 0; k < d; ++k) a += w[k] * p[k];
    return a;
  };
  ScalarJetFn f;
  f.v = [arg](const Point& p) { return std::cos(arg(p)); };
  f.d1 = [arg, w](const Point& p, int k) { return -w[k] * std::sin(arg(p)); };
  f.d2 = [arg, w](const Point& p, int k, int l) { return -w[k] * w[l] * std::cos(arg(p)); };
  return f;
}

// section u(p) = sum_m  c_m * exp(i k_m . p) * e_{j_m}   (random modes)
inline SectionClosure make_trig_section(int n, int N, uint64_t seed, int modes = 3,
                                        double kmax = 3.0) {
  Rng rng(seed);
  struct Mode {
    cplx coef;
    std::array<double, 3> k;
    int fiber;
  };
  auto mv = std::make_shared<std::vector<Mode>>();
  for (int m = 0; m < modes; ++m) {
    Mode mo;
    mo.coef = rng.cnormal();
    for (int a = 0; a <= n; ++a) mo.k[a] = rng.uniform(-kmax, kmax);
    mo.fiber = static_cast<int>(rng.uniform(0, N)) % N;
    mv->push_back(mo);
  }
  SectionClosure u;
  u.n = n;
  u.N = N;
  auto phase = [](const Mode& mo, const Point& p) {
    double s = 0;
    for (int a = 0; a < 3; ++a) s += mo.k[a] * p[a];
    return std::exp(iu * s);
  };
  u.value = [mv, N, phase](const Point& p) {
    Vec v = Vec::Zero(N);
    for (auto& mo : *mv) v(mo.fiber) += mo.coef * phase(mo, p);
    return v;
  };
  u.d1 = [mv, N, phase](const Point& p, int k) {
    Vec v = Vec::Zero(N);
    for (auto& mo : *mv) v(mo.fiber) += mo.coef * iu * mo.k[k] * phase(mo, p);
    return v;
  };
  u.d2 = [mv, N, phase](const Point& p, int k, int l) {
    Vec v = Vec::Zero(N);
    for (auto& mo : *mv) v(mo.fiber) += -mo.coef * mo.k[k] * mo.k[l] * phase(mo, p);
    return v;
  };
  return u;
}

// compactly supported section: bump * trig modes
inline SectionClosure make_bump_section(int n, int N, uint64_t seed, Point ctr,
                                        std::array<double, 3> rad) {
  SectionClosure trig = make_trig_section(n, N, seed);
  ScalarJetFn b = make_bump_scalar(n, ctr, rad);
  SectionClosure u;
  u.n = n;
  u.N = N;
  u.value = [trig, b](const Point& p) { return (b.v(p) * trig.value(p)).eval(); };
  u.d1 = [trig, b](const Point& p, int k) {
    return (b.d1(p, k) * trig.value(p) + b.v(p) * trig.d1(p, k)).eval();
  };
  u.d2 = [trig, b](const Point& p, int k, int l) {
    return (b.d2(p, k, l) * trig.value(p) + b.d1(p, k) * trig.d1(p, l) +
            b.d1(p, l) * trig.d1(p, k) + b.v(p) * trig.d2(p, k, l))
        .eval();
  };
  return u;
}

// matrix field M(p) = sum_m  C_m * s_m(p)  with C_m constant matrices and s_m
// trig scalars; used for connections (skew C_m) and potentials (Hermitian C_m)
inline MatrixClosure make_matrix_field(int n, int N, std::vector<Mat> coefs,
                                       std::vector<ScalarJetFn> scalars) {
  auto C = std::make_shared<std::vector<Mat>>(std::move(coefs));
  auto S = std::make_shared<std::vector<ScalarJetFn>>(std::move(scalars));
  MatrixClosure f;
  f.n = n;
  f.N = N;
  f.value = [C, S, N](const Point& p) {
    Mat m = Mat::Zero(N, N);
    for (size_t i = 0; i < C->size(); ++i) m += (*C)[i] * (*S)[i].v(p);
    return m;
  };
  f.d1 = [C, S, N](const Point& p, int k) {
    Mat m = Mat::Zero(N, N);
    for (size_t i = 0; i < C->size(); ++i) m += (*C)[i] * (*S)[i].d1(p, k);
    return m;
  };
  f.d2 = [C, S, N](const Point& p, int k, int l) {
    Mat m = Mat::Zero(N, N);
    for (size_t i = 0; i < C->size(); ++i) m += (*C)[i] * (*S)[i].d2(p, k, l);
    return m;
  };
  return f;
}

inline ConnectionClosure make_random_connection(int n, int N, uint64_t seed,
                                                double scale = 0.5, int modes = 2) {
  Rng rng(seed);
  ConnectionClosure B;
  B.n = n;
  B.N = N;
  B.group.N = N;
  auto comps = std::make_shared<std::vector<MatrixClosure>>();
  for (int i = 0; i <= n; ++i) {
    std::vector<Mat> C;
    std::vector<ScalarJetFn> S;
    for (int m = 0; m < modes; ++m) {
      C.push_back(rng.random_skew(N, scale));
      std::array<double, 3> w{};
      for (int a = 0; a <= n; ++a) w[a] = rng.uniform(-2, 2);
      S.push_back(make_trig_scalar(n, w, rng.uniform(0, 6.28)));
    }
    comps->push_back(make_matrix_field(n, N, C, S));
  }
  B.comp = [comps](const Point& p, int i) { return (*comps)[i].value(p); };
  B.d1 = [comps](const Point& p, int i, int k) { return (*comps)[i].d1(p, k); };
  B.d2 = [comps](const Point& p, int i, int k, int l) { return (*comps)[i].d2(p, k, l); };
  return B;
}

inline PotentialClosure make_random_potential(int n, int N, uint64_t seed,
                                              double scale = 0.5, int modes = 2) {
  Rng rng(seed);
  std::vector<Mat> C;
  std::vector<ScalarJetFn> S;
  for (int m = 0; m < modes; ++m) {
    C.push_back(rng.random_hermitian(N, scale));
    std::array<double, 3> w{};
    for (int a = 0; a <= n; ++a) w[a] = rng.uniform(-2, 2);
    S.push_back(make_trig_scalar(n, w, rng.uniform(0, 6.28)));
  }
  MatrixClosure mf = make_matrix_field(n, N, C, S);
  PotentialClosure V;
  V.n = n;
  V.N = N;
  V.value = mf.value;
  V.d1 = mf.d1;
  return V;
}

inline PotentialClosure make_constant_potential(int n, const Mat& V0) {
  PotentialClosure V;
  V.n = n;
  V.N = V0.rows();
  V.value = [V0](const Point&) { return V0; };
  V.d1 = [V0](const Point&, int) { return Mat::Zero(V0.rows(), V0.cols()).eval(); };
  return V;
}

inline ConnectionClosure make_constant_connection(int n, std::vector<Mat> Bs) {
  int N = Bs[0].rows();
  auto B0 = std::make_shared<std::vector<Mat>>(std::move(Bs));
  ConnectionClosure B;
  B.n = n;
  B.N = N;
  B.group.N = N;
  B.comp = [B0](const Point&, int i) { return (*B0)[i]; };
  B.d1 = [N](const Point&, int, int) { return Mat::Zero(N, N).eval(); };
  B.d2 = [N](const Point&, int, int, int) { return Mat::Zero(N, N).eval(); };
  return B;
}

// gauge section A = exp(w(p) S) for fixed S in g; S commutes with exp(wS) so
// the partials are exact:  dA = (dw) S A,  ddA = (ddw) S A + (dw)(dw) S^2 A.
inline MatrixClosure make_exp_gauge(int n, const Mat& S, ScalarJetFn w) {
  int N = S.rows();
  MatrixClosure A;
  A.n = n;
  A.N = N;
  auto expw = [S, N](double wv) {
    return Mat((wv * S).exp());
  };
  A.value = [expw, w](const Point& p) { return expw(w.v(p)); };
  A.d1 = [expw, w, S](const Point& p, int k) { return (w.d1(p, k) * S * expw(w.v(p))).eval(); };
  A.d2 = [expw, w, S](const Point& p, int k, int l) {
    Mat E = expw(w.v(p));
    return (w.d2(p, k, l) * S * E + w.d1(p, k) * w.d1(p, l) * S * S * E).eval();
  };
  return A;
}

inline MatrixClosure make_identity_gauge(int n, int N) {
  MatrixClosure A;
  A.n = n;
  A.N = N;
  A.value = [N](const Point&) { return Mat::Identity(N, N).eval(); };
  A.d1 = [N](const Point&, int) { return Mat::Zero(N, N).eval(); };
  A.d2 = [N](const Point&, int, int) { return Mat::Zero(N, N).eval(); };
  return A;
}

// scalar w that vanishes on the lateral boundary (x-faces): product of
// sin(pi (x-x_min)/(x_max-x_min)) factors times a trig factor in t.
inline ScalarJetFn make_sigma_vanishing_scalar(const CoordinateChart& chart,
                                               double amplitude, double tfreq) {
  int n = chart.n;
  double x0 = chart.x_min[0], L0 = chart.x_max[0] - chart.x_min[0];
  double x1 = chart.x_min[1], L1 = chart.n == 2 ? chart.x_max[1] - chart.x_min[1] : 1;
  ScalarJetFn f;
  auto axis_val = [=](const Point& p, int a) -> std::array<double, 3> {
    if (a == 0) {
      double c = std::cos(tfreq * p[0]), s = std::sin(tfreq * p[0]);
      return {c, -tfreq * s, -tfreq * tfreq * c};
    }
    double xm = (a == 1) ? x0 : x1;
    double L = (a == 1) ? L0 : L1;
    double k = M_PI / L;
    double s = std::sin(k * (p[a] - xm)), c = std::cos(k * (p[a] - xm));
    return {s, k * c, -k * k * s};
  };
  int d = n + 1;
  f.v = [axis_val, amplitude, d](const Point& p) {
    double out = amplitude;
    for (int a = 0; a < d; ++a) out *= axis_val(p, a)[0];
    return out;
  };
  f.d1 = [axis_val, amplitude, d](const Point& p, int k) {
    double out = amplitude;
    for (int a = 0; a < d; ++a) out *= axis_val(p, a)[a == k ? 1 : 0];
    return out;
  };
  f.d2 = [axis_val, amplitude, d](const Point& p, int k, int l) {
    double out = amplitude;
    for (int a = 0; a < d; ++a) {
      int ord = (a == k ? 1 : 0) + (a == l ? 1 : 0);
      out *= axis_val(p, a)[ord];
    }
    return out;
  };
  return f;
}

// --- grid-sampled closures (4th order central differences, one-sided at the
// boundary, 2nd order for mixed/second derivatives) ---------------------------

struct GridMatrixField {
  CoordinateChart chart;
  int N = 1;
  int dirs = 1;  // number of stored matrix slots (1 for V, n+1 for B)
  std::vector<Mat> data;  // indexed [ (m * space_nodes + idx) * dirs + dir ]

  Mat& at(int m, int idx, int dir = 0) {
    return data[(static_cast<size_t>(m) * chart.space_nodes() + idx) * dirs + dir];
  }
  const Mat& at(int m, int idx, int dir = 0) const {
    return data[(static_cast<size_t>(m) * chart.space_nodes() + idx) * dirs + dir];
  }
};

namespace detail {

// 4th-order first derivative along one grid axis with one-sided fallbacks
template <class Get>
auto fd_axis(const Get& get, int pos, int count, double h) -> decltype(get(0)) {
  auto at = [&](int i) { return get(std::clamp(i, 0, count - 1)); };
  if (pos >= 2 && pos <= count - 3)
    return (at(pos - 2) - 8.0 * at(pos - 1) + 8.0 * at(pos + 1) - at(pos + 2)) / (12 * h);
  if (pos == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2 * h);
  if (pos == count - 1)
    return (3.0 * at(count - 1) - 4.0 * at(count - 2) + at(count - 3)) / (2 * h);
  return (at(pos + 1) - at(pos - 1)) / (2 * h);
}

}  // namespace detail

// Wrap grid samples of a connection as a ConnectionClosure (values exact at
// nodes; derivatives by finite differences; evaluation snaps to nearest node).
inline ConnectionClosure make_grid_connection(std::shared_ptr<GridMatrixField> grid,
                                              GaugeGroupSpec group) {
  ConnectionClosure B;
  B.n = grid->chart.n;
  B.N = grid->N;
  B.group = group;
  auto locate = [grid](const Point& p, int& m, int& i, int& j) {
    const auto& ch = grid->chart;
    m = std::clamp(static_cast<int>(std::lround((p[0] - ch.t_min) / ch.ht())), 0, ch.nt);
    i = std::clamp(static_cast<int>(std::lround((p[1] - ch.x_min[0]) / ch.hx(0))), 0,
                   ch.nx[0]);
    j = ch.n == 2 ? std::clamp(
                        static_cast<int>(std::lround((p[2] - ch.x_min[1]) / ch.hx(1))), 0,
                        ch.nx[1])
                  : 0;
  };
  B.comp = [grid, locate](const Point& p, int dir) {
    int m, i, j;
    locate(p, m, i, j);
    return grid->at(m, grid->chart.space_index(i, j), dir);
  };
  B.d1 = [grid, locate](const Point& p, int dir, int k) {
    int m, i, j;
    locate(p, m, i, j);
    const auto& ch = grid->chart;
    if (k == 0)
      return detail::fd_axis(
          [&](int mm) { return grid->at(mm, ch.space_index(i, j), dir); }, m, ch.nt + 1,
          ch.ht());
    if (k == 1)
      return detail::fd_axis(
          [&](int ii) { return grid->at(m, ch.space_index(ii, j), dir); }, i, ch.nx[0] + 1,
          ch.hx(0));
    return detail::fd_axis(
        [&](int jj) { return grid->at(m, ch.space_index(i, jj), dir); }, j, ch.nx[1] + 1,
        ch.hx(1));
  };
  return B;
}

}  // namespace conwave
