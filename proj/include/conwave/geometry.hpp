#pragma once

// Lorentzian metric layer for product metrics g = c(t,x) (-dt^2 + g0(t,x,dx))
// on a coordinate box: derived tensors, causal classification of vectors,
// null covector frames and the curvature-sign scan.

#include "conwave/core.hpp"

namespace conwave {

// Metric data supplied as analytic jets of c and g0.  A closure must return
// c > 0 and g0 symmetric positive definite everywhere on its chart.
struct MetricJets {
  Jet2 c;
  Jet2 g0[2][2];  // n x n block; only [0][0] used when n = 1
};

struct MetricClosure {
  int n = 1;
  bool time_independent = true;  // c and g0 independent of t
  std::string name = "metric";
  std::function<MetricJets(const Point&)> eval;

  MetricJets operator()(const Point& p) const { return eval(p); }
};

enum class CausalClass { Spacelike, Timelike, Lightlike, Zero };
enum class TimeOrientation { Future, Past, Neither };

// Convention for "future-pointing".  The paper's text defines future-pointing
// as g(v, d_t) > 0, which for signature (-,+,...,+) makes -d_t future; the
// coordinate convention instead calls dt(v) > 0 future.
enum class FutureConvention { Paper, Coordinate };

struct TangentVector {
  Point base;
  double comp[3] = {0, 0, 0};  // index 0 = time component
  bool covariant = false;      // true for covectors
};

// g, its inverse, volume density, Christoffels and their ingredients at a
// point.  Fixed 3x3 storage; only the leading (n+1)x(n+1) block is used.
struct MetricAtPoint {
  int n = 1;
  Point p;
  double g[3][3] = {};
  double ginv[3][3] = {};
  double dg[3][3][3] = {};     // dg[k][i][j] = d_k g_ij
  double ddg[3][3][3][3] = {};  // ddg[k][l][i][j] = d_k d_l g_ij
  double dginv[3][3][3] = {};  // dginv[k][i][j] = d_k g^ij
  double G = 1;                // |det g|^{1/2}
  double dG[3] = {};
  double gamma[3][3][3] = {};   // gamma[k][i][j] = Gamma^k_ij
  double dgamma[3][3][3][3] = {};  // dgamma[l][k][i][j] = d_l Gamma^k_ij

  int dim() const { return n + 1; }

  double inner_vec(const double* u, const double* v) const {
    double s = 0;
    for (int i = 0; i < dim(); ++i)
      for (int j = 0; j < dim(); ++j) s += g[i][j] * u[i] * v[j];
    return s;
  }
  double inner_cov(const double* a, const double* b) const {
    double s = 0;
    for (int i = 0; i < dim(); ++i)
      for (int j = 0; j < dim(); ++j) s += ginv[i][j] * a[i] * b[j];
    return s;
  }
  // musical isomorphisms
  void lower(const double* v, double* out) const {
    for (int i = 0; i < dim(); ++i) {
      out[i] = 0;
      for (int j = 0; j < dim(); ++j) out[i] += g[i][j] * v[j];
    }
  }
  void raise(const double* a, double* out) const {
    for (int i = 0; i < dim(); ++i) {
      out[i] = 0;
      for (int j = 0; j < dim(); ++j) out[i] += ginv[i][j] * a[j];
    }
  }
};

namespace detail {

inline void invert_sym(const double m[3][3], int d, double out[3][3]) {
  if (d == 2) {
    double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if (std::abs(det) < 1e-300) throw numerical_error("singular metric block");
    out[0][0] = m[1][1] / det;
    out[1][1] = m[0][0] / det;
    out[0][1] = out[1][0] = -m[0][1] / det;
  } else {
    Eigen::Matrix3d M;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) M(i, j) = m[i][j];
    Eigen::Matrix3d Inv = M.inverse();
    if (!Inv.allFinite()) throw numerical_error("singular metric");
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out[i][j] = Inv(i, j);
  }
}

}  // namespace detail

// Assemble g = c(-dt^2 + g0) with all first/second partials, inverse, volume
// density and Christoffel symbols from the closure's analytic jets.
inline MetricAtPoint metric_at(const MetricClosure& mc, const Point& p) {
  MetricJets J = mc.eval(p);
  if (!(J.c.v > 0)) throw numerical_error("metric closure: c <= 0 at sample point");
  MetricAtPoint M;
  M.n = mc.n;
  M.p = p;
  int d = M.dim();

  // g_00 = -c, g_ab = c * g0_ab  (a,b >= 1); no cross terms by construction
  M.g[0][0] = -J.c.v;
  for (int a = 0; a < mc.n; ++a)
    for (int b = 0; b < mc.n; ++b) M.g[a + 1][b + 1] = J.c.v * J.g0[a][b].v;
  for (int k = 0; k < d; ++k) {
    M.dg[k][0][0] = -J.c.d[k];
    for (int a = 0; a < mc.n; ++a)
      for (int b = 0; b < mc.n; ++b)
        M.dg[k][a + 1][b + 1] = J.c.d[k] * J.g0[a][b].v + J.c.v * J.g0[a][b].d[k];
  }
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) {
      M.ddg[k][l][0][0] = -J.c.dd[k][l];
      for (int a = 0; a < mc.n; ++a)
        for (int b = 0; b < mc.n; ++b)
          M.ddg[k][l][a + 1][b + 1] = J.c.dd[k][l] * J.g0[a][b].v +
                                      J.c.d[k] * J.g0[a][b].d[l] +
                                      J.c.d[l] * J.g0[a][b].d[k] +
                                      J.c.v * J.g0[a][b].dd[k][l];
    }

  // inverse: block diagonal
  double g0m[3][3] = {}, g0i[3][3] = {};
  for (int a = 0; a < mc.n; ++a)
    for (int b = 0; b < mc.n; ++b) g0m[a][b] = M.g[a + 1][b + 1];
  if (mc.n == 1) {
    if (std::abs(g0m[0][0]) < 1e-300) throw numerical_error("singular g0");
    g0i[0][0] = 1.0 / g0m[0][0];
  } else {
    detail::invert_sym(g0m, 2, g0i);
  }
  M.ginv[0][0] = -1.0 / J.c.v;
  for (int a = 0; a < mc.n; ++a)
    for (int b = 0; b < mc.n; ++b) M.ginv[a + 1][b + 1] = g0i[a][b];

  // d ginv = -ginv (dg) ginv
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = 0;
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) s += M.ginv[i][a] * M.dg[k][a][b] * M.ginv[b][j];
        M.dginv[k][i][j] = -s;
      }

  // volume density G = |det g|^{1/2}, dG = (1/2) G tr(g^{-1} dg)
  double det0 = (mc.n == 1) ? g0m[0][0] : (g0m[0][0] * g0m[1][1] - g0m[0][1] * g0m[1][0]);
  M.G = std::sqrt(J.c.v * std::abs(det0));
  for (int k = 0; k < d; ++k) {
    double tr = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) tr += M.ginv[i][j] * M.dg[k][j][i];
    M.dG[k] = 0.5 * M.G * tr;
  }

  // Gamma^k_ij = 1/2 g^{kl} (d_i g_lj + d_j g_li - d_l g_ij)
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = 0;
        for (int l = 0; l < d; ++l)
          s += M.ginv[k][l] * (M.dg[i][l][j] + M.dg[j][l][i] - M.dg[l][i][j]);
        M.gamma[k][i][j] = 0.5 * s;
      }
  // d_m Gamma^k_ij
  for (int m = 0; m < d; ++m)
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          double s = 0;
          for (int l = 0; l < d; ++l) {
            s += M.dginv[m][k][l] * (M.dg[i][l][j] + M.dg[j][l][i] - M.dg[l][i][j]);
            s += M.ginv[k][l] *
                 (M.ddg[m][i][l][j] + M.ddg[m][j][l][i] - M.ddg[m][l][i][j]);
          }
          M.dgamma[m][k][i][j] = 0.5 * s;
        }
  return M;
}

// Full lowered Riemann tensor R_{lijk} = g_lm R^m_ijk with
// R^m_ijk = d_j Gamma^m_ki - d_k Gamma^m_ji + Gamma^m_ja Gamma^a_ki
//           - Gamma^m_ka Gamma^a_ji   (curvature of the Levi-Civita connection;
// R(X,Y)Z has components R^m_{zij} X^i Y^j Z^z with this index order).
struct RiemannAtPoint {
  int n = 1;
  double R[3][3][3][3] = {};  // lowered, R[l][i][j][k] = R_{l i j k}

  int dim() const { return n + 1; }
  // g(R(X,Y)Z, W): note first slot pairs with W
  double sectional_pairing(const double* w, const double* z, const double* x,
                           const double* y) const {
    double s = 0;
    for (int l = 0; l < dim(); ++l)
      for (int i = 0; i < dim(); ++i)
        for (int j = 0; j < dim(); ++j)
          for (int k = 0; k < dim(); ++k) s += R[l][i][j][k] * w[l] * z[i] * x[j] * y[k];
    return s;
  }
};

inline RiemannAtPoint riemann_at(const MetricAtPoint& M) {
  RiemannAtPoint R;
  R.n = M.n;
  int d = M.dim();
  for (int m = 0; m < d; ++m)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          double up = M.dgamma[j][m][k][i] - M.dgamma[k][m][j][i];
          for (int a = 0; a < d; ++a)
            up += M.gamma[m][j][a] * M.gamma[a][k][i] - M.gamma[m][k][a] * M.gamma[a][j][i];
          // lower first index
          // accumulate into R_{l i j k} for each l with weight g_{l m}
          for (int l = 0; l < d; ++l) R.R[l][i][j][k] += M.g[l][m] * up;
        }
  return R;
}

inline RiemannAtPoint riemann_at(const MetricClosure& mc, const Point& p) {
  return riemann_at(metric_at(mc, p));
}

struct VectorClass {
  CausalClass causal = CausalClass::Zero;
  TimeOrientation orientation = TimeOrientation::Neither;
  double norm2 = 0;  // g(v,v)
};

inline VectorClass classify_vector(const MetricAtPoint& M, const TangentVector& v,
                                   double tau_null = 1e-10,
                                   FutureConvention conv = FutureConvention::Paper) {
  VectorClass out;
  double comps[3] = {v.comp[0], v.comp[1], v.comp[2]};
  double vv, vt;
  double aux = 0;
  for (int i = 0; i < M.dim(); ++i) aux += comps[i] * comps[i];
  if (v.covariant) {
    vv = M.inner_cov(comps, comps);
    // pairing with d_t: <xi, d_t> = xi_0
    vt = comps[0];
  } else {
    vv = M.inner_vec(comps, comps);
    double dt_vec[3] = {1, 0, 0};
    vt = M.inner_vec(comps, dt_vec);
  }
  out.norm2 = vv;
  if (aux == 0) {
    out.causal = CausalClass::Zero;
    return out;
  }
  if (std::abs(vv) <= tau_null * aux)
    out.causal = CausalClass::Lightlike;
  else if (vv > 0)
    out.causal = CausalClass::Spacelike;
  else
    out.causal = CausalClass::Timelike;

  double oriented = (conv == FutureConvention::Paper)
                        ? (v.covariant ? vt : vt)  // literal g(v, d_t) / <xi,(d_t)>
                        : (v.covariant ? -vt : comps[0]);
  // For covectors under the coordinate convention, future means xi(raise) has
  // positive dt component; with block metrics that is -g^{00} xi_0 > 0, i.e.
  // xi_0 > 0, matching -(-xi_0) above only through g^{00} < 0; handled below.
  if (conv == FutureConvention::Coordinate && v.covariant) {
    double up[3];
    M.raise(comps, up);
    oriented = up[0];
  }
  if (oriented > 0)
    out.orientation = TimeOrientation::Future;
  else if (oriented < 0)
    out.orientation = TimeOrientation::Past;
  return out;
}

// Null covectors with positive dt-pairing spanning T_p^* M.  Returns n+1
// covectors by default; `extended` adds the opposite spatial axes and the
// diagonal directions (useful for well-conditioned contraction systems).
inline std::vector<TangentVector> null_covector_frame(const MetricAtPoint& M,
                                                      bool extended = false) {
  std::vector<std::array<double, 2>> dirs;
  if (M.n == 1) {
    dirs.push_back({1, 0});
    dirs.push_back({-1, 0});
  } else {
    dirs.push_back({1, 0});
    dirs.push_back({-1, 0});
    dirs.push_back({0, 1});
    if (extended) {
      dirs.push_back({0, -1});
      double r = 1.0 / std::sqrt(2.0);
      dirs.push_back({r, r});
      dirs.push_back({r, -r});
    }
  }
  if (!extended && M.n == 1) dirs.resize(2);

  std::vector<TangentVector> frame;
  for (auto& w : dirs) {
    // xi = alpha dt + w_a dx^a with <xi,xi> = g^{00} alpha^2 + g^{ab} w_a w_b = 0
    double q = 0;
    for (int a = 0; a < M.n; ++a)
      for (int b = 0; b < M.n; ++b) q += M.ginv[a + 1][b + 1] * w[a] * w[b];
    double alpha = std::sqrt(q / -M.ginv[0][0]);
    if (!(alpha > 0)) throw numerical_error("degenerate metric in null frame");
    TangentVector xi;
    xi.base = M.p;
    xi.covariant = true;
    xi.comp[0] = alpha;
    for (int a = 0; a < M.n; ++a) xi.comp[a + 1] = w[a];
    frame.push_back(xi);
    if (!extended && static_cast<int>(frame.size()) == M.dim()) break;
  }
  return frame;
}

// --- curvature hypothesis scan (H1): max over samples of g(R(N,v)v,N) -------

struct H1Report {
  double max_value = -std::numeric_limits<double>::infinity();
  Point witness_point;
  double witness_N[3] = {};
  double witness_v[3] = {};
  int samples = 0;
  int rejected = 0;
  bool pass = false;
  bool degenerate = false;  // sampling could not produce admissible pairs
};

inline H1Report h1_scan(const MetricClosure& mc, const CoordinateChart& chart,
                        int sample_count, uint64_t seed, double tau_h1 = 1e-9) {
  Rng rng(seed);
  H1Report rep;
  int consecutive_failures = 0;
  while (rep.samples < sample_count) {
    Point p;
    p[0] = rng.uniform(chart.t_min, chart.t_max);
    for (int k = 0; k < chart.n; ++k) p[k + 1] = rng.uniform(chart.x_min[k], chart.x_max[k]);
    MetricAtPoint M = metric_at(mc, p);

    // random null N: spatial direction + matched time component
    double w[3] = {0, 0, 0};
    double norm = 0;
    for (int a = 0; a < mc.n; ++a) {
      w[a + 1] = rng.normal();
      norm += w[a + 1] * w[a + 1];
    }
    if (norm < 1e-12) continue;
    double q = 0;
    for (int a = 1; a <= mc.n; ++a)
      for (int b = 1; b <= mc.n; ++b) q += M.g[a][b] * w[a] * w[b];
    double Nv[3] = {std::sqrt(q / -M.g[0][0]), w[1], w[2]};

    // random v with g(v,N)=0: subtract along d_t (g(d_t,N) != 0)
    double r[3] = {rng.normal(), rng.normal(), mc.n == 2 ? rng.normal() : 0.0};
    double dt_vec[3] = {1, 0, 0};
    double gN_r = 0, gN_t = 0;
    for (int i = 0; i < M.dim(); ++i)
      for (int j = 0; j < M.dim(); ++j) {
        gN_r += M.g[i][j] * Nv[i] * r[j];
        gN_t += M.g[i][j] * Nv[i] * dt_vec[j];
      }
    double v[3];
    for (int i = 0; i < 3; ++i) v[i] = r[i] - (gN_r / gN_t) * dt_vec[i];
    double vv = M.inner_vec(v, v);
    if (!(vv > 1e-10)) {  // reject non-spacelike v
      if (++consecutive_failures >= 1000) {
        rep.degenerate = true;
        rep.pass = false;
        return rep;
      }
      continue;
    }
    consecutive_failures = 0;

    RiemannAtPoint R = riemann_at(M);
    double val = R.sectional_pairing(Nv, v, Nv, v);  // g(R(N,v)v, N)
    ++rep.samples;
    if (val > rep.max_value) {
      rep.max_value = val;
      rep.witness_point = p;
      for (int i = 0; i < 3; ++i) rep.witness_N[i] = Nv[i], rep.witness_v[i] = v[i];
    }
  }
  rep.pass = rep.max_value <= tau_h1;
  return rep;
}

// --- builtin metric closures -------------------------------------------------

inline MetricClosure make_minkowski(int n) {
  MetricClosure mc;
  mc.n = n;
  mc.name = "minkowski";
  mc.time_independent = true;
  mc.eval = [n](const Point&) {
    MetricJets J;
    J.c = Jet2::constant(1.0);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) J.g0[a][b] = Jet2::constant(a == b ? 1.0 : 0.0);
    return J;
  };
  return mc;
}

// g = c(t,x) (-dt^2 + dx^2), c = exp(a0 t + a1 x1 (+ a2 x2))
inline MetricClosure make_conformal(int n, double a0, double a1, double a2 = 0) {
  MetricClosure mc;
  mc.n = n;
  mc.name = "conformal";
  mc.time_independent = (a0 == 0);
  mc.eval = [n, a0, a1, a2](const Point& p) {
    MetricJets J;
    double e = std::exp(a0 * p[0] + a1 * p[1] + (n == 2 ? a2 * p[2] : 0.0));
    double grad[3] = {a0, a1, n == 2 ? a2 : 0.0};
    J.c.v = e;
    for (int k = 0; k < n + 1; ++k) {
      J.c.d[k] = e * grad[k];
      for (int l = 0; l < n + 1; ++l) J.c.dd[k][l] = e * grad[k] * grad[l];
    }
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) J.g0[a][b] = Jet2::constant(a == b ? 1.0 : 0.0);
    return J;
  };
  return mc;
}

// c = 1, g0_11 = 1 + eps sin(kt t) cos(kx x) (n=1); for n=2 the perturbation
// sits in g0_11 only.  Time-dependent unless kt = 0.
inline MetricClosure make_perturbed(int n, double eps, double kt, double kx) {
  MetricClosure mc;
  mc.n = n;
  mc.name = "perturbed";
  mc.time_independent = (kt == 0);
  mc.eval = [n, eps, kt, kx](const Point& p) {
    MetricJets J;
    J.c = Jet2::constant(1.0);
    double st = std::sin(kt * p[0]), ct = std::cos(kt * p[0]);
    double cx = std::cos(kx * p[1]), sx = std::sin(kx * p[1]);
    Jet2 g11;
    g11.v = 1.0 + eps * st * cx;
    g11.d[0] = eps * kt * ct * cx;
    g11.d[1] = -eps * kx * st * sx;
    g11.dd[0][0] = -eps * kt * kt * st * cx;
    g11.dd[0][1] = g11.dd[1][0] = -eps * kt * kx * ct * sx;
    g11.dd[1][1] = -eps * kx * kx * st * cx;
    J.g0[0][0] = g11;
    if (n == 2) {
      J.g0[1][1] = Jet2::constant(1.0);
      J.g0[0][1] = J.g0[1][0] = Jet2::constant(0.0);
    }
    return J;
  };
  return mc;
}

// Ultrastatic surface metrics used as H1 fixtures (n = 2 only):
//   profile = cosh(alpha x): g0 = dx^2 + cosh^2(alpha x) dy^2, K = -alpha^2  (H1 holds)
//   profile = cos(alpha x):  g0 = dx^2 + cos^2(alpha x) dy^2,  K = +alpha^2  (H1 fails)
inline MetricClosure make_ultrastatic_surface(double alpha, bool negative_curvature) {
  MetricClosure mc;
  mc.n = 2;
  mc.name = negative_curvature ? "ultrastatic-neg" : "ultrastatic-pos";
  mc.time_independent = true;
  mc.eval = [alpha, negative_curvature](const Point& p) {
    MetricJets J;
    J.c = Jet2::constant(1.0);
    double x = p[1];
    double f, fx, fxx;  // profile squared: f = h(x)^2
    if (negative_curvature) {
      double h = std::cosh(alpha * x), hp = alpha * std::sinh(alpha * x);
      f = h * h;
      fx = 2 * h * hp;
      fxx = 2 * hp * hp + 2 * h * alpha * alpha * h;
    } else {
      double h = std::cos(alpha * x), hp = -alpha * std::sin(alpha * x);
      f = h * h;
      fx = 2 * h * hp;
      fxx = 2 * hp * hp - 2 * h * alpha * alpha * h;
    }
    J.g0[0][0] = Jet2::constant(1.0);
    Jet2 g22;
    g22.v = f;
    g22.d[1] = fx;
    g22.dd[1][1] = fxx;
    J.g0[1][1] = g22;
    J.g0[0][1] = J.g0[1][0] = Jet2::constant(0.0);
    return J;
  };
  return mc;
}

// Finite-difference fallback for metrics supplied without derivatives.
inline MetricClosure
make_fd_metric(int n, bool time_independent, std::string name,
               std::function<double(const Point&)> c_fn,
               std::function<void(const Point&, double g0[2][2])> g0_fn,
               double base_step = 1e-5) {
  MetricClosure mc;
  mc.n = n;
  mc.name = std::move(name);
  mc.time_independent = time_independent;
  double h1 = std::pow(base_step, 2.0 / 3.0);  // second-derivative step
  mc.eval = [n, c_fn, g0_fn, base_step, h1](const Point& p) {
    auto eval_all = [&](const Point& q, double out[5]) {
      out[0] = c_fn(q);
      double g0[2][2] = {};
      g0_fn(q, g0);
      out[1] = g0[0][0];
      out[2] = g0[0][1];
      out[3] = g0[1][0];
      out[4] = g0[1][1];
    };
    MetricJets J{};
    double v0[5];
    eval_all(p, v0);
    double d[3][5], dd[3][3][5];
    for (int k = 0; k <= n; ++k) {
      Point pp = p, pm = p;
      pp[k] += base_step;
      pm[k] -= base_step;
      double vp[5], vm[5];
      eval_all(pp, vp);
      eval_all(pm, vm);
      for (int q = 0; q < 5; ++q) d[k][q] = (vp[q] - vm[q]) / (2 * base_step);
    }
    for (int k = 0; k <= n; ++k)
      for (int l = 0; l <= n; ++l) {
        double vpp[5], vpm[5], vmp[5], vmm[5];
        Point a = p, b = p, c2 = p, e = p;
        a[k] += h1, a[l] += h1;
        b[k] += h1, b[l] -= h1;
        c2[k] -= h1, c2[l] += h1;
        e[k] -= h1, e[l] -= h1;
        eval_all(a, vpp);
        eval_all(b, vpm);
        eval_all(c2, vmp);
        eval_all(e, vmm);
        for (int q = 0; q < 5; ++q)
          dd[k][l][q] = (vpp[q] - vpm[q] - vmp[q] + vmm[q]) / (4 * h1 * h1);
      }
    auto fill = [&](int q, Jet2& out) {
      out.v = v0[q];
      for (int k = 0; k <= n; ++k) {
        out.d[k] = d[k][q];
        for (int l = 0; l <= n; ++l) out.dd[k][l] = dd[k][l][q];
      }
    };
    fill(0, J.c);
    fill(1, J.g0[0][0]);
    if (n == 2) {
      fill(2, J.g0[0][1]);
      fill(3, J.g0[1][0]);
      fill(4, J.g0[1][1]);
    }
    return J;
  };
  return mc;
}

}  // namespace conwave
