#pragma once

// Causal structure machinery: null geodesic tracing, arrival-time fronts on
// the grid graph (the conformal class of g enters only through g0), causal
// cones J±, exteriors of double cones, the recovery domain, and the
// hypothesis checks H2 (sampled), H3, H5.

#include <queue>

#include "conwave/geometry.hpp"

namespace conwave {

// --- geodesics ----------------------------------------------------------------

struct GeodesicPath {
  std::vector<double> s;
  std::vector<Point> x;
  std::vector<std::array<double, 3>> v;
  CausalClass type = CausalClass::Lightlike;
  bool exited = false;
  Point exit_point;
  double exit_s = 0;
  double max_null_drift = 0;   // max |g(v,v)| / |v|^2_aux along the path
  double tangency_order = 1;   // gross H4 estimate at the exit
};

namespace detail {

inline void geodesic_rhs(const MetricClosure& mc, const double y[6], double dy[6], int d) {
  Point p;
  p[0] = y[0];
  p[1] = y[1];
  p[2] = y[2];
  MetricAtPoint M = metric_at(mc, p);
  for (int i = 0; i < 3; ++i) dy[i] = y[3 + i];
  for (int k = 0; k < 3; ++k) {
    double acc = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) acc += M.gamma[k][i][j] * y[3 + i] * y[3 + j];
    dy[3 + k] = -acc;
  }
}

inline void rk4_step(const MetricClosure& mc, double y[6], double h, int d) {
  double k1[6], k2[6], k3[6], k4[6], tmp[6];
  geodesic_rhs(mc, y, k1, d);
  for (int i = 0; i < 6; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  geodesic_rhs(mc, tmp, k2, d);
  for (int i = 0; i < 6; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  geodesic_rhs(mc, tmp, k3, d);
  for (int i = 0; i < 6; ++i) tmp[i] = y[i] + h * k3[i];
  geodesic_rhs(mc, tmp, k4, d);
  for (int i = 0; i < 6; ++i) y[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
}

}  // namespace detail

// RK4 integration of xdd^k = -Gamma^k_ij xd^i xd^j from p with velocity v0,
// in both parameter directions until the path exits the chart box.
inline GeodesicPath trace_geodesic(const MetricClosure& mc, const CoordinateChart& chart,
                                   const Point& p, const std::array<double, 3>& v0,
                                   double step, double s_max = 50.0) {
  GeodesicPath out;
  int d = chart.n + 1;
  double y[6] = {p[0], p[1], p[2], v0[0], v0[1], v0[2]};
  {
    MetricAtPoint M = metric_at(mc, p);
    TangentVector tv;
    tv.comp[0] = v0[0];
    tv.comp[1] = v0[1];
    tv.comp[2] = v0[2];
    out.type = classify_vector(M, tv).causal;
  }
  double s = 0;
  out.s.push_back(s);
  out.x.push_back(p);
  out.v.push_back(v0);
  while (std::abs(s) < s_max) {
    double yprev[6];
    std::copy(y, y + 6, yprev);
    detail::rk4_step(mc, y, step, d);
    s += step;
    Point q;
    q[0] = y[0];
    q[1] = y[1];
    q[2] = y[2];
    if (!chart.contains(q)) {
      // bisect the exit point
      double lo = 0, hi = step;
      double yl[6];
      std::copy(yprev, yprev + 6, yl);
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        double ym[6];
        std::copy(yprev, yprev + 6, ym);
        detail::rk4_step(mc, ym, mid, d);
        Point qm;
        qm[0] = ym[0];
        qm[1] = ym[1];
        qm[2] = ym[2];
        if (chart.contains(qm))
          lo = mid;
        else
          hi = mid;
      }
      double ye[6];
      std::copy(yprev, yprev + 6, ye);
      detail::rk4_step(mc, ye, lo, d);
      out.exited = true;
      out.exit_point = Point();
      out.exit_point[0] = ye[0];
      out.exit_point[1] = ye[1];
      out.exit_point[2] = ye[2];
      out.exit_s = s - step + lo;
      out.s.push_back(out.exit_s);
      Point pe = out.exit_point;
      out.x.push_back(pe);
      out.v.push_back({ye[3], ye[4], ye[5]});
      break;
    }
    out.s.push_back(s);
    out.x.push_back(q);
    out.v.push_back({y[3], y[4], y[5]});
    // null-norm drift monitor
    MetricAtPoint M = metric_at(mc, q);
    double vv = M.inner_vec(y + 3, y + 3);
    double aux = 0;
    for (int i = 0; i < d; ++i) aux += y[3 + i] * y[3 + i];
    out.max_null_drift = std::max(out.max_null_drift, std::abs(vv) / aux);
  }
  // gross tangency-order estimate at the exit: fit d(s) ~ C |s-s*|^q on the
  // last samples using the distance to the spatial boundary
  if (out.exited && out.s.size() >= 4 && chart.n >= 1) {
    auto bdist = [&](const Point& q) {
      double dmin = 1e300;
      for (int k = 0; k < chart.n; ++k) {
        dmin = std::min(dmin, std::abs(q[k + 1] - chart.x_min[k]));
        dmin = std::min(dmin, std::abs(q[k + 1] - chart.x_max[k]));
      }
      return dmin;
    };
    size_t m = out.s.size();
    double d1 = bdist(out.x[m - 2]), d2 = bdist(out.x[m - 3]);
    double s1 = std::abs(out.exit_s - out.s[m - 2]), s2 = std::abs(out.exit_s - out.s[m - 3]);
    if (d1 > 1e-14 && d2 > 1e-14 && s1 > 1e-14 && s2 > 1e-14 && s1 != s2)
      out.tangency_order = std::log(d2 / d1) / std::log(s2 / s1);
  }
  return out;
}

inline GeodesicPath trace_null_geodesic(const MetricClosure& mc,
                                        const CoordinateChart& chart, const Point& p,
                                        const std::array<double, 3>& v_null, double step) {
  MetricAtPoint M = metric_at(mc, p);
  double comps[3] = {v_null[0], v_null[1], v_null[2]};
  double vv = M.inner_vec(comps, comps);
  double aux = v_null[0] * v_null[0] + v_null[1] * v_null[1] + v_null[2] * v_null[2];
  if (std::abs(vv) > 1e-10 * aux)
    throw numerical_error("trace_null_geodesic: initial velocity is not null");
  return trace_geodesic(mc, chart, p, v_null, step);
}

// --- arrival-time fronts -------------------------------------------------------

// Dijkstra on the spatial grid graph with g0 edge lengths.  For
// time-dependent metrics the edge weight is evaluated at the front's own
// arrival time (monotone causal front propagation): t = t0 + dir * tau.
inline std::vector<double> g0_arrival(const MetricClosure& mc, const CoordinateChart& chart,
                                      const std::vector<int>& source_nodes, double t0 = 0,
                                      int dir = +1) {
  int S = chart.space_nodes();
  std::vector<double> tau(S, std::numeric_limits<double>::infinity());
  using QE = std::pair<double, int>;
  std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
  for (int s : source_nodes) {
    tau[s] = 0;
    pq.push({0, s});
  }
  std::vector<std::array<int, 2>> offsets;
  if (chart.n == 1) {
    offsets = {{1, 0}, {-1, 0}};
  } else {
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        if (a || b) offsets.push_back({a, b});
  }
  auto g0_len = [&](const Point& p, double dx0, double dx1) {
    MetricJets J = mc.eval(p);
    double q = J.g0[0][0].v * dx0 * dx0;
    if (chart.n == 2)
      q += 2 * J.g0[0][1].v * dx0 * dx1 + J.g0[1][1].v * dx1 * dx1;
    return std::sqrt(std::max(q, 0.0));
  };
  while (!pq.empty()) {
    auto [tcur, node] = pq.top();
    pq.pop();
    if (tcur > tau[node] + 1e-15) continue;
    int i, j;
    chart.space_coords(node, i, j);
    double teval = t0 + dir * tcur;
    teval = std::clamp(teval, chart.t_min, chart.t_max);
    Point pa = chart.space_point(node, teval);
    for (auto& off : offsets) {
      int ii = i + off[0], jj = j + off[1];
      if (ii < 0 || ii > chart.nx[0]) continue;
      if (chart.n == 2 && (jj < 0 || jj > chart.nx[1])) continue;
      int nb = chart.space_index(ii, chart.n == 2 ? jj : 0);
      double dx0 = off[0] * chart.hx(0);
      double dx1 = chart.n == 2 ? off[1] * chart.hx(1) : 0;
      Point pb = chart.space_point(nb, teval);
      double w = 0.5 * (g0_len(pa, dx0, dx1) + g0_len(pb, dx0, dx1));
      if (tau[node] + w < tau[nb] - 1e-15) {
        tau[nb] = tau[node] + w;
        pq.push({tau[nb], nb});
      }
    }
  }
  return tau;
}

// --- region masks ---------------------------------------------------------------

struct RegionMask {
  CoordinateChart chart;
  std::string tag;
  std::vector<uint8_t> cells;  // (nt+1) * space_nodes

  bool at(int m, int idx) const {
    return cells[static_cast<size_t>(m) * chart.space_nodes() + idx] != 0;
  }
  void set(int m, int idx, bool v) {
    cells[static_cast<size_t>(m) * chart.space_nodes() + idx] = v ? 1 : 0;
  }
  size_t count() const {
    size_t c = 0;
    for (auto v : cells) c += (v != 0);
    return c;
  }
  static RegionMask empty(const CoordinateChart& chart, std::string tag) {
    RegionMask m;
    m.chart = chart;
    m.tag = std::move(tag);
    m.cells.assign(static_cast<size_t>(chart.time_nodes()) * chart.space_nodes(), 0);
    return m;
  }
};

namespace detail {

template <class Op>
RegionMask morph(const RegionMask& in, Op keep) {
  RegionMask out = in;
  const auto& ch = in.chart;
  for (int m = 0; m <= ch.nt; ++m)
    for (int idx = 0; idx < ch.space_nodes(); ++idx) {
      int i, j;
      ch.space_coords(idx, i, j);
      bool any = false, all = true;
      for (int dm = -1; dm <= 1; ++dm)
        for (int di = -1; di <= 1; ++di)
          for (int dj = (ch.n == 2 ? -1 : 0); dj <= (ch.n == 2 ? 1 : 0); ++dj) {
            if (std::abs(dm) + std::abs(di) + std::abs(dj) != 1) continue;  // faces only
            int mm = m + dm, ii = i + di, jj = j + dj;
            if (mm < 0 || mm > ch.nt || ii < 0 || ii > ch.nx[0]) continue;
            if (ch.n == 2 && (jj < 0 || jj > ch.nx[1])) continue;
            bool v = in.at(mm, ch.space_index(ii, ch.n == 2 ? jj : 0));
            any = any || v;
            all = all && v;
          }
      out.set(m, idx, keep(in.at(m, idx), any, all));
    }
  return out;
}

}  // namespace detail

inline RegionMask dilate(const RegionMask& m) {
  return detail::morph(m, [](bool self, bool any, bool) { return self || any; });
}
inline RegionMask erode(const RegionMask& m) {
  return detail::morph(m, [](bool self, bool, bool all) { return self && all; });
}
inline RegionMask complement(const RegionMask& m) {
  RegionMask out = m;
  for (auto& v : out.cells) v = v ? 0 : 1;
  return out;
}
inline RegionMask mask_union(const RegionMask& a, const RegionMask& b) {
  RegionMask out = a;
  for (size_t i = 0; i < out.cells.size(); ++i) out.cells[i] = a.cells[i] || b.cells[i];
  return out;
}
inline RegionMask mask_intersect(const RegionMask& a, const RegionMask& b) {
  RegionMask out = a;
  for (size_t i = 0; i < out.cells.size(); ++i) out.cells[i] = a.cells[i] && b.cells[i];
  return out;
}

inline bool mask_connected(const RegionMask& m) {
  const auto& ch = m.chart;
  size_t total = m.count();
  if (total == 0) return true;
  std::vector<uint8_t> seen(m.cells.size(), 0);
  std::queue<std::pair<int, int>> q;
  bool started = false;
  for (int mm = 0; mm <= ch.nt && !started; ++mm)
    for (int idx = 0; idx < ch.space_nodes() && !started; ++idx)
      if (m.at(mm, idx)) {
        q.push({mm, idx});
        seen[static_cast<size_t>(mm) * ch.space_nodes() + idx] = 1;
        started = true;
      }
  size_t visited = 0;
  while (!q.empty()) {
    auto [mm, idx] = q.front();
    q.pop();
    ++visited;
    int i, j;
    ch.space_coords(idx, i, j);
    auto try_push = [&](int m2, int i2, int j2) {
      if (m2 < 0 || m2 > ch.nt || i2 < 0 || i2 > ch.nx[0]) return;
      if (ch.n == 2 && (j2 < 0 || j2 > ch.nx[1])) return;
      int id2 = ch.space_index(i2, ch.n == 2 ? j2 : 0);
      size_t flat = static_cast<size_t>(m2) * ch.space_nodes() + id2;
      if (!seen[flat] && m.at(m2, id2)) {
        seen[flat] = 1;
        q.push({m2, id2});
      }
    };
    try_push(mm - 1, i, j);
    try_push(mm + 1, i, j);
    try_push(mm, i - 1, j);
    try_push(mm, i + 1, j);
    if (ch.n == 2) {
      try_push(mm, i, j - 1);
      try_push(mm, i, j + 1);
    }
  }
  return visited == total;
}

// J^+(p) (orientation=+1) / J^-(p) (orientation=-1), conservatively dilated by
// one cell.  Conformal factors never enter (causal structure of c(-dt^2+g0)).
inline RegionMask causal_mask(const MetricClosure& mc, const CoordinateChart& chart,
                              const Point& p, int orientation, bool dilated = true) {
  int i0 = std::clamp(static_cast<int>(std::lround((p[1] - chart.x_min[0]) / chart.hx(0))),
                      0, chart.nx[0]);
  int j0 = chart.n == 2
               ? std::clamp(static_cast<int>(std::lround((p[2] - chart.x_min[1]) / chart.hx(1))),
                            0, chart.nx[1])
               : 0;
  int src = chart.space_index(i0, j0);
  auto tau = g0_arrival(mc, chart, {src}, p[0], orientation);
  RegionMask m = RegionMask::empty(chart, orientation > 0 ? "J+" : "J-");
  for (int mm = 0; mm <= chart.nt; ++mm) {
    double dt = orientation * (chart.time_of(mm) - p[0]);
    if (dt < 0) continue;
    for (int idx = 0; idx < chart.space_nodes(); ++idx)
      if (tau[idx] <= dt) m.set(mm, idx, true);
  }
  return dilated ? dilate(m) : m;
}

// exterior of the double null cone: complement of the dilated cones, i.e. the
// 1-cell erosion of the exact complement
inline RegionMask exterior_mask(const MetricClosure& mc, const CoordinateChart& chart,
                                const Point& p) {
  RegionMask jp = causal_mask(mc, chart, p, +1);
  RegionMask jm = causal_mask(mc, chart, p, -1);
  RegionMask ext = complement(mask_union(jp, jm));
  ext.tag = "E_p";
  return ext;
}

struct RecoveryDomain {
  RegionMask mask;
  bool empty = true;
  bool connected = true;
  int violated_boundary_node = -1;
};

// D = { p : for every boundary node z, (T0,z) << p << (T,z) strictly },
// computed from boundary arrival fronts and eroded one cell.
inline RecoveryDomain recovery_domain(const MetricClosure& mc, const CoordinateChart& chart,
                                      double T0) {
  auto bnodes = chart.boundary_nodes();
  RegionMask m = RegionMask::empty(chart, "D");
  std::vector<std::vector<double>> fwd, bwd;
  for (int z : bnodes) {
    fwd.push_back(g0_arrival(mc, chart, {z}, T0, +1));
    bwd.push_back(g0_arrival(mc, chart, {z}, chart.t_max, -1));
  }
  RecoveryDomain out;
  for (int mm = 0; mm <= chart.nt; ++mm) {
    double t = chart.time_of(mm);
    for (int idx = 0; idx < chart.space_nodes(); ++idx) {
      bool ok = true;
      for (size_t z = 0; z < bnodes.size() && ok; ++z) {
        if (!(t - T0 > fwd[z][idx]) || !(chart.t_max - t > bwd[z][idx])) {
          ok = false;
          if (out.violated_boundary_node < 0) out.violated_boundary_node = bnodes[z];
        }
      }
      if (ok) m.set(mm, idx, true);
    }
  }
  out.mask = erode(m);
  out.mask.tag = "D";
  out.empty = out.mask.count() == 0;
  out.connected = mask_connected(out.mask);
  return out;
}

// --- hypothesis report -----------------------------------------------------------

struct H2Sample {
  Point target;
  bool found = false;
  int root_count = 0;
  double miss = 0;
};

struct HypothesisReport {
  H1Report h1;
  bool h3 = false;
  bool h5 = false;
  bool d_connected = true;
  std::vector<H2Sample> h2_samples;
  int h2_found = 0;
};

namespace detail {

// 1+1 shooting: spacelike unit directions v(chi) from p; miss(q) after
// matching the spatial coordinate
inline double shoot_miss_1d(const MetricClosure& mc, const CoordinateChart& chart,
                            const Point& p, const Point& q, double chi) {
  MetricJets J = mc.eval(p);
  double side = (q[1] >= p[1]) ? 1.0 : -1.0;
  std::array<double, 3> v = {std::sinh(chi) / std::sqrt(J.c.v),
                             side * std::cosh(chi) / std::sqrt(J.c.v * J.g0[0][0].v), 0};
  auto path = trace_geodesic(mc, chart, p, v, 0.01 * (chart.x_max[0] - chart.x_min[0]));
  // find parameter where x crosses q[1]
  for (size_t k = 1; k < path.x.size(); ++k) {
    double x0 = path.x[k - 1][1], x1 = path.x[k][1];
    if ((x0 - q[1]) * (x1 - q[1]) <= 0 && x0 != x1) {
      double a = (q[1] - x0) / (x1 - x0);
      double t = path.x[k - 1][0] + a * (path.x[k][0] - path.x[k - 1][0]);
      return t - q[0];
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

// sampled H2 check on a 1+1 chart: shooting with bisection on the rapidity
inline std::vector<H2Sample> h2_sample_1d(const MetricClosure& mc,
                                          const CoordinateChart& chart, const Point& p,
                                          const RegionMask& exterior, int count,
                                          uint64_t seed) {
  Rng rng(seed);
  std::vector<H2Sample> out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < count && attempts < 50 * count) {
    ++attempts;
    int mm = static_cast<int>(rng.uniform(0, chart.nt + 1));
    int idx = static_cast<int>(rng.uniform(0, chart.space_nodes()));
    mm = std::min(mm, chart.nt);
    idx = std::min(idx, chart.space_nodes() - 1);
    if (!exterior.at(mm, idx)) continue;
    H2Sample smp;
    smp.target = chart.space_point(idx, chart.time_of(mm));
    if (std::abs(smp.target[1] - p[1]) < 2 * chart.hx(0)) continue;
    // scan rapidity for sign changes, then bisect each bracket
    const int K = 41;
    double chi_lo = -3, chi_hi = 3;
    double prev = std::numeric_limits<double>::quiet_NaN();
    double prev_chi = chi_lo;
    for (int k = 0; k < K; ++k) {
      double chi = chi_lo + (chi_hi - chi_lo) * k / (K - 1);
      double miss = detail::shoot_miss_1d(mc, chart, p, smp.target, chi);
      if (std::isfinite(miss) && std::isfinite(prev) && miss * prev <= 0) {
        double a = prev_chi, b = chi;
        for (int it = 0; it < 50; ++it) {
          double mid = 0.5 * (a + b);
          double fm = detail::shoot_miss_1d(mc, chart, p, smp.target, mid);
          if (!std::isfinite(fm)) break;
          if (fm * detail::shoot_miss_1d(mc, chart, p, smp.target, a) <= 0)
            b = mid;
          else
            a = mid;
        }
        double res = detail::shoot_miss_1d(mc, chart, p, smp.target, 0.5 * (a + b));
        if (std::isfinite(res)) {
          ++smp.root_count;
          smp.miss = std::abs(res);
          smp.found = true;
        }
      }
      if (std::isfinite(miss)) {
        prev = miss;
        prev_chi = chi;
      }
    }
    out.push_back(smp);
  }
  return out;
}

inline HypothesisReport hypothesis_report(const MetricClosure& mc,
                                          const CoordinateChart& chart, double T0,
                                          const Point& p0, double T1,
                                          int h1_samples = 2000, uint64_t seed = 1) {
  HypothesisReport rep;
  rep.h1 = h1_scan(mc, chart, h1_samples, seed);
  if (mc.n == 1) rep.h1.pass = true;  // vacuous in 1+1; see degenerate flag

  // H3: closure(E_p0) on the boundary is contained in (-T, T0) x dM0
  RegionMask ext = dilate(exterior_mask(mc, chart, p0));  // closure, conservatively
  rep.h3 = true;
  for (int mm = 0; mm <= chart.nt; ++mm) {
    if (chart.time_of(mm) < T0) continue;
    for (int idx : chart.boundary_nodes())
      if (ext.at(mm, idx)) rep.h3 = false;
  }

  // H5: {T1} x M0 contained in D
  auto dom = recovery_domain(mc, chart, T0);
  rep.d_connected = dom.connected;
  int m1 = std::clamp(static_cast<int>(std::lround((T1 - chart.t_min) / chart.ht())), 0,
                      chart.nt);
  rep.h5 = !dom.empty;
  for (int idx = 0; idx < chart.space_nodes() && rep.h5; ++idx)
    if (!dom.mask.at(m1, idx)) rep.h5 = false;

  if (mc.n == 1) {
    RegionMask extp = exterior_mask(mc, chart, p0);
    rep.h2_samples = h2_sample_1d(mc, chart, p0, extp, 12, seed + 1);
    for (auto& s : rep.h2_samples)
      if (s.found && s.root_count == 1) ++rep.h2_found;
  }
  return rep;
}

// distance-to-set map used by the finite-speed audit
inline std::vector<double> g0_distance_to_set(const MetricClosure& mc,
                                              const CoordinateChart& chart,
                                              const std::vector<int>& support_nodes,
                                              double t0 = 0) {
  if (support_nodes.empty())
    return std::vector<double>(chart.space_nodes(),
                               std::numeric_limits<double>::infinity());
  return g0_arrival(mc, chart, support_nodes, t0, +1);
}

}  // namespace conwave
