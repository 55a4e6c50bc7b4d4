#pragma once

// Bundle-algebra layer: connection coefficients B_i in g ⊆ u(N), Hermitian
// potentials, covariant derivatives, the connection wave operator P = Box + V
// on analytic fields, gauge transformations, and the local identities as
// executable residual checks.  The chart is a single global trivialisation.

#include <memory>

#include "conwave/core.hpp"
#include "conwave/geometry.hpp"

namespace conwave {

// Hermitian fiber product <u,v> = u^dagger v (conjugate-linear first slot).
inline cplx fiber_inner(const Vec& u, const Vec& v) { return u.dot(v); }

// --- gauge group ------------------------------------------------------------

struct GaugeGroupSpec {
  int N = 1;
  enum class Tag { U, SU } tag = Tag::U;

  Mat project_algebra(const Mat& X) const {
    Mat s = 0.5 * (X - X.adjoint());
    if (tag == Tag::SU) {
      cplx tr = s.trace() / double(N);
      s -= tr * Mat::Identity(N, N);
    }
    return s;
  }
  double algebra_defect(const Mat& X) const { return (X - project_algebra(X)).norm(); }
  bool in_algebra(const Mat& X, double tol = 1e-10) const {
    return algebra_defect(X) <= tol * std::max(1.0, X.norm());
  }

  // polar retraction onto the group
  Mat retract(const Mat& M) const {
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat U = svd.matrixU() * svd.matrixV().adjoint();
    if (tag == Tag::SU) {
      cplx det = U.determinant();
      U *= std::pow(det, -1.0 / double(N));
    }
    return U;
  }
  double group_defect(const Mat& M) const {
    return (M.adjoint() * M - Mat::Identity(N, N)).norm();
  }
  bool in_group(const Mat& M, double tol = 1e-10) const {
    double d = group_defect(M);
    if (tag == Tag::SU) d += std::abs(M.determinant() - 1.0);
    return d <= tol;
  }
};

// --- analytic field closures --------------------------------------------------

// C^N-valued section with analytic partials.
struct SectionClosure {
  int n = 1, N = 1;
  std::function<Vec(const Point&)> value;
  std::function<Vec(const Point&, int k)> d1;           // d_k
  std::function<Vec(const Point&, int k, int l)> d2;    // d_k d_l
};

// N x N matrix field (connection component, potential, gauge section, ...).
struct MatrixClosure {
  int n = 1, N = 1;
  std::function<Mat(const Point&)> value;
  std::function<Mat(const Point&, int k)> d1;
  std::function<Mat(const Point&, int k, int l)> d2;
};

// E ⊗ T*M valued field: one C^N component per coordinate direction.
struct FormClosure {
  int n = 1, N = 1;
  std::function<Vec(const Point&, int i)> comp;
  std::function<Vec(const Point&, int i, int k)> d1;  // d_k of component i
};

// Connection in a global chart: B = B_i dx^i with B_i g-valued.
struct ConnectionClosure {
  int n = 1, N = 1;
  GaugeGroupSpec group;
  std::function<Mat(const Point&, int i)> comp;
  std::function<Mat(const Point&, int i, int k)> d1;
  std::function<Mat(const Point&, int i, int k, int l)> d2;

  bool zero() const { return !comp; }
  Mat B(const Point& p, int i) const {
    return zero() ? Mat::Zero(N, N) : comp(p, i);
  }
  Mat dB(const Point& p, int i, int k) const {
    return (zero() || !d1) ? Mat::Zero(N, N) : d1(p, i, k);
  }
};

inline ConnectionClosure zero_connection(int n, int N) {
  ConnectionClosure c;
  c.n = n;
  c.N = N;
  c.group.N = N;
  return c;
}

struct PotentialClosure {
  int n = 1, N = 1;
  std::function<Mat(const Point&)> value;
  std::function<Mat(const Point&, int k)> d1;

  bool zero() const { return !value; }
  Mat V(const Point& p) const { return zero() ? Mat::Zero(N, N) : value(p); }
};

inline PotentialClosure zero_potential(int n, int N) {
  PotentialClosure v;
  v.n = n;
  v.N = N;
  return v;
}

// --- covariant calculus on analytic fields -----------------------------------

// nabla_i u = d_i u + B_i u  (sections)
inline Vec covariant_derivative(const ConnectionClosure& B, const SectionClosure& u,
                                const Point& p, int i) {
  return u.d1(p, i) + B.B(p, i) * u.value(p);
}

// nabla_i A = d_i A + [B_i, A]  (endomorphism fields)
inline Mat covariant_derivative(const ConnectionClosure& B, const MatrixClosure& A,
                                const Point& p, int i) {
  Mat Bi = B.B(p, i);
  Mat Av = A.value(p);
  return A.d1(p, i) + Bi * Av - Av * Bi;
}

// Box u = -G^{-1} sum_ij [ d_i (g^{ij} G nabla_j u) + g^{ij} G B_i nabla_j u ]
// expanded with analytic jets; `commutator` selects the End(E) action of B.
namespace detail {

template <class FVal, class FD1, class FD2, class BAct>
Vec box_generic(const MetricAtPoint& M, const ConnectionClosure& Bc, const Point& p,
                const FVal& value, const FD1& d1, const FD2& d2, BAct bact) {
  int d = M.dim();
  Vec val = value();
  auto nabla = [&](int j) -> Vec { return d1(j) + bact(Bc.B(p, j), val); };
  Vec acc = Vec::Zero(val.size());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double gij = M.ginv[i][j];
      double div_coef = M.dginv[i][i][j] + gij * M.dG[i] / M.G;  // G^{-1} d_i(g^{ij} G)
      Vec nj = nabla(j);
      if (div_coef != 0) acc += div_coef * nj;
      if (gij != 0) {
        // d_i nabla_j u = d_i d_j u + (d_i B_j) u + B_j d_i u
        Vec dinj = d2(i, j) + bact(Bc.dB(p, j, i), val) + bact(Bc.B(p, j), d1(i));
        acc += gij * (dinj + bact(Bc.B(p, i), nj));
      }
    }
  return -acc;
}

}  // namespace detail

inline Vec connection_laplacian(const MetricClosure& mc, const ConnectionClosure& B,
                                const SectionClosure& u, const Point& p) {
  MetricAtPoint M = metric_at(mc, p);
  auto value = [&]() { return u.value(p); };
  auto d1 = [&](int k) { return u.d1(p, k); };
  auto d2 = [&](int k, int l) { return u.d2(p, k, l); };
  auto bact = [](const Mat& b, const Vec& x) -> Vec { return b * x; };
  return detail::box_generic(M, B, p, value, d1, d2, bact);
}

inline Vec apply_P(const MetricClosure& mc, const ConnectionClosure& B,
                   const PotentialClosure& V, const SectionClosure& u, const Point& p) {
  Vec out = connection_laplacian(mc, B, u, p);
  if (!V.zero()) out += V.V(p) * u.value(p);
  return out;
}

// endomorphism-field versions (B acts by commutator, V by composition)
inline Mat connection_laplacian_endo(const MetricClosure& mc, const ConnectionClosure& B,
                                     const MatrixClosure& A, const Point& p) {
  MetricAtPoint M = metric_at(mc, p);
  int N = A.N;
  auto flat = [N](const Mat& m) { return Vec(Eigen::Map<const Vec>(m.data(), N * N)); };
  auto unflat = [N](const Vec& v) {
    return Mat(Eigen::Map<const Mat>(v.data(), N, N));
  };
  auto value = [&]() { return flat(A.value(p)); };
  auto d1 = [&](int k) { return flat(A.d1(p, k)); };
  auto d2 = [&](int k, int l) { return flat(A.d2(p, k, l)); };
  auto bact = [&](const Mat& b, const Vec& x) -> Vec {
    Mat X = unflat(x);
    return flat(b * X - X * b);
  };
  Vec r = detail::box_generic(M, B, p, value, d1, d2, bact);
  return unflat(r);
}

inline Mat apply_P_endo(const MetricClosure& mc, const ConnectionClosure& B,
                        const PotentialClosure& V, const MatrixClosure& A,
                        const Point& p) {
  Mat out = connection_laplacian_endo(mc, B, A, p);
  if (!V.zero()) out += V.V(p) * A.value(p);
  return out;
}

// metric contraction C(nabla A, nabla u) = g^{ij} (nabla_i A)(nabla_j u)
inline Vec contract_grad_grad(const MetricClosure& mc, const ConnectionClosure& B,
                              const MatrixClosure& A, const SectionClosure& u,
                              const Point& p) {
  MetricAtPoint M = metric_at(mc, p);
  Vec acc = Vec::Zero(u.N);
  for (int i = 0; i < M.dim(); ++i) {
    Mat nA = covariant_derivative(B, A, p, i);
    for (int j = 0; j < M.dim(); ++j) {
      double gij = M.ginv[i][j];
      if (gij == 0) continue;
      acc += gij * (nA * covariant_derivative(B, u, p, j));
    }
  }
  return acc;
}

// --- gauge transformation -----------------------------------------------------

struct GaugeTransformResult {
  ConnectionClosure B;
  PotentialClosure V;
  double max_projection_defect = 0;  // defect from g before re-projection (sampled)
};

// (B,V) -> (A^-1 B A + A^-1 dA, A^-1 V A).  A must be group-valued; the
// derivative term uses A's analytic partials.  B' is re-projected onto the
// algebra; the defect is recorded lazily into *defect_out when provided.
inline GaugeTransformResult gauge_transform(const ConnectionClosure& Bc,
                                            const PotentialClosure& Vc,
                                            const MatrixClosure& A, bool project = true,
                                            std::shared_ptr<double> defect_out = nullptr) {
  GaugeTransformResult out;
  out.B = Bc;
  GaugeGroupSpec grp = Bc.group;
  out.B.comp = [Bc, A, grp, project, defect_out](const Point& p, int i) {
    Mat Av = A.value(p);
    Mat Ainv = Av.inverse();
    Mat Bp = Ainv * Bc.B(p, i) * Av + Ainv * A.d1(p, i);
    if (defect_out) {
      double d = grp.algebra_defect(Bp);
      if (d > *defect_out) *defect_out = d;
    }
    return project ? grp.project_algebra(Bp) : Bp;
  };
  if ((Bc.d1 || Bc.zero()) && A.d2) {
    out.B.d1 = [Bc, A, grp, project](const Point& p, int i, int k) {
      Mat Av = A.value(p);
      Mat Ainv = Av.inverse();
      Mat dAk = A.d1(p, k);
      Mat dAinv = -Ainv * dAk * Ainv;
      Mat Bi = Bc.B(p, i);
      Mat dBik = Bc.dB(p, i, k);
      Mat r = dAinv * Bi * Av + Ainv * dBik * Av + Ainv * Bi * dAk +
              dAinv * A.d1(p, i) + Ainv * A.d2(p, i, k);
      return project ? grp.project_algebra(r) : r;
    };
  }
  out.V = Vc;
  if (!Vc.zero()) {
    out.V.value = [Vc, A](const Point& p) {
      Mat Av = A.value(p);
      return (Av.inverse() * Vc.V(p) * Av).eval();
    };
    if (Vc.d1 && A.d1) {
      out.V.d1 = [Vc, A](const Point& p, int k) {
        Mat Av = A.value(p);
        Mat Ainv = Av.inverse();
        Mat dAk = A.d1(p, k);
        Mat dAinv = -Ainv * dAk * Ainv;
        return (dAinv * Vc.V(p) * Av + Ainv * Vc.d1(p, k) * Av + Ainv * Vc.V(p) * dAk)
            .eval();
      };
    }
  }
  return out;
}

// --- Lemma 2.2: recover End-valued covectors from null contractions ----------

struct ContractionSample {
  int slot = 0;        // which frame vector E_j carries the covector
  TangentVector xi;    // null covector
  Vec value;           // C(A (xi ⊗ E_slot)) in fiber coordinates
};

struct ContractionSolveResult {
  std::vector<Mat> A;  // per direction i = 0..n: matrix A_i with (A_i)_{k j} = A_{ijk}
  double condition = 0;
  double residual = 0;
};

// A in End(E_p) ⊗ T_p*M has components A_{ijk} (direction i, input frame j,
// output frame k); C(A(xi ⊗ E_j)) = sum_i A_{ijk} <dx^i, xi>_g E_k.
inline ContractionSolveResult contraction_solve(const MetricAtPoint& M,
                                                const std::vector<ContractionSample>& samples,
                                                int N) {
  int d = M.dim();
  ContractionSolveResult out;
  out.A.assign(d, Mat::Zero(N, N));

  // the pairing <dx^i, xi> = g^{il} xi_l depends only on xi
  // unknowns per (j,k): the d coefficients A_{ijk}; equations decouple in (j,k)
  double worst_cond = 0, worst_res = 0;
  for (int j = 0; j < N; ++j) {
    std::vector<const ContractionSample*> rows;
    for (const auto& s : samples)
      if (s.slot == j) rows.push_back(&s);
    if (static_cast<int>(rows.size()) < d)
      throw numerical_error("contraction_solve: insufficient null-direction coverage");
    Eigen::MatrixXd S(rows.size(), d);
    for (size_t r = 0; r < rows.size(); ++r)
      for (int i = 0; i < d; ++i) {
        double pair = 0;
        for (int l = 0; l < d; ++l) pair += M.ginv[i][l] * rows[r]->xi.comp[l];
        S(r, i) = pair;
      }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
    double cond = svd.singularValues()(0) / svd.singularValues()(d - 1);
    if (svd.singularValues()(d - 1) < 1e-12 * svd.singularValues()(0))
      throw numerical_error("contraction_solve: rank-deficient system");
    worst_cond = std::max(worst_cond, cond);
    for (int k = 0; k < N; ++k) {
      Vec rhs(rows.size());
      for (size_t r = 0; r < rows.size(); ++r) rhs(r) = rows[r]->value(k);
      Vec coef = svd.solve(rhs);
      for (int i = 0; i < d; ++i) out.A[i](k, j) = coef(i);
      worst_res = std::max(worst_res, (S * coef - rhs).norm());
    }
  }
  out.condition = worst_cond;
  out.residual = worst_res;
  return out;
}

// generate the samples C(Au) from a known A (testing aid)
inline std::vector<ContractionSample> contraction_samples(const MetricAtPoint& M,
                                                          const std::vector<Mat>& A,
                                                          int N, bool extended_frame = true) {
  auto frame = null_covector_frame(M, extended_frame);
  std::vector<ContractionSample> out;
  for (int j = 0; j < N; ++j)
    for (const auto& xi : frame) {
      ContractionSample s;
      s.slot = j;
      s.xi = xi;
      Vec v = Vec::Zero(N);
      for (int i = 0; i < M.dim(); ++i) {
        double pair = 0;
        for (int l = 0; l < M.dim(); ++l) pair += M.ginv[i][l] * xi.comp[l];
        v += pair * A[i].col(j);
      }
      s.value = v;
      out.push_back(s);
    }
  return out;
}

// --- identity residual suite ---------------------------------------------------

struct IdentityReport {
  double conn_compat = 0;        // Leibniz rule for <.,.>_E
  double products2 = 0;          // Box(Au) expansion
  double products3 = 0;          // P(Au) expansion
  double covariant_A = 0;        // Leibniz nabla(Au) = (nabla A)u + A nabla u
  double top_two_terms = 0;      // Box = d*d - 2C(B du) + Z with fitted Z
  double duality_residual = 0;   // Green identity, quadrature
  double div_thm_residual = 0;   // divergence theorem, quadrature
};

// derivative of <u,v> minus Leibniz expansion, max over directions
inline double conn_compat_residual(const ConnectionClosure& B, const SectionClosure& u,
                                   const SectionClosure& v, const Point& p) {
  double worst = 0;
  for (int i = 0; i <= u.n; ++i) {
    cplx lhs = fiber_inner(u.d1(p, i), v.value(p)) + fiber_inner(u.value(p), v.d1(p, i));
    // X<u,v> with X = d_i acting on the scalar function <u,v>
    cplx rhs = fiber_inner(covariant_derivative(B, u, p, i), v.value(p)) +
               fiber_inner(u.value(p), covariant_derivative(B, v, p, i));
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

// closure for the product field A u (with partials composed by Leibniz)
inline SectionClosure product_field(const MatrixClosure& A, const SectionClosure& u) {
  SectionClosure w;
  w.n = u.n;
  w.N = u.N;
  w.value = [A, u](const Point& p) { return (A.value(p) * u.value(p)).eval(); };
  w.d1 = [A, u](const Point& p, int k) {
    return (A.d1(p, k) * u.value(p) + A.value(p) * u.d1(p, k)).eval();
  };
  w.d2 = [A, u](const Point& p, int k, int l) {
    return (A.d2(p, k, l) * u.value(p) + A.d1(p, k) * u.d1(p, l) +
            A.d1(p, l) * u.d1(p, k) + A.value(p) * u.d2(p, k, l))
        .eval();
  };
  return w;
}

inline double products2_residual(const MetricClosure& mc, const ConnectionClosure& B,
                                 const MatrixClosure& A, const SectionClosure& u,
                                 const Point& p) {
  SectionClosure Au = product_field(A, u);
  Vec lhs = connection_laplacian(mc, B, Au, p);
  Vec rhs = connection_laplacian_endo(mc, B, A, p) * u.value(p) +
            A.value(p) * connection_laplacian(mc, B, u, p) -
            2.0 * contract_grad_grad(mc, B, A, u, p);
  return (lhs - rhs).norm();
}

inline double products3_residual(const MetricClosure& mc, const ConnectionClosure& B,
                                 const PotentialClosure& V, const MatrixClosure& A,
                                 const SectionClosure& u, const Point& p) {
  SectionClosure Au = product_field(A, u);
  Vec lhs = apply_P(mc, B, V, Au, p);
  Vec rhs = apply_P_endo(mc, B, V, A, p) * u.value(p) +
            A.value(p) * apply_P(mc, B, V, u, p) -
            A.value(p) * V.V(p) * u.value(p) -
            2.0 * contract_grad_grad(mc, B, A, u, p);
  return (lhs - rhs).norm();
}

inline double covariant_A_residual(const ConnectionClosure& B, const MatrixClosure& A,
                                   const SectionClosure& u, const Point& p) {
  double worst = 0;
  SectionClosure Au = product_field(A, u);
  for (int i = 0; i <= u.n; ++i) {
    Vec lhs = covariant_derivative(B, Au, p, i);
    Vec rhs = covariant_derivative(B, A, p, i) * u.value(p) +
              A.value(p) * covariant_derivative(B, u, p, i);
    worst = std::max(worst, (lhs - rhs).norm());
  }
  return worst;
}

// top.two.terms: R(u) = Box u - d*d u + 2 C(B(du)) must be zeroth order; the
// zeroth-order remainder Z is fitted from constant sections and subtracted.
inline double top_two_terms_residual(const MetricClosure& mc, const ConnectionClosure& B,
                                     const SectionClosure& u, const Point& p) {
  int N = u.N;
  ConnectionClosure noB = zero_connection(u.n, N);
  auto Rop = [&](const SectionClosure& w) {
    MetricAtPoint M = metric_at(mc, p);
    Vec dstar_d = connection_laplacian(mc, noB, w, p);
    Vec cb = Vec::Zero(N);
    for (int i = 0; i < M.dim(); ++i)
      for (int j = 0; j < M.dim(); ++j) {
        double gij = M.ginv[i][j];
        if (gij != 0) cb += gij * (B.B(p, i) * w.d1(p, j));
      }
    return (connection_laplacian(mc, B, w, p) - dstar_d + 2.0 * cb).eval();
  };
  // fit Z column by column from constant sections
  Mat Z(N, N);
  for (int k = 0; k < N; ++k) {
    SectionClosure ek;
    ek.n = u.n;
    ek.N = N;
    ek.value = [N, k](const Point&) { return Vec::Unit(N, k).eval(); };
    ek.d1 = [N](const Point&, int) { return Vec::Zero(N).eval(); };
    ek.d2 = [N](const Point&, int, int) { return Vec::Zero(N).eval(); };
    Z.col(k) = Rop(ek);
  }
  return (Rop(u) - Z * u.value(p)).norm();
}

// --- quadrature identities (Green / divergence theorem) -----------------------

namespace detail {

// iterate over grid nodes with trapezoid weights (coordinate measure)
template <class F>
void quad_nodes(const CoordinateChart& chart, F&& body) {
  for (int m = 0; m <= chart.nt; ++m) {
    double wt = (m == 0 || m == chart.nt) ? 0.5 : 1.0;
    for (int idx = 0; idx < chart.space_nodes(); ++idx) {
      Point p = chart.space_point(idx, chart.time_of(m));
      body(p, wt * chart.ht() * chart.space_weight(idx));
    }
  }
}

struct BoundaryFace {
  int axis;   // 0 = time caps, >=1 spatial faces
  int side;   // -1 lower, +1 upper
};

// quadrature over one boundary face of the box with induced volume density;
// also reports the outward unit normal vector at each node.
template <class F>
void quad_face(const CoordinateChart& chart, const MetricClosure& mc,
               const BoundaryFace& face, F&& body) {
  auto induced_density = [&](const MetricAtPoint& M, int fixed_axis) {
    // volume density of g restricted to the face axes
    int axes[3], na = 0;
    for (int a = 0; a < M.dim(); ++a)
      if (a != fixed_axis) axes[na++] = a;
    if (na == 1) return std::sqrt(std::abs(M.g[axes[0]][axes[0]]));
    double det = M.g[axes[0]][axes[0]] * M.g[axes[1]][axes[1]] -
                 M.g[axes[0]][axes[1]] * M.g[axes[1]][axes[0]];
    return std::sqrt(std::abs(det));
  };
  auto normal_at = [&](const MetricAtPoint& M, int axis, int side) {
    // outward unit normal: g-orthogonal to the face (raised conormal), with
    // the coordinate component along `axis` pointing outward
    double co[3] = {0, 0, 0};
    co[axis] = 1;
    double up[3];
    M.raise(co, up);
    double nn = std::abs(M.inner_vec(up, up));
    double s = 1.0 / std::sqrt(nn);
    if (up[axis] * side < 0) s = -s;
    TangentVector nu;
    nu.base = M.p;
    for (int i = 0; i < 3; ++i) nu.comp[i] = up[i] * s;
    return nu;
  };
  auto normal_sign = [&](const MetricAtPoint& M, const TangentVector& nu) {
    double comps[3] = {nu.comp[0], nu.comp[1], nu.comp[2]};
    return M.inner_vec(comps, comps) > 0 ? 1.0 : -1.0;  // sgn <nu,nu>
  };

  if (face.axis == 0) {
    double t = face.side > 0 ? chart.t_max : chart.t_min;
    for (int idx = 0; idx < chart.space_nodes(); ++idx) {
      Point p = chart.space_point(idx, t);
      MetricAtPoint M = metric_at(mc, p);
      TangentVector nu = normal_at(M, 0, face.side);
      body(p, chart.space_weight(idx) * induced_density(M, 0), nu, normal_sign(M, nu));
    }
  } else {
    int k = face.axis - 1;  // spatial axis
    double xv = face.side > 0 ? chart.x_max[k] : chart.x_min[k];
    for (int m = 0; m <= chart.nt; ++m) {
      double wt = ((m == 0 || m == chart.nt) ? 0.5 : 1.0) * chart.ht();
      double t = chart.time_of(m);
      if (chart.n == 1) {
        Point p(t, xv);
        MetricAtPoint M = metric_at(mc, p);
        TangentVector nu = normal_at(M, 1, face.side);
        body(p, wt * induced_density(M, 1), nu, normal_sign(M, nu));
      } else {
        int other = 1 - k;
        for (int j = 0; j <= chart.nx[other]; ++j) {
          double wo = ((j == 0 || j == chart.nx[other]) ? 0.5 : 1.0) * chart.hx(other);
          Point p;
          p[0] = t;
          p[k + 1] = xv;
          p[other + 1] = chart.x_min[other] + j * chart.hx(other);
          MetricAtPoint M = metric_at(mc, p);
          TangentVector nu = normal_at(M, k + 1, face.side);
          body(p, wt * wo * induced_density(M, k + 1), nu, normal_sign(M, nu));
        }
      }
    }
  }
}

template <class F>
void quad_boundary(const CoordinateChart& chart, const MetricClosure& mc, F&& body) {
  std::vector<BoundaryFace> faces = {{0, -1}, {0, +1}, {1, -1}, {1, +1}};
  if (chart.n == 2) {
    faces.push_back({2, -1});
    faces.push_back({2, +1});
  }
  for (auto& f : faces) quad_face(chart, mc, f, body);
}

}  // namespace detail

// Green identity (Pu,v) - (u,Pv) + boundary terms = 0, by trapezoid quadrature.
inline double duality_residual(const MetricClosure& mc, const CoordinateChart& chart,
                               const ConnectionClosure& B, const PotentialClosure& V,
                               const SectionClosure& u, const SectionClosure& v) {
  cplx bulk = 0;
  detail::quad_nodes(chart, [&](const Point& p, double w) {
    MetricAtPoint M = metric_at(mc, p);
    Vec Pu = apply_P(mc, B, V, u, p), Pv = apply_P(mc, B, V, v, p);
    bulk += w * M.G * (fiber_inner(Pu, v.value(p)) - fiber_inner(u.value(p), Pv));
  });
  cplx bdry = 0;
  detail::quad_boundary(chart, mc, [&](const Point& p, double w, const TangentVector& nu,
                                       double sgn) {
    Vec nu_u = Vec::Zero(u.N), nu_v = Vec::Zero(u.N);
    for (int i = 0; i <= chart.n; ++i) {
      nu_u += nu.comp[i] * covariant_derivative(B, u, p, i);
      nu_v += nu.comp[i] * covariant_derivative(B, v, p, i);
    }
    bdry += w * sgn * (fiber_inner(nu_u, v.value(p)) - fiber_inner(u.value(p), nu_v));
  });
  return std::abs(bulk + bdry);
}

// divergence theorem (nabla* w, u) = (w, nabla u) - (sgn <nu,nu> i_nu* w, u)_dM
inline double div_thm_residual(const MetricClosure& mc, const CoordinateChart& chart,
                               const ConnectionClosure& B, const FormClosure& omega,
                               const SectionClosure& u) {
  cplx lhs = 0, mid = 0;
  detail::quad_nodes(chart, [&](const Point& p, double w) {
    MetricAtPoint M = metric_at(mc, p);
    // nabla* omega = -G^{-1} sum_ij nabla_i (g^{ij} G omega_j)
    Vec star = Vec::Zero(u.N);
    for (int i = 0; i < M.dim(); ++i)
      for (int j = 0; j < M.dim(); ++j) {
        double gij = M.ginv[i][j];
        double div_coef = M.dginv[i][i][j] + gij * M.dG[i] / M.G;
        star += div_coef * omega.comp(p, j);
        if (gij != 0)
          star += gij * (omega.d1(p, j, i) + B.B(p, i) * omega.comp(p, j));
      }
    star = -star;
    lhs += w * M.G * fiber_inner(star, u.value(p));
    // (omega, nabla u) with <u ox a, v ox b> = <u,v><a,b>_g
    cplx pair = 0;
    for (int i = 0; i < M.dim(); ++i)
      for (int j = 0; j < M.dim(); ++j) {
        double gij = M.ginv[i][j];
        if (gij != 0)
          pair += gij * fiber_inner(omega.comp(p, i), covariant_derivative(B, u, p, j));
      }
    mid += w * M.G * pair;
  });
  cplx bdry = 0;
  detail::quad_boundary(chart, mc, [&](const Point& p, double w, const TangentVector& nu,
                                       double sgn) {
    Vec wnu = Vec::Zero(u.N);
    for (int i = 0; i <= chart.n; ++i) wnu += nu.comp[i] * omega.comp(p, i);
    bdry += w * sgn * fiber_inner(wnu, u.value(p));
  });
  return std::abs(lhs - (mid - bdry));
}

}  // namespace conwave
