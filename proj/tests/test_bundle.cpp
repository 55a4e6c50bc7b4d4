#include <catch2/catch_amalgamated.hpp>

#include "conwave/fields.hpp"

using namespace conwave;

namespace {

CoordinateChart chart1d() {
  CoordinateChart c;
  c.n = 1;
  c.t_min = -1;
  c.t_max = 1;
  c.x_min[0] = 0;
  c.x_max[0] = 1;
  c.nt = 32;
  c.nx[0] = 32;
  return c;
}

SectionClosure constant_section(int n, const Vec& v) {
  SectionClosure u;
  u.n = n;
  u.N = v.size();
  u.value = [v](const Point&) { return v; };
  u.d1 = [v](const Point&, int) { return Vec::Zero(v.size()).eval(); };
  u.d2 = [v](const Point&, int, int) { return Vec::Zero(v.size()).eval(); };
  return u;
}

// u = e^{i(k.p)} w with exact jets
SectionClosure plane_wave(int n, const Vec& w, std::array<double, 3> k) {
  SectionClosure u;
  u.n = n;
  u.N = w.size();
  auto ph = [k](const Point& p) {
    double s = 0;
    for (int a = 0; a < 3; ++a) s += k[a] * p[a];
    return std::exp(iu * s);
  };
  u.value = [w, ph](const Point& p) { return (ph(p) * w).eval(); };
  u.d1 = [w, ph, k](const Point& p, int a) { return (iu * k[a] * ph(p) * w).eval(); };
  u.d2 = [w, ph, k](const Point& p, int a, int b) {
    return (-k[a] * k[b] * ph(p) * w).eval();
  };
  return u;
}

}  // namespace

TEST_CASE("gauge group: projection and polar retraction") {
  GaugeGroupSpec grp;
  grp.N = 3;
  Rng rng(2);
  Mat X = rng.random_matrix(3);
  Mat P = grp.project_algebra(X);
  CHECK((P + P.adjoint()).norm() < 1e-13);
  // idempotent
  CHECK((grp.project_algebra(P) - P).norm() < 1e-13);
  // retraction of a group element is the identity map
  Mat U = grp.retract(rng.random_matrix(3));
  CHECK(grp.in_group(U, 1e-12));
  CHECK((grp.retract(U) - U).norm() < 1e-12);

  GaugeGroupSpec su;
  su.N = 2;
  su.tag = GaugeGroupSpec::Tag::SU;
  Mat V = su.retract(rng.random_matrix(2));
  CHECK(std::abs(V.determinant() - 1.0) < 1e-12);
  Mat S = su.project_algebra(rng.random_matrix(2));
  CHECK(std::abs(S.trace()) < 1e-13);
}

TEST_CASE("covariant_derivative: trivial cases") {
  auto B0 = zero_connection(1, 2);
  auto u = constant_section(1, Vec::Ones(2));
  CHECK(covariant_derivative(B0, u, Point(0.1, 0.4), 1).norm() == 0.0);

  // N=1, B_1 = i beta, u = e^{-i beta x}: covariantly constant in x
  double beta = 0.7;
  auto B = make_constant_connection(1, {Mat::Zero(1, 1), (Mat(1, 1) << iu * beta).finished()});
  auto uph = plane_wave(1, Vec::Ones(1), {0, -beta, 0});
  CHECK(covariant_derivative(B, uph, Point(0.2, 0.3), 1).norm() < 1e-14);

  // endomorphism: nabla Id = [B, Id] = 0
  auto Brand = make_random_connection(1, 2, 9);
  auto Id = make_identity_gauge(1, 2);
  CHECK(covariant_derivative(Brand, Id, Point(0.1, 0.6), 0).norm() < 1e-14);
}

TEST_CASE("connection_laplacian: flat d'Alembertian") {
  auto mink = make_minkowski(1);
  auto B0 = zero_connection(1, 1);
  // null plane wave killed
  auto w = plane_wave(1, Vec::Ones(1), {1, 1, 0});
  CHECK(connection_laplacian(mink, B0, w, Point(0.3, 0.4)).norm() < 1e-13);
  // u = t^2 -> Box u = 2
  SectionClosure t2;
  t2.n = 1;
  t2.N = 1;
  t2.value = [](const Point& p) { return (Vec(1) << p[0] * p[0]).finished(); };
  t2.d1 = [](const Point& p, int k) {
    return (Vec(1) << (k == 0 ? 2 * p[0] : 0.0)).finished();
  };
  t2.d2 = [](const Point&, int k, int l) {
    return (Vec(1) << ((k == 0 && l == 0) ? 2.0 : 0.0)).finished();
  };
  Vec r = connection_laplacian(mink, B0, t2, Point(0.5, 0.5));
  CHECK_THAT(std::abs(r(0) - 2.0), Catch::Matchers::WithinAbs(0.0, 1e-13));
}

TEST_CASE("apply_P: potential term and gauge conjugation identity") {
  auto mink = make_minkowski(1);
  auto B0 = zero_connection(1, 2);
  double m2 = 1.7;
  auto V = make_constant_potential(1, m2 * Mat::Identity(2, 2));
  auto e1 = constant_section(1, Vec::Unit(2, 0));
  Vec r = apply_P(mink, B0, V, e1, Point(0.1, 0.2));
  CHECK((r - m2 * Vec::Unit(2, 0)).norm() < 1e-13);

  // P'(A^-1 u) = A^-1 P(u) for (B',V') = gauge_transform(B,V,A)
  auto B = make_random_connection(1, 2, 21, 0.6);
  auto Vr = make_random_potential(1, 2, 22, 0.8);
  Rng rng(23);
  Mat S = rng.random_skew(2);
  auto wfun = make_trig_scalar(1, {0.9, 1.3, 0}, 0.4);
  auto A = make_exp_gauge(1, S, wfun);
  auto Ainv = make_exp_gauge(1, (-S).eval(), wfun);
  auto gt = gauge_transform(B, Vr, A, false);
  auto u = make_trig_section(1, 2, 24);
  SectionClosure Au = product_field(Ainv, u);
  Point p(0.25, 0.55);
  Vec lhs = apply_P(mink, gt.B, gt.V, Au, p);
  Vec rhs = Ainv.value(p) * apply_P(mink, B, Vr, u, p);
  CHECK((lhs - rhs).norm() < 1e-8 * std::max(1.0, rhs.norm()));
}

TEST_CASE("gauge_transform: closed forms") {
  auto B = make_random_connection(1, 2, 31, 0.5);
  auto V = make_random_potential(1, 2, 32, 0.5);
  Point p(0.3, 0.6);

  // A = Id leaves (B,V) unchanged
  auto id = make_identity_gauge(1, 2);
  auto g0 = gauge_transform(B, V, id);
  CHECK((g0.B.comp(p, 1) - B.B(p, 1)).norm() < 1e-14);
  CHECK((g0.V.V(p) - V.V(p)).norm() < 1e-14);

  // constant unitary: derivative term vanishes
  Rng rng(33);
  Mat S = rng.random_skew(2);
  Mat U = S.exp();
  MatrixClosure Ac;
  Ac.n = 1;
  Ac.N = 2;
  Ac.value = [U](const Point&) { return U; };
  Ac.d1 = [](const Point&, int) { return Mat::Zero(2, 2).eval(); };
  Ac.d2 = [](const Point&, int, int) { return Mat::Zero(2, 2).eval(); };
  auto g1 = gauge_transform(B, V, Ac);
  CHECK((g1.B.comp(p, 0) - U.adjoint() * B.B(p, 0) * U).norm() < 1e-12);
  CHECK((g1.V.V(p) - U.adjoint() * V.V(p) * U).norm() < 1e-12);

  // abelian: B = 0, A = e^{i theta} -> B'_k = i d_k theta
  auto B0 = zero_connection(1, 1);
  auto V0 = zero_potential(1, 1);
  auto theta = make_trig_scalar(1, {1.1, 0.7, 0}, 0.2);
  Mat iS = (Mat(1, 1) << iu).finished();
  auto A1 = make_exp_gauge(1, iS, theta);
  auto g2 = gauge_transform(B0, V0, A1, false);
  for (int k = 0; k < 2; ++k) {
    cplx expect = iu * theta.d1(p, k);
    CHECK(std::abs(g2.B.comp(p, k)(0, 0) - expect) < 1e-13);
  }
}

TEST_CASE("gauge action is a group action and preserves the algebra") {
  auto B = make_random_connection(1, 2, 41, 0.5);
  auto V = make_random_potential(1, 2, 42, 0.5);
  Rng rng(43);
  Mat S1 = rng.random_skew(2), S2 = rng.random_skew(2);
  auto w1 = make_trig_scalar(1, {0.8, 1.1, 0}, 0.1);
  auto w2 = make_trig_scalar(1, {1.4, 0.5, 0}, 0.9);
  auto A1 = make_exp_gauge(1, S1, w1);
  auto A2 = make_exp_gauge(1, S2, w2);

  // composite closure A1 A2 (with exact partials via Leibniz)
  MatrixClosure A12;
  A12.n = 1;
  A12.N = 2;
  A12.value = [A1, A2](const Point& p) { return (A1.value(p) * A2.value(p)).eval(); };
  A12.d1 = [A1, A2](const Point& p, int k) {
    return (A1.d1(p, k) * A2.value(p) + A1.value(p) * A2.d1(p, k)).eval();
  };
  A12.d2 = [A1, A2](const Point& p, int k, int l) {
    return (A1.d2(p, k, l) * A2.value(p) + A1.d1(p, k) * A2.d1(p, l) +
            A1.d1(p, l) * A2.d1(p, k) + A1.value(p) * A2.d2(p, k, l))
        .eval();
  };

  auto gA1 = gauge_transform(B, V, A1, false);
  auto gA12_step = gauge_transform(gA1.B, gA1.V, A2, false);
  auto gA12 = gauge_transform(B, V, A12, false);
  Point p(0.15, 0.45);
  for (int k = 0; k < 2; ++k) {
    Mat a = gA12_step.B.comp(p, k), b = gA12.B.comp(p, k);
    CHECK((a - b).norm() < 1e-9);
    // skew-Hermitian preservation before re-projection
    CHECK((a + a.adjoint()).norm() < 1e-9);
  }
  CHECK((gA12_step.V.V(p) - gA12.V.V(p)).norm() < 1e-9);
}

TEST_CASE("metric compatibility holds for skew B and fails for non-skew") {
  auto B = make_random_connection(1, 2, 51, 0.7);
  auto u = make_trig_section(1, 2, 52);
  auto v = make_trig_section(1, 2, 53);
  Rng rng(54);
  for (int s = 0; s < 12; ++s) {
    Point p(rng.uniform(-1, 1), rng.uniform(0, 1));
    CHECK(conn_compat_residual(B, u, v, p) < 1e-8);
  }
  // non-skew fixture must fail detectably
  ConnectionClosure bad = B;
  bad.comp = [B](const Point& p, int i) {
    return (B.comp(p, i) + 0.1 * Mat::Identity(2, 2)).eval();
  };
  double worst = 0;
  for (int s = 0; s < 12; ++s) {
    Point p(rng.uniform(-1, 1), rng.uniform(0, 1));
    worst = std::max(worst, conn_compat_residual(bad, u, v, p));
  }
  CHECK(worst > 1e-4);
}

TEST_CASE("products2 / products3 / covariant.A / top.two.terms residuals") {
  for (int n : {1, 2}) {
    auto mc = (n == 1) ? make_perturbed(1, 0.15, 0.8, 1.2) : make_minkowski(2);
    auto B = make_random_connection(n, 2, 61 + n, 0.5);
    auto V = make_random_potential(n, 2, 63 + n, 0.5);
    auto u = make_trig_section(n, 2, 65 + n);
    Rng rng(67 + n);
    Mat S = rng.random_skew(2);
    auto A = make_exp_gauge(n, S, make_trig_scalar(n, {0.6, 1.0, 0.8}, 0.3));
    for (int s = 0; s < 8; ++s) {
      Point p(rng.uniform(-0.9, 0.9), rng.uniform(0.05, 0.95),
              n == 2 ? rng.uniform(0.05, 0.95) : 0.0);
      CHECK(products2_residual(mc, B, A, u, p) < 1e-8);
      CHECK(products3_residual(mc, B, V, A, u, p) < 1e-8);
      CHECK(covariant_A_residual(B, A, u, p) < 1e-10);
      CHECK(top_two_terms_residual(mc, B, u, p) < 1e-8);
    }
    // A = Id: products3 reduces to Pu = Pu
    auto id = make_identity_gauge(n, 2);
    Point p(0.2, 0.5, n == 2 ? 0.4 : 0.0);
    CHECK(products3_residual(mc, B, V, id, u, p) < 1e-10);
  }
}

TEST_CASE("zero fields give zero residuals") {
  auto mc = make_minkowski(1);
  auto B = make_random_connection(1, 2, 71);
  auto V = make_random_potential(1, 2, 72);
  auto z = constant_section(1, Vec::Zero(2));
  auto id = make_identity_gauge(1, 2);
  Point p(0.1, 0.3);
  CHECK(products3_residual(mc, B, V, id, z, p) < 1e-15);
  CHECK(conn_compat_residual(B, z, z, p) < 1e-15);
}

TEST_CASE("Green identity and divergence theorem converge under refinement") {
  auto mc = make_perturbed(1, 0.1, 0.9, 1.1);
  auto B = make_random_connection(1, 2, 81, 0.4);
  auto V = make_random_potential(1, 2, 82, 0.4);
  auto u = make_trig_section(1, 2, 83, 2, 2.0);
  auto v = make_trig_section(1, 2, 84, 2, 2.0);

  auto coarse = chart1d();
  auto fine = coarse.refined(2);
  auto finer = fine.refined(2);
  double r0 = duality_residual(mc, coarse, B, V, u, v);
  double r1 = duality_residual(mc, fine, B, V, u, v);
  double r2 = duality_residual(mc, finer, B, V, u, v);
  double order = std::log2(r1 / r2);
  INFO("duality residuals " << r0 << " " << r1 << " " << r2 << " order " << order);
  CHECK(order > 1.8);

  FormClosure omega;
  omega.n = 1;
  omega.N = 2;
  auto base = make_trig_section(1, 2, 85, 2, 2.0);
  auto base2 = make_trig_section(1, 2, 86, 2, 2.0);
  omega.comp = [base, base2](const Point& p, int i) {
    return (i == 0 ? base.value(p) : base2.value(p)).eval();
  };
  omega.d1 = [base, base2](const Point& p, int i, int k) {
    return (i == 0 ? base.d1(p, k) : base2.d1(p, k)).eval();
  };
  double d1v = div_thm_residual(mc, fine, B, omega, u);
  double d2v = div_thm_residual(mc, finer, B, omega, u);
  INFO("divthm residuals " << d1v << " " << d2v);
  CHECK(std::log2(d1v / d2v) > 1.8);
}

TEST_CASE("contraction_solve: Lemma 2.2 recovery") {
  // A = 0 -> zero recovery
  auto mink = make_minkowski(1);
  auto M = metric_at(mink, Point(0, 0.5));
  std::vector<Mat> zero = {Mat::Zero(1, 1), Mat::Zero(1, 1)};
  auto s0 = contraction_samples(M, zero, 1);
  auto r0 = contraction_solve(M, s0, 1);
  CHECK(r0.A[0].norm() < 1e-14);

  // hand-checked N=1 case: A = dt (x) 1; xi = dt±dx give C(Au) = <dt,xi> = -1
  std::vector<Mat> Adt = {Mat::Identity(1, 1), Mat::Zero(1, 1)};
  auto s1 = contraction_samples(M, Adt, 1);
  for (auto& s : s1) CHECK_THAT(std::real(s.value(0)), Catch::Matchers::WithinAbs(-1.0, 1e-14));
  auto r1 = contraction_solve(M, s1, 1);
  CHECK((r1.A[0] - Mat::Identity(1, 1)).norm() < 1e-12);
  CHECK(r1.A[1].norm() < 1e-12);

  // random A over N<=3, n<=2, extended frames: recovery error <= 1e-10
  for (int n : {1, 2}) {
    auto mc = make_perturbed(n, 0.1, 0.7, 1.4);
    for (int N : {1, 2, 3}) {
      Rng rng(90 + 10 * n + N);
      auto Mp = metric_at(mc, Point(0.1, 0.4, n == 2 ? 0.7 : 0.0));
      std::vector<Mat> A;
      for (int i = 0; i <= n; ++i) A.push_back(rng.random_matrix(N));
      auto samples = contraction_samples(Mp, A, N, true);
      auto rec = contraction_solve(Mp, samples, N);
      double err = 0;
      for (int i = 0; i <= n; ++i) err = std::max(err, (rec.A[i] - A[i]).norm());
      CHECK(err < 1e-10);
      CHECK(rec.condition < 100.0);
    }
  }
}
