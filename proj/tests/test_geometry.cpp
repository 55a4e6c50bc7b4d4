#include <catch2/catch_amalgamated.hpp>

#include "conwave/fields.hpp"
#include "conwave/geometry.hpp"

using namespace conwave;

namespace {

// g0_11 = 1 + 0.1 sin x, c = 1 (hand-differentiated fixture)
MetricClosure sin_metric() {
  MetricClosure mc;
  mc.n = 1;
  mc.name = "sinx";
  mc.time_independent = true;
  mc.eval = [](const Point& p) {
    MetricJets J;
    J.c = Jet2::constant(1.0);
    Jet2 g11;
    g11.v = 1.0 + 0.1 * std::sin(p[1]);
    g11.d[1] = 0.1 * std::cos(p[1]);
    g11.dd[1][1] = -0.1 * std::sin(p[1]);
    J.g0[0][0] = g11;
    return J;
  };
  return mc;
}

CoordinateChart chart1d() {
  CoordinateChart c;
  c.n = 1;
  c.t_min = -1;
  c.t_max = 1;
  c.x_min[0] = 0;
  c.x_max[0] = 1;
  return c;
}

CoordinateChart chart2d() {
  CoordinateChart c;
  c.n = 2;
  c.t_min = -1;
  c.t_max = 1;
  c.x_min[0] = -1;
  c.x_max[0] = 1;
  c.x_min[1] = -1;
  c.x_max[1] = 1;
  return c;
}

}  // namespace

TEST_CASE("metric_at: Minkowski") {
  auto mc = make_minkowski(1);
  auto M = metric_at(mc, Point(0.3, 0.5));
  CHECK(M.g[0][0] == -1.0);
  CHECK(M.g[1][1] == 1.0);
  CHECK(M.g[0][1] == 0.0);
  CHECK(M.G == 1.0);
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(M.gamma[k][i][j] == 0.0);
}

TEST_CASE("metric_at: hand-differentiated sin fixture") {
  auto mc = sin_metric();
  auto M = metric_at(mc, Point(0.0, 0.0));
  CHECK_THAT(M.g[1][1], Catch::Matchers::WithinAbs(1.0, 1e-15));
  CHECK_THAT(M.dg[1][1][1], Catch::Matchers::WithinAbs(0.1, 1e-15));
  CHECK_THAT(M.gamma[1][1][1], Catch::Matchers::WithinAbs(0.05, 1e-14));
}

TEST_CASE("metric_at: conformal volume density") {
  auto mc = make_conformal(1, 1.0, 0.0);  // c = e^t
  auto M0 = metric_at(mc, Point(0.0, 0.0));
  CHECK_THAT(M0.G, Catch::Matchers::WithinAbs(1.0, 1e-14));
  auto M1 = metric_at(mc, Point(0.3, 0.2));
  CHECK_THAT(M1.G, Catch::Matchers::WithinRel(std::exp(0.3), 1e-12));
}

TEST_CASE("metric_at: g * ginv = id, partials match finite differences") {
  auto mc = make_perturbed(1, 0.2, 1.0, 1.5);
  Rng rng(7);
  for (int s = 0; s < 20; ++s) {
    Point p(rng.uniform(-1, 1), rng.uniform(0, 1));
    auto M = metric_at(mc, p);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double idd = 0;
        for (int k = 0; k < 2; ++k) idd += M.g[i][k] * M.ginv[k][j];
        CHECK_THAT(idd, Catch::Matchers::WithinAbs(i == j ? 1.0 : 0.0, 1e-12));
      }
    // analytic partials of the closure vs central differences, step 1e-4
    double h = 1e-4;
    for (int k = 0; k < 2; ++k) {
      Point pp = p, pm = p;
      pp[k] += h;
      pm[k] -= h;
      auto Jp = mc.eval(pp), Jm = mc.eval(pm), J = mc.eval(p);
      double fd = (Jp.g0[0][0].v - Jm.g0[0][0].v) / (2 * h);
      if (std::abs(J.g0[0][0].d[k]) > 1e-12)
        CHECK_THAT(fd, Catch::Matchers::WithinRel(J.g0[0][0].d[k], 1e-6));
      else
        CHECK_THAT(fd, Catch::Matchers::WithinAbs(0.0, 1e-8));
    }
  }
}

TEST_CASE("riemann_at: flat metrics vanish") {
  for (int n : {1, 2}) {
    auto mc = make_minkowski(n);
    auto R = riemann_at(mc, Point(0.1, 0.2, 0.3));
    double mx = 0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d) mx = std::max(mx, std::abs(R.R[a][b][c][d]));
    CHECK(mx == 0.0);
  }
}

TEST_CASE("riemann_at: frozen symbolic value for time-dependent 1+1 metric") {
  // g = -dt^2 + (1 + 0.2 sin t cos 1.5x) dx^2 at (0.3, 0.7); sympy oracle
  auto mc = make_perturbed(1, 0.2, 1.0, 1.5);
  auto R = riemann_at(mc, Point(0.3, 0.7));
  CHECK_THAT(R.R[0][1][0][1], Catch::Matchers::WithinRel(0.016899233320408137, 1e-10));
  // antisymmetries
  CHECK_THAT(R.R[1][0][0][1], Catch::Matchers::WithinAbs(-R.R[0][1][0][1], 1e-12));
  CHECK_THAT(R.R[0][1][1][0], Catch::Matchers::WithinAbs(-R.R[0][1][0][1], 1e-12));
}

TEST_CASE("riemann_at: ultrastatic surface fixtures have the oracle sign") {
  // sympy oracle at x = 1/3 with N = dt+dx, v = dy
  double Nv[3] = {1, 1, 0}, vv[3] = {0, 0, 1};
  auto neg = make_ultrastatic_surface(0.5, true);
  auto Rn = riemann_at(neg, Point(0.0, 1.0 / 3.0, 0.2));
  CHECK_THAT(Rn.sectional_pairing(Nv, vv, Nv, vv),
             Catch::Matchers::WithinRel(-0.2570089834787424, 1e-10));
  auto pos = make_ultrastatic_surface(0.5, false);
  auto Rp = riemann_at(pos, Point(0.0, 1.0 / 3.0, 0.2));
  CHECK_THAT(Rp.sectional_pairing(Nv, vv, Nv, vv),
             Catch::Matchers::WithinRel(0.2431196182893422, 1e-10));
}

TEST_CASE("riemann invariants: Bianchi and antisymmetry on random samples") {
  auto mc = make_perturbed(2, 0.15, 0.7, 1.3);
  Rng rng(11);
  for (int s = 0; s < 10; ++s) {
    Point p(rng.uniform(-1, 1), rng.uniform(0, 1), rng.uniform(0, 1));
    auto R = riemann_at(mc, p);
    for (int l = 0; l < 3; ++l)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) {
            CHECK(std::abs(R.R[l][i][j][k] + R.R[i][l][j][k]) < 1e-9);
            CHECK(std::abs(R.R[l][i][j][k] + R.R[l][i][k][j]) < 1e-9);
            // first Bianchi: R_{l[ijk]} = 0
            CHECK(std::abs(R.R[l][i][j][k] + R.R[l][j][k][i] + R.R[l][k][i][j]) < 1e-9);
          }
  }
}

TEST_CASE("classify_vector: Minkowski examples") {
  auto mc = make_minkowski(1);
  auto M = metric_at(mc, Point(0, 0.5));
  TangentVector v;
  v.comp[0] = 1;
  v.comp[1] = 0;
  CHECK(classify_vector(M, v).causal == CausalClass::Timelike);
  v.comp[1] = 1;
  CHECK(classify_vector(M, v).causal == CausalClass::Lightlike);
  v.comp[0] = 0;
  auto c = classify_vector(M, v);
  CHECK(c.causal == CausalClass::Spacelike);
  CHECK(c.orientation == TimeOrientation::Neither);
}

TEST_CASE("classify_vector: paper vs coordinate future conventions") {
  auto mc = make_minkowski(1);
  auto M = metric_at(mc, Point(0, 0.5));
  TangentVector v;
  v.comp[0] = 1;  // d_t
  // literal paper convention: g(d_t, d_t) = -1 < 0 -> past
  CHECK(classify_vector(M, v, 1e-10, FutureConvention::Paper).orientation ==
        TimeOrientation::Past);
  CHECK(classify_vector(M, v, 1e-10, FutureConvention::Coordinate).orientation ==
        TimeOrientation::Future);
}

TEST_CASE("null_covector_frame: Minkowski frames and spanning") {
  auto mc1 = make_minkowski(1);
  auto M1 = metric_at(mc1, Point(0, 0.5));
  auto f1 = null_covector_frame(M1);
  REQUIRE(f1.size() == 2);
  CHECK_THAT(f1[0].comp[0], Catch::Matchers::WithinAbs(1.0, 1e-14));
  CHECK_THAT(f1[0].comp[1], Catch::Matchers::WithinAbs(1.0, 1e-14));
  CHECK_THAT(f1[1].comp[1], Catch::Matchers::WithinAbs(-1.0, 1e-14));

  auto mc2 = make_minkowski(2);
  auto M2 = metric_at(mc2, Point(0, 0.5, 0.5));
  auto f2 = null_covector_frame(M2);
  REQUIRE(f2.size() == 3);
  Eigen::Matrix3d S;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) S(r, c) = f2[r].comp[c];
  CHECK(S.fullPivLu().rank() == 3);
}

TEST_CASE("null_covector_frame: perturbed metric null defect and span") {
  auto mc = make_perturbed(2, 0.2, 0.9, 1.1);
  Rng rng(3);
  for (int s = 0; s < 10; ++s) {
    Point p(rng.uniform(-1, 1), rng.uniform(0, 1), rng.uniform(0, 1));
    auto M = metric_at(mc, p);
    auto f = null_covector_frame(M, true);
    Eigen::MatrixXd S(f.size(), 3);
    for (size_t r = 0; r < f.size(); ++r) {
      double nn = M.inner_cov(f[r].comp, f[r].comp);
      double aux = 0;
      for (int i = 0; i < 3; ++i) aux += f[r].comp[i] * f[r].comp[i];
      CHECK(std::abs(nn) <= 1e-12 * aux);
      for (int c = 0; c < 3; ++c) S(r, c) = f[r].comp[c];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(S);
    CHECK(svd.singularValues()(2) > 1e-3);
  }
}

TEST_CASE("musical isomorphism roundtrip on random covectors") {
  auto mc = make_perturbed(2, 0.2, 0.8, 1.2);
  Rng rng(5);
  for (int s = 0; s < 10000; ++s) {
    Point p(rng.uniform(-1, 1), rng.uniform(0, 1), rng.uniform(0, 1));
    auto M = metric_at(mc, p);
    double xi[3] = {rng.normal(), rng.normal(), rng.normal()};
    double up[3], down[3];
    M.raise(xi, up);
    M.lower(up, down);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(down[i] - xi[i]) < 1e-12 * 10);
  }
}

TEST_CASE("h1_scan: flat passes, cosh passes, cos fixture fails") {
  auto c2 = chart2d();
  auto flat = h1_scan(make_minkowski(2), c2, 2000, 42);
  CHECK(flat.pass);
  CHECK(flat.max_value <= 1e-12);

  auto neg = h1_scan(make_ultrastatic_surface(0.4, true), c2, 2000, 43);
  CHECK(neg.pass);

  auto pos = h1_scan(make_ultrastatic_surface(0.4, false), c2, 2000, 44);
  CHECK_FALSE(pos.pass);
  CHECK(pos.max_value > 1e-4);
}

TEST_CASE("h1_scan: 1+1 chart is degenerate (no admissible pairs)") {
  auto c1 = chart1d();
  auto rep = h1_scan(make_minkowski(1), c1, 100, 1);
  CHECK(rep.degenerate);
}

TEST_CASE("fd fallback metric closure approximates analytic jets") {
  auto exact = make_perturbed(1, 0.2, 1.0, 1.5);
  auto fd = make_fd_metric(
      1, false, "fd",
      [](const Point& p) { return 1.0; },
      [](const Point& p, double g0[2][2]) {
        g0[0][0] = 1.0 + 0.2 * std::sin(p[0]) * std::cos(1.5 * p[1]);
      });
  Point p(0.2, 0.4);
  auto Je = exact.eval(p), Jf = fd.eval(p);
  CHECK_THAT(Jf.g0[0][0].d[0], Catch::Matchers::WithinAbs(Je.g0[0][0].d[0], 1e-8));
  CHECK_THAT(Jf.g0[0][0].dd[0][1], Catch::Matchers::WithinAbs(Je.g0[0][0].dd[0][1], 1e-5));
}
