#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace conwave {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

inline constexpr cplx iu{0.0, 1.0};

// A point of the chart M = [t_min,t_max] x M0.  Index 0 is time, 1..n space.
struct Point {
  double c[3] = {0, 0, 0};

  Point() = default;
  Point(double t, double x) { c[0] = t, c[1] = x; }
  Point(double t, double x, double y) { c[0] = t, c[1] = x, c[2] = y; }

  double& operator[](int i) { return c[i]; }
  double operator[](int i) const { return c[i]; }
  double t() const { return c[0]; }
};

// Value + first and second coordinate partials of a scalar quantity.
struct Jet2 {
  double v = 0;
  double d[3] = {0, 0, 0};
  double dd[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};

  static Jet2 constant(double value) {
    Jet2 j;
    j.v = value;
    return j;
  }
};

// Uniform grid over [t_min,t_max] x [x_min,x_max] (x [y_min,y_max] when n=2).
// nt, nx[k] are cell counts; nodes include both endpoints of every axis.
struct CoordinateChart {
  int n = 1;
  double t_min = -1, t_max = 1;
  double x_min[2] = {0, 0}, x_max[2] = {1, 1};
  int nt = 64;
  int nx[2] = {64, 1};

  double ht() const { return (t_max - t_min) / nt; }
  double hx(int k) const { return (x_max[k] - x_min[k]) / nx[k]; }
  double cfl_ratio() const { return ht() / hx(0); }
  int dim() const { return n + 1; }

  int nodes_axis(int k) const { return nx[k] + 1; }
  int space_nodes() const { return (nx[0] + 1) * (n == 2 ? nx[1] + 1 : 1); }
  int time_nodes() const { return nt + 1; }

  int space_index(int i, int j = 0) const { return i + (nx[0] + 1) * j; }
  void space_coords(int idx, int& i, int& j) const {
    i = idx % (nx[0] + 1);
    j = idx / (nx[0] + 1);
  }
  Point space_point(int idx, double t = 0) const {
    int i, j;
    space_coords(idx, i, j);
    Point p;
    p[0] = t;
    p[1] = x_min[0] + i * hx(0);
    if (n == 2) p[2] = x_min[1] + j * hx(1);
    return p;
  }
  double time_of(int m) const { return t_min + m * ht(); }

  bool is_boundary(int idx) const {
    int i, j;
    space_coords(idx, i, j);
    if (i == 0 || i == nx[0]) return true;
    if (n == 2 && (j == 0 || j == nx[1])) return true;
    return false;
  }
  std::vector<int> boundary_nodes() const {
    std::vector<int> b;
    for (int idx = 0; idx < space_nodes(); ++idx)
      if (is_boundary(idx)) b.push_back(idx);
    return b;
  }
  std::vector<int> interior_nodes() const {
    std::vector<int> b;
    for (int idx = 0; idx < space_nodes(); ++idx)
      if (!is_boundary(idx)) b.push_back(idx);
    return b;
  }
  bool contains(const Point& p, double tol = 1e-12) const {
    if (p[0] < t_min - tol || p[0] > t_max + tol) return false;
    for (int k = 0; k < n; ++k)
      if (p[k + 1] < x_min[k] - tol || p[k + 1] > x_max[k] + tol) return false;
    return true;
  }
  // trapezoid weight of a spatial node (coordinate measure, no metric factor)
  double space_weight(int idx) const {
    int i, j;
    space_coords(idx, i, j);
    double w = hx(0) * ((i == 0 || i == nx[0]) ? 0.5 : 1.0);
    if (n == 2) w *= hx(1) * ((j == 0 || j == nx[1]) ? 0.5 : 1.0);
    return w;
  }

  CoordinateChart refined(int factor) const {
    CoordinateChart c = *this;
    c.nt *= factor;
    c.nx[0] *= factor;
    if (n == 2) c.nx[1] *= factor;
    return c;
  }
};

struct Rng {
  std::mt19937_64 eng;
  explicit Rng(uint64_t seed) : eng(seed) {}
  double uniform(double a = 0, double b = 1) {
    return std::uniform_real_distribution<double>(a, b)(eng);
  }
  double normal() { return std::normal_distribution<double>(0, 1)(eng); }
  cplx cnormal() { return {normal(), normal()}; }

  Mat random_matrix(int N) {
    Mat m(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) m(i, j) = cnormal();
    return m;
  }
  // random element of u(N) (skew-Hermitian), entries O(scale)
  Mat random_skew(int N, double scale = 1.0) {
    Mat m = random_matrix(N);
    return scale * 0.5 * (m - m.adjoint()).eval();
  }
  Mat random_hermitian(int N, double scale = 1.0) {
    Mat m = random_matrix(N);
    return scale * 0.5 * (m + m.adjoint()).eval();
  }
  Vec random_vector(int N) {
    Vec v(N);
    for (int i = 0; i < N; ++i) v(i) = cnormal();
    return v;
  }
};

inline void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  int workers = std::min(threads, count);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  for (auto& th : pool) th.join();
}

// FNV-1a 64-bit, used for artifact manifests
inline uint64_t fnv1a64(const void* data, size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 1469598103934665603ull;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace conwave
