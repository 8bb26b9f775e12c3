#pragma once

// Dense brute-force references. Everything here is recomputed from the
// bilinear basis in physical coordinates, without the library's reference
// element, topology or sparse assembly.
//
// Quadrature ordering (shared convention with the measurement layout):
// cell c = j*dim + i, quad point q = 2*qy + qx with Gauss abscissae in
// increasing order.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

struct QuadSample {
  int cell;
  int q;
  double x, y;
  double weight;
  std::array<int, 4> nodes;       // ll, lr, ur, ul
  std::array<double, 4> shape;
  std::array<double, 4> dx, dy;   // physical derivatives of the shape functions
};

inline std::vector<QuadSample> quad_samples(int dim) {
  const double h = 1.0 / dim;
  const double g[2] = {0.5 - std::sqrt(3.0) / 6.0, 0.5 + std::sqrt(3.0) / 6.0};
  std::vector<QuadSample> out;
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < dim; ++i) {
      const double x0 = -0.5 + i * h;
      const double y0 = -0.5 + j * h;
      for (int qy = 0; qy < 2; ++qy) {
        for (int qx = 0; qx < 2; ++qx) {
          QuadSample s;
          s.cell = j * dim + i;
          s.q = 2 * qy + qx;
          s.x = x0 + g[qx] * h;
          s.y = y0 + g[qy] * h;
          s.weight = h * h / 4.0;
          const int n = dim + 1;
          s.nodes = {j * n + i, j * n + i + 1, (j + 1) * n + i + 1, (j + 1) * n + i};
          // Shape functions written as products of 1-D hats on the cell.
          const double lx[2] = {(x0 + h - s.x) / h, (s.x - x0) / h};
          const double ly[2] = {(y0 + h - s.y) / h, (s.y - y0) / h};
          const double dlx[2] = {-1.0 / h, 1.0 / h};
          const double dly[2] = {-1.0 / h, 1.0 / h};
          const int ix[4] = {0, 1, 1, 0};
          const int iy[4] = {0, 0, 1, 1};
          for (int a = 0; a < 4; ++a) {
            s.shape[a] = lx[ix[a]] * ly[iy[a]];
            s.dx[a] = dlx[ix[a]] * ly[iy[a]];
            s.dy[a] = lx[ix[a]] * dly[iy[a]];
          }
          out.push_back(s);
        }
      }
    }
  }
  return out;
}

inline bool on_boundary(int dim, int node) {
  const int i = node % (dim + 1);
  const int j = node / (dim + 1);
  return i == 0 || j == 0 || i == dim || j == dim;
}

inline double value_at(const QuadSample& s, const Eigen::VectorXd& u) {
  double v = 0.0;
  for (int a = 0; a < 4; ++a) v += s.shape[a] * u[s.nodes[a]];
  return v;
}

inline std::array<double, 2> grad_at(const QuadSample& s, const Eigen::VectorXd& u) {
  double gx = 0.0, gy = 0.0;
  for (int a = 0; a < 4; ++a) {
    gx += s.dx[a] * u[s.nodes[a]];
    gy += s.dy[a] * u[s.nodes[a]];
  }
  return {gx, gy};
}

inline Eigen::MatrixXd mass(int dim) {
  const int n = (dim + 1) * (dim + 1);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (const auto& s : quad_samples(dim))
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) M(s.nodes[a], s.nodes[b]) += s.weight * s.shape[a] * s.shape[b];
  return M;
}

/// Stiffness with coefficient coeff(sample) on the form int c grad u . grad w.
inline Eigen::MatrixXd stiffness(int dim, const std::function<double(const QuadSample&)>& coeff = {}) {
  const int n = (dim + 1) * (dim + 1);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (const auto& s : quad_samples(dim)) {
    const double c = coeff ? coeff(s) : 1.0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        K(s.nodes[a], s.nodes[b]) += s.weight * c * (s.dx[a] * s.dx[b] + s.dy[a] * s.dy[b]);
  }
  return K;
}

// Saturating curve written out directly.
struct Curve {
  double a1 = 0.5, b1 = 4.0, c1 = 3.0, d1 = 0.2, v_air = 1.0;
  double v2(double s) const { return d1 + c1 * std::pow(s, b1) / (std::pow(a1, b1) + std::pow(s, b1)); }
  double v2p(double s) const {
    const double den = std::pow(a1, b1) + std::pow(s, b1);
    return c1 * b1 * std::pow(a1, b1) * std::pow(s, b1 - 1.0) / (den * den);
  }
  double v(double phi, double s) const { return v_air * (2.0 - phi) + v2(s) * (phi - 1.0); }
  double vp(double phi, double s) const { return (phi - 1.0) * v2p(s); }
};

inline Eigen::VectorXd residual(int dim, const Eigen::VectorXd& A, const Eigen::VectorXd& phi, const Curve& c,
                                const std::function<double(double, double)>& J) {
  Eigen::VectorXd R = Eigen::VectorXd::Zero(A.size());
  for (const auto& s : quad_samples(dim)) {
    const auto g = grad_at(s, A);
    const double sq = g[0] * g[0] + g[1] * g[1];
    const double v = c.v(value_at(s, phi), sq);
    const double j = J(s.x, s.y);
    for (int a = 0; a < 4; ++a)
      R[s.nodes[a]] += s.weight * (v * (g[0] * s.dx[a] + g[1] * s.dy[a]) - j * s.shape[a]);
  }
  for (int k = 0; k < R.size(); ++k)
    if (on_boundary(dim, k)) R[k] = 0.0;
  return R;
}

inline Eigen::MatrixXd tangent(int dim, const Eigen::VectorXd& A, const Eigen::VectorXd& phi, const Curve& c) {
  const int n = static_cast<int>(A.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
  for (const auto& s : quad_samples(dim)) {
    const auto g = grad_at(s, A);
    const double sq = g[0] * g[0] + g[1] * g[1];
    const double p = value_at(s, phi);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        const double ga = g[0] * s.dx[a] + g[1] * s.dy[a];
        const double gb = g[0] * s.dx[b] + g[1] * s.dy[b];
        T(s.nodes[a], s.nodes[b]) +=
            s.weight * (2.0 * c.vp(p, sq) * ga * gb + c.v(p, sq) * (s.dx[a] * s.dx[b] + s.dy[a] * s.dy[b]));
      }
  }
  return T;
}

inline double misfit(int dim, const Eigen::VectorXd& A, const std::vector<std::array<double, 2>>& mbar) {
  double total = 0.0;
  for (const auto& s : quad_samples(dim)) {
    const auto g = grad_at(s, A);
    const auto& m = mbar[static_cast<std::size_t>(s.cell) * 4 + s.q];
    total += 0.5 * s.weight * ((g[0] - m[0]) * (g[0] - m[0]) + (g[1] - m[1]) * (g[1] - m[1]));
  }
  return total;
}

/// Solves K x = b on the interior nodes only; boundary entries of x are 0.
inline Eigen::VectorXd solve_interior(int dim, const Eigen::MatrixXd& K, const Eigen::VectorXd& b) {
  std::vector<int> interior;
  for (int k = 0; k < b.size(); ++k)
    if (!on_boundary(dim, k)) interior.push_back(k);
  const int m = static_cast<int>(interior.size());
  Eigen::MatrixXd Kr(m, m);
  Eigen::VectorXd br(m);
  for (int r = 0; r < m; ++r) {
    br[r] = b[interior[r]];
    for (int c = 0; c < m; ++c) Kr(r, c) = K(interior[r], interior[c]);
  }
  const Eigen::VectorXd xr = Kr.fullPivLu().solve(br);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  for (int r = 0; r < m; ++r) x[interior[r]] = xr[r];
  return x;
}

/// Sensitivity dA of the forward state along a level set perturbation h:
/// T dA = -int (v2 - v_air) h grad A . grad psi on the interior.
inline Eigen::VectorXd sensitivity(int dim, const Eigen::VectorXd& A, const Eigen::VectorXd& phi,
                                   const Eigen::VectorXd& h, const Curve& c) {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(A.size());
  for (const auto& s : quad_samples(dim)) {
    const auto g = grad_at(s, A);
    const double sq = g[0] * g[0] + g[1] * g[1];
    const double dv = c.v2(sq) - c.v_air;
    const double hq = value_at(s, h);
    for (int a = 0; a < 4; ++a) rhs[s.nodes[a]] -= s.weight * dv * hq * (g[0] * s.dx[a] + g[1] * s.dy[a]);
  }
  return solve_interior(dim, tangent(dim, A, phi, c), rhs);
}

}  // namespace oracle
