#pragma once

// Structured bilinear finite elements on the unit square [-0.5,0.5]^2.
//
// Node (i,j) has index j*(dim+1)+i, cell (i,j) has index j*dim+i. Cell
// corners are ordered counter-clockwise starting at the lower-left node.
// All integrals use 2x2 Gauss quadrature; quad point q of a cell sits at
// (qx,qy) with q = 2*qy + qx.
//
// Assembly is split into an element phase (one independent task per cell)
// and a reduction phase. The serial reduction scatters cell contributions in
// cell order; the parallel reduction gathers them per node/entry in the same
// cell order, so both produce bit-identical results for any thread schedule.

#include <Eigen/Core>
#include <Eigen/Sparse>

#include <array>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcls {

/// Raised when a linear solve misses its residual target or the operator is
/// not positive definite.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, double achieved_residual)
      : std::runtime_error(what), achieved_residual_(achieved_residual) {}
  double achieved_residual() const noexcept { return achieved_residual_; }

 private:
  double achieved_residual_;
};

enum class Exec { serial, parallel };

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }

inline constexpr int kQuadPerCell = 4;
inline constexpr int kNodesPerCell = 4;

using ElementVector = std::array<double, kNodesPerCell>;
using ElementMatrix = std::array<std::array<double, kNodesPerCell>, kNodesPerCell>;

namespace detail {

// Reduction maps shared by every field and operator on one grid.
struct Topology {
  // node -> contributing (cell*4 + local) slots, sorted by cell
  std::vector<int> node_ptr;
  std::vector<int> node_contrib;
  // operator entry -> contributing (cell*16 + a*4 + b) slots, sorted by cell
  std::vector<int> entry_ptr;
  std::vector<int> entry_contrib;
  // (cell*16 + a*4 + b) -> entry index in the compressed value array
  std::vector<int> element_to_entry;
  Eigen::SparseMatrix<double> pattern;  // 9-point stencil, zero-valued
};

}  // namespace detail

class Grid {
 public:
  int dim() const noexcept { return dim_; }
  double h() const noexcept { return h_; }
  double x_min() const noexcept { return -0.5; }
  double x_max() const noexcept { return 0.5; }
  double y_min() const noexcept { return -0.5; }
  double y_max() const noexcept { return 0.5; }
  int n_nodes() const noexcept { return (dim_ + 1) * (dim_ + 1); }
  int n_cells() const noexcept { return dim_ * dim_; }

  int node(int i, int j) const noexcept { return j * (dim_ + 1) + i; }
  int cell(int i, int j) const noexcept { return j * dim_ + i; }

  std::array<int, kNodesPerCell> cell_nodes(int c) const noexcept {
    const int i = c % dim_;
    const int j = c / dim_;
    return {node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)};
  }

  Vec2 node_coord(int n) const noexcept {
    const int i = n % (dim_ + 1);
    const int j = n / (dim_ + 1);
    return {x_min() + i * h_, y_min() + j * h_};
  }

  Vec2 quad_point(int c, int q) const noexcept;

  bool on_boundary(int n) const noexcept {
    const int i = n % (dim_ + 1);
    const int j = n / (dim_ + 1);
    return i == 0 || j == 0 || i == dim_ || j == dim_;
  }

  std::vector<int> boundary_nodes() const;

  const detail::Topology& topology() const noexcept { return *topology_; }

  friend bool operator==(const Grid& a, const Grid& b) noexcept { return a.dim_ == b.dim_; }

 private:
  friend Grid build_grid(int dim);
  Grid(int dim, std::shared_ptr<const detail::Topology> topology);

  int dim_;
  double h_;
  std::shared_ptr<const detail::Topology> topology_;
};

/// Uniform dim x dim grid over [-0.5,0.5]^2. Throws std::invalid_argument for dim < 2.
Grid build_grid(int dim);

/// Bilinear shape functions and their local derivatives at the 2x2 Gauss
/// points of the unit reference square.
struct ReferenceElement {
  std::array<std::array<double, kNodesPerCell>, kQuadPerCell> shape;
  std::array<std::array<double, kNodesPerCell>, kQuadPerCell> d_ds;
  std::array<std::array<double, kNodesPerCell>, kQuadPerCell> d_dt;
  std::array<std::array<double, 2>, kQuadPerCell> points;
  std::array<double, kQuadPerCell> weights;  // sum to 1 on the unit square
};

const ReferenceElement& reference_element();

struct NodalField {
  Grid grid;
  Eigen::VectorXd values;

  static NodalField zeros(const Grid& g) { return {g, Eigen::VectorXd::Zero(g.n_nodes())}; }
  static NodalField constant(const Grid& g, double c) {
    return {g, Eigen::VectorXd::Constant(g.n_nodes(), c)};
  }
  template <class F>
  static NodalField from_function(const Grid& g, F&& f) {
    NodalField out = zeros(g);
    for (int n = 0; n < g.n_nodes(); ++n) {
      const Vec2 p = g.node_coord(n);
      out.values[n] = f(p.x, p.y);
    }
    return out;
  }

  bool all_finite() const { return values.allFinite(); }
};

struct QuadVectorField {
  Grid grid;
  int q_per_cell = kQuadPerCell;
  std::vector<Vec2> vectors;                      // index cell*q_per_cell + q
  std::array<double, kQuadPerCell> quad_weights;  // physical weights, sum to h^2

  static QuadVectorField zeros(const Grid& g);

  Vec2& at(int c, int q) { return vectors[static_cast<std::size_t>(c) * q_per_cell + q]; }
  const Vec2& at(int c, int q) const {
    return vectors[static_cast<std::size_t>(c) * q_per_cell + q];
  }
};

/// Symmetric operator on nodal vectors with the 9-point stencil pattern.
class SymSparseOperator {
 public:
  explicit SymSparseOperator(Eigen::SparseMatrix<double> m) : m_(std::move(m)) {}

  int n() const noexcept { return static_cast<int>(m_.rows()); }
  double entry(int i, int j) const { return m_.coeff(i, j); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return m_ * x; }
  Eigen::MatrixXd to_dense() const { return Eigen::MatrixXd(m_); }

  const Eigen::SparseMatrix<double>& matrix() const noexcept { return m_; }
  Eigen::SparseMatrix<double>& matrix() noexcept { return m_; }

 private:
  Eigen::SparseMatrix<double> m_;
};

// ---------------------------------------------------------------------------
// Kernels

/// Assembles sum over cells of element vectors. `element(c, out)` fills the
/// local contribution of cell c and must be safe to call concurrently.
template <class ElementFn>
Eigen::VectorXd assemble_vector(const Grid& grid, ElementFn&& element, Exec exec = Exec::parallel) {
  const int n_cells = grid.n_cells();
  std::vector<ElementVector> local(static_cast<std::size_t>(n_cells));
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int c = 0; c < n_cells; ++c) {
    local[c].fill(0.0);
    element(c, local[c]);
  }

  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.n_nodes());
  if (exec == Exec::serial) {
    for (int c = 0; c < n_cells; ++c) {
      const auto nodes = grid.cell_nodes(c);
      for (int a = 0; a < kNodesPerCell; ++a) out[nodes[a]] += local[c][a];
    }
    return out;
  }

  const auto& topo = grid.topology();
  const double* flat = local.front().data();
  const int n_nodes = grid.n_nodes();
#pragma omp parallel for schedule(static)
  for (int n = 0; n < n_nodes; ++n) {
    double sum = 0.0;
    for (int k = topo.node_ptr[n]; k < topo.node_ptr[n + 1]; ++k) sum += flat[topo.node_contrib[k]];
    out[n] = sum;
  }
  return out;
}

/// Assembles a symmetric operator from element matrices. Only the upper
/// triangle (a <= b) of each element matrix is read; it is mirrored so the
/// assembled operator is symmetric bit-for-bit.
template <class ElementFn>
SymSparseOperator assemble_operator(const Grid& grid, ElementFn&& element,
                                    Exec exec = Exec::parallel) {
  const int n_cells = grid.n_cells();
  std::vector<ElementMatrix> local(static_cast<std::size_t>(n_cells));
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int c = 0; c < n_cells; ++c) {
    for (auto& row : local[c]) row.fill(0.0);
    element(c, local[c]);
    for (int a = 0; a < kNodesPerCell; ++a)
      for (int b = 0; b < a; ++b) local[c][a][b] = local[c][b][a];
  }

  const auto& topo = grid.topology();
  Eigen::SparseMatrix<double> m = topo.pattern;
  double* values = m.valuePtr();
  const double* flat = local.front().front().data();

  if (exec == Exec::serial) {
    for (int c = 0; c < n_cells; ++c)
      for (int k = 0; k < kNodesPerCell * kNodesPerCell; ++k)
        values[topo.element_to_entry[c * 16 + k]] += flat[c * 16 + k];
    return SymSparseOperator(std::move(m));
  }

  const int n_entries = static_cast<int>(m.nonZeros());
#pragma omp parallel for schedule(static)
  for (int e = 0; e < n_entries; ++e) {
    double sum = 0.0;
    for (int k = topo.entry_ptr[e]; k < topo.entry_ptr[e + 1]; ++k) sum += flat[topo.entry_contrib[k]];
    values[e] = sum;
  }
  return SymSparseOperator(std::move(m));
}

/// Sum over cells of a scalar per-cell quantity, reduced in cell order.
template <class CellFn>
double integrate_cells(const Grid& grid, CellFn&& cell_value, Exec exec = Exec::parallel) {
  const int n_cells = grid.n_cells();
  std::vector<double> local(static_cast<std::size_t>(n_cells));
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int c = 0; c < n_cells; ++c) local[c] = cell_value(c);
  double total = 0.0;
  for (double v : local) total += v;
  return total;
}

/// Nodal values of `u` on the corners of cell c.
inline ElementVector cell_values(const Grid& grid, const Eigen::VectorXd& u, int c) {
  const auto nodes = grid.cell_nodes(c);
  return {u[nodes[0]], u[nodes[1]], u[nodes[2]], u[nodes[3]]};
}

/// Physical-space gradients of the four shape functions at quad point q.
inline std::array<Vec2, kNodesPerCell> shape_gradients(const Grid& grid, int q) {
  const auto& ref = reference_element();
  const double inv_h = 1.0 / grid.h();
  std::array<Vec2, kNodesPerCell> g;
  for (int a = 0; a < kNodesPerCell; ++a) g[a] = {ref.d_ds[q][a] * inv_h, ref.d_dt[q][a] * inv_h};
  return g;
}

inline double interpolate_at_quad(const ElementVector& local, int q) {
  const auto& shape = reference_element().shape[q];
  return shape[0] * local[0] + shape[1] * local[1] + shape[2] * local[2] + shape[3] * local[3];
}

inline Vec2 gradient_at(const Grid& grid, const ElementVector& local, int q) {
  const auto grads = shape_gradients(grid, q);
  Vec2 g;
  for (int a = 0; a < kNodesPerCell; ++a) {
    g.x += grads[a].x * local[a];
    g.y += grads[a].y * local[a];
  }
  return g;
}

inline double quad_weight(const Grid& grid, int q) {
  return reference_element().weights[q] * grid.h() * grid.h();
}

// ---------------------------------------------------------------------------
// Operations

QuadVectorField gradient_at_quad(const NodalField& u, Exec exec = Exec::parallel);

/// Bilinear-interpolant gradient of `u` at arbitrary points of the domain.
std::vector<Vec2> sample_gradient(const NodalField& u, const std::vector<Vec2>& points);

SymSparseOperator assemble_mass(const Grid& grid, Exec exec = Exec::parallel);
/// Unit-coefficient stiffness operator, i.e. the form int grad(u).grad(w).
SymSparseOperator assemble_stiffness(const Grid& grid, Exec exec = Exec::parallel);

/// Eliminates the boundary rows and columns symmetrically. Boundary
/// off-diagonals are zeroed, the diagonal is kept and the right-hand side is
/// set to zero, so a solve returns exact zeros on the boundary.
std::pair<SymSparseOperator, Eigen::VectorXd> apply_dirichlet_zero(SymSparseOperator K,
                                                                   Eigen::VectorXd b,
                                                                   const Grid& grid);

/// Sparse LDL^T factorization of an SPD operator, reusable across solves.
class SpdFactorization {
 public:
  explicit SpdFactorization(const SymSparseOperator& K);
  ~SpdFactorization();
  SpdFactorization(SpdFactorization&&) noexcept;
  SpdFactorization& operator=(SpdFactorization&&) noexcept;

  /// Solution with ||Kx - b|| <= rel_tol ||b||, refined iteratively if needed.
  Eigen::VectorXd solve(const Eigen::VectorXd& b, double rel_tol) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Eigen::VectorXd solve_spd(const SymSparseOperator& K, const Eigen::VectorXd& b, double rel_tol);

}  // namespace pcls
