#include "pcls/mesh_fem.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pcls {

namespace {

std::shared_ptr<const detail::Topology> build_topology(int dim) {
  auto topo = std::make_shared<detail::Topology>();
  const int side = dim + 1;
  const int n_nodes = side * side;
  const int n_cells = dim * dim;
  auto corners = [dim, side](int c) {
    const int i = c % dim;
    const int j = c / dim;
    return std::array<int, 4>{j * side + i, j * side + i + 1, (j + 1) * side + i + 1,
                              (j + 1) * side + i};
  };

  // Node gather lists. Cells are visited in increasing order, so every list
  // is already sorted by cell.
  std::vector<std::vector<int>> per_node(n_nodes);
  for (int c = 0; c < n_cells; ++c) {
    const auto nodes = corners(c);
    for (int a = 0; a < 4; ++a) per_node[nodes[a]].push_back(c * 4 + a);
  }
  topo->node_ptr.assign(n_nodes + 1, 0);
  for (int n = 0; n < n_nodes; ++n)
    topo->node_ptr[n + 1] = topo->node_ptr[n] + static_cast<int>(per_node[n].size());
  topo->node_contrib.reserve(topo->node_ptr.back());
  for (const auto& list : per_node)
    topo->node_contrib.insert(topo->node_contrib.end(), list.begin(), list.end());

  // 9-point stencil, column-major with sorted row indices.
  Eigen::SparseMatrix<double> pattern(n_nodes, n_nodes);
  pattern.reserve(Eigen::VectorXi::Constant(n_nodes, 9));
  for (int col = 0; col < n_nodes; ++col) {
    const int ci = col % side;
    const int cj = col / side;
    for (int dj = -1; dj <= 1; ++dj) {
      for (int di = -1; di <= 1; ++di) {
        const int i = ci + di;
        const int j = cj + dj;
        if (i < 0 || j < 0 || i >= side || j >= side) continue;
        pattern.insert(j * side + i, col) = 0.0;
      }
    }
  }
  pattern.makeCompressed();

  auto entry_index = [&pattern](int row, int col) {
    const int* outer = pattern.outerIndexPtr();
    const int* inner = pattern.innerIndexPtr();
    const int* begin = inner + outer[col];
    const int* end = inner + outer[col + 1];
    const int* it = std::lower_bound(begin, end, row);
    return static_cast<int>(it - inner);
  };

  const int n_entries = static_cast<int>(pattern.nonZeros());
  topo->element_to_entry.resize(static_cast<std::size_t>(n_cells) * 16);
  std::vector<std::vector<int>> per_entry(n_entries);
  for (int c = 0; c < n_cells; ++c) {
    const auto nodes = corners(c);
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        const int e = entry_index(nodes[a], nodes[b]);
        topo->element_to_entry[c * 16 + a * 4 + b] = e;
        per_entry[e].push_back(c * 16 + a * 4 + b);
      }
    }
  }
  topo->entry_ptr.assign(n_entries + 1, 0);
  for (int e = 0; e < n_entries; ++e)
    topo->entry_ptr[e + 1] = topo->entry_ptr[e] + static_cast<int>(per_entry[e].size());
  topo->entry_contrib.reserve(topo->entry_ptr.back());
  for (const auto& list : per_entry)
    topo->entry_contrib.insert(topo->entry_contrib.end(), list.begin(), list.end());

  topo->pattern = std::move(pattern);
  return topo;
}

ReferenceElement make_reference_element() {
  ReferenceElement ref{};
  const double g0 = 0.5 - 0.5 / std::sqrt(3.0);
  const double g1 = 0.5 + 0.5 / std::sqrt(3.0);
  const double gauss[2] = {g0, g1};
  for (int q = 0; q < kQuadPerCell; ++q) {
    const double s = gauss[q % 2];
    const double t = gauss[q / 2];
    ref.points[q] = {s, t};
    ref.weights[q] = 0.25;
    ref.shape[q] = {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t};
    ref.d_ds[q] = {-(1 - t), 1 - t, t, -t};
    ref.d_dt[q] = {-(1 - s), -s, s, 1 - s};
  }
  return ref;
}

}  // namespace

Grid::Grid(int dim, std::shared_ptr<const detail::Topology> topology)
    : dim_(dim), h_(1.0 / dim), topology_(std::move(topology)) {}

Grid build_grid(int dim) {
  if (dim < 2) throw std::invalid_argument("build_grid: dim must be >= 2, got " + std::to_string(dim));
  return Grid(dim, build_topology(dim));
}

Vec2 Grid::quad_point(int c, int q) const noexcept {
  const auto& p = reference_element().points[q];
  const int i = c % dim_;
  const int j = c / dim_;
  return {x_min() + (i + p[0]) * h_, y_min() + (j + p[1]) * h_};
}

std::vector<int> Grid::boundary_nodes() const {
  std::vector<int> out;
  for (int n = 0; n < n_nodes(); ++n)
    if (on_boundary(n)) out.push_back(n);
  return out;
}

const ReferenceElement& reference_element() {
  static const ReferenceElement ref = make_reference_element();
  return ref;
}

QuadVectorField QuadVectorField::zeros(const Grid& g) {
  QuadVectorField f{g, kQuadPerCell, std::vector<Vec2>(static_cast<std::size_t>(g.n_cells()) * kQuadPerCell), {}};
  for (int q = 0; q < kQuadPerCell; ++q) f.quad_weights[q] = quad_weight(g, q);
  return f;
}

QuadVectorField gradient_at_quad(const NodalField& u, Exec exec) {
  const Grid& grid = u.grid;
  QuadVectorField out = QuadVectorField::zeros(grid);
  const int n_cells = grid.n_cells();
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int c = 0; c < n_cells; ++c) {
    const auto local = cell_values(grid, u.values, c);
    for (int q = 0; q < kQuadPerCell; ++q) out.at(c, q) = gradient_at(grid, local, q);
  }
  return out;
}

std::vector<Vec2> sample_gradient(const NodalField& u, const std::vector<Vec2>& points) {
  const Grid& grid = u.grid;
  const int dim = grid.dim();
  const double h = grid.h();
  std::vector<Vec2> out(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double gx = (points[k].x - grid.x_min()) / h;
    const double gy = (points[k].y - grid.y_min()) / h;
    const int i = std::clamp(static_cast<int>(std::floor(gx)), 0, dim - 1);
    const int j = std::clamp(static_cast<int>(std::floor(gy)), 0, dim - 1);
    const double s = gx - i;
    const double t = gy - j;
    const auto local = cell_values(grid, u.values, grid.cell(i, j));
    const double ds[4] = {-(1 - t), 1 - t, t, -t};
    const double dt[4] = {-(1 - s), -s, s, 1 - s};
    Vec2 g;
    for (int a = 0; a < 4; ++a) {
      g.x += ds[a] * local[a] / h;
      g.y += dt[a] * local[a] / h;
    }
    out[k] = g;
  }
  return out;
}

SymSparseOperator assemble_mass(const Grid& grid, Exec exec) {
  const auto& ref = reference_element();
  return assemble_operator(
      grid,
      [&](int, ElementMatrix& ke) {
        for (int q = 0; q < kQuadPerCell; ++q) {
          const double w = quad_weight(grid, q);
          for (int a = 0; a < kNodesPerCell; ++a)
            for (int b = a; b < kNodesPerCell; ++b) ke[a][b] += w * ref.shape[q][a] * ref.shape[q][b];
        }
      },
      exec);
}

SymSparseOperator assemble_stiffness(const Grid& grid, Exec exec) {
  return assemble_operator(
      grid,
      [&](int, ElementMatrix& ke) {
        for (int q = 0; q < kQuadPerCell; ++q) {
          const double w = quad_weight(grid, q);
          const auto grads = shape_gradients(grid, q);
          for (int a = 0; a < kNodesPerCell; ++a)
            for (int b = a; b < kNodesPerCell; ++b) ke[a][b] += w * dot(grads[a], grads[b]);
        }
      },
      exec);
}

std::pair<SymSparseOperator, Eigen::VectorXd> apply_dirichlet_zero(SymSparseOperator K,
                                                                   Eigen::VectorXd b,
                                                                   const Grid& grid) {
  if (K.n() != grid.n_nodes() || b.size() != grid.n_nodes())
    throw std::invalid_argument("apply_dirichlet_zero: operands do not match the grid");
  std::vector<char> fixed(grid.n_nodes(), 0);
  for (int n : grid.boundary_nodes()) fixed[n] = 1;

  auto& m = K.matrix();
  for (int col = 0; col < m.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, col); it; ++it) {
      const auto row = static_cast<int>(it.row());
      if ((fixed[row] || fixed[col]) && row != col) it.valueRef() = 0.0;
    }
  }
  for (int n = 0; n < grid.n_nodes(); ++n)
    if (fixed[n]) b[n] = 0.0;
  return {std::move(K), std::move(b)};
}

struct SpdFactorization::Impl {
  Eigen::SparseMatrix<double> matrix;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
};

SpdFactorization::SpdFactorization(const SymSparseOperator& K) : impl_(std::make_unique<Impl>()) {
  impl_->matrix = K.matrix();
  impl_->ldlt.compute(impl_->matrix);
  if (impl_->ldlt.info() != Eigen::Success)
    throw SolverFailure("solve_spd: factorization failed", std::nan(""));
  const Eigen::VectorXd d = impl_->ldlt.vectorD();
  if (!(d.array() > 0.0).all())
    throw SolverFailure("solve_spd: operator is not positive definite", std::nan(""));
}

SpdFactorization::~SpdFactorization() = default;
SpdFactorization::SpdFactorization(SpdFactorization&&) noexcept = default;
SpdFactorization& SpdFactorization::operator=(SpdFactorization&&) noexcept = default;

Eigen::VectorXd SpdFactorization::solve(const Eigen::VectorXd& b, double rel_tol) const {
  if (!(rel_tol > 0.0)) throw std::invalid_argument("solve_spd: rel_tol must be positive");
  if (b.size() != impl_->matrix.rows())
    throw std::invalid_argument("solve_spd: right-hand side has the wrong size");
  if (!b.allFinite()) throw std::invalid_argument("solve_spd: right-hand side is not finite");

  const double b_norm = b.norm();
  if (b_norm == 0.0) return Eigen::VectorXd::Zero(b.size());

  constexpr int kMaxRefinements = 5;
  Eigen::VectorXd x = impl_->ldlt.solve(b);
  double residual = (b - impl_->matrix * x).norm();
  for (int k = 0; k < kMaxRefinements && !(residual <= rel_tol * b_norm); ++k) {
    x += impl_->ldlt.solve(b - impl_->matrix * x);
    residual = (b - impl_->matrix * x).norm();
  }
  if (!(residual <= rel_tol * b_norm)) {
    std::ostringstream msg;
    msg << "solve_spd: relative residual " << residual / b_norm << " above tolerance " << rel_tol;
    throw SolverFailure(msg.str(), residual / b_norm);
  }
  return x;
}

Eigen::VectorXd solve_spd(const SymSparseOperator& K, const Eigen::VectorXd& b, double rel_tol) {
  return SpdFactorization(K).solve(b, rel_tol);
}

}  // namespace pcls
