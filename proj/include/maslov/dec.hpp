#pragma once

#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "core.hpp"
#include "lagmesh.hpp"

namespace maslov {

// Hodge split of a 1-form: input = exact + harmonic + coexact, with the
// 0-form potential of the exact part. residual reports how far the harmonic
// part is from ker d  intersect  ker delta, relative to the input norm.
struct HodgeSplit {
  DiscreteForm exact;
  DiscreteForm potential;  // degree 0, S0-weighted mean zero
  DiscreteForm harmonic;
  DiscreteForm coexact;
  double residual = 0.0;
};

// Discrete exterior calculus on one mesh: integer incidence matrices plus
// diagonal Hodge stars from the induced metric.
class DecOperators {
 public:
  explicit DecOperators(const LagrangianMesh& mesh) : mesh_(&mesh) {
    build_incidence();
    build_stars();
  }

  const LagrangianMesh& mesh() const { return *mesh_; }

  DiscreteForm d(const DiscreteForm& f) const {
    check_mesh(f);
    if (f.degree >= mesh_->top_degree()) throw DegreeError("d: top-degree input");
    DiscreteForm out = make_form(*mesh_, f.degree + 1);
    out.values = (f.degree == 0) ? Vec(d0_ * f.values) : Vec(d1_ * f.values);
    return out;
  }

  DiscreteForm codifferential(const DiscreteForm& f) const {
    check_mesh(f);
    if (f.degree < 1) throw DegreeError("codifferential: degree-0 input");
    DiscreteForm out = make_form(*mesh_, f.degree - 1);
    if (f.degree == 1)
      out.values = star0_.cwiseInverse().asDiagonal() * (d0_.transpose() * (star1_.asDiagonal() * f.values));
    else
      out.values = star1_.cwiseInverse().asDiagonal() * (d1_.transpose() * (star2_.asDiagonal() * f.values));
    return out;
  }

  double inner(const DiscreteForm& a, const DiscreteForm& b) const {
    check_mesh(a);
    check_mesh(b);
    if (a.degree != b.degree) throw DegreeError("inner: degree mismatch");
    return a.values.dot(star(a.degree).asDiagonal() * b.values);
  }
  double norm(const DiscreteForm& a) const { return std::sqrt(std::max(0.0, inner(a, a))); }

  HodgeSplit hodge_decompose(const DiscreteForm& alpha) const {
    check_mesh(alpha);
    if (alpha.degree != 1) throw DegreeError("hodge_decompose: degree-1 input required");
    HodgeSplit out;

    // Exact part: least-squares potential, d0^T S1 d0 phi = d0^T S1 alpha.
    Eigen::SparseMatrix<double> L0 = d0_.transpose() * star1_.asDiagonal() * d0_;
    Vec rhs0 = d0_.transpose() * (star1_.asDiagonal() * alpha.values);
    Vec phi = cg_solve(L0, rhs0);
    phi.array() -= phi.dot(star0_) / star0_.sum();  // gauge: weighted mean zero
    out.potential = make_form(*mesh_, 0);
    out.potential.values = phi;
    out.exact = make_form(*mesh_, 1);
    out.exact.values = d0_ * phi;

    // Coexact part (torus only): d1 S1^-1 d1^T beta~ = d1 alpha.
    out.coexact = make_form(*mesh_, 1);
    if (mesh_->top_degree() == 2) {
      Eigen::SparseMatrix<double> L2 =
          d1_ * star1_.cwiseInverse().asDiagonal() * d1_.transpose();
      Vec rhs2 = d1_ * alpha.values;
      Vec beta = cg_solve(L2, rhs2);
      out.coexact.values = star1_.cwiseInverse().asDiagonal() * (d1_.transpose() * beta);
    }

    out.harmonic = make_form(*mesh_, 1);
    out.harmonic.values = alpha.values - out.exact.values - out.coexact.values;

    const double scale = std::max(norm(alpha), 1e-30);
    double r = norm(codifferential(out.harmonic)) / scale;
    if (mesh_->top_degree() == 2) r = std::max(r, norm(d(out.harmonic)) / scale);
    out.residual = r;
    return out;
  }

  static double period(const DiscreteForm& f, const Cycle& cycle) {
    if (f.degree != 1) throw DegreeError("period: degree-1 form required");
    validate_cycle(*f.mesh, cycle);
    double p = 0.0;
    for (auto [e, s] : cycle) p += s * f.values[e];
    return p;
  }
  std::vector<double> periods(const DiscreteForm& f) const {
    std::vector<double> out;
    for (const auto& c : mesh_->h1_cycles()) out.push_back(period(f, c));
    return out;
  }

  // Numerical harmonic space: harmonic parts of the coordinate 1-forms,
  // rescaled so the period matrix over the H1 basis is 2*pi*Identity.
  struct HarmonicBasis {
    std::vector<DiscreteForm> forms;
    int dimension = 0;
    Mat raw_period_matrix;
  };
  HarmonicBasis harmonic_basis() const {
    HarmonicBasis out;
    auto cycles = mesh_->h1_cycles();
    const int b = static_cast<int>(cycles.size());
    std::vector<DiscreteForm> raw;
    for (int k = 0; k < b; ++k) {
      DiscreteForm chi = make_form(*mesh_, 1);
      if (mesh_->topology() == Topology::Loop) {
        chi.values.setConstant(1.0 / mesh_->n1());
      } else {
        const int V = mesh_->n1() * mesh_->n2();
        for (int e = 0; e < chi.values.size(); ++e) {
          const bool t_edge = e >= V;
          if (k == 0 && !t_edge) chi.values[e] = 1.0 / mesh_->n1();
          if (k == 1 && t_edge) chi.values[e] = 1.0 / mesh_->n2();
        }
      }
      raw.push_back(hodge_decompose(chi).harmonic);
    }
    Mat P(b, b);
    for (int c = 0; c < b; ++c)
      for (int k = 0; k < b; ++k) P(c, k) = period(raw[k], cycles[c]);
    out.raw_period_matrix = P;
    Eigen::JacobiSVD<Mat> svd(P);
    const double smax = svd.singularValues().maxCoeff();
    out.dimension = 0;
    for (int i = 0; i < b; ++i)
      if (svd.singularValues()[i] > 1e-8 * std::max(1.0, smax)) ++out.dimension;
    if (out.dimension == b) {
      Mat C = P.inverse() * (two_pi * Mat::Identity(b, b));  // periods -> 2 pi Id
      for (int k = 0; k < b; ++k) {
        DiscreteForm h = make_form(*mesh_, 1);
        for (int m = 0; m < b; ++m) h.values += C(m, k) * raw[m].values;
        out.forms.push_back(std::move(h));
      }
    }
    return out;
  }

  const Vec& star(int degree) const {
    switch (degree) {
      case 0: return star0_;
      case 1: return star1_;
      case 2:
        if (mesh_->top_degree() < 2) break;
        return star2_;
    }
    throw DegreeError("star: degree out of range");
  }

 private:
  void check_mesh(const DiscreteForm& f) const {
    if (f.mesh != mesh_) throw MeshError("form belongs to a different mesh");
    if (f.values.size() != mesh_->num_cells(f.degree))
      throw MeshError("form length does not match cell count");
  }

  static void validate_cycle(const LagrangianMesh& mesh, const Cycle& cycle) {
    if (cycle.empty()) throw CycleError("empty cycle");
    auto endpoint = [&](const std::pair<int, int>& es, bool head) {
      return (es.second > 0) == head ? mesh.edge_head(es.first) : mesh.edge_tail(es.first);
    };
    for (size_t k = 0; k < cycle.size(); ++k) {
      const auto& cur = cycle[k];
      const auto& nxt = cycle[(k + 1) % cycle.size()];
      if (endpoint(cur, true) != endpoint(nxt, false))
        throw CycleError("cycle is not closed at segment " + std::to_string(k));
    }
  }

  void build_incidence() {
    const int V = mesh_->num_vertices(), E = mesh_->num_edges(), F = mesh_->num_faces();
    std::vector<Eigen::Triplet<double>> t0;
    for (int e = 0; e < E; ++e) {
      t0.emplace_back(e, mesh_->edge_head(e), 1.0);
      t0.emplace_back(e, mesh_->edge_tail(e), -1.0);
    }
    d0_.resize(E, V);
    d0_.setFromTriplets(t0.begin(), t0.end());
    if (F > 0) {
      std::vector<Eigen::Triplet<double>> t1;
      for (int j = 0; j < mesh_->n2(); ++j)
        for (int i = 0; i < mesh_->n1(); ++i) {
          const int f = mesh_->face(i, j);
          t1.emplace_back(f, mesh_->s_edge(i, j), 1.0);
          t1.emplace_back(f, mesh_->t_edge(i + 1, j), 1.0);
          t1.emplace_back(f, mesh_->s_edge(i, j + 1), -1.0);
          t1.emplace_back(f, mesh_->t_edge(i, j), -1.0);
        }
      d1_.resize(F, E);
      d1_.setFromTriplets(t1.begin(), t1.end());
    } else {
      d1_.resize(0, E);
    }
  }

  void build_stars() {
    const int V = mesh_->num_vertices(), E = mesh_->num_edges();
    star0_.resize(V);
    star1_.resize(E);
    if (mesh_->topology() == Topology::Loop) {
      Vec len(E);
      for (int e = 0; e < E; ++e) len[e] = mesh_->edge_length(e);
      for (int v = 0; v < V; ++v)
        star0_[v] = 0.5 * (len[(v + E - 1) % E] + len[v]);
      star1_ = len.cwiseInverse();
      return;
    }
    auto [total, dmu] = mesh_->induced_volume();
    (void)total;
    const Vec& area = dmu.values;
    star2_ = area.cwiseInverse();
    const int N1 = mesh_->n1(), N2 = mesh_->n2();
    auto fidx = [&](int i, int j) { return mesh_->face(i, j); };
    for (int j = 0; j < N2; ++j)
      for (int i = 0; i < N1; ++i) {
        star0_[mesh_->vid(i, j)] =
            0.25 * (area[fidx(i, j)] + area[fidx(i - 1, j)] + area[fidx(i, j - 1)] +
                    area[fidx(i - 1, j - 1)]);
        // s-edge (i,j): dual ratio ~ avg adjacent face area / primal length^2
        double ls = mesh_->edge_vector(mesh_->s_edge(i, j)).norm();
        Mat g = mesh_->model().metric_at(mesh_->edge_midpoint(mesh_->s_edge(i, j)));
        Vec ev = mesh_->edge_vector(mesh_->s_edge(i, j));
        ls = std::sqrt(ev.dot(g * ev));
        star1_[mesh_->s_edge(i, j)] =
            0.5 * (area[fidx(i, j)] + area[fidx(i, j - 1)]) / (ls * ls);
        Vec et = mesh_->edge_vector(mesh_->t_edge(i, j));
        Mat gt = mesh_->model().metric_at(mesh_->edge_midpoint(mesh_->t_edge(i, j)));
        double lt = std::sqrt(et.dot(gt * et));
        star1_[mesh_->t_edge(i, j)] =
            0.5 * (area[fidx(i, j)] + area[fidx(i - 1, j)]) / (lt * lt);
      }
  }

  // CG on a symmetric positive semidefinite system whose right-hand side is
  // compatible; deterministic, fixed iteration order.
  Vec cg_solve(const Eigen::SparseMatrix<double>& A, const Vec& b) const {
    if (b.norm() < 1e-13) return Vec::Zero(A.cols());
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-13);
    cg.setMaxIterations(40 * A.rows() + 1000);
    cg.compute(A);
    Vec x = cg.solve(b);
    const double res = (A * x - b).norm();
    if (!(res <= 1e-9 * std::max(1.0, b.norm())))
      throw NumericalError("linear solve did not converge, residual " + std::to_string(res));
    return x;
  }

  const LagrangianMesh* mesh_;
  Eigen::SparseMatrix<double> d0_, d1_;
  Vec star0_, star1_, star2_;
};

}  // namespace maslov
