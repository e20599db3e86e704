#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ambient.hpp"
#include "core.hpp"

namespace maslov {

enum class Topology { Loop, TorusGrid };

class LagrangianMesh;

// Real cochain of degree 0/1/2 carried on vertices/edges/faces.
struct DiscreteForm {
  int degree = 0;
  Vec values;
  const LagrangianMesh* mesh = nullptr;
};

// Signed edge path; cycles are closed paths used for periods.
using Cycle = std::vector<std::pair<int, int>>;  // (edge index, +-1)

struct BuildOptions {
  double lagrangian_tolerance = -1.0;  // <0: pick default by ambient kind
  double degenerate_tolerance = 1e-12;
};

// Discretized oriented Lagrangian submanifold: a loop (n=1) or a periodic
// quad grid torus (n=2), with vertex positions stored as a continuous lift
// in chart coordinates. Crossing the periodic seam adds the stored lattice
// shift, so tangents and second differences never see the seam.
class LagrangianMesh {
 public:
  using LoopParam = std::function<Vec(double)>;
  using TorusParam = std::function<Vec(double, double)>;

  static LagrangianMesh build_loop(std::shared_ptr<const AmbientModel> model, const LoopParam& param,
                                   int N, BuildOptions opts = {}) {
    if (!model) throw MeshError("build_loop: null model");
    if (model->dim_complex() != 1)
      throw DimensionError("build_loop: ambient complex dimension must be 1");
    if (N < 16) throw MeshError("build_loop: need at least 16 vertices");
    LagrangianMesh m;
    m.model_ = std::move(model);
    m.topology_ = Topology::Loop;
    m.n1_ = N;
    m.vertices_.resize(N);
    for (int i = 0; i < N; ++i) {
      m.vertices_[i] = param(double(i) / N);
      if (!m.model_->in_domain(m.vertices_[i]))
        throw DomainError("build_loop: parametrization leaves the chart domain");
    }
    m.shift1_ = resolve_shift(*m.model_, param(1.0) - param(0.0));
    m.shift2_ = Vec::Zero(m.model_->real_dim());
    m.check_degenerate(opts.degenerate_tolerance);
    return m;
  }

  static LagrangianMesh build_torus_grid(std::shared_ptr<const AmbientModel> model,
                                         const TorusParam& param, int N1, int N2,
                                         BuildOptions opts = {}) {
    if (!model) throw MeshError("build_torus_grid: null model");
    if (model->dim_complex() != 2)
      throw DimensionError("build_torus_grid: ambient complex dimension must be 2");
    if (N1 < 16 || N2 < 16) throw MeshError("build_torus_grid: need at least 16x16 vertices");
    LagrangianMesh m;
    m.model_ = std::move(model);
    m.topology_ = Topology::TorusGrid;
    m.n1_ = N1;
    m.n2_ = N2;
    m.vertices_.resize(N1 * N2);
    for (int j = 0; j < N2; ++j)
      for (int i = 0; i < N1; ++i) {
        Vec p = param(double(i) / N1, double(j) / N2);
        if (!m.model_->in_domain(p))
          throw DomainError("build_torus_grid: parametrization leaves the chart domain");
        m.vertices_[m.vid(i, j)] = p;
      }
    m.shift1_ = resolve_shift(*m.model_, param(1.0, 0.0) - param(0.0, 0.0));
    m.shift2_ = resolve_shift(*m.model_, param(0.0, 1.0) - param(0.0, 0.0));
    m.check_degenerate(opts.degenerate_tolerance);

    double tol = opts.lagrangian_tolerance;
    if (tol < 0)
      tol = (m.model_->kind() == ModelKind::FlatComplex || m.model_->kind() == ModelKind::FlatTorus)
                ? 1e-8
                : 1e-6;
    auto [worst, where] = m.worst_lagrangian_cell();
    if (worst > tol)
      throw NotLagrangianError("build_torus_grid: symplectic residual " + std::to_string(worst) +
                               " at cell " + std::to_string(where) + " exceeds tolerance " +
                               std::to_string(tol));
    return m;
  }

  const AmbientModel& model() const { return *model_; }
  std::shared_ptr<const AmbientModel> model_ptr() const { return model_; }
  Topology topology() const { return topology_; }
  int n1() const { return n1_; }
  int n2() const { return n2_; }
  int dim() const { return topology_ == Topology::Loop ? 1 : 2; }

  int num_vertices() const { return topology_ == Topology::Loop ? n1_ : n1_ * n2_; }
  int num_edges() const { return topology_ == Topology::Loop ? n1_ : 2 * n1_ * n2_; }
  int num_faces() const { return topology_ == Topology::Loop ? 0 : n1_ * n2_; }
  int num_cells(int degree) const {
    switch (degree) {
      case 0: return num_vertices();
      case 1: return num_edges();
      case 2: return num_faces();
    }
    throw DegreeError("degree must be 0, 1 or 2");
  }
  int top_degree() const { return dim(); }

  double ds1() const { return 1.0 / n1_; }
  double ds2() const { return 1.0 / n2_; }

  int vid(int i, int j = 0) const {
    i = mod(i, n1_);
    if (topology_ == Topology::Loop) return i;
    return mod(j, n2_) * n1_ + i;
  }

  // Lifted position for arbitrary integer offsets.
  Vec pos(int i, int j = 0) const {
    const int wi = floordiv(i, n1_);
    const int wj = topology_ == Topology::Loop ? 0 : floordiv(j, n2_);
    return vertices_[vid(i, j)] + double(wi) * shift1_ + double(wj) * shift2_;
  }

  const Vec& vertex(int v) const { return vertices_[v]; }

  // Edge layout: loop edges e: v_e -> v_{e+1}. Torus: first N1*N2 entries are
  // s-edges (i,j)->(i+1,j), then N1*N2 t-edges (i,j)->(i,j+1).
  bool is_t_edge(int e) const { return topology_ == Topology::TorusGrid && e >= n1_ * n2_; }
  int edge_tail(int e) const { return topology_ == Topology::Loop ? e : e % (n1_ * n2_); }
  int edge_head(int e) const {
    if (topology_ == Topology::Loop) return vid(e + 1);
    const int v = e % (n1_ * n2_);
    const int i = v % n1_, j = v / n1_;
    return is_t_edge(e) ? vid(i, j + 1) : vid(i + 1, j);
  }
  Vec edge_vector(int e) const {
    const int v = edge_tail(e);
    const int i = topology_ == Topology::Loop ? v : v % n1_;
    const int j = topology_ == Topology::Loop ? 0 : v / n1_;
    if (topology_ == Topology::Loop) return pos(i + 1) - pos(i);
    return is_t_edge(e) ? pos(i, j + 1) - pos(i, j) : pos(i + 1, j) - pos(i, j);
  }
  Vec edge_midpoint(int e) const { return vertex(edge_tail(e)) + 0.5 * edge_vector(e); }
  double edge_length(int e) const {
    Vec v = edge_vector(e);
    Mat g = model_->metric_at(edge_midpoint(e));
    return std::sqrt(v.dot(g * v));
  }

  int s_edge(int i, int j = 0) const { return vid(i, j); }
  int t_edge(int i, int j) const { return n1_ * n2_ + vid(i, j); }
  int face(int i, int j = 0) const { return vid(i, j); }

  // Central-difference tangent d p / d s_dir at a vertex, in parameter units.
  Vec tangent(int i, int j, int dir) const {
    if (topology_ == Topology::Loop)
      return (pos(i + 1) - pos(i - 1)) / (2.0 * ds1());
    if (dir == 0) return (pos(i + 1, j) - pos(i - 1, j)) / (2.0 * ds1());
    return (pos(i, j + 1) - pos(i, j - 1)) / (2.0 * ds2());
  }

  // Oriented G-orthonormal frames via symmetric (Loewdin) orthonormalization;
  // equivariant under right SO(n) action, so downstream determinant angles do
  // not depend on the tangent basis. A near-degenerate Gram matrix sets the
  // conditioning flag.
  struct Frames {
    std::vector<Mat> frame;  // 2n x n columns
    bool conditioning_warning = false;
  };
  Frames orthonormal_tangent_frames() const {
    Frames out;
    const int n = model_->dim_complex();
    out.frame.resize(num_vertices());
    for (int v = 0; v < num_vertices(); ++v) {
      const int i = topology_ == Topology::Loop ? v : v % n1_;
      const int j = topology_ == Topology::Loop ? 0 : v / n1_;
      Mat F(model_->real_dim(), n);
      for (int a = 0; a < n; ++a) F.col(a) = tangent(i, j, a);
      Mat g = model_->metric_at(vertex(v));
      out.frame[v] = loewdin(F, g, out.conditioning_warning);
    }
    return out;
  }

  static Mat loewdin(const Mat& F, const Mat& g, bool& warn) {
    Mat S = F.transpose() * g * F;
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    const Vec ev = es.eigenvalues();
    if (ev.minCoeff() <= 0 || ev.minCoeff() < 1e-12 * ev.maxCoeff()) warn = true;
    if (ev.minCoeff() <= 0) throw MeshError("degenerate tangent frame");
    Mat inv_sqrt = es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
                   es.eigenvectors().transpose();
    return F * inv_sqrt;
  }

  // Total Riemannian volume and the per-cell top-degree density d mu.
  std::pair<double, DiscreteForm> induced_volume() const {
    DiscreteForm dmu;
    dmu.degree = top_degree();
    dmu.mesh = this;
    dmu.values.resize(num_cells(dmu.degree));
    if (topology_ == Topology::Loop) {
      for (int e = 0; e < num_edges(); ++e) dmu.values[e] = edge_length(e);
    } else {
      for (int j = 0; j < n2_; ++j)
        for (int i = 0; i < n1_; ++i) {
          auto [u, v, c] = face_tangents(i, j);
          Mat g = model_->metric_at(c);
          double guu = u.dot(g * u), gvv = v.dot(g * v), guv = u.dot(g * v);
          dmu.values[face(i, j)] = std::sqrt(std::max(0.0, guu * gvv - guv * guv));
        }
    }
    return {dmu.values.sum(), dmu};
  }

  double lagrangian_residual() const {
    if (topology_ == Topology::Loop) return 0.0;  // top-degree restriction of omega on a curve
    return worst_lagrangian_cell().first;
  }

  // H1 basis: the loop itself, or the two coordinate cycles of the grid.
  std::vector<Cycle> h1_cycles() const {
    std::vector<Cycle> cycles;
    if (topology_ == Topology::Loop) {
      Cycle c;
      for (int e = 0; e < n1_; ++e) c.emplace_back(e, +1);
      cycles.push_back(std::move(c));
    } else {
      Cycle cs, ct;
      for (int i = 0; i < n1_; ++i) cs.emplace_back(s_edge(i, 0), +1);
      for (int j = 0; j < n2_; ++j) ct.emplace_back(t_edge(0, j), +1);
      cycles.push_back(std::move(cs));
      cycles.push_back(std::move(ct));
    }
    return cycles;
  }

  // Orientation flip (loops): traverse the loop backwards.
  LagrangianMesh reversed() const {
    if (topology_ != Topology::Loop)
      throw MeshError("reversed: implemented for loops");
    LagrangianMesh m = *this;
    for (int i = 0; i < n1_; ++i) m.vertices_[i] = pos(n1_ - i);
    m.shift1_ = -shift1_;
    return m;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["topology"] = topology_ == Topology::Loop ? "loop" : "torus-grid";
    j["n1"] = n1_;
    if (topology_ == Topology::TorusGrid) j["n2"] = n2_;
    j["model"] = model_->to_json();
    auto vec_to_json = [](const Vec& v) {
      return std::vector<double>(v.data(), v.data() + v.size());
    };
    j["shift1"] = vec_to_json(shift1_);
    j["shift2"] = vec_to_json(shift2_);
    nlohmann::json verts = nlohmann::json::array();
    for (const auto& v : vertices_) verts.push_back(vec_to_json(v));
    j["vertices"] = verts;
    return j;
  }

  static LagrangianMesh from_json(const nlohmann::json& j) {
    LagrangianMesh m;
    m.model_ = std::make_shared<AmbientModel>(AmbientModel::from_json(j.at("model")));
    m.topology_ = j.at("topology") == "loop" ? Topology::Loop : Topology::TorusGrid;
    m.n1_ = j.at("n1");
    m.n2_ = m.topology_ == Topology::TorusGrid ? int(j.at("n2")) : 0;
    auto read_vec = [](const nlohmann::json& a) {
      auto v = a.get<std::vector<double>>();
      return Vec(Eigen::Map<Vec>(v.data(), static_cast<int>(v.size())));
    };
    m.shift1_ = read_vec(j.at("shift1"));
    m.shift2_ = read_vec(j.at("shift2"));
    for (const auto& vj : j.at("vertices")) m.vertices_.push_back(read_vec(vj));
    if (static_cast<int>(m.vertices_.size()) != m.num_vertices())
      throw MeshError("from_json: vertex count mismatch");
    return m;
  }

  // In-place vertex update used by the flow module; callers are responsible
  // for revalidating the Lagrangian residual.
  void set_vertices(std::vector<Vec> verts) {
    if (static_cast<int>(verts.size()) != num_vertices())
      throw MeshError("set_vertices: count mismatch");
    vertices_ = std::move(verts);
  }

 private:
  LagrangianMesh() = default;

  static int mod(int a, int m) { return ((a % m) + m) % m; }
  static int floordiv(int a, int m) { return (a - mod(a, m)) / m; }

  // Closure defect must be a lattice vector (torus ambient) or zero.
  static Vec resolve_shift(const AmbientModel& model, const Vec& defect) {
    if (model.is_torus()) {
      Vec k = model.lattice().fullPivLu().solve(defect);
      Vec rounded = k.array().round();
      if ((k - rounded).norm() > 1e-8)
        throw MeshError("parametrization does not close up to a lattice translation");
      return model.lattice() * rounded;
    }
    if (defect.norm() > 1e-8) throw MeshError("parametrization is not closed");
    return Vec::Zero(model.real_dim());
  }

  void check_degenerate(double tol) const {
    const double scale = model_->coordinate_scale();
    for (int e = 0; e < num_edges(); ++e)
      if (edge_vector(e).norm() < tol * std::max(1.0, scale))
        throw MeshError("degenerate mesh: repeated vertices at edge " + std::to_string(e));
  }

  std::tuple<Vec, Vec, Vec> face_tangents(int i, int j) const {
    Vec p00 = pos(i, j), p10 = pos(i + 1, j), p01 = pos(i, j + 1), p11 = pos(i + 1, j + 1);
    Vec u = 0.5 * (p10 + p11 - p00 - p01);
    Vec v = 0.5 * (p01 + p11 - p00 - p10);
    Vec c = 0.25 * (p00 + p10 + p01 + p11);
    return {u, v, c};
  }

  std::pair<double, int> worst_lagrangian_cell() const {
    double worst = 0.0;
    int where = 0;
    for (int j = 0; j < n2_; ++j)
      for (int i = 0; i < n1_; ++i) {
        auto [u, v, c] = face_tangents(i, j);
        Mat w = model_->symplectic_at(c);
        Mat g = model_->metric_at(c);
        double nu = std::sqrt(u.dot(g * u)), nv = std::sqrt(v.dot(g * v));
        double r = std::abs(u.dot(w * v)) / std::max(nu * nv, 1e-300);
        if (r > worst) {
          worst = r;
          where = face(i, j);
        }
      }
    return {worst, where};
  }

  std::shared_ptr<const AmbientModel> model_;
  Topology topology_ = Topology::Loop;
  int n1_ = 0, n2_ = 0;
  std::vector<Vec> vertices_;
  Vec shift1_, shift2_;
};

inline DiscreteForm make_form(const LagrangianMesh& mesh, int degree) {
  if (degree < 0 || degree > mesh.top_degree())
    throw DegreeError("form degree out of range for this mesh");
  DiscreteForm f;
  f.degree = degree;
  f.mesh = &mesh;
  f.values = Vec::Zero(mesh.num_cells(degree));
  return f;
}

}  // namespace maslov
