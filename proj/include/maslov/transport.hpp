#pragma once

#include <optional>
#include <vector>

#include "dec.hpp"
#include "lagmesh.hpp"

namespace maslov {

// Levi-Civita parallel transport along a straight chart segment: classical
// RK4 on v' = -Gamma(x)(xdot, v), a few substeps per edge, then a symmetric
// re-orthonormalization against G at the endpoint. The symmetric variant is
// equivariant under right SO(n) frame changes and rescales the complex
// determinant by a positive real, so connection angles are unaffected.
inline Mat parallel_transport_edge(const AmbientModel& model, const Vec& p, const Vec& q,
                                   const Mat& frame, int substeps = 4) {
  if ((q - p).norm() == 0.0) return frame;
  if (model.kind() == ModelKind::FlatComplex || model.kind() == ModelKind::FlatTorus) return frame;
  if ((q - p).norm() > 0.5 * model.coordinate_scale())
    throw RefinementError("parallel_transport_edge: step too large for the chart scale");

  const Vec dir = q - p;
  auto rhs = [&](double t, const Mat& V) {
    const Vec x = p + t * dir;
    auto gamma = model.christoffels_at(x);
    Mat out = Mat::Zero(V.rows(), V.cols());
    for (int k = 0; k < V.rows(); ++k)
      out.row(k) = -(dir.transpose() * gamma[k] * V);
    return out;
  };
  Mat V = frame;
  const double h = 1.0 / substeps;
  for (int s = 0; s < substeps; ++s) {
    const double t0 = s * h;
    Mat k1 = rhs(t0, V);
    Mat k2 = rhs(t0 + 0.5 * h, V + 0.5 * h * k1);
    Mat k3 = rhs(t0 + 0.5 * h, V + 0.5 * h * k2);
    Mat k4 = rhs(t0 + h, V + h * k3);
    V += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  bool warn = false;
  return LagrangianMesh::loewdin(V, model.metric_at(q), warn);
}

// Edge-angle representation of A_LC - A_0 = i * eta relative to the
// tangent-frame trivialization.
struct RelativeConnection {
  DiscreteForm eta;  // degree 1, radians
  const LagrangianMesh* mesh = nullptr;
  double max_abs_angle = 0.0;
  bool resolved = true;  // every |eta_e| < pi/2
};

struct TransportOptions {
  int substeps = 4;
  bool throw_on_unresolved = true;
};

// eta_e = principal argument of det of the unitary matrix taking the
// parallel-transported tail frame to the reference frame at the edge head.
inline RelativeConnection relative_connection(const LagrangianMesh& mesh,
                                              const std::vector<Mat>* frames_in = nullptr,
                                              TransportOptions opts = {}) {
  const auto& model = mesh.model();
  std::vector<Mat> frames;
  if (frames_in) {
    frames = *frames_in;
  } else {
    frames = mesh.orthonormal_tangent_frames().frame;
  }
  RelativeConnection out;
  out.mesh = &mesh;
  out.eta = make_form(mesh, 1);
  const int n = model.dim_complex();
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const int tail = mesh.edge_tail(e), head = mesh.edge_head(e);
    const Vec p = mesh.vertex(tail);
    const Vec q = p + mesh.edge_vector(e);
    Mat transported = parallel_transport_edge(model, p, q, frames[tail], opts.substeps);
    CMat M(n, n), N(n, n);
    for (int a = 0; a < n; ++a) {
      M.col(a) = model.complexify(transported.col(a));
      N.col(a) = model.complexify(frames[head].col(a));
    }
    const Complex u = (M.inverse() * N).determinant();
    if (std::abs(std::abs(u) - 1.0) > 1e-6)
      throw NumericalError("relative_connection: comparison matrix is not unitary");
    const double angle = std::arg(u);
    out.eta.values[e] = angle;
    out.max_abs_angle = std::max(out.max_abs_angle, std::abs(angle));
  }
  if (out.max_abs_angle >= 0.5 * pi) {
    out.resolved = false;
    if (opts.throw_on_unresolved)
      throw UnresolvedMeshError("relative_connection: edge angle " +
                                std::to_string(out.max_abs_angle) +
                                " reaches pi/2; refine the mesh");
  }
  return out;
}

// Face-wise circulation of eta (TorusGrid only); approximates the flux of
// the restricted Ricci form through each face.
inline DiscreteForm connection_curvature(const RelativeConnection& conn) {
  const LagrangianMesh& mesh = *conn.mesh;
  if (mesh.topology() != Topology::TorusGrid)
    throw DegreeError("connection_curvature: no 2-forms on a loop mesh");
  DecOperators dec(mesh);
  return dec.d(conn.eta);
}

struct DecomposeOptions {
  int power = 1;                       // 1: determinant class; 2: classical det^2
  double half_integer_margin = 0.05 * two_pi;
  double flat_tolerance = 1e-3;        // sup |d eta| / area
  double period_tolerance = 1e-6;      // |fractional| below this counts as trivial
  double special_tolerance = 1e-6;     // phase oscillation for the special flag
};

// The paired split eta = Delta_1 + Delta_2 + d phi + (2 pi winding part).
struct MaslovReport {
  int power = 1;
  std::vector<long> maslov;          // empty when the boundary guard trips
  std::vector<double> fractional;    // Delta_2 periods, reduced to (-pi, pi]
  double curvature_norm = 0.0;       // sup_f |d eta| / area (Delta_1 data); 0 on loops
  DiscreteForm delta1;               // coexact part
  DiscreteForm delta2;               // harmonic representative with the fractional periods
  DiscreteForm phi;                  // degree 0, weighted mean zero
  double phase_oscillation = 0.0;
  bool is_flat = false;
  bool trivial_periods = false;
  bool bounded_periods = false;
  bool is_bohr_sommerfeld = false;   // level 1, evaluated only when flat
  bool is_special = false;
  bool half_integer_boundary = false;
};

inline MaslovReport decompose_connection(const RelativeConnection& conn,
                                         DecomposeOptions opts = {}) {
  const LagrangianMesh& mesh = *conn.mesh;
  DecOperators dec(mesh);
  DiscreteForm eta = make_form(mesh, 1);
  eta.values = double(opts.power) * conn.eta.values;

  MaslovReport rep;
  rep.power = opts.power;

  if (mesh.topology() == Topology::TorusGrid) {
    DiscreteForm deta = dec.d(eta);
    auto [total, dmu] = mesh.induced_volume();
    (void)total;
    rep.curvature_norm = (deta.values.cwiseAbs().array() / dmu.values.array()).maxCoeff();
  }
  rep.is_flat = rep.curvature_norm < opts.flat_tolerance;

  auto split = dec.hodge_decompose(eta);
  rep.delta1 = split.coexact;
  rep.phi = split.potential;
  rep.phase_oscillation = split.potential.values.maxCoeff() - split.potential.values.minCoeff();

  auto cycles = mesh.h1_cycles();
  auto basis = dec.harmonic_basis();
  const int b = static_cast<int>(cycles.size());
  Vec P(b), frac(b);
  for (int c = 0; c < b; ++c) {
    P[c] = DecOperators::period(split.harmonic, cycles[c]);
    frac[c] = wrap_to_pi(P[c]);
    rep.fractional.push_back(frac[c]);
  }

  rep.trivial_periods = frac.cwiseAbs().maxCoeff() < opts.period_tolerance;
  rep.bounded_periods = frac.cwiseAbs().maxCoeff() < pi - opts.half_integer_margin;
  if (!rep.bounded_periods) {
    // "boundary" case: at least one period within the margin of a half
    // integer, where the minimal-norm choice of Delta_2 is not unique.
    rep.half_integer_boundary = true;
  }

  // Delta_2: harmonic representative with the fractional periods.
  rep.delta2 = make_form(mesh, 1);
  if (basis.dimension == b) {
    Mat Pm(b, b);
    for (int c = 0; c < b; ++c)
      for (int k = 0; k < b; ++k) Pm(c, k) = DecOperators::period(basis.forms[k], cycles[c]);
    Vec coeff = Pm.fullPivLu().solve(frac);
    for (int k = 0; k < b; ++k) rep.delta2.values += coeff[k] * basis.forms[k].values;
  }

  if (!rep.half_integer_boundary) {
    for (int c = 0; c < b; ++c) {
      const double m = (P[c] - frac[c]) / two_pi;
      const long mi = std::lround(m);
      if (std::abs(m - mi) > 0.1)
        throw NumericalError("decompose_connection: winding part is not near an integer");
      rep.maslov.push_back(mi);
    }
  }

  const bool trivial_class =
      !rep.maslov.empty() &&
      std::all_of(rep.maslov.begin(), rep.maslov.end(), [](long m) { return m == 0; });
  rep.is_bohr_sommerfeld = rep.is_flat && rep.trivial_periods;
  rep.is_special = rep.is_flat && rep.trivial_periods && trivial_class &&
                   rep.phase_oscillation < opts.special_tolerance &&
                   rep.delta1.values.cwiseAbs().maxCoeff() < opts.period_tolerance;
  return rep;
}

struct BohrSommerfeldResult {
  bool satisfied = false;
  std::vector<double> defects;  // distance of each period to 2 pi Z
};

inline BohrSommerfeldResult is_bohr_sommerfeld(const RelativeConnection& conn, int level,
                                               double tol = 1e-6,
                                               double flat_tol = 1e-3) {
  if (level < 1) throw NotApplicableError("is_bohr_sommerfeld: level must be positive");
  const LagrangianMesh& mesh = *conn.mesh;
  if (mesh.topology() == Topology::TorusGrid) {
    DecOperators dec(mesh);
    DiscreteForm deta = dec.d(conn.eta);
    auto [total, dmu] = mesh.induced_volume();
    (void)total;
    const double cn = (deta.values.cwiseAbs().array() / dmu.values.array()).maxCoeff();
    if (cn >= flat_tol)
      throw NotApplicableError("is_bohr_sommerfeld: connection is not flat (curvature sup " +
                               std::to_string(cn) + ")");
  }
  DecOperators dec(mesh);
  auto split = dec.hodge_decompose(conn.eta);
  BohrSommerfeldResult out;
  out.satisfied = true;
  for (const auto& c : mesh.h1_cycles()) {
    const double p = double(level) * DecOperators::period(split.harmonic, c);
    const double defect = std::abs(wrap_to_pi(p));
    out.defects.push_back(defect);
    if (defect > tol) out.satisfied = false;
  }
  return out;
}

// Winding data of the flat-model phase: evaluates the complex determinant of
// the tangent frame per vertex and counts signed sign changes of its
// imaginary part along each H1 cycle, divided by two.
inline std::vector<long> imtheta_zero_set(const LagrangianMesh& mesh) {
  const auto& model = mesh.model();
  if (!model.has_holomorphic_volume())
    throw UnsupportedModelError("imtheta_zero_set: ambient has no holomorphic volume form");
  auto frames = mesh.orthonormal_tangent_frames().frame;
  const int n = model.dim_complex();
  std::vector<Complex> w(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    CMat Z(n, n);
    for (int a = 0; a < n; ++a) Z.col(a) = model.complexify(frames[v].col(a));
    Complex det = Z.determinant();
    w[v] = det / std::abs(det);
  }

  auto count_cycle = [&](const Cycle& cycle) {
    std::vector<int> verts;
    for (const auto& [e, s] : cycle) verts.push_back(s > 0 ? mesh.edge_tail(e) : mesh.edge_head(e));
    Complex rot(1.0, 0.0);
    for (int retry = 0; retry < 4; ++retry) {
      bool clean = true;
      long twice = 0;
      for (size_t k = 0; k < verts.size(); ++k) {
        Complex a = w[verts[k]] * rot;
        Complex b = w[verts[(k + 1) % verts.size()]] * rot;
        if (std::abs(a.imag()) < 1e-12) {
          clean = false;
          break;
        }
        if (a.imag() * b.imag() < 0.0) {
          const double re_mid = 0.5 * (a.real() + b.real());
          twice += (b.imag() > a.imag() ? 1 : -1) * (re_mid > 0 ? 1 : -1);
        }
      }
      if (clean) {
        if (twice % 2 != 0)
          throw NumericalError("imtheta_zero_set: odd crossing count along a cycle");
        return twice / 2;
      }
      rot *= Complex(std::cos(1e-6 * (retry + 1)), std::sin(1e-6 * (retry + 1)));
    }
    throw NumericalError("imtheta_zero_set: zero of Im theta pinned to a vertex");
  };

  std::vector<long> out;
  for (const auto& c : mesh.h1_cycles()) out.push_back(count_cycle(c));
  return out;
}

struct HalfWeight {
  DiscreteForm density;  // top degree
  bool sign_warning = false;
  double total = 0.0;
};

// Phase half-weighting: density = ((phi - mean phi) + r / vol) d mu, total r.
inline HalfWeight half_weight(const MaslovReport& report, const LagrangianMesh& mesh, double r) {
  if (r <= 0) throw NotApplicableError("half_weight: r must be positive");
  if (report.maslov.empty() ||
      !std::all_of(report.maslov.begin(), report.maslov.end(), [](long m) { return m == 0; }))
    throw NotApplicableError("half_weight: requires a trivial Maslov class");
  auto [vol, dmu] = mesh.induced_volume();
  const int cells = static_cast<int>(dmu.values.size());
  Vec phi_cell(cells);
  if (mesh.topology() == Topology::Loop) {
    for (int e = 0; e < cells; ++e)
      phi_cell[e] =
          0.5 * (report.phi.values[mesh.edge_tail(e)] + report.phi.values[mesh.edge_head(e)]);
  } else {
    for (int j = 0; j < mesh.n2(); ++j)
      for (int i = 0; i < mesh.n1(); ++i)
        phi_cell[mesh.face(i, j)] =
            0.25 * (report.phi.values[mesh.vid(i, j)] + report.phi.values[mesh.vid(i + 1, j)] +
                    report.phi.values[mesh.vid(i, j + 1)] + report.phi.values[mesh.vid(i + 1, j + 1)]);
  }
  const double mean = phi_cell.dot(dmu.values) / vol;
  HalfWeight out;
  out.density = make_form(mesh, mesh.top_degree());
  out.density.values =
      ((phi_cell.array() - mean) + r / vol).matrix().cwiseProduct(dmu.values);
  out.total = out.density.values.sum();
  out.sign_warning = out.density.values.minCoeff() < 0.0;
  return out;
}

}  // namespace maslov
