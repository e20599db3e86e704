#pragma once

#include <vector>

#include "dec.hpp"
#include "transport.hpp"

namespace maslov {

// Second fundamental form from second parameter differences: the normal part
// of the ambient covariant derivative of the tangent field, in the parameter
// basis (a,b). tangential_removed records the relative size of the tangential
// component that the projection discarded.
struct SecondFundamentalForm {
  int n = 1;
  std::vector<std::vector<Vec>> value;  // [vertex][a * n + b], ambient vectors
  std::vector<Vec> mean_curvature;      // trace against the induced metric
  double tangential_removed = 0.0;
};

inline SecondFundamentalForm second_fundamental_form(const LagrangianMesh& mesh) {
  const auto& model = mesh.model();
  const int n = model.dim_complex();
  const int d = model.real_dim();
  SecondFundamentalForm out;
  out.n = n;
  out.value.resize(mesh.num_vertices());
  out.mean_curvature.resize(mesh.num_vertices());

  const double ds1 = mesh.ds1();
  const double ds2 = mesh.top_degree() == 2 ? mesh.ds2() : 1.0;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const int i = mesh.topology() == Topology::Loop ? v : v % mesh.n1();
    const int j = mesh.topology() == Topology::Loop ? 0 : v / mesh.n1();
    Mat T(d, n);
    for (int a = 0; a < n; ++a) T.col(a) = mesh.tangent(i, j, a);
    const Mat g = model.metric_at(mesh.vertex(v));
    auto gamma = model.christoffels_at(mesh.vertex(v));

    // Second central differences of the lifted positions, parameter units.
    std::vector<Vec> D(n * n);
    D[0] = (mesh.pos(i + 1, j) - 2.0 * mesh.pos(i, j) + mesh.pos(i - 1, j)) / (ds1 * ds1);
    if (n == 2) {
      D[3] = (mesh.pos(i, j + 1) - 2.0 * mesh.pos(i, j) + mesh.pos(i, j - 1)) / (ds2 * ds2);
      D[1] = (mesh.pos(i + 1, j + 1) - mesh.pos(i + 1, j - 1) - mesh.pos(i - 1, j + 1) +
              mesh.pos(i - 1, j - 1)) /
             (4.0 * ds1 * ds2);
      D[2] = D[1];
    }

    // Tangential projector in the induced metric.
    const Mat gram = T.transpose() * g * T;
    const Mat gram_inv = gram.inverse();
    auto project_normal = [&](const Vec& w) {
      Vec tang = T * (gram_inv * (T.transpose() * (g * w)));
      out.tangential_removed =
          std::max(out.tangential_removed, tang.norm() / std::max(w.norm(), 1e-30));
      return Vec(w - tang);
    };

    out.value[v].resize(n * n);
    Vec H = Vec::Zero(d);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        Vec cov = D[a * n + b];
        for (int k = 0; k < d; ++k) cov[k] += T.col(a).dot(gamma[k] * T.col(b));
        out.value[v][a * n + b] = project_normal(cov);
        H += gram_inv(a, b) * out.value[v][a * n + b];
      }
    out.mean_curvature[v] = H;
  }
  return out;
}

// alpha_H edge integrals: omega(edge, H) at the edge midpoint, with H
// averaged from the endpoints. Sign matches the transport convention (the
// counterclockwise unit circle gives +2 pi for both eta and alpha_H).
inline DiscreteForm mean_curvature_one_form(const LagrangianMesh& mesh) {
  const auto& model = mesh.model();
  auto ii = second_fundamental_form(mesh);
  DiscreteForm alpha = make_form(mesh, 1);
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Vec ev = mesh.edge_vector(e);
    const Vec H = 0.5 * (ii.mean_curvature[mesh.edge_tail(e)] + ii.mean_curvature[mesh.edge_head(e)]);
    const Mat w = model.symplectic_at(mesh.edge_midpoint(e));
    alpha.values[e] = ev.dot(w * H);
  }
  return alpha;
}

struct RicciIdentityReport {
  DiscreteForm d_alpha;    // degree 2
  DiscreteForm rho_flux;   // degree 2, pullback flux of the ambient Ricci form
  double max_residual = 0.0;  // area-normalized
};

// d alpha_H = rho|_S, face by face. Loops carry no 2-forms; the identity is
// vacuous there and requesting it is a degree error.
inline RicciIdentityReport verify_ricci_identity(const LagrangianMesh& mesh) {
  if (mesh.topology() != Topology::TorusGrid)
    throw DegreeError("verify_ricci_identity: needs a torus mesh (no 2-forms on loops)");
  const auto& model = mesh.model();
  RicciIdentityReport rep;
  DecOperators dec(mesh);
  rep.d_alpha = dec.d(mean_curvature_one_form(mesh));
  rep.rho_flux = make_form(mesh, 2);
  auto [total, dmu] = mesh.induced_volume();
  (void)total;
  for (int j = 0; j < mesh.n2(); ++j)
    for (int i = 0; i < mesh.n1(); ++i) {
      const Vec p00 = mesh.pos(i, j), p10 = mesh.pos(i + 1, j), p01 = mesh.pos(i, j + 1),
                p11 = mesh.pos(i + 1, j + 1);
      const Vec u = 0.5 * (p10 + p11 - p00 - p01);
      const Vec v = 0.5 * (p01 + p11 - p00 - p10);
      const Vec c = 0.25 * (p00 + p10 + p01 + p11);
      const int f = mesh.face(i, j);
      // rho(v, u), not rho(u, v): alpha_H pairs the edge first (the choice
      // that makes the counterclockwise circle come out at Maslov +1), which
      // reverses the pullback orientation relative to the usual statement.
      rep.rho_flux.values[f] = v.dot(model.ricci_form_at(c) * u);
      rep.max_residual = std::max(
          rep.max_residual, std::abs(rep.d_alpha.values[f] - rep.rho_flux.values[f]) / dmu.values[f]);
    }
  return rep;
}

struct CurvatureReport {
  DiscreteForm alpha_H;
  DiscreteForm eta;
  double prop9_residual = 0.0;  // max_e |wrap(eta_e - alpha_e)| / length_e
  double ricci_residual = 0.0;  // torus only; see verify_ricci_identity
  bool has_ricci = false;
  double l_norm = 0.0;  // L2 norm of alpha_H
  double h_norm = 0.0;  // L2 norm of delta alpha_H
  HodgeSplit hodge_split;
};

// Cross-pipeline identity: eta from parallel-transport determinants against
// alpha_H from second derivatives, edge by edge.
inline CurvatureReport verify_prop9(const LagrangianMesh& mesh, TransportOptions topts = {}) {
  CurvatureReport rep;
  rep.alpha_H = mean_curvature_one_form(mesh);
  auto conn = relative_connection(mesh, nullptr, topts);
  rep.eta = conn.eta;
  // Both sides are O(h) edge integrals, so the raw difference shrinks with
  // the edges; dividing by edge length makes the residual comparable across
  // resolutions and second-order in h.
  for (int e = 0; e < mesh.num_edges(); ++e)
    rep.prop9_residual =
        std::max(rep.prop9_residual, std::abs(wrap_to_pi(rep.eta.values[e] - rep.alpha_H.values[e])) /
                                         mesh.edge_length(e));
  DecOperators dec(mesh);
  rep.hodge_split = dec.hodge_decompose(rep.alpha_H);
  rep.l_norm = dec.norm(rep.alpha_H);
  rep.h_norm = dec.norm(dec.codifferential(rep.alpha_H));
  if (mesh.topology() == Topology::TorusGrid) {
    rep.has_ricci = true;
    rep.ricci_residual = verify_ricci_identity(mesh).max_residual;
  }
  return rep;
}

struct MinimalityReport {
  bool l_minimal = false;  // alpha_H = 0: volume-critical among Lagrangian deformations
  bool h_minimal = false;  // delta alpha_H = 0: critical among isodrastic deformations
  double l_norm = 0.0;
  double h_norm = 0.0;
  double tolerance = 0.0;
};

inline MinimalityReport minimality_report(const LagrangianMesh& mesh, double tol = 1e-6) {
  MinimalityReport rep;
  rep.tolerance = tol;
  DecOperators dec(mesh);
  auto alpha = mean_curvature_one_form(mesh);
  rep.l_norm = dec.norm(alpha);
  rep.h_norm = dec.norm(dec.codifferential(alpha));
  rep.l_minimal = rep.l_norm < tol;
  rep.h_minimal = rep.l_minimal || rep.h_norm < tol;  // L-minimal implies H-minimal
  return rep;
}

struct HodgeMatchReport {
  double coexact_residual = 0.0;       // || coexact(alpha_H) - Delta_1 ||
  double period_residual = 0.0;        // max_c | period_h(alpha_H) - (frac_c + 2 pi m_c) |
  std::vector<double> alpha_periods;   // harmonic-part periods of alpha_H
  std::vector<double> connection_periods;  // frac_c + 2 pi m_c
};

// The paired decompositions: coexact part of alpha_H against Delta_1, and
// harmonic periods of alpha_H against fractional periods plus 2 pi times the
// Maslov integers.
inline HodgeMatchReport hodge_match(const LagrangianMesh& mesh, DecomposeOptions opts = {}) {
  auto conn = relative_connection(mesh);
  auto rep = decompose_connection(conn, opts);
  if (rep.maslov.empty())
    throw HalfIntegerBoundaryError(
        "hodge_match: connection periods sit on the half-integer boundary");
  DecOperators dec(mesh);
  auto alpha = mean_curvature_one_form(mesh);
  auto split = dec.hodge_decompose(alpha);

  HodgeMatchReport out;
  DiscreteForm diff = make_form(mesh, 1);
  diff.values = split.coexact.values - rep.delta1.values;
  out.coexact_residual = dec.norm(diff);
  auto cycles = mesh.h1_cycles();
  for (size_t c = 0; c < cycles.size(); ++c) {
    const double pa = DecOperators::period(split.harmonic, cycles[c]);
    const double pc = rep.fractional[c] + two_pi * rep.maslov[c];
    out.alpha_periods.push_back(pa);
    out.connection_periods.push_back(pc);
    out.period_residual = std::max(out.period_residual, std::abs(pa - pc));
  }
  return out;
}

}  // namespace maslov
