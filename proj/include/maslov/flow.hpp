#pragma once

#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "curvature.hpp"

namespace maslov {

using ScalarField = std::function<double(const Vec&)>;

// Hamiltonian vector field of f: omega(X_f, .) = df, so W^T X_f = grad f.
inline Vec hamiltonian_field(const AmbientModel& model, const ScalarField& f, const Vec& p) {
  const int d = model.real_dim();
  const double h = fd_step_first(model.coordinate_scale());
  Vec grad(d);
  for (int a = 0; a < d; ++a) {
    Vec pp = p, pm = p;
    pp[a] += h;
    pm[a] -= h;
    grad[a] = (f(pp) - f(pm)) / (2.0 * h);
  }
  return model.symplectic_at(p).transpose().fullPivLu().solve(grad);
}

struct FlowRecord {
  int step = 0;
  double volume = 0.0;
  double lagrangian_residual = 0.0;
  std::vector<long> maslov;
  std::vector<double> fractional;
  bool bounded = true;  // false when the period guard or the pi/2 guard tripped
  bool bohr_sommerfeld = false;
  double l_norm = 0.0;
  double h_norm = 0.0;
};

struct FlowTrace {
  std::vector<FlowRecord> records;
  double step_size = 0.0;
  std::string hamiltonian;

  nlohmann::json to_json() const {
    nlohmann::json out;
    out["step_size"] = step_size;
    out["hamiltonian"] = hamiltonian;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : records) {
      nlohmann::json row;
      row["step"] = r.step;
      row["volume"] = r.volume;
      row["lagrangian_residual"] = r.lagrangian_residual;
      row["bounded"] = r.bounded;
      row["maslov"] = r.maslov;
      row["fractional"] = r.fractional;
      row["bohr_sommerfeld"] = r.bohr_sommerfeld;
      row["l_norm"] = r.l_norm;
      row["h_norm"] = r.h_norm;
      rows.push_back(row);
    }
    out["records"] = rows;
    return out;
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << "step,volume,lagrangian_residual,bounded,maslov,fractional,bohr_sommerfeld,l_norm,h_norm\n";
    auto join = [](const auto& v) {
      std::ostringstream s;
      for (size_t i = 0; i < v.size(); ++i) s << (i ? ";" : "") << v[i];
      return s.str();
    };
    for (const auto& r : records)
      os << r.step << ',' << r.volume << ',' << r.lagrangian_residual << ',' << r.bounded << ','
         << join(r.maslov) << ',' << join(r.fractional) << ',' << r.bohr_sommerfeld << ','
         << r.l_norm << ',' << r.h_norm << '\n';
    return os.str();
  }
};

struct FlowOptions {
  int record_every = 1;
  double residual_factor = 10.0;   // reject when residual > factor * max(initial, floor)
  double residual_floor = 1e-8;
  DecomposeOptions decompose;
  int transport_substeps = 4;
};

inline FlowRecord observe_mesh(const LagrangianMesh& mesh, int step, const FlowOptions& opts) {
  FlowRecord rec;
  rec.step = step;
  rec.volume = mesh.induced_volume().first;
  rec.lagrangian_residual = mesh.lagrangian_residual();
  TransportOptions topts;
  topts.substeps = opts.transport_substeps;
  topts.throw_on_unresolved = false;
  auto conn = relative_connection(mesh, nullptr, topts);
  if (!conn.resolved) {
    rec.bounded = false;
  } else {
    auto rep = decompose_connection(conn, opts.decompose);
    rec.fractional = rep.fractional;
    rec.bounded = rep.bounded_periods;
    rec.bohr_sommerfeld = rep.is_bohr_sommerfeld;
    if (rec.bounded) rec.maslov = rep.maslov;
  }
  DecOperators dec(mesh);
  auto alpha = mean_curvature_one_form(mesh);
  rec.l_norm = dec.norm(alpha);
  rec.h_norm = dec.norm(dec.codifferential(alpha));
  return rec;
}

// One explicit-midpoint step of the Hamiltonian flow for every vertex.
inline void advance_vertices(LagrangianMesh& mesh, const ScalarField& f, double eps) {
  const auto& model = mesh.model();
  std::vector<Vec> next(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const Vec& p = mesh.vertex(v);
    Vec mid = p + 0.5 * eps * hamiltonian_field(model, f, p);
    if (!model.in_domain(mid)) throw DomainError("hamiltonian flow leaves the chart domain");
    next[v] = p + eps * hamiltonian_field(model, f, mid);
    if (!model.in_domain(next[v])) throw DomainError("hamiltonian flow leaves the chart domain");
  }
  mesh.set_vertices(std::move(next));
}

inline std::pair<LagrangianMesh, FlowTrace> hamiltonian_deform(const LagrangianMesh& mesh_in,
                                                               const ScalarField& f, double eps,
                                                               int steps, FlowOptions opts = {},
                                                               const std::string& label = "f") {
  LagrangianMesh mesh = mesh_in;
  FlowTrace trace;
  trace.step_size = eps;
  trace.hamiltonian = label;
  const double residual_cap =
      opts.residual_factor * std::max(mesh.lagrangian_residual(), opts.residual_floor);
  trace.records.push_back(observe_mesh(mesh, 0, opts));
  for (int s = 1; s <= steps; ++s) {
    advance_vertices(mesh, f, eps);
    const double res = mesh.lagrangian_residual();
    if (res > residual_cap)
      throw StepRejectionError("hamiltonian_deform: Lagrangian residual " + std::to_string(res) +
                               " exceeds " + std::to_string(residual_cap) +
                               " at step " + std::to_string(s) +
                               "; retry with step size <= " + std::to_string(0.25 * eps));
    if (s % opts.record_every == 0 || s == steps)
      trace.records.push_back(observe_mesh(mesh, s, opts));
  }
  return {std::move(mesh), std::move(trace)};
}

struct InvarianceReport {
  bool maslov_constant = true;
  double max_fractional_drift = 0.0;
  int aborted_runs = 0;  // bounded-periods guard tripped mid-flow
  std::vector<FlowTrace> traces;
};

inline InvarianceReport invariance_experiment(const LagrangianMesh& mesh,
                                              const std::vector<ScalarField>& family, double eps,
                                              int steps, FlowOptions opts = {}) {
  InvarianceReport out;
  for (size_t k = 0; k < family.size(); ++k) {
    auto [final_mesh, trace] =
        hamiltonian_deform(mesh, family[k], eps, steps, opts, "family[" + std::to_string(k) + "]");
    (void)final_mesh;
    std::vector<long> reference;
    bool have_ref = false;
    bool aborted = false;
    for (const auto& rec : trace.records) {
      if (!rec.bounded) {
        aborted = true;
        continue;
      }
      if (!have_ref) {
        reference = rec.maslov;
        have_ref = true;
      } else if (rec.maslov != reference) {
        out.maslov_constant = false;
      }
      for (size_t c = 0; c < rec.fractional.size(); ++c)
        out.max_fractional_drift =
            std::max(out.max_fractional_drift,
                     std::abs(rec.fractional[c] - trace.records.front().fractional[c]));
    }
    if (aborted) ++out.aborted_runs;
    out.traces.push_back(std::move(trace));
  }
  return out;
}

// Redistribute loop vertices to uniform metric arclength along the polygon
// (piecewise-linear in chart coordinates). Idempotent on an already-uniform
// loop, so repeated application does not erode the curve.
inline void resample_loop_uniform(LagrangianMesh& mesh) {
  const int N = mesh.num_vertices();
  Vec cum(N + 1);
  cum[0] = 0.0;
  for (int e = 0; e < N; ++e) cum[e + 1] = cum[e] + mesh.edge_length(e);
  const double L = cum[N];
  std::vector<Vec> verts(N);
  int seg = 0;
  for (int i = 0; i < N; ++i) {
    const double target = L * i / N;
    while (seg < N - 1 && cum[seg + 1] < target) ++seg;
    const double t = (target - cum[seg]) / std::max(cum[seg + 1] - cum[seg], 1e-300);
    // Catmull-Rom through the four surrounding vertices: linear interpolation
    // would park vertices on chords and feed grid-scale curvature noise into
    // the mean-curvature estimates.
    const Vec p0 = mesh.pos(seg - 1), p1 = mesh.pos(seg), p2 = mesh.pos(seg + 1),
              p3 = mesh.pos(seg + 2);
    verts[i] = 0.5 * ((2.0 * p1) + (p2 - p0) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * (t * t) +
                      (3.0 * p1 - p0 - 3.0 * p2 + p3) * (t * t * t));
  }
  mesh.set_vertices(std::move(verts));
}

// Area-neutral normal smoothing for loops. Hamiltonian moves drawn from a
// truncated smooth basis cannot touch shape modes above the basis degree, yet
// the nonlinear flow couples energy into them (mode 3 feeds 6, 9, ...) and
// their curvature contribution grows like k^2. This damps every nonzero mode
// like discrete curve shortening, while subtracting the mean normal flux so
// the enclosed symplectic area is unchanged to first order: the move stays
// isodrastic. A perfect circle or latitude is a fixed point.
inline void smooth_loop_normal(LagrangianMesh& mesh, double strength, int rounds) {
  if (mesh.topology() != Topology::Loop || strength <= 0.0 || rounds <= 0) return;
  const auto& model = mesh.model();
  const int N = mesh.num_vertices();
  for (int r = 0; r < rounds; ++r) {
    std::vector<Vec> disp(N), nrm(N);
    for (int v = 0; v < N; ++v) {
      const Vec t = mesh.tangent(v, 0, 0);
      const Mat g = model.metric_at(mesh.vertex(v));
      Vec n = model.complex_structure_at(mesh.vertex(v)) * t;
      n /= std::sqrt(n.dot(g * n));
      nrm[v] = n;
      const Vec lap = mesh.pos(v + 1) - 2.0 * mesh.pos(v) + mesh.pos(v - 1);
      disp[v] = strength * lap.dot(g * n) * n;
    }
    double flux = 0.0, nflux = 0.0;
    for (int e = 0; e < N; ++e) {
      const Mat w = model.symplectic_at(mesh.edge_midpoint(e));
      const Vec ev = mesh.edge_vector(e);
      flux += ev.dot(w * (0.5 * (disp[mesh.edge_tail(e)] + disp[mesh.edge_head(e)])));
      nflux += ev.dot(w * (0.5 * (nrm[mesh.edge_tail(e)] + nrm[mesh.edge_head(e)])));
    }
    const double c = std::abs(nflux) > 1e-12 ? flux / nflux : 0.0;
    std::vector<Vec> verts(N);
    for (int v = 0; v < N; ++v) {
      verts[v] = mesh.vertex(v) + disp[v] - c * nrm[v];
      if (!model.in_domain(verts[v]))
        throw DomainError("smooth_loop_normal: vertex leaves the chart domain");
    }
    mesh.set_vertices(std::move(verts));
  }
}

struct DescentOptions {
  int max_iterations = 200;
  double tolerance = 1e-3;        // stop when l_norm drops below
  double initial_step = 0.5;
  double min_step = 1e-9;
  double collapse_fraction = 0.01;
  bool harmonic_directions = false;  // non-isodrastic, period-changing moves
  double smoothing = 0.5;            // loop high-mode damping strength per round
  int smoothing_rounds = 4;
  int record_every = 1;
  FlowOptions flow;
};

struct DescentResult {
  LagrangianMesh mesh;
  FlowTrace trace;
  bool converged = false;
  bool stagnated = false;
  bool collapsed = false;
  double final_l_norm = 0.0;
  int iterations = 0;
};

// Volume descent over a truncated function basis (isodrastic moves), with
// optional harmonic normal directions X = -I beta# that change periods.
// First variation: dVol(X) = -integral G(H, X) dmu.
inline DescentResult volume_descent(const LagrangianMesh& mesh_in,
                                    const std::vector<ScalarField>& basis, DescentOptions opts = {}) {
  DescentResult out{mesh_in, {}, false, false, false, 0.0, 0};
  LagrangianMesh& mesh = out.mesh;
  const auto& model = mesh.model();
  const int nb = static_cast<int>(basis.size());
  const double vol0 = mesh.induced_volume().first;
  double vol = vol0;
  double step = opts.initial_step;
  out.trace.hamiltonian = "volume-descent";

  // Vertex quadrature weights: dual-cell share of the volume density.
  auto vertex_weights = [&] {
    Vec w = Vec::Zero(mesh.num_vertices());
    auto [total, dmu] = mesh.induced_volume();
    (void)total;
    if (mesh.topology() == Topology::Loop) {
      const int N = mesh.num_edges();
      for (int e = 0; e < N; ++e) {
        w[mesh.edge_tail(e)] += 0.5 * dmu.values[e];
        w[mesh.edge_head(e)] += 0.5 * dmu.values[e];
      }
    } else {
      for (int j = 0; j < mesh.n2(); ++j)
        for (int i = 0; i < mesh.n1(); ++i) {
          const double q = 0.25 * dmu.values[mesh.face(i, j)];
          w[mesh.vid(i, j)] += q;
          w[mesh.vid(i + 1, j)] += q;
          w[mesh.vid(i, j + 1)] += q;
          w[mesh.vid(i + 1, j + 1)] += q;
        }
    }
    return w;
  };

  // Harmonic normal directions from the harmonic 1-form basis.
  auto harmonic_fields = [&] {
    std::vector<std::vector<Vec>> fields;
    if (!opts.harmonic_directions) return fields;
    DecOperators dec(mesh);
    auto hb = dec.harmonic_basis();
    const int n = model.dim_complex();
    for (const auto& beta : hb.forms) {
      std::vector<Vec> X(mesh.num_vertices());
      for (int v = 0; v < mesh.num_vertices(); ++v) {
        const int i = mesh.topology() == Topology::Loop ? v : v % mesh.n1();
        const int j = mesh.topology() == Topology::Loop ? 0 : v / mesh.n1();
        Mat T(model.real_dim(), n);
        for (int a = 0; a < n; ++a) T.col(a) = mesh.tangent(i, j, a);
        // beta(t_a): average the adjacent edge integrals, per parameter unit.
        Vec b(n);
        if (mesh.topology() == Topology::Loop) {
          const int N = mesh.num_edges();
          b[0] = 0.5 * (beta.values[v] + beta.values[(v + N - 1) % N]) / mesh.ds1();
        } else {
          b[0] = 0.5 * (beta.values[mesh.s_edge(i, j)] + beta.values[mesh.s_edge(i - 1, j)]) /
                 mesh.ds1();
          b[1] = 0.5 * (beta.values[mesh.t_edge(i, j)] + beta.values[mesh.t_edge(i, j - 1)]) /
                 mesh.ds2();
        }
        const Mat g = model.metric_at(mesh.vertex(v));
        Vec sharp = T * (T.transpose() * g * T).fullPivLu().solve(b);
        X[v] = -model.complex_structure_at(mesh.vertex(v)) * sharp;
      }
      fields.push_back(std::move(X));
    }
    return fields;
  };

  out.trace.records.push_back(observe_mesh(mesh, 0, opts.flow));
  out.final_l_norm = out.trace.records.back().l_norm;

  for (int it = 1; it <= opts.max_iterations; ++it) {
    out.iterations = it;
    if (out.final_l_norm < opts.tolerance) {
      out.converged = true;
      break;
    }

    auto ii = second_fundamental_form(mesh);
    const Vec w = vertex_weights();
    auto hfields = harmonic_fields();
    const int nh = static_cast<int>(hfields.size());
    const int nd = nb + nh;
    const int V = mesh.num_vertices();
    const int n = model.dim_complex();

    // Normal components of every candidate field, plus per-vertex metric.
    std::vector<Mat> gms(V);
    std::vector<Mat> tang_proj(V);  // P_T = T (T^t g T)^-1 T^t g
    for (int v = 0; v < V; ++v) {
      const int i = mesh.topology() == Topology::Loop ? v : v % mesh.n1();
      const int j = mesh.topology() == Topology::Loop ? 0 : v / mesh.n1();
      Mat T(model.real_dim(), n);
      for (int a = 0; a < n; ++a) T.col(a) = mesh.tangent(i, j, a);
      gms[v] = model.metric_at(mesh.vertex(v));
      tang_proj[v] = T * (T.transpose() * gms[v] * T).inverse() * T.transpose() * gms[v];
    }
    std::vector<std::vector<Vec>> normal(nd, std::vector<Vec>(V));
    for (int b = 0; b < nd; ++b)
      for (int v = 0; v < V; ++v) {
        Vec X = b < nb ? hamiltonian_field(model, basis[b], mesh.vertex(v)) : hfields[b - nb][v];
        normal[b][v] = X - tang_proj[v] * X;
      }

    // Volume gradient and normal-component mass matrix; the solve is a
    // Gauss-Newton preconditioning that irons out basis collinearity.
    Vec grad(nd);
    Mat mass = Mat::Zero(nd, nd);
    for (int a = 0; a < nd; ++a) {
      double g = 0.0;
      for (int v = 0; v < V; ++v) g -= w[v] * ii.mean_curvature[v].dot(gms[v] * normal[a][v]);
      grad[a] = g;
      for (int b = a; b < nd; ++b) {
        double m = 0.0;
        for (int v = 0; v < V; ++v) m += w[v] * normal[a][v].dot(gms[v] * normal[b][v]);
        mass(a, b) = mass(b, a) = m;
      }
    }
    if (grad.cwiseAbs().maxCoeff() < 1e-14) {
      out.stagnated = true;
      break;
    }
    Eigen::JacobiSVD<Mat> svd(mass, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    // Move along c* = -M^-1 grad (the least-squares projection of +H onto
    // the achievable normal motions); try_step applies -gh / -gharm.
    Vec coeff = svd.solve(grad);
    Vec gh = coeff.head(nb);
    Vec gharm = coeff.tail(nh);

    // Combined Hamiltonian move (midpoint step of a smooth ambient field, so
    // no vertex-scale noise can grow) plus Euler moves along the harmonic
    // fields. Loops are resampled to uniform arclength afterwards: tangential
    // sliding clusters vertices and lets the polygon shorten without the
    // curve moving, which would fool the volume line search.
    auto try_step = [&](double lambda) -> std::pair<bool, LagrangianMesh> {
      LagrangianMesh cand = mesh;
      try {
        if (nb > 0) {
          ScalarField combined = [&](const Vec& p) {
            double s = 0.0;
            for (int b = 0; b < nb; ++b) s -= gh[b] * basis[b](p);
            return s;
          };
          advance_vertices(cand, combined, lambda);
        }
        if (nh > 0) {
          std::vector<Vec> verts(V);
          for (int v = 0; v < V; ++v) {
            verts[v] = cand.vertex(v);
            for (int k = 0; k < nh; ++k) verts[v] -= lambda * gharm[k] * hfields[k][v];
            if (!model.in_domain(verts[v])) return {false, cand};
          }
          cand.set_vertices(std::move(verts));
        }
        if (cand.topology() == Topology::Loop) {
          resample_loop_uniform(cand);
          smooth_loop_normal(cand, opts.smoothing, opts.smoothing_rounds);
        }
      } catch (const Error&) {
        return {false, cand};
      }
      return {true, cand};
    };

    bool accepted = false;
    while (step >= opts.min_step) {
      auto [ok, cand] = try_step(step);
      if (ok) {
        const double cvol = cand.induced_volume().first;
        if (cvol < vol - 1e-10) {
          mesh = std::move(cand);
          vol = cvol;
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      out.stagnated = true;
      break;
    }
    step = std::min(step * 1.5, opts.initial_step);

    if (it % opts.record_every == 0)
      out.trace.records.push_back(observe_mesh(mesh, it, opts.flow));
    out.final_l_norm = out.trace.records.back().l_norm;
    if (it % opts.record_every != 0) {
      DecOperators dec(mesh);
      out.final_l_norm = dec.norm(mean_curvature_one_form(mesh));
    }

    if (vol < opts.collapse_fraction * vol0) {
      // Corollary-3 behavior: the volume heads to zero instead of a minimum.
      out.collapsed = true;
      break;
    }
  }
  if (out.final_l_norm < opts.tolerance) out.converged = true;
  if (out.trace.records.back().step != out.iterations)
    out.trace.records.push_back(observe_mesh(mesh, out.iterations, opts.flow));
  return out;
}

}  // namespace maslov
