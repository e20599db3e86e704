// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion is built on the library API (and the scenario
// layer where the criterion references a scenario by name).

#include <chrono>
#include <cstdio>
#include <random>

#include <maslov/scenarios.hpp>

using namespace maslov;

namespace {

int failures = 0;

void verdict(int index, bool ok, const std::string& label, const std::string& detail) {
  std::printf("criterion %2d: %s  %s  [%s]\n", index, ok ? "PASS" : "FAIL", label.c_str(),
              detail.c_str());
  if (!ok) ++failures;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::shared_ptr<const AmbientModel> flat1() {
  return std::make_shared<AmbientModel>(AmbientModel::flat_complex(1));
}
std::shared_ptr<const AmbientModel> flat2() {
  return std::make_shared<AmbientModel>(AmbientModel::flat_complex(2));
}
std::shared_ptr<const AmbientModel> sphere1() {
  return std::make_shared<AmbientModel>(AmbientModel::round_sphere(1.0));
}
std::shared_ptr<const AmbientModel> elliptic() {
  return std::make_shared<AmbientModel>(AmbientModel::flat_torus(1));
}

// 1. Maslov integrality & classical reduction under 5 s.
void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  auto circ = circle_mesh(flat1(), 256);
  auto conn = relative_connection(circ);
  DecomposeOptions k1, k2;
  k2.power = 2;
  auto c1 = decompose_connection(conn, k1);
  auto c2 = decompose_connection(conn, k2);
  auto torus = product_torus_mesh(flat2(), 32, 32);
  auto tconn = relative_connection(torus);
  auto t1 = decompose_connection(tconn, k1);
  auto t2 = decompose_connection(tconn, k2);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = c1.maslov == std::vector<long>{1} && c2.maslov == std::vector<long>{2} &&
                  t1.maslov == std::vector<long>{1, 1} && t2.maslov == std::vector<long>{2, 2} &&
                  secs < 5.0;
  verdict(1, ok, "Maslov integrality: circle 1/2, product torus (1,1)/(2,2)",
          "runtime " + fmt(secs) + " s");
}

// 2. Prop. 9 cross-pipeline residual: order ~ 2 over a 4-rung ladder.
void criterion_2() {
  bool ok = true;
  std::string detail;
  auto ladder = [&](const std::string& name, const std::function<LagrangianMesh(int)>& make,
                    const std::vector<int>& ns) {
    std::vector<double> res;
    for (int n : ns) res.push_back(verify_prop9(make(n)).prop9_residual);
    const double order = observed_order(ns, res);
    ok = ok && order > 1.7 && order < 2.3 && res.back() < 1e-3;
    detail += name + " order " + fmt(order) + " final " + fmt(res.back()) + "; ";
  };
  auto f1 = flat1();
  ladder("flat-circle", [&](int n) { return circle_mesh(f1, n); }, {64, 128, 256, 512});
  auto sph = sphere1();
  ladder("sphere-latitude", [&](int n) { return latitude_mesh(sph, pi / 3.0, n); },
         {64, 128, 256, 512});
  auto pot = potential_torus_model(0.05);
  Vec c(2);
  c << 0.4, 1.3;
  ladder("potential-torus", [&](int n) { return potential_torus_mesh(pot, c, n, n); },
         {16, 24, 32, 48});
  verdict(2, ok, "Prop. 9 residual decays at second order on all three scenarios", detail);
}

// 3. Ricci identity d alpha_H = rho|_S.
void criterion_3() {
  auto pot = potential_torus_model(0.05);
  Vec c(2);
  c << 0.4, 1.3;
  std::vector<int> ns = {32, 64};
  std::vector<double> res;
  for (int n : ns)
    res.push_back(verify_ricci_identity(potential_torus_mesh(pot, c, n, n)).max_residual);
  const double order = observed_order(ns, res);
  auto flat_rep = verify_ricci_identity(product_torus_mesh(flat2(), 32, 32));
  auto cy_plane = LagrangianMesh::build_torus_grid(
      std::make_shared<AmbientModel>(AmbientModel::flat_torus(2)),
      [](double s, double t) {
        Vec p(4);
        p << two_pi * s, 0.0, two_pi * t, 0.0;
        return p;
      },
      32, 32);
  auto cy_rep = verify_ricci_identity(cy_plane);
  const bool ok = res.back() < 5e-3 && order > 1.5 && order < 2.5 &&
                  flat_rep.max_residual < 1e-6 &&
                  flat_rep.rho_flux.values.cwiseAbs().maxCoeff() < 1e-6 &&
                  cy_rep.max_residual < 1e-6;
  verdict(3, ok, "Ricci identity on the potential torus; flat/KE controls vanish",
          "64x64 residual " + fmt(res.back()) + " order " + fmt(order));
}

// 4. Sphere classification at cos(theta0) in {0, +0.5, -0.5}.
void criterion_4() {
  auto sph = sphere1();
  const int N = 8192;  // discrete holonomy bias 2 pi h^2 / 12 must sit below 1e-6
  bool ok = true;
  std::string detail;
  for (double c : {0.0, 0.5, -0.5}) {
    auto mesh = latitude_mesh(sph, std::acos(c), N);
    auto bs = is_bohr_sommerfeld(relative_connection(mesh), 1, 1e-3);
    auto minim = minimality_report(mesh, 1e-3);
    const double defect = bs.defects[0];
    const bool equator = c == 0.0;
    ok = ok && bs.satisfied == equator && minim.l_minimal == equator && minim.h_norm < 1e-6 &&
         (equator ? defect < 1e-6 : std::abs(defect - pi) < 1e-3);
    detail += "cos=" + fmt(c) + " defect " + fmt(defect) + "; ";
  }
  verdict(4, ok, "latitudes: BS/defect/L-minimality only at the equator, all H-minimal", detail);
}

// 5. Deformation invariance of the Maslov integer.
void criterion_5() {
  ScenarioConfig cfg;
  cfg.name = "elliptic-invariance";
  auto res = run_scenario(cfg);
  const double drift = res.report["max_fractional_drift"].get<double>();
  verdict(5, res.passed(), "Maslov constant across 5 random Hamiltonians x 50 steps",
          "fractional drift " + fmt(drift));
}

// 6. Hodge machinery on random 1-forms.
void criterion_6() {
  std::mt19937 rng(2024);
  std::normal_distribution<double> gauss;
  auto torus = product_torus_mesh(flat2(), 32, 32);
  DecOperators dect(torus);
  double recon = 0.0, ortho = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    DiscreteForm w = make_form(torus, 1);
    for (int e = 0; e < torus.num_edges(); ++e) w.values[e] = gauss(rng);
    auto split = dect.hodge_decompose(w);
    DiscreteForm back = make_form(torus, 1);
    back.values = split.exact.values + split.coexact.values + split.harmonic.values - w.values;
    recon = std::max(recon, dect.norm(back) / dect.norm(w));
    ortho = std::max({ortho, std::abs(dect.inner(split.exact, split.coexact)),
                      std::abs(dect.inner(split.exact, split.harmonic)),
                      std::abs(dect.inner(split.coexact, split.harmonic))});
  }
  auto loop = circle_mesh(flat1(), 64);
  DecOperators decl(loop);
  const size_t dim_t = dect.harmonic_basis().forms.size();
  const size_t dim_l = decl.harmonic_basis().forms.size();
  const bool ok = recon < 1e-10 && ortho < 1e-10 && dim_t == 2 && dim_l == 1;
  verdict(6, ok, "Hodge reconstruction/orthogonality < 1e-10; b1 = 2 (torus), 1 (loop)",
          "recon " + fmt(recon) + " ortho " + fmt(ortho));
}

// 7. Hodge-split matching on the flat circle: 2 pi = 0 + 2 pi * 1.
void criterion_7() {
  auto match = hodge_match(circle_mesh(flat1(), 256));
  const bool ok = match.period_residual < 1e-3 &&
                  std::abs(match.connection_periods[0] - two_pi) < 1e-6 &&
                  std::abs(match.alpha_periods[0] - two_pi) < 1e-3;
  verdict(7, ok, "harmonic period of alpha_H equals fractional + 2 pi * m with m = 1",
          "residual " + fmt(match.period_residual));
}

// 8. Half-weighting masses and constant density on the special line.
void criterion_8() {
  auto line = elliptic_line_mesh(elliptic(), 64);
  auto rep = decompose_connection(relative_connection(line));
  bool ok = true;
  std::string detail;
  for (double r : {0.5, 1.0, 10.0}) {
    auto hw = half_weight(rep, line, r);
    const double mean = hw.density.values.mean();
    double var = 0.0;
    for (int e = 0; e < hw.density.values.size(); ++e)
      var = std::max(var, std::abs(hw.density.values[e] - mean) / std::abs(mean));
    ok = ok && std::abs(hw.total - r) < 1e-8 && var < 1e-6;
    detail += "r=" + fmt(r) + " total " + fmt(hw.total) + "; ";
  }
  verdict(8, ok, "half-weight integrates to r and is constant on the special line", detail);
}

// 9. Minimality descent and the collapse obstruction.
void criterion_9() {
  ScenarioConfig cfg;
  cfg.name = "sphere-descent";
  auto res = run_scenario(cfg);
  const bool descended = res.passed();
  const double lnorm = res.report["final_l_norm"].get<double>();

  DescentOptions opts;
  opts.harmonic_directions = true;
  opts.max_iterations = 400;
  opts.initial_step = 0.2;
  opts.tolerance = 1e-12;
  auto collapse = volume_descent(circle_mesh(flat1(), 64), {}, opts);
  const bool ok = descended && collapse.collapsed && !collapse.converged;
  verdict(9, ok, "perturbed great circle reaches |alpha_H| < 1e-3; flat circle collapses",
          "descent l_norm " + fmt(lnorm) + ", collapse volume " +
              fmt(collapse.trace.records.back().volume));
}

// 10. Im theta zero counts realize the Maslov integers exactly.
void criterion_10() {
  bool ok = true;
  auto circ = circle_mesh(flat1(), 256);
  ok = ok && imtheta_zero_set(circ) == decompose_connection(relative_connection(circ)).maslov;
  auto rev = circ.reversed();
  ok = ok && imtheta_zero_set(rev) == decompose_connection(relative_connection(rev)).maslov;
  auto torus = product_torus_mesh(flat2(), 32, 32);
  ok = ok && imtheta_zero_set(torus) == decompose_connection(relative_connection(torus)).maslov;
  auto line = elliptic_line_mesh(elliptic(), 64);
  ok = ok && imtheta_zero_set(line) == decompose_connection(relative_connection(line)).maslov;
  verdict(10, ok, "Im theta crossing counts equal Maslov integers on flat/elliptic meshes", "");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  if (failures == 0)
    std::printf("acceptance: all 10 criteria passed\n");
  else
    std::printf("acceptance: %d criteria FAILED\n", failures);
  return failures == 0 ? 0 : 1;
}
