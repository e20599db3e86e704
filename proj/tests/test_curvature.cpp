#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>

#include <maslov/curvature.hpp>

using namespace maslov;

namespace {

std::shared_ptr<const AmbientModel> flat1() {
  return std::make_shared<AmbientModel>(AmbientModel::flat_complex(1));
}
std::shared_ptr<const AmbientModel> flat2() {
  return std::make_shared<AmbientModel>(AmbientModel::flat_complex(2));
}
std::shared_ptr<const AmbientModel> sphere1() {
  return std::make_shared<AmbientModel>(AmbientModel::round_sphere(1.0));
}

LagrangianMesh circle(int N, double r = 1.0) {
  return LagrangianMesh::build_loop(
      flat1(),
      [=](double t) {
        Vec p(2);
        p << r * std::cos(two_pi * t), r * std::sin(two_pi * t);
        return p;
      },
      N);
}

LagrangianMesh latitude(double theta0, int N = 256) {
  const double r = 1.0 / std::tan(0.5 * theta0);
  return LagrangianMesh::build_loop(
      sphere1(),
      [=](double t) {
        Vec p(2);
        p << r * std::cos(two_pi * t), r * std::sin(two_pi * t);
        return p;
      },
      N);
}

LagrangianMesh product_torus(int N = 32) {
  return LagrangianMesh::build_torus_grid(
      flat2(),
      [](double s, double t) {
        Vec p(4);
        p << std::cos(two_pi * s), std::sin(two_pi * s), std::cos(two_pi * t),
            std::sin(two_pi * t);
        return p;
      },
      N, N);
}

}  // namespace

TEST_CASE("unit circle: |II| = 1, mean curvature points at the center") {
  auto mesh = circle(128);
  auto ii = second_fundamental_form(mesh);
  CHECK(ii.tangential_removed < 1e-10);  // exact symmetry of the circle
  for (int v = 0; v < mesh.num_vertices(); v += 17) {
    // Normalize II(t,t) by the induced metric to get the curvature vector.
    Vec t = mesh.tangent(v, 0, 0);
    double gtt = t.squaredNorm();
    Vec kappa = ii.value[v][0] / gtt;
    CHECK(std::abs(kappa.norm() - 1.0) < 1e-3);
    CHECK((kappa + mesh.vertex(v).normalized()).norm() < 1e-3);
    CHECK((ii.mean_curvature[v] + mesh.vertex(v)).norm() < 1e-3);
  }
}

TEST_CASE("affine plane piece in flat ambient is totally geodesic") {
  auto flat_t2 = std::make_shared<AmbientModel>(AmbientModel::flat_torus(2));
  auto plane = LagrangianMesh::build_torus_grid(
      flat_t2,
      [](double s, double t) {
        Vec p(4);
        p << two_pi * s, 0.0, two_pi * t, 0.0;
        return p;
      },
      16, 16);
  auto ii = second_fundamental_form(plane);
  for (int v = 0; v < plane.num_vertices(); ++v) {
    CHECK(ii.mean_curvature[v].norm() < 1e-12);
    for (const auto& val : ii.value[v]) CHECK(val.norm() < 1e-12);
  }
  CHECK(mean_curvature_one_form(plane).values.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sphere equator is geodesic: II and alpha_H vanish") {
  auto mesh = latitude(0.5 * pi, 256);
  auto ii = second_fundamental_form(mesh);
  for (int v = 0; v < mesh.num_vertices(); v += 31)
    CHECK(ii.mean_curvature[v].norm() < 1e-3);
  auto alpha = mean_curvature_one_form(mesh);
  CHECK(std::abs(alpha.values.sum()) < 1e-3);
}

TEST_CASE("alpha_H totals: circle 2 pi, latitude 2 pi cos(theta)") {
  CHECK(mean_curvature_one_form(circle(128)).values.sum() ==
        doctest::Approx(two_pi).epsilon(1e-3));
  const double theta0 = std::acos(0.6);
  auto mesh = latitude(theta0, 256);
  double tot = mean_curvature_one_form(mesh).values.sum();
  CHECK(std::abs(std::abs(tot) - two_pi * 0.6) < 2e-3);
  // Sign consistency with the transport pipeline.
  CHECK(tot == doctest::Approx(relative_connection(mesh).eta.values.sum()).epsilon(1e-3));
  // Gauss-Bonnet: total alpha_H plus enclosed cap area is 2 pi.
  CHECK(std::abs(std::abs(tot) + two_pi * (1.0 - 0.6) - two_pi) < 2e-3);
}

TEST_CASE("prop 9 cross-pipeline residual decays at second order") {
  auto residual = [](int N) { return verify_prop9(circle(N)).prop9_residual; };
  double r256 = residual(256), r512 = residual(512);
  CHECK(r256 < 1e-3);
  CHECK(r256 / r512 > 3.0);
  CHECK(r256 / r512 < 5.0);

  const double theta0 = pi / 3.0;
  auto rs = [&](int N) { return verify_prop9(latitude(theta0, N)).prop9_residual; };
  double s256 = rs(256), s512 = rs(512);
  CHECK(s256 < 1e-3);
  CHECK(s256 / s512 > 3.0);
  CHECK(s256 / s512 < 5.0);

  // Equator: both pipelines are near zero individually.
  auto eq = verify_prop9(latitude(0.5 * pi, 512));
  CHECK(eq.prop9_residual < 1e-4);
  CHECK(eq.eta.values.cwiseAbs().maxCoeff() < 1e-5);
  CHECK(eq.alpha_H.values.cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("ricci identity on the flat product torus: both sides vanish") {
  auto mesh = product_torus(32);
  auto rep = verify_ricci_identity(mesh);
  CHECK(rep.rho_flux.values.cwiseAbs().maxCoeff() == 0.0);  // flat ambient
  CHECK(rep.max_residual < 1e-6);
  CHECK_THROWS_AS((void)verify_ricci_identity(circle(64)), DegreeError);
}

TEST_CASE("prop 9 on the product torus, with curvature report fields") {
  auto rep = verify_prop9(product_torus(32));
  CHECK(rep.prop9_residual < 5e-3);
  CHECK(rep.has_ricci);
  CHECK(rep.ricci_residual < 1e-6);
  CHECK(rep.l_norm > 1.0);  // mean curvature is far from zero
}

TEST_CASE("minimality classification on the sphere") {
  auto eq = minimality_report(latitude(0.5 * pi, 2048), 1e-4);
  CHECK(eq.l_minimal);
  CHECK(eq.h_minimal);

  auto lat = minimality_report(latitude(std::acos(0.5), 2048), 1e-4);
  CHECK_FALSE(lat.l_minimal);
  CHECK(lat.h_minimal);  // constant geodesic curvature: delta alpha_H = 0
  CHECK(lat.l_norm > 0.1);

  // A wiggly loop in the flat ambient is neither.
  auto ell = std::make_shared<AmbientModel>(AmbientModel::flat_torus(1));
  auto wavy = LagrangianMesh::build_loop(
      ell,
      [](double t) {
        Vec p(2);
        p << two_pi * t, 0.5 * std::sin(2.0 * two_pi * t);
        return p;
      },
      256);
  auto w = minimality_report(wavy, 1e-4);
  CHECK_FALSE(w.l_minimal);
  CHECK_FALSE(w.h_minimal);
}

TEST_CASE("hodge match: circle identity 2 pi = 0 + 2 pi * 1") {
  auto mesh = circle(256);
  auto match = hodge_match(mesh);
  REQUIRE(match.alpha_periods.size() == 1);
  CHECK(match.alpha_periods[0] == doctest::Approx(two_pi).epsilon(1e-4));
  CHECK(match.connection_periods[0] == doctest::Approx(two_pi).epsilon(1e-6));
  CHECK(match.period_residual < 1e-3);
  CHECK(match.coexact_residual < 1e-3);
}

TEST_CASE("hodge match: special line has all parts zero; latitude is consistent") {
  auto ell = std::make_shared<AmbientModel>(AmbientModel::flat_torus(1));
  auto line = LagrangianMesh::build_loop(
      ell, [](double t) { Vec p(2); p << two_pi * t, 0.0; return p; }, 64);
  auto match = hodge_match(line);
  CHECK(std::abs(match.alpha_periods[0]) < 1e-10);
  CHECK(std::abs(match.connection_periods[0]) < 1e-10);
  CHECK(match.coexact_residual < 1e-10);

  auto lat = latitude(std::acos(0.25), 256);
  auto lm = hodge_match(lat);
  CHECK(lm.period_residual < 2e-3);

  // Near the half-integer boundary the match refuses to pick a branch.
  CHECK_THROWS_AS((void)hodge_match(latitude(pi / 3.0, 256)), HalfIntegerBoundaryError);
}
