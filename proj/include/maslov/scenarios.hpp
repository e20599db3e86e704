#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "flow.hpp"

namespace maslov {

// ---------------------------------------------------------------------------
// Config

struct ScenarioConfig {
  std::string name;
  nlohmann::json model;  // optional full model override (ambient JSON format)
  int n = 0;             // loop resolution; 0 picks the scenario default
  int n1 = 0, n2 = 0;    // grid resolutions
  std::vector<int> ladder;
  double theta = pi / 3.0;      // sphere-latitude polar angle
  double eps = 0.02;            // flow step size
  int steps = 50;               // flow steps
  int basis_degree = 3;         // descent basis truncation
  unsigned seed = 7;            // RNG seed for random Hamiltonians / forms
  double amplitude = 0.05;      // potential-kahler amplitude
  double deformation = 0.3;     // football-sphere deformation
  std::vector<double> radii = {0.5, 1.0, 10.0};  // half-weight masses
  std::string sub_scenario = "flat-circle";      // convergence target
  std::string out_dir;
  std::vector<std::string> formats = {"json"};
  int threads = 1;

  static ScenarioConfig from_json(const nlohmann::json& j) {
    ScenarioConfig c;
    if (j.contains("scenario")) c.name = j.at("scenario").get<std::string>();
    if (j.contains("model")) c.model = j.at("model");
    auto get = [&](const char* k, auto& slot) {
      if (j.contains(k)) slot = j.at(k).get<std::decay_t<decltype(slot)>>();
    };
    get("n", c.n);
    get("n1", c.n1);
    get("n2", c.n2);
    get("ladder", c.ladder);
    get("theta", c.theta);
    get("eps", c.eps);
    get("steps", c.steps);
    get("basis_degree", c.basis_degree);
    get("seed", c.seed);
    get("amplitude", c.amplitude);
    get("deformation", c.deformation);
    get("radii", c.radii);
    get("sub_scenario", c.sub_scenario);
    get("out", c.out_dir);
    get("formats", c.formats);
    get("threads", c.threads);
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["scenario"] = name;
    if (!model.is_null()) j["model"] = model;
    j["n"] = n;
    j["n1"] = n1;
    j["n2"] = n2;
    j["ladder"] = ladder;
    j["theta"] = theta;
    j["eps"] = eps;
    j["steps"] = steps;
    j["basis_degree"] = basis_degree;
    j["seed"] = seed;
    j["amplitude"] = amplitude;
    j["deformation"] = deformation;
    j["radii"] = radii;
    j["sub_scenario"] = sub_scenario;
    j["threads"] = threads;
    return j;
  }
};

struct ScenarioCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;
  std::string detail;
};

struct ScenarioResult {
  nlohmann::json report;
  std::vector<ScenarioCheck> checks;
  std::map<std::string, std::string> csv;  // stem -> file contents
  std::map<std::string, std::string> svg;
  bool passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Determinism: round every float to 12 significant digits before writing.

inline double round_sig(double x, int digits = 12) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, x);
  return std::strtod(buf, nullptr);
}

inline void round_json(nlohmann::json& j, int digits = 12) {
  if (j.is_number_float())
    j = round_sig(j.get<double>(), digits);
  else if (j.is_object() || j.is_array())
    for (auto& item : j) round_json(item, digits);
}

// ---------------------------------------------------------------------------
// Small report helpers

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Standalone SVG line chart, optionally log10 on either axis.
inline std::string svg_line_chart(const std::string& title, const std::string& xlabel,
                                  const std::string& ylabel, const std::vector<Series>& series,
                                  bool logx = false, bool logy = false) {
  const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  auto tx = [&](double v) { return logx ? std::log10(std::max(v, 1e-300)) : v; };
  auto ty = [&](double v) { return logy ? std::log10(std::max(v, 1e-300)) : v; };
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      xmin = std::min(xmin, tx(x)), xmax = std::max(xmax, tx(x));
      ymin = std::min(ymin, ty(y)), ymax = std::max(ymax, ty(y));
    }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  auto px = [&](double v) { return L + (W - L - R) * (tx(v) - xmin) / (xmax - xmin); };
  auto py = [&](double v) { return H - B - (H - T - B) * (ty(v) - ymin) / (ymax - ymin); };
  static const char* colors[] = {"#1f6fb2", "#c24f2e", "#3a8f4e", "#8452a8", "#b0852c"};
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n"
     << "<rect width='100%' height='100%' fill='white'/>\n"
     << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
     << "</text>\n"
     << "<line x1='" << L << "' y1='" << H - B << "' x2='" << W - R << "' y2='" << H - B
     << "' stroke='black'/>\n"
     << "<line x1='" << L << "' y1='" << T << "' x2='" << L << "' y2='" << H - B
     << "' stroke='black'/>\n"
     << "<text x='" << (L + W - R) / 2 << "' y='" << H - 12 << "' text-anchor='middle' font-size='12'>"
     << xlabel << (logx ? " (log10)" : "") << "</text>\n"
     << "<text x='16' y='" << (T + H - B) / 2
     << "' text-anchor='middle' font-size='12' transform='rotate(-90 16 " << (T + H - B) / 2
     << ")'>" << ylabel << (logy ? " (log10)" : "") << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = xmin + (xmax - xmin) * k / 4.0, fy = ymin + (ymax - ymin) * k / 4.0;
    os << "<text x='" << L + (W - L - R) * k / 4.0 << "' y='" << H - B + 16
       << "' text-anchor='middle' font-size='10'>" << round_sig(fx, 4) << "</text>\n"
       << "<text x='" << L - 6 << "' y='" << H - B - (H - T - B) * k / 4.0 + 4
       << "' text-anchor='end' font-size='10'>" << round_sig(fy, 4) << "</text>\n";
  }
  int ci = 0;
  for (const auto& s : series) {
    const char* col = colors[ci % 5];
    os << "<polyline fill='none' stroke='" << col << "' stroke-width='1.5' points='";
    for (auto [x, y] : s.points) os << round_sig(px(x), 6) << "," << round_sig(py(y), 6) << " ";
    os << "'/>\n";
    for (auto [x, y] : s.points)
      os << "<circle cx='" << round_sig(px(x), 6) << "' cy='" << round_sig(py(y), 6)
         << "' r='3' fill='" << col << "'/>\n";
    os << "<text x='" << W - R - 4 << "' y='" << T + 14 * (ci + 1)
       << "' text-anchor='end' font-size='11' fill='" << col << "'>" << s.name << "</text>\n";
    ++ci;
  }
  os << "</svg>\n";
  return os.str();
}

inline std::string residual_csv(const std::vector<int>& ns, const std::vector<double>& res,
                                const std::string& col) {
  std::ostringstream os;
  os << "resolution," << col << "\n";
  for (size_t i = 0; i < ns.size(); ++i) os << ns[i] << "," << round_sig(res[i]) << "\n";
  return os.str();
}

// Least-squares convergence order of residual ~ C h^p against resolution.
inline double observed_order(const std::vector<int>& ns, const std::vector<double>& res) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int m = static_cast<int>(ns.size());
  for (int i = 0; i < m; ++i) {
    const double x = -std::log(static_cast<double>(ns[i]));
    const double y = std::log(std::max(res[i], 1e-300));
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Mesh builders shared by scenarios and the acceptance suite

inline LagrangianMesh circle_mesh(std::shared_ptr<const AmbientModel> model, int N, double r = 1.0) {
  return LagrangianMesh::build_loop(
      model,
      [=](double t) {
        Vec p(2);
        p << r * std::cos(two_pi * t), r * std::sin(two_pi * t);
        return p;
      },
      N);
}

inline LagrangianMesh latitude_mesh(std::shared_ptr<const AmbientModel> sphere, double theta0,
                                    int N) {
  const double r = sphere->radius() / std::tan(0.5 * theta0);
  return circle_mesh(std::move(sphere), N, r);
}

inline LagrangianMesh product_torus_mesh(std::shared_ptr<const AmbientModel> flat2, int n1,
                                         int n2) {
  return LagrangianMesh::build_torus_grid(
      std::move(flat2),
      [](double s, double t) {
        Vec p(4);
        p << std::cos(two_pi * s), std::sin(two_pi * s), std::cos(two_pi * t),
            std::sin(two_pi * t);
        return p;
      },
      n1, n2);
}

inline LagrangianMesh elliptic_line_mesh(std::shared_ptr<const AmbientModel> torus, int N) {
  return LagrangianMesh::build_loop(
      std::move(torus),
      [](double t) {
        Vec p(2);
        p << two_pi * t, 0.0;
        return p;
      },
      N);
}

// Graph torus y = c + v(x) over a potential-Kahler ambient, corrected until it
// is Lagrangian to solver precision. The flat section picks up an O(eps)
// symplectic flux from the potential; writing v = (d2 chi, -d1 chi) turns the
// flux equation into Delta chi = -q, which we solve by fixed-point iteration
// in Fourier space (measure the pulled-back flux on the grid, transform, add
// r_hat / |kappa|^2 to chi_hat). Three sweeps reach the finite-difference
// floor; a perturbative one-shot would leave an O(eps^2) Lagrangian defect
// that pollutes the Prop.-9 and Ricci residual measurements.
inline LagrangianMesh potential_torus_mesh(std::shared_ptr<const AmbientModel> model, Vec c,
                                           int n1, int n2, int sweeps = 3) {
  if (model->dim_complex() != 2) throw ModelConfigError("potential_torus_mesh: needs n = 2");
  const double L1 = two_pi, L2 = two_pi;  // default lattice
  Eigen::MatrixXcd chi = Eigen::MatrixXcd::Zero(n1, n2);  // Fourier modes of chi
  auto eval = [&](const Eigen::MatrixXcd& hat, int di, int dj, double x1, double x2) {
    // derivative order (di, dj) of the trigonometric interpolant
    Complex s = 0.0;
    for (int a = 0; a < n1; ++a)
      for (int b = 0; b < n2; ++b) {
        if (hat(a, b) == Complex(0, 0)) continue;
        const double k1 = two_pi / L1 * (a <= n1 / 2 ? a : a - n1);
        const double k2 = two_pi / L2 * (b <= n2 / 2 ? b : b - n2);
        Complex f = hat(a, b) * std::exp(Complex(0, k1 * x1 + k2 * x2));
        for (int q = 0; q < di; ++q) f *= Complex(0, k1);
        for (int q = 0; q < dj; ++q) f *= Complex(0, k2);
        s += f;
      }
    return s.real();
  };
  auto section = [&](double x1, double x2) {
    Vec p(4);
    p << x1, c[0] + eval(chi, 0, 1, x1, x2), x2, c[1] - eval(chi, 1, 0, x1, x2);
    return p;
  };
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    // Pulled-back symplectic flux coefficient on the grid.
    Eigen::MatrixXcd r(n1, n2);
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j) {
        const double x1 = L1 * i / n1, x2 = L2 * j / n2;
        const Vec p = section(x1, x2);
        Vec t1(4), t2(4);
        t1 << 1.0, eval(chi, 1, 1, x1, x2), 0.0, -eval(chi, 2, 0, x1, x2);
        t2 << 0.0, eval(chi, 0, 2, x1, x2), 1.0, -eval(chi, 1, 1, x1, x2);
        r(i, j) = t1.dot(model->symplectic_at(p) * t2);
      }
    // Plain DFT; the grids are small enough that O((n1 n2)^2) is fine.
    Eigen::MatrixXcd rhat = Eigen::MatrixXcd::Zero(n1, n2);
    for (int a = 0; a < n1; ++a)
      for (int b = 0; b < n2; ++b) {
        Complex s = 0.0;
        for (int i = 0; i < n1; ++i)
          for (int j = 0; j < n2; ++j)
            s += r(i, j) * std::exp(Complex(0, -two_pi * (double(a) * i / n1 + double(b) * j / n2)));
        rhat(a, b) = s / double(n1 * n2);
      }
    for (int a = 0; a < n1; ++a)
      for (int b = 0; b < n2; ++b) {
        if (a == 0 && b == 0) continue;  // mean flux is the (vanishing) class pairing
        if (std::abs(rhat(a, b)) < 1e-14) continue;  // keep chi sparse for eval()
        const double k1 = two_pi / L1 * (a <= n1 / 2 ? a : a - n1);
        const double k2 = two_pi / L2 * (b <= n2 / 2 ? b : b - n2);
        chi(a, b) += rhat(a, b) / (k1 * k1 + k2 * k2);
      }
  }
  // The corrected section is Lagrangian up to the mesh's own O(h^2)
  // quadrature error, so the builder guard must scale with resolution.
  BuildOptions opts;
  const double h = two_pi / std::min(n1, n2);
  opts.lagrangian_tolerance = std::max(1e-6, h * h * model->amplitude());
  return LagrangianMesh::build_torus_grid(
      model, [&](double s, double t) { return section(L1 * s, L2 * t); }, n1, n2, opts);
}

// Default potential terms used by the potential-torus scenarios: waves that
// couple x and y directions, so the flat section is genuinely non-Lagrangian
// and the Ricci form is nonzero.
inline std::vector<FourierTerm> default_potential_terms() {
  std::vector<FourierTerm> terms(3);
  terms[0].amplitude = 1.0;
  terms[0].wave = Eigen::VectorXi(4);
  terms[0].wave << 1, 0, 0, 1;
  terms[0].shift = 0.3;
  terms[1].amplitude = 0.7;
  terms[1].wave = Eigen::VectorXi(4);
  terms[1].wave << 0, 1, 1, 0;
  terms[1].shift = 1.1;
  terms[2].amplitude = 0.5;
  terms[2].wave = Eigen::VectorXi(4);
  terms[2].wave << 1, 0, 1, 0;
  terms[2].shift = 0.0;
  return terms;
}

inline std::shared_ptr<const AmbientModel> potential_torus_model(double amplitude) {
  return std::make_shared<AmbientModel>(AmbientModel::potential_kahler(
      AmbientModel::flat_torus(2), default_potential_terms(), amplitude));
}

// Monomial Hamiltonian basis in chart coordinates, total degree 1..degree.
inline std::vector<ScalarField> monomial_basis(int degree) {
  std::vector<ScalarField> basis;
  for (int kx = 0; kx <= degree; ++kx)
    for (int ky = 0; ky <= degree; ++ky) {
      if (kx + ky == 0 || kx + ky > degree) continue;
      basis.push_back([=](const Vec& p) { return std::pow(p[0], kx) * std::pow(p[1], ky); });
    }
  return basis;
}

// Random 2 pi-periodic Fourier Hamiltonians for invariance experiments.
inline std::vector<ScalarField> random_fourier_family(unsigned seed, int count) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> amp(-0.3, 0.3), phase(0.0, two_pi);
  std::uniform_int_distribution<int> mode(1, 3);
  std::vector<ScalarField> family;
  for (int f = 0; f < count; ++f) {
    struct Term {
      double a, s;
      int kx, ky;
    };
    std::vector<Term> terms;
    for (int t = 0; t < 3; ++t) terms.push_back({amp(rng), phase(rng), mode(rng), mode(rng)});
    family.push_back([terms](const Vec& p) {
      double v = 0.0;
      for (const auto& t : terms) v += t.a * std::cos(t.kx * p[0] + t.ky * p[1] + t.s);
      return v;
    });
  }
  return family;
}

// ---------------------------------------------------------------------------
// Scenario implementations

namespace detail {

inline void check(ScenarioResult& out, const std::string& name, bool ok, double value,
                  const std::string& detail = "") {
  out.checks.push_back({name, ok, value, detail});
}

inline nlohmann::json maslov_json(const MaslovReport& rep) {
  nlohmann::json j;
  j["power"] = rep.power;
  j["maslov"] = rep.maslov;
  j["fractional"] = rep.fractional;
  j["curvature_norm"] = rep.curvature_norm;
  j["phase_oscillation"] = rep.phase_oscillation;
  j["is_flat"] = rep.is_flat;
  j["trivial_periods"] = rep.trivial_periods;
  j["bounded_periods"] = rep.bounded_periods;
  j["is_bohr_sommerfeld"] = rep.is_bohr_sommerfeld;
  j["is_special"] = rep.is_special;
  j["half_integer_boundary"] = rep.half_integer_boundary;
  return j;
}

inline nlohmann::json curvature_json(const CurvatureReport& rep) {
  nlohmann::json j;
  j["prop9_residual"] = rep.prop9_residual;
  j["l_norm"] = rep.l_norm;
  j["h_norm"] = rep.h_norm;
  j["has_ricci"] = rep.has_ricci;
  if (rep.has_ricci) j["ricci_residual"] = rep.ricci_residual;
  return j;
}

// Prop.-9 residual ladder shared by flat-circle, sphere-latitude,
// potential-torus and the convergence runner.
inline nlohmann::json prop9_ladder(const std::function<LagrangianMesh(int)>& make,
                                   const std::vector<int>& ns, ScenarioResult& out,
                                   const std::string& label) {
  std::vector<double> res;
  for (int N : ns) res.push_back(verify_prop9(make(N)).prop9_residual);
  const double order = observed_order(ns, res);
  nlohmann::json j;
  j["resolutions"] = ns;
  j["residuals"] = res;
  j["observed_order"] = order;
  out.csv[label + "-prop9"] = residual_csv(ns, res, "prop9_residual");
  Series s{label, {}};
  for (size_t i = 0; i < ns.size(); ++i) s.points.push_back({double(ns[i]), res[i]});
  out.svg[label + "-prop9"] =
      svg_line_chart("Prop. 9 residual vs resolution", "N", "max residual", {s}, true, true);
  check(out, label + ".prop9_order", order > 1.7 && order < 2.3, order);
  check(out, label + ".prop9_final", res.back() < 1e-3, res.back());
  return j;
}

inline ScenarioResult run_flat_circle(const ScenarioConfig& cfg) {
  ScenarioResult out;
  auto flat = std::make_shared<AmbientModel>(AmbientModel::flat_complex(1));
  const int N = cfg.n > 0 ? cfg.n : 256;
  auto mesh = circle_mesh(flat, N);
  auto conn = relative_connection(mesh);
  DecomposeOptions d1, d2;
  d2.power = 2;
  auto rep1 = decompose_connection(conn, d1);
  auto rep2 = decompose_connection(conn, d2);
  out.report["n"] = N;
  out.report["maslov_power1"] = maslov_json(rep1);
  out.report["maslov_power2"] = maslov_json(rep2);
  check(out, "maslov.k1", rep1.maslov == std::vector<long>{1},
        rep1.maslov.empty() ? -1 : double(rep1.maslov[0]));
  check(out, "maslov.k2", rep2.maslov == std::vector<long>{2},
        rep2.maslov.empty() ? -1 : double(rep2.maslov[0]));
  auto zeros = imtheta_zero_set(mesh);
  out.report["imtheta_winding"] = zeros;
  check(out, "imtheta.equals_maslov", zeros == rep1.maslov,
        zeros.empty() ? -1 : double(zeros[0]));

  // Hodge-split matching: harmonic period of alpha_H = fractional + 2 pi m.
  auto match = hodge_match(mesh);
  out.report["hodge_match"] = {{"alpha_periods", match.alpha_periods},
                               {"connection_periods", match.connection_periods},
                               {"period_residual", match.period_residual},
                               {"coexact_residual", match.coexact_residual}};
  check(out, "hodge_match.period_residual", match.period_residual < 1e-3,
        match.period_residual);

  std::vector<int> ladder = cfg.ladder.empty() ? std::vector<int>{64, 128, 256, 512} : cfg.ladder;
  out.report["prop9"] =
      prop9_ladder([&](int k) { return circle_mesh(flat, k); }, ladder, out, "flat-circle");

  // Corollary-3 obstruction: descent shrinks the Maslov-1 circle to the
  // collapse guard instead of finding a minimal representative.
  DescentOptions dopt;
  dopt.harmonic_directions = true;
  dopt.max_iterations = 400;
  dopt.initial_step = 0.2;
  dopt.tolerance = 1e-12;
  dopt.record_every = 25;
  auto desc = volume_descent(circle_mesh(flat, 64), {}, dopt);
  out.report["collapse_descent"] = {{"collapsed", desc.collapsed},
                                    {"iterations", desc.iterations},
                                    {"final_volume", desc.trace.records.back().volume},
                                    {"initial_volume", desc.trace.records.front().volume}};
  check(out, "descent.collapse_guard", desc.collapsed && !desc.converged,
        desc.trace.records.back().volume);
  Series vol{"volume", {}};
  for (const auto& r : desc.trace.records) vol.points.push_back({double(r.step), r.volume});
  out.svg["flat-circle-collapse"] =
      svg_line_chart("Volume collapse under descent", "iteration", "volume", {vol});
  out.csv["flat-circle-descent"] = desc.trace.to_csv();
  return out;
}

inline ScenarioResult run_flat_product_torus(const ScenarioConfig& cfg) {
  ScenarioResult out;
  auto flat2 = std::make_shared<AmbientModel>(AmbientModel::flat_complex(2));
  const int n1 = cfg.n1 > 0 ? cfg.n1 : 32, n2 = cfg.n2 > 0 ? cfg.n2 : 32;
  auto mesh = product_torus_mesh(flat2, n1, n2);
  auto conn = relative_connection(mesh);
  DecomposeOptions d1, d2;
  d2.power = 2;
  auto rep1 = decompose_connection(conn, d1);
  auto rep2 = decompose_connection(conn, d2);
  out.report["n1"] = n1;
  out.report["n2"] = n2;
  out.report["maslov_power1"] = maslov_json(rep1);
  out.report["maslov_power2"] = maslov_json(rep2);
  check(out, "maslov.k1", rep1.maslov == std::vector<long>{1, 1}, 0);
  check(out, "maslov.k2", rep2.maslov == std::vector<long>{2, 2}, 0);
  auto zeros = imtheta_zero_set(mesh);
  out.report["imtheta_winding"] = zeros;
  check(out, "imtheta.equals_maslov", zeros == rep1.maslov, 0);
  auto crep = verify_prop9(mesh);
  out.report["curvature"] = curvature_json(crep);
  check(out, "ricci.flat_ambient", crep.has_ricci && crep.ricci_residual < 1e-6,
        crep.ricci_residual);
  return out;
}

inline ScenarioResult run_elliptic_line(const ScenarioConfig& cfg) {
  ScenarioResult out;
  auto torus = std::make_shared<AmbientModel>(AmbientModel::flat_torus(1));
  const int N = cfg.n > 0 ? cfg.n : 64;
  auto mesh = elliptic_line_mesh(torus, N);
  auto conn = relative_connection(mesh);
  auto rep = decompose_connection(conn);
  out.report["n"] = N;
  out.report["maslov"] = maslov_json(rep);
  check(out, "special", rep.is_special, rep.phase_oscillation);
  check(out, "bohr_sommerfeld", rep.is_bohr_sommerfeld, 0);
  check(out, "maslov.trivial", rep.maslov == std::vector<long>{0}, 0);
  auto zeros = imtheta_zero_set(mesh);
  out.report["imtheta_winding"] = zeros;
  check(out, "imtheta.equals_maslov", zeros == rep.maslov, 0);
  auto minim = minimality_report(mesh);
  out.report["minimality"] = {{"l_minimal", minim.l_minimal},
                              {"h_minimal", minim.h_minimal},
                              {"l_norm", minim.l_norm}};
  check(out, "l_minimal", minim.l_minimal, minim.l_norm);
  auto hw = half_weight(rep, mesh, 1.0);
  const double mean = hw.density.values.mean();
  double var = 0.0;
  for (int e = 0; e < hw.density.values.size(); ++e)
    var = std::max(var, std::abs(hw.density.values[e] - mean) / std::abs(mean));
  out.report["half_weight"] = {{"total", hw.total}, {"relative_variation", var}};
  check(out, "half_weight.constant_density", var < 1e-6, var);
  return out;
}

inline ScenarioResult run_elliptic_invariance(const ScenarioConfig& cfg) {
  ScenarioResult out;
  auto torus = std::make_shared<AmbientModel>(AmbientModel::flat_torus(1));
  const int N = cfg.n > 0 ? cfg.n : 64;
  auto mesh = elliptic_line_mesh(torus, N);
  auto family = random_fourier_family(cfg.seed, 5);
  auto rep = invariance_experiment(mesh, family, cfg.eps, cfg.steps);
  out.report["n"] = N;
  out.report["hamiltonians"] = family.size();
  out.report["steps"] = cfg.steps;
  out.report["eps"] = cfg.eps;
  out.report["seed"] = cfg.seed;
  out.report["maslov_constant"] = rep.maslov_constant;
  out.report["max_fractional_drift"] = rep.max_fractional_drift;
  out.report["aborted_runs"] = rep.aborted_runs;
  check(out, "maslov_constant", rep.maslov_constant, 0);
  check(out, "fractional_drift", rep.max_fractional_drift < 1e-3, rep.max_fractional_drift);
  check(out, "no_aborts", rep.aborted_runs == 0, rep.aborted_runs);
  Series drift{"fractional period", {}};
  for (size_t k = 0; k < rep.traces.size(); ++k) {
    out.csv["invariance-trace-" + std::to_string(k)] = rep.traces[k].to_csv();
    for (const auto& r : rep.traces[k].records)
      if (!r.fractional.empty()) drift.points.push_back({double(r.step), r.fractional[0]});
  }
  out.svg["invariance-drift"] =
      svg_line_chart("Fractional period along flows", "step", "fractional", {drift});
  return out;
}

inline ScenarioResult run_sphere_latitude(const ScenarioConfig& cfg) {
  ScenarioResult out;
  auto sphere = std::make_shared<AmbientModel>(AmbientModel::round_sphere(1.0));
  // The chord-vs-arc bias of the discrete holonomy is 2 pi h^2 / 12, so the
  // sub-1e-6 equator defect needs N ~ 8192.
  const int N = cfg.n > 0 ? cfg.n : 8192;
  const double theta0 = cfg.theta;
  const double c = std::cos(theta0);
  auto mesh = latitude_mesh(sphere, theta0, N);
  auto conn = relative_connection(mesh);
  auto bs = is_bohr_sommerfeld(conn, 1, 1e-3);
  auto minim = minimality_report(mesh, 1e-3);
  out.report["n"] = N;
  out.report["theta"] = theta0;
  out.report["cos_theta"] = c;
  out.report["bohr_sommerfeld"] = bs.satisfied;
  out.report["period_defect"] = bs.defects.empty() ? 0.0 : bs.defects[0];
  out.report["minimality"] = {{"l_minimal", minim.l_minimal},
                              {"h_minimal", minim.h_minimal},
                              {"l_norm", minim.l_norm},
                              {"h_norm", minim.h_norm}};
  const double expected_defect =
      std::abs(two_pi * c - two_pi * std::round(c));  // distance of the period to 2 pi Z
  const double defect = bs.defects.empty() ? 0.0 : bs.defects[0];
  const bool is_equator = std::abs(c) < 1e-9;
  check(out, "period_defect",
        is_equator ? defect < 1e-6 : std::abs(defect - expected_defect) < 1e-3, defect);
  check(out, "bohr_sommerfeld", bs.satisfied == is_equator, bs.satisfied);
  check(out, "l_minimal_iff_equator", minim.l_minimal == is_equator, minim.l_norm);
  check(out, "h_minimal", minim.h_minimal, minim.h_norm);

  std::vector<int> ladder = cfg.ladder.empty() ? std::vector<int>{64, 128, 256, 512} : cfg.ladder;
  out.report["prop9"] = prop9_ladder(
      [&](int k) { return latitude_mesh(sphere, theta0, k); }, ladder, out, "sphere-latitude");
  return out;
}

inline ScenarioResult run_sphere_descent(const ScenarioConfig& cfg,
                                         const std::string& which = "round") {
  ScenarioResult out;
  std::shared_ptr<const AmbientModel> sphere;
  if (!cfg.model.is_null())
    sphere = std::make_shared<AmbientModel>(AmbientModel::from_json(cfg.model));
  else if (which == "football")
    sphere =
        std::make_shared<AmbientModel>(AmbientModel::football_sphere(1.0, cfg.deformation));
  else
    sphere = std::make_shared<AmbientModel>(AmbientModel::round_sphere(1.0));
  const int N = cfg.n > 0 ? cfg.n : 256;
  const double delta = 0.05;
  // Mean radius tuned so the enclosed chart area is half the sphere (the
  // equator's class); isodrastic moves preserve it.
  auto enclosed = [&](double r0) {
    double area = 0.0;
    const int Q = 512;
    for (int q = 0; q < Q; ++q) {
      const double phi = two_pi * q / Q;
      const double r = r0 * (1.0 + delta * std::cos(3.0 * phi));
      area += (two_pi / Q) * 2.0 * r * r / (1.0 + r * r);
    }
    return area;
  };
  double lo = 0.8, hi = 1.2;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (enclosed(mid) < two_pi ? lo : hi) = mid;
  }
  const double r0 = 0.5 * (lo + hi);
  auto start = LagrangianMesh::build_loop(
      sphere,
      [&](double t) {
        const double r = r0 * (1.0 + delta * std::cos(3.0 * two_pi * t));
        Vec p(2);
        p << r * std::cos(two_pi * t), r * std::sin(two_pi * t);
        return p;
      },
      N);
  DescentOptions opts;
  opts.max_iterations = 200;
  opts.tolerance = 1e-3;
  opts.initial_step = 0.1;
  opts.record_every = 10;
  auto res = volume_descent(start, monomial_basis(cfg.basis_degree), opts);
  out.report["n"] = N;
  out.report["model"] = sphere->to_json();
  out.report["basis_degree"] = cfg.basis_degree;
  out.report["iterations"] = res.iterations;
  out.report["converged"] = res.converged;
  out.report["stagnated"] = res.stagnated;
  out.report["collapsed"] = res.collapsed;
  out.report["final_l_norm"] = res.final_l_norm;
  out.report["initial_volume"] = res.trace.records.front().volume;
  out.report["final_volume"] = res.trace.records.back().volume;
  out.csv[which + "-descent"] = res.trace.to_csv();
  Series vol{"volume", {}}, ln{"l_norm", {}};
  for (const auto& r : res.trace.records) {
    vol.points.push_back({double(r.step), r.volume});
    ln.points.push_back({double(r.step), r.l_norm});
  }
  out.svg[which + "-descent"] =
      svg_line_chart("Volume descent", "iteration", "volume / l_norm", {vol, ln});
  double prev = res.trace.records.front().volume;
  bool monotone = true;
  for (const auto& r : res.trace.records) {
    if (r.volume > prev + 1e-10) monotone = false;
    prev = r.volume;
  }
  check(out, "volume_monotone", monotone, res.trace.records.back().volume);
  if (which == "round") {
    // The two-component question on the football sphere stays unasserted.
    check(out, "converged", res.converged, res.final_l_norm);
    check(out, "final_l_norm", res.final_l_norm < 1e-3, res.final_l_norm);
    check(out, "length_is_2pi",
          std::abs(res.trace.records.back().volume - two_pi) < 2e-3 * two_pi,
          res.trace.records.back().volume);
  }
  return out;
}

inline ScenarioResult run_potential_torus(const ScenarioConfig& cfg) {
  ScenarioResult out;
  std::shared_ptr<const AmbientModel> model;
  if (!cfg.model.is_null())
    model = std::make_shared<AmbientModel>(AmbientModel::from_json(cfg.model));
  else
    model = potential_torus_model(cfg.amplitude);
  const int n1 = cfg.n1 > 0 ? cfg.n1 : 64, n2 = cfg.n2 > 0 ? cfg.n2 : 64;
  Vec c(2);
  c << 0.4, 1.3;
  out.report["amplitude"] = model->amplitude();
  out.report["n1"] = n1;
  out.report["n2"] = n2;

  // Ricci identity at two resolutions for the order estimate.
  std::vector<int> rung = {n1 / 2, n1};
  std::vector<double> ricci_res;
  double lag_res = 0.0;
  for (int k : rung) {
    auto mesh = potential_torus_mesh(model, c, k, k);
    if (k == n1) lag_res = mesh.lagrangian_residual();
    ricci_res.push_back(verify_ricci_identity(mesh).max_residual);
  }
  const double ricci_order = observed_order(rung, ricci_res);
  out.report["lagrangian_residual"] = lag_res;
  out.report["ricci"] = {{"resolutions", rung},
                         {"residuals", ricci_res},
                         {"observed_order", ricci_order}};
  out.csv["potential-torus-ricci"] = residual_csv(rung, ricci_res, "ricci_residual");
  check(out, "ricci.final", ricci_res.back() < 5e-3, ricci_res.back());
  check(out, "ricci.order", ricci_order > 1.5 && ricci_order < 2.5, ricci_order);

  // Flat ambient control: both sides vanish identically.
  auto flat_mesh = product_torus_mesh(
      std::make_shared<AmbientModel>(AmbientModel::flat_complex(2)), 32, 32);
  auto flat_rep = verify_ricci_identity(flat_mesh);
  out.report["flat_control"] = {{"max_residual", flat_rep.max_residual},
                                {"max_flux", flat_rep.rho_flux.values.cwiseAbs().maxCoeff()}};
  check(out, "ricci.flat_control", flat_rep.max_residual < 1e-6, flat_rep.max_residual);

  std::vector<int> ladder = cfg.ladder.empty() ? std::vector<int>{16, 24, 32, 48} : cfg.ladder;
  out.report["prop9"] = prop9_ladder(
      [&](int k) { return potential_torus_mesh(model, c, k, k); }, ladder, out,
      "potential-torus");
  return out;
}

inline ScenarioResult run_halfweight_demo(const ScenarioConfig& cfg) {
  ScenarioResult out;
  auto torus = std::make_shared<AmbientModel>(AmbientModel::flat_torus(1));
  const int N = cfg.n > 0 ? cfg.n : 64;
  auto mesh = elliptic_line_mesh(torus, N);
  auto rep = decompose_connection(relative_connection(mesh));
  out.report["n"] = N;
  nlohmann::json rows = nlohmann::json::array();
  for (double r : cfg.radii) {
    auto hw = half_weight(rep, mesh, r);
    const double mean = hw.density.values.mean();
    double var = 0.0;
    for (int e = 0; e < hw.density.values.size(); ++e)
      var = std::max(var, std::abs(hw.density.values[e] - mean) / std::abs(mean));
    rows.push_back({{"r", r},
                    {"total", hw.total},
                    {"sign_warning", hw.sign_warning},
                    {"relative_variation", var}});
    check(out, "total_mass.r=" + std::to_string(r), std::abs(hw.total - r) < 1e-8, hw.total);
    check(out, "constant_density.r=" + std::to_string(r), var < 1e-6, var);
  }
  out.report["half_weight"] = rows;
  return out;
}

inline ScenarioResult run_convergence(const ScenarioConfig& cfg) {
  ScenarioResult out;
  std::vector<int> ladder = cfg.ladder.empty() ? std::vector<int>{64, 128, 256, 512} : cfg.ladder;
  std::function<LagrangianMesh(int)> make;
  if (cfg.sub_scenario == "flat-circle") {
    auto flat = std::make_shared<AmbientModel>(AmbientModel::flat_complex(1));
    make = [flat](int k) { return circle_mesh(flat, k); };
  } else if (cfg.sub_scenario == "sphere-latitude") {
    auto sphere = std::make_shared<AmbientModel>(AmbientModel::round_sphere(1.0));
    double theta = cfg.theta;
    make = [sphere, theta](int k) { return latitude_mesh(sphere, theta, k); };
  } else if (cfg.sub_scenario == "potential-torus-ricci") {
    auto model = potential_torus_model(cfg.amplitude);
    Vec c(2);
    c << 0.4, 1.3;
    make = [model, c](int k) { return potential_torus_mesh(model, c, k, k); };
  } else {
    throw ModelConfigError("convergence: unsupported sub-scenario '" + cfg.sub_scenario + "'");
  }
  out.report["sub_scenario"] = cfg.sub_scenario;
  out.report["prop9"] = prop9_ladder(make, ladder, out, "convergence-" + cfg.sub_scenario);
  return out;
}

}  // namespace detail

inline std::vector<std::pair<std::string, std::string>> scenario_catalog() {
  return {
      {"flat-circle",
       "unit circle in C: Maslov 1/2 at powers 1/2, Prop. 9 ladder, Hodge match, collapse"},
      {"flat-product-torus", "Clifford-style torus in C^2: Maslov (1,1)/(2,2), zero curvature"},
      {"elliptic-line", "special Lagrangian line on the flat torus: BS, constant half-weight"},
      {"elliptic-invariance", "random Hamiltonian flows on the elliptic line: Maslov constant"},
      {"sphere-latitude", "latitude circle on S^2: BS/defect/minimality classification"},
      {"sphere-descent", "perturbed great circle descends to a geodesic"},
      {"football-descent", "descent on the deformed sphere (unasserted two-component probe)"},
      {"potential-torus-ricci", "corrected graph torus in a potential ambient: d alpha_H = rho"},
      {"halfweight-demo", "half-weighting masses r on the special elliptic line"},
      {"convergence", "residual ladder for a chosen sub-scenario"},
  };
}

inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  ScenarioResult out;
  if (cfg.name == "flat-circle")
    out = detail::run_flat_circle(cfg);
  else if (cfg.name == "flat-product-torus")
    out = detail::run_flat_product_torus(cfg);
  else if (cfg.name == "elliptic-line")
    out = detail::run_elliptic_line(cfg);
  else if (cfg.name == "elliptic-invariance")
    out = detail::run_elliptic_invariance(cfg);
  else if (cfg.name == "sphere-latitude")
    out = detail::run_sphere_latitude(cfg);
  else if (cfg.name == "sphere-descent")
    out = detail::run_sphere_descent(cfg, "round");
  else if (cfg.name == "football-descent")
    out = detail::run_sphere_descent(cfg, "football");
  else if (cfg.name == "potential-torus-ricci")
    out = detail::run_potential_torus(cfg);
  else if (cfg.name == "halfweight-demo")
    out = detail::run_halfweight_demo(cfg);
  else if (cfg.name == "convergence")
    out = detail::run_convergence(cfg);
  else {
    std::string names;
    for (const auto& [n, d] : scenario_catalog()) names += (names.empty() ? "" : ", ") + n;
    throw ModelConfigError("unknown scenario '" + cfg.name + "'; valid: " + names);
  }
  out.report["scenario"] = cfg.name;
  out.report["config"] = cfg.to_json();
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : out.checks)
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}});
  out.report["checks"] = checks;
  out.report["passed"] = out.passed();
  round_json(out.report);
  return out;
}

}  // namespace maslov
