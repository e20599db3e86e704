#pragma once

#include <memory>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core.hpp"

namespace maslov {

// Chart-based model Kahler manifolds. Real chart coordinates are ordered
// (x1, y1[, x2, y2]) with z_j = x_j + i*y_j; the complex structure is the
// standard one in every chart (all kinds below are conformal or potential
// deformations of the flat structure, which leaves I untouched).
//
// The Hermitian metric block h is the primary datum: the real metric is
// G = 2*Re-part of h acting on complexified vectors, the symplectic form is
// omega(X,Y) = G(I X, Y), and the Ricci form comes from the complex Hessian
// of log det h.

enum class ModelKind { FlatComplex, RoundSphere, FootballSphere, FlatTorus, PotentialKahler };

inline const char* kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::FlatComplex: return "flat-complex";
    case ModelKind::RoundSphere: return "round-sphere";
    case ModelKind::FootballSphere: return "football-sphere";
    case ModelKind::FlatTorus: return "flat-torus";
    case ModelKind::PotentialKahler: return "potential-kahler";
  }
  return "?";
}

// One term of a truncated Fourier potential: amplitude * cos(wave . x + shift).
struct FourierTerm {
  double amplitude = 0.0;
  Eigen::VectorXi wave;  // length 2n, integer modes in lattice-dual units
  double shift = 0.0;
};

class AmbientModel {
 public:
  static AmbientModel flat_complex(int n) {
    check_n(n);
    AmbientModel m;
    m.kind_ = ModelKind::FlatComplex;
    m.n_ = n;
    return m;
  }

  static AmbientModel round_sphere(double radius) {
    if (!(radius > 0)) throw ModelConfigError("round_sphere: radius must be positive");
    AmbientModel m;
    m.kind_ = ModelKind::RoundSphere;
    m.n_ = 1;
    m.radius_ = radius;
    return m;
  }

  static AmbientModel football_sphere(double radius, double deformation) {
    if (!(radius > 0)) throw ModelConfigError("football_sphere: radius must be positive");
    AmbientModel m;
    m.kind_ = ModelKind::FootballSphere;
    m.n_ = 1;
    m.radius_ = radius;
    m.deformation_ = deformation;
    return m;
  }

  // Lattice columns are the generators of the periodic identification.
  // Default lattice: (2*pi Z)^{2n}, so integer Fourier modes are periodic.
  static AmbientModel flat_torus(int n, Mat lattice = Mat()) {
    check_n(n);
    AmbientModel m;
    m.kind_ = ModelKind::FlatTorus;
    m.n_ = n;
    if (lattice.size() == 0) lattice = two_pi * Mat::Identity(2 * n, 2 * n);
    if (lattice.rows() != 2 * n || lattice.cols() != 2 * n || std::abs(lattice.determinant()) < 1e-12)
      throw ModelConfigError("flat_torus: lattice must be a nondegenerate 2n x 2n basis");
    m.lattice_ = std::move(lattice);
    return m;
  }

  static AmbientModel potential_kahler(const AmbientModel& base, std::vector<FourierTerm> terms,
                                       double eps) {
    if (base.kind_ != ModelKind::FlatComplex && base.kind_ != ModelKind::FlatTorus)
      throw ModelConfigError("potential_kahler: base must be flat-complex or flat-torus");
    AmbientModel m = base;
    m.kind_ = ModelKind::PotentialKahler;
    m.base_kind_ = base.kind_;
    for (const auto& t : terms)
      if (t.wave.size() != 2 * m.n_)
        throw ModelConfigError("potential_kahler: wave vector length must be 2n");
    m.terms_ = std::move(terms);
    m.eps_ = eps;
    m.check_positivity();
    return m;
  }

  ModelKind kind() const { return kind_; }
  int dim_complex() const { return n_; }
  int real_dim() const { return 2 * n_; }
  double radius() const { return radius_; }
  double deformation() const { return deformation_; }
  double amplitude() const { return eps_; }
  const Mat& lattice() const { return lattice_; }
  bool is_torus() const {
    return kind_ == ModelKind::FlatTorus ||
           (kind_ == ModelKind::PotentialKahler && base_kind_ == ModelKind::FlatTorus);
  }
  bool is_sphere() const {
    return kind_ == ModelKind::RoundSphere || kind_ == ModelKind::FootballSphere;
  }

  bool in_domain(const Vec& p) const {
    if (p.size() != real_dim()) return false;
    if (is_sphere()) return p.norm() < chart_bound();
    return p.allFinite();
  }
  double chart_bound() const { return 1e6 * std::max(1.0, radius_); }

  // Hermitian metric block h_{j kbar} on T^{1,0}; flat normalization is I/2
  // so that the real metric is the identity.
  CMat hermitian_metric_at(const Vec& p) const {
    require_domain(p);
    CMat h = CMat::Identity(n_, n_) * 0.5;
    switch (kind_) {
      case ModelKind::FlatComplex:
      case ModelKind::FlatTorus:
        break;
      case ModelKind::RoundSphere:
      case ModelKind::FootballSphere:
        h(0, 0) = 0.5 * conformal_factor(p);
        break;
      case ModelKind::PotentialKahler:
        h += eps_ * potential_complex_hessian(p);
        break;
    }
    return h;
  }

  Mat metric_at(const Vec& p) const { return hermitian_to_metric(hermitian_metric_at(p)); }

  // Constant standard complex structure: I dx_j = dy_j.
  Mat complex_structure_at(const Vec& p) const {
    require_domain(p);
    Mat I = Mat::Zero(real_dim(), real_dim());
    for (int j = 0; j < n_; ++j) {
      I(2 * j + 1, 2 * j) = 1.0;
      I(2 * j, 2 * j + 1) = -1.0;
    }
    return I;
  }

  // omega(X,Y) = G(I X, Y) as an antisymmetric coefficient matrix.
  Mat symplectic_at(const Vec& p) const {
    return complex_structure_at(p).transpose() * metric_at(p);
  }

  // Gamma[k](i,j); exact zeros for flat kinds, central differences otherwise.
  std::vector<Mat> christoffels_at(const Vec& p) const {
    require_domain(p);
    const int d = real_dim();
    std::vector<Mat> gamma(d, Mat::Zero(d, d));
    if (kind_ == ModelKind::FlatComplex || kind_ == ModelKind::FlatTorus) return gamma;

    const double h = fd_step_first(coordinate_scale());
    std::vector<Mat> dg(d);  // dg[l] = d g / d x_l
    for (int l = 0; l < d; ++l) {
      Vec pp = p, pm = p;
      pp[l] += h;
      pm[l] -= h;
      dg[l] = (metric_at(pp) - metric_at(pm)) / (2.0 * h);
    }
    const Mat ginv = metric_at(p).inverse();
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
          double s = 0.0;
          for (int l = 0; l < d; ++l) s += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
          gamma[k](i, j) = 0.5 * s;
          gamma[k](j, i) = gamma[k](i, j);
        }
    return gamma;
  }

  // Ricci form rho = -i ddbar log det h as a real antisymmetric matrix.
  Mat ricci_form_at(const Vec& p) const {
    require_domain(p);
    if (kind_ == ModelKind::FlatComplex || kind_ == ModelKind::FlatTorus)
      return Mat::Zero(real_dim(), real_dim());
    CMat r = -complex_hessian([this](const Vec& q) { return log_det_hermitian(q); }, p);
    return hermitian_to_form(r);
  }

  bool has_holomorphic_volume() const {
    return kind_ == ModelKind::FlatComplex || kind_ == ModelKind::FlatTorus;
  }

  // Coefficient of theta = dz_1 ^ ... ^ dz_n in chart coordinates; the flat
  // determinant connection makes the constant-1 normalization covariantly
  // constant and of unit norm.
  Complex holomorphic_volume_at(const Vec& p) const {
    require_domain(p);
    if (!has_holomorphic_volume())
      throw UnsupportedModelError("holomorphic volume form requires a trivial canonical bundle "
                                  "(flat-complex or flat-torus)");
    return Complex(1.0, 0.0);
  }

  double coordinate_scale() const { return std::max(1.0, radius_); }

  // Complex components (u_{x_j} + i u_{y_j}) of a real chart vector.
  Eigen::VectorXcd complexify(const Vec& u) const {
    Eigen::VectorXcd z(n_);
    for (int j = 0; j < n_; ++j) z[j] = Complex(u[2 * j], u[2 * j + 1]);
    return z;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = kind_name(kind_);
    nlohmann::json params;
    params["n"] = n_;
    if (is_sphere()) params["radius"] = radius_;
    if (kind_ == ModelKind::FootballSphere) params["deformation"] = deformation_;
    if (is_torus()) {
      std::vector<std::vector<double>> cols;
      for (int c = 0; c < lattice_.cols(); ++c) {
        std::vector<double> col(lattice_.rows());
        for (int r = 0; r < lattice_.rows(); ++r) col[r] = lattice_(r, c);
        cols.push_back(col);
      }
      params["lattice"] = cols;
    }
    if (kind_ == ModelKind::PotentialKahler) {
      params["base"] = base_kind_ == ModelKind::FlatTorus ? "flat-torus" : "flat-complex";
      params["amplitude"] = eps_;
      nlohmann::json terms = nlohmann::json::array();
      for (const auto& t : terms_) {
        std::vector<int> w(t.wave.data(), t.wave.data() + t.wave.size());
        terms.push_back({{"amplitude", t.amplitude}, {"wave", w}, {"shift", t.shift}});
      }
      params["potential"] = terms;
    }
    j["params"] = params;
    return j;
  }

  static AmbientModel from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind");
    const auto& params = j.at("params");
    const int n = params.at("n");
    if (kind == "flat-complex") return flat_complex(n);
    if (kind == "round-sphere") return round_sphere(params.at("radius"));
    if (kind == "football-sphere")
      return football_sphere(params.at("radius"), params.at("deformation"));
    if (kind == "flat-torus" || kind == "potential-kahler") {
      auto read_lattice = [&](const nlohmann::json& pj) {
        Mat L;
        if (pj.contains("lattice")) {
          auto cols = pj.at("lattice").get<std::vector<std::vector<double>>>();
          L.resize(2 * n, 2 * n);
          for (int c = 0; c < 2 * n; ++c)
            for (int r = 0; r < 2 * n; ++r) L(r, c) = cols.at(c).at(r);
        }
        return L;
      };
      if (kind == "flat-torus") return flat_torus(n, read_lattice(params));
      AmbientModel base = params.at("base") == "flat-torus" ? flat_torus(n, read_lattice(params))
                                                            : flat_complex(n);
      std::vector<FourierTerm> terms;
      for (const auto& tj : params.at("potential")) {
        FourierTerm t;
        t.amplitude = tj.at("amplitude");
        auto w = tj.at("wave").get<std::vector<int>>();
        t.wave = Eigen::Map<Eigen::VectorXi>(w.data(), static_cast<int>(w.size()));
        t.shift = tj.at("shift");
        terms.push_back(t);
      }
      return potential_kahler(base, terms, params.at("amplitude"));
    }
    throw ModelConfigError("unknown model kind: " + kind);
  }

  // A real (1,1)-form i m_{j kbar} dz_j ^ dzbar_k as a 2n x 2n matrix.
  Mat hermitian_to_form(const CMat& m) const {
    const int d = real_dim();
    Mat w = Mat::Zero(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b) {
        Eigen::VectorXcd za = complexify(Vec::Unit(d, a)), zb = complexify(Vec::Unit(d, b));
        Complex val = Complex(0, 1) * (za.transpose() * m * zb.conjugate() -
                                       zb.transpose() * m * za.conjugate())(0, 0);
        w(a, b) = val.real();
        w(b, a) = -w(a, b);
      }
    return w;
  }

 private:
  AmbientModel() = default;

  static void check_n(int n) {
    if (n != 1 && n != 2) throw ModelConfigError("complex dimension must be 1 or 2");
  }

  void require_domain(const Vec& p) const {
    if (!in_domain(p)) throw DomainError("point outside chart domain");
  }

  double conformal_factor(const Vec& p) const {
    const double R2 = radius_ * radius_;
    const double r2 = p.squaredNorm();
    double c = 4.0 * R2 * R2 / ((R2 + r2) * (R2 + r2));
    if (kind_ == ModelKind::FootballSphere) {
      // Axisymmetric bump P = (z/R)^2 in height z; smooth across both charts.
      const double cz = (r2 - R2) / (r2 + R2);
      c *= std::exp(2.0 * deformation_ * cz * cz);
    }
    return c;
  }

  double potential_at(const Vec& p) const {
    double v = 0.0;
    for (const auto& t : terms_) v += t.amplitude * std::cos(t.wave.cast<double>().dot(p) + t.shift);
    return v;
  }

  // ddbar of the Fourier potential, analytically.
  CMat potential_complex_hessian(const Vec& p) const {
    const int d = real_dim();
    Mat H = Mat::Zero(d, d);
    for (const auto& t : terms_) {
      Vec k = t.wave.cast<double>();
      H -= t.amplitude * std::cos(k.dot(p) + t.shift) * (k * k.transpose());
    }
    CMat m(n_, n_);
    for (int j = 0; j < n_; ++j)
      for (int l = 0; l < n_; ++l)
        m(j, l) = 0.25 * Complex(H(2 * j, 2 * l) + H(2 * j + 1, 2 * l + 1),
                                 H(2 * j, 2 * l + 1) - H(2 * j + 1, 2 * l));
    return m;
  }

  Mat hermitian_to_metric(const CMat& h) const {
    const int d = real_dim();
    Mat g(d, d);
    for (int j = 0; j < n_; ++j)
      for (int l = 0; l < n_; ++l) {
        const double a = 2.0 * h(j, l).real();
        const double b = 2.0 * h(j, l).imag();
        g(2 * j, 2 * l) = a;
        g(2 * j + 1, 2 * l + 1) = a;
        g(2 * j, 2 * l + 1) = b;
        g(2 * j + 1, 2 * l) = -b;
      }
    return g;
  }

  double log_det_hermitian(const Vec& p) const {
    return std::log(hermitian_metric_at(p).determinant().real());
  }

  // Central-difference complex Hessian d_j d_kbar f of a real function.
  template <class F>
  CMat complex_hessian(F&& f, const Vec& p) const {
    const int d = real_dim();
    const double h = fd_step_second(coordinate_scale());
    Mat H(d, d);
    const double f0 = f(p);
    for (int a = 0; a < d; ++a) {
      Vec pp = p, pm = p;
      pp[a] += h;
      pm[a] -= h;
      H(a, a) = (f(pp) - 2.0 * f0 + f(pm)) / (h * h);
    }
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b) {
        Vec q1 = p, q2 = p, q3 = p, q4 = p;
        q1[a] += h; q1[b] += h;
        q2[a] += h; q2[b] -= h;
        q3[a] -= h; q3[b] += h;
        q4[a] -= h; q4[b] -= h;
        H(a, b) = (f(q1) - f(q2) - f(q3) + f(q4)) / (4.0 * h * h);
        H(b, a) = H(a, b);
      }
    CMat m(n_, n_);
    for (int j = 0; j < n_; ++j)
      for (int l = 0; l < n_; ++l)
        m(j, l) = 0.25 * Complex(H(2 * j, 2 * l) + H(2 * j + 1, 2 * l + 1),
                                 H(2 * j, 2 * l + 1) - H(2 * j + 1, 2 * l));
    return m;
  }

  // Reject amplitudes that break positivity, by sampling.
  void check_positivity() const {
    const int d = real_dim();
    const int steps = 7;
    Vec p(d);
    std::vector<int> idx(d, 0);
    const bool torus = base_kind_ == ModelKind::FlatTorus;
    const double lo = torus ? 0.0 : -3.0;
    const double hi = torus ? two_pi : 3.0;
    int total = 1;
    for (int a = 0; a < d; ++a) total *= steps;
    for (int t = 0; t < total; ++t) {
      int rest = t;
      for (int a = 0; a < d; ++a) {
        p[a] = lo + (hi - lo) * (rest % steps) / (steps - 1.0);
        rest /= steps;
      }
      Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_metric_at(p));
      if (es.eigenvalues().minCoeff() < 1e-8)
        throw ModelConfigError("potential_kahler: amplitude breaks metric positivity");
    }
  }

  ModelKind kind_ = ModelKind::FlatComplex;
  ModelKind base_kind_ = ModelKind::FlatComplex;
  int n_ = 1;
  double radius_ = 0.0;
  double deformation_ = 0.0;
  double eps_ = 0.0;
  Mat lattice_;
  std::vector<FourierTerm> terms_;
};

}  // namespace maslov
