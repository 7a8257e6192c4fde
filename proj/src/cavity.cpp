#include "cqed/cavity.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

#include "cqed/numerics/fit.hpp"
#include "cqed/numerics/lindblad.hpp"

namespace cqed::cavity {

namespace {

constexpr double kPi = std::numbers::pi;

double quiet_nan() { return std::numeric_limits<double>::quiet_NaN(); }

// Parabolic refinement of a local maximum at index i of (x, y).
double refine_peak(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int i) {
  if (i <= 0 || i + 1 >= static_cast<int>(x.size())) return x(i);
  const double denom = y(i - 1) - 2.0 * y(i) + y(i + 1);
  if (std::abs(denom) < 1e-300) return x(i);
  const double shift = 0.5 * (y(i - 1) - y(i + 1)) / denom;
  return x(i) + shift * (x(i + 1) - x(i));
}

}  // namespace

double CavityState::fock_population(int n) const {
  if (n < 0 || n >= N) throw std::out_of_range("fock_population: level out of range");
  if (!has_ancilla) return std::real(rho(n, n));
  return std::real(rho(n, n) + rho(N + n, N + n));
}

Eigen::MatrixXcd annihilation(int N) {
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(N, N);
  for (int n = 1; n < N; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

Eigen::MatrixXcd number_operator(int N) {
  Eigen::MatrixXcd n_op = Eigen::MatrixXcd::Zero(N, N);
  for (int n = 0; n < N; ++n) n_op(n, n) = static_cast<double>(n);
  return n_op;
}

Eigen::MatrixXcd parity_operator(int N) {
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(N, N);
  for (int n = 0; n < N; ++n) p(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
  return p;
}

Eigen::MatrixXcd displacement(cplx alpha, int N) {
  if (std::norm(alpha) >= 0.25 * N)
    throw std::invalid_argument("displacement: |alpha|^2 >= N/4 (truncation guard)");
  const Eigen::MatrixXcd a = annihilation(N);
  const Eigen::MatrixXcd gen =
      alpha * a.adjoint() - std::conj(alpha) * a;  // skew-Hermitian
  return gen.exp();
}

Eigen::MatrixXcd selective_pi(int n, int N) {
  if (n < 0 || n >= N) throw std::out_of_range("selective_pi: n out of range");
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(2 * N, 2 * N);
  // sigma_x on the ancilla within the |n> cavity subspace.
  u(n, n) = 0.0;
  u(N + n, N + n) = 0.0;
  u(n, N + n) = 1.0;
  u(N + n, n) = 1.0;
  return u;
}

Eigen::VectorXcd coherent_vector(cplx beta, int N) {
  Eigen::VectorXcd v(N);
  v(0) = std::exp(-0.5 * std::norm(beta));
  for (int n = 1; n < N; ++n) v(n) = v(n - 1) * beta / std::sqrt(static_cast<double>(n));
  return v;
}

CavityState coherent_state(cplx beta, int N) {
  CavityState s;
  s.N = N;
  const Eigen::VectorXcd v = coherent_vector(beta, N);
  s.rho = v * v.adjoint();
  check_truncation(s);
  return s;
}

CavityState fock_state(int n, int N) {
  if (n < 0 || n >= N) throw std::out_of_range("fock_state: level out of range");
  CavityState s;
  s.N = N;
  s.rho = Eigen::MatrixXcd::Zero(N, N);
  s.rho(n, n) = 1.0;
  check_truncation(s);
  return s;
}

CavityState attach_ancilla(const CavityState& s) {
  if (s.has_ancilla) return s;
  CavityState joint = s;
  joint.has_ancilla = true;
  joint.rho = Eigen::MatrixXcd::Zero(2 * s.N, 2 * s.N);
  joint.rho.topLeftCorner(s.N, s.N) = s.rho;  // ancilla in |g>
  return joint;
}

void check_truncation(const CavityState& s) {
  const double top = s.fock_population(s.N - 1) + s.fock_population(s.N - 2);
  if (top >= 1e-6)
    throw std::runtime_error("cavity truncation inadequate: top two Fock levels hold " +
                             std::to_string(top));
}

NumberSplittingResult number_splitting_spectrum(cplx beta, double f_qubit,
                                                double chi, double linewidth,
                                                double f_span, int n_points) {
  if (chi <= 5.0 * linewidth)
    throw std::invalid_argument("number_splitting_spectrum: peaks unresolved "
                                "(chi <= 5 * linewidth)");
  if (n_points < 16) throw std::invalid_argument("number_splitting_spectrum: grid too coarse");

  const double nbar = std::norm(beta);
  // Poisson weights; keep terms until negligible.
  std::vector<double> weights;
  double w = std::exp(-nbar);
  for (int n = 0; w > 1e-12 || n <= nbar + 1; ++n) {
    weights.push_back(w);
    w *= nbar / (n + 1);
    if (n > 200) break;
  }

  NumberSplittingResult out;
  out.freq = Eigen::VectorXd::LinSpaced(n_points, f_qubit - f_span, f_qubit + f_span);
  out.response = Eigen::VectorXd::Zero(n_points);
  const double hw = 0.5 * linewidth;
  for (int i = 0; i < n_points; ++i) {
    double s = 0.0;
    for (std::size_t n = 0; n < weights.size(); ++n) {
      const double d = out.freq(i) - (f_qubit - static_cast<double>(n) * chi);
      s += weights[n] * hw * hw / (d * d + hw * hw);
    }
    out.response(i) = s;
  }

  // Peak finding: local maxima above 2% of the global maximum, refined by a
  // parabolic fit; the mean adjacent spacing estimates chi.
  const double thr = 0.02 * out.response.maxCoeff();
  for (int i = 1; i + 1 < n_points; ++i) {
    if (out.response(i) > thr && out.response(i) >= out.response(i - 1) &&
        out.response(i) > out.response(i + 1)) {
      out.peak_freqs.push_back(refine_peak(out.freq, out.response, i));
    }
  }
  if (out.peak_freqs.size() < 2) {
    out.chi_estimate = quiet_nan();
  } else {
    double spacing = 0.0;
    for (std::size_t k = 1; k < out.peak_freqs.size(); ++k)
      spacing += out.peak_freqs[k] - out.peak_freqs[k - 1];
    out.chi_estimate = spacing / static_cast<double>(out.peak_freqs.size() - 1);
  }
  return out;
}

RevivalResult ramsey_revival(cplx beta, double chi, const Eigen::VectorXd& t) {
  RevivalResult out;
  out.t = t;
  out.p_e.resize(t.size());
  const double nbar = std::norm(beta);
  const double w = 2.0 * kPi * chi;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double s = std::sin(0.5 * w * t(i));
    out.p_e(i) = 0.5 * (1.0 + std::exp(-2.0 * nbar * s * s) *
                                  std::cos(nbar * std::sin(w * t(i))));
  }

  // Revival-time estimator: skip the initial collapse, then take the first
  // local maximum whose height approaches full revival.
  out.revival_time = quiet_nan();
  out.chi_estimate = quiet_nan();
  bool collapsed = false;
  for (Eigen::Index i = 1; i + 1 < t.size(); ++i) {
    if (!collapsed) {
      if (out.p_e(i) < 0.6) collapsed = true;
      continue;
    }
    if (out.p_e(i) > 0.75 && out.p_e(i) >= out.p_e(i - 1) && out.p_e(i) > out.p_e(i + 1)) {
      out.revival_time = refine_peak(t, out.p_e, static_cast<int>(i));
      out.chi_estimate = 1.0 / out.revival_time;  // chi in Hz: t_rev = 2*pi/(2*pi*chi)
      break;
    }
  }
  return out;
}

DecayFitResult cavity_t1_experiment(double kappa_cav, cplx beta0,
                                    const Eigen::VectorXd& t, int N) {
  if (kappa_cav <= 0.0) throw std::invalid_argument("cavity_t1_experiment: kappa must be positive");
  if (std::norm(beta0) < 4.0)
    throw std::invalid_argument("cavity_t1_experiment: |beta0|^2 must be >= 4");
  if (t.size() < 4 || t(t.size() - 1) < 2.0 / kappa_cav)
    throw std::invalid_argument("cavity_t1_experiment: grid shorter than 2/kappa");

  DecayFitResult out;
  out.t = t;
  out.p.resize(t.size());
  const Eigen::MatrixXcd u = selective_pi(0, N);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const cplx beta = beta0 * std::exp(-0.5 * kappa_cav * t(i));
    const CavityState joint = attach_ancilla(coherent_state(beta, N));
    const Eigen::MatrixXcd rho = u * joint.rho * u.adjoint();
    out.p(i) = std::real(rho.bottomRightCorner(N, N).trace());  // ancilla |e>
  }

  // P_vac(t) = exp(-b exp(-t/T)) with b = |beta0|^2, T = 1/kappa.
  const auto model = [](const Eigen::VectorXd& x, const Eigen::VectorXd& p) {
    return (-(p(0) * (-x.array() / p(1)).exp())).exp().matrix().eval();
  };
  Eigen::VectorXd p0(2);
  p0 << -std::log(std::max(out.p(0), 1e-12)), 0.5 * t(t.size() - 1);
  numerics::FitOptions opts;
  opts.lower = (Eigen::VectorXd(2) << 1e-6, 1e-12).finished();
  opts.upper = (Eigen::VectorXd(2) << 1e3, 1e3).finished();
  const auto fit = numerics::least_squares_fit(model, t, out.p, p0, opts);
  out.fitted_time = fit.params(1);
  out.converged = fit.converged;
  return out;
}

DecayFitResult cavity_t2_experiment(double kappa_cav, double gamma_phi,
                                    const Eigen::VectorXd& t, int N) {
  if (kappa_cav < 0.0 || gamma_phi < 0.0)
    throw std::invalid_argument("cavity_t2_experiment: rates must be non-negative");
  if (t.size() < 4) throw std::invalid_argument("cavity_t2_experiment: grid too short");

  // Prepare (|0> + |1>)/sqrt(2) and evolve under photon loss and pure
  // dephasing; the interference step inverts the preparation, so P0 is the
  // overlap with the prepared state.
  Eigen::VectorXcd plus = Eigen::VectorXcd::Zero(N);
  plus(0) = plus(1) = 1.0 / std::sqrt(2.0);
  const Eigen::MatrixXcd rho0 = plus * plus.adjoint();

  std::vector<Eigen::MatrixXcd> collapse;
  if (kappa_cav > 0.0) collapse.push_back(std::sqrt(kappa_cav) * annihilation(N));
  if (gamma_phi > 0.0) collapse.push_back(std::sqrt(2.0 * gamma_phi) * number_operator(N));

  std::vector<double> grid(t.data(), t.data() + t.size());
  const auto h_zero = [N](double) { return Eigen::MatrixXcd::Zero(N, N).eval(); };
  const auto states = numerics::integrate_lindblad(h_zero, collapse, rho0, grid);

  DecayFitResult out;
  out.t = t;
  out.p.resize(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i)
    out.p(i) = std::real((plus.adjoint() * states[i] * plus).value());

  // P0(t) = A exp(-t/T2) + B.
  const auto model = [](const Eigen::VectorXd& x, const Eigen::VectorXd& p) {
    return (p(0) * (-x.array() / p(1)).exp() + p(2)).matrix().eval();
  };
  const double rate0 = std::max(0.5 * kappa_cav + gamma_phi, 0.1 / t(t.size() - 1));
  Eigen::VectorXd p0(3);
  p0 << 0.5, 1.0 / rate0, 0.5;
  const auto fit = numerics::least_squares_fit(model, t, out.p, p0);
  out.fitted_time = fit.params(1);
  out.converged = fit.converged;
  return out;
}

ParityResult parity_map_and_measure(const CavityState& state,
                                    numerics::RngStream* rng) {
  const CavityState joint = attach_ancilla(state);
  const int N = joint.N;

  // Y_pi/2 on the ancilla: |g> -> (|g> + |e>)/sqrt(2), |e> -> (-|g> + |e>)/sqrt(2).
  Eigen::Matrix2cd y_half;
  const double c = 1.0 / std::sqrt(2.0);
  y_half << c, -c, c, c;
  Eigen::MatrixXcd y_joint = Eigen::MatrixXcd::Zero(2 * N, 2 * N);
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(N, N);
  y_joint.topLeftCorner(N, N) = y_half(0, 0) * eye;
  y_joint.topRightCorner(N, N) = y_half(0, 1) * eye;
  y_joint.bottomLeftCorner(N, N) = y_half(1, 0) * eye;
  y_joint.bottomRightCorner(N, N) = y_half(1, 1) * eye;

  // C_Phi(pi): photon-number parity phase conditioned on the ancilla in |e>.
  Eigen::MatrixXcd c_phi = Eigen::MatrixXcd::Identity(2 * N, 2 * N);
  c_phi.bottomRightCorner(N, N) = parity_operator(N);

  const Eigen::MatrixXcd u = y_joint * c_phi * y_joint;
  const Eigen::MatrixXcd rho = u * joint.rho * u.adjoint();

  ParityResult out;
  out.p_even = std::real(rho.bottomRightCorner(N, N).trace());  // e <-> even
  out.expectation = 2.0 * out.p_even - 1.0;

  bool even;
  if (rng != nullptr) {
    even = rng->uniform() < out.p_even;
  } else {
    even = out.p_even >= 0.5;
  }
  out.outcome = even ? +1 : -1;

  const Eigen::MatrixXcd block =
      even ? rho.bottomRightCorner(N, N) : rho.topLeftCorner(N, N);
  const double norm = std::real(block.trace());
  out.post_cavity = norm > 1e-15 ? (block / norm).eval() : block;
  return out;
}

WignerMap wigner_scan(const Eigen::MatrixXcd& rho, const Eigen::VectorXd& re,
                      const Eigen::VectorXd& im) {
  const int N = static_cast<int>(rho.rows());
  if (rho.cols() != N) throw std::invalid_argument("wigner_scan: rho must be square");
  double max_norm = 0.0;
  for (Eigen::Index i = 0; i < re.size(); ++i)
    for (Eigen::Index j = 0; j < im.size(); ++j)
      max_norm = std::max(max_norm, re(i) * re(i) + im(j) * im(j));
  if (max_norm >= 0.25 * N)
    throw std::invalid_argument("wigner_scan: grid exceeds the truncation guard");

  WignerMap out;
  out.re = re;
  out.im = im;
  out.w.resize(re.size(), im.size());
  const Eigen::MatrixXcd parity = parity_operator(N);

  // Grid rows are independent; evaluate them concurrently.
  const auto eval_row = [&](Eigen::Index i) {
    for (Eigen::Index j = 0; j < im.size(); ++j) {
      const Eigen::MatrixXcd d = displacement(cplx(re(i), im(j)), N);
      const cplx w = (d.adjoint() * rho * d * parity).trace();
      if (std::abs(w.imag()) > 1e-10)
        throw std::runtime_error("wigner_scan: non-real Wigner value");
      out.w(i, j) = (2.0 / kPi) * w.real();
    }
  };
  std::vector<std::future<void>> rows;
  rows.reserve(re.size());
  for (Eigen::Index i = 0; i < re.size(); ++i)
    rows.push_back(std::async(std::launch::async, eval_row, i));
  for (auto& r : rows) r.get();

  out.integral = 0.0;
  if (re.size() > 1 && im.size() > 1) {
    const double da = (re(1) - re(0)) * (im(1) - im(0));
    out.integral = out.w.sum() * da;
  }
  return out;
}

}  // namespace cqed::cavity
