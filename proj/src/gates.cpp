#include "cqed/gates.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "cqed/numerics/fit.hpp"
#include "cqed/sim/responses.hpp"

namespace cqed::gates {

using cplx = std::complex<double>;

namespace {

std::vector<Eigen::Matrix2cd> pauli_basis_1q() {
  Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  Eigen::Matrix2cd x, y, z;
  x << 0, 1, 1, 0;
  y << 0, cplx(0, -1), cplx(0, 1), 0;
  z << 1, 0, 0, -1;
  return {id, x, y, z};
}

// Tensor-product Pauli set for n qubits, ordered with the first qubit as
// the most significant index.
std::vector<Eigen::MatrixXcd> pauli_basis(int n_qubits) {
  const auto p1 = pauli_basis_1q();
  std::vector<Eigen::MatrixXcd> basis;
  basis.reserve(std::size_t(1) << (2 * n_qubits));
  const int count = 1 << (2 * n_qubits);
  for (int idx = 0; idx < count; ++idx) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
    int rem = idx;
    for (int q = n_qubits - 1; q >= 0; --q) {
      const auto& p = p1[(rem >> (2 * q)) & 3];
      Eigen::MatrixXcd next(m.rows() * 2, m.cols() * 2);
      for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c)
          next.block(2 * r, 2 * c, 2, 2) = m(r, c) * p;
      m = next;
    }
    (void)rem;
    basis.push_back(m);
  }
  return basis;
}

Eigen::Matrix2cd rotation(char axis, double deg) {
  const auto p = pauli_basis_1q();
  const Eigen::Matrix2cd s = axis == 'X' ? p[1] : axis == 'Y' ? p[2] : p[3];
  const double th = deg * std::numbers::pi / 180.0;
  return std::cos(th / 2.0) * p[0] - cplx(0, 1) * std::sin(th / 2.0) * s;
}

Eigen::Matrix2cd gate_by_name(const std::string& name) {
  if (name == "I") return Eigen::Matrix2cd::Identity();
  if (name.size() >= 2 && (name[0] == 'X' || name[0] == 'Y' || name[0] == 'Z'))
    return rotation(name[0], std::stod(name.substr(1)));
  throw std::invalid_argument("unknown gate name: " + name);
}

}  // namespace

PTM ptm_identity(int n_qubits) {
  PTM out;
  out.n_qubits = n_qubits;
  out.R = Eigen::MatrixXd::Identity(1 << (2 * n_qubits), 1 << (2 * n_qubits));
  return out;
}

PTM ptm_of_unitary(const Eigen::MatrixXcd& u) {
  const int d = int(u.rows());
  if (u.cols() != d || d < 2 || (d & (d - 1)) != 0)
    throw std::invalid_argument("ptm_of_unitary: dimension not a power of 2");
  if ((u * u.adjoint() - Eigen::MatrixXcd::Identity(d, d)).norm() > 1e-10)
    throw std::invalid_argument("ptm_of_unitary: input not unitary");
  int n = 0;
  while ((1 << n) < d) ++n;
  const auto basis = pauli_basis(n);
  PTM out;
  out.n_qubits = n;
  out.R.resize(basis.size(), basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = 0; j < basis.size(); ++j)
      out.R(i, j) =
          ((basis[i] * u * basis[j] * u.adjoint()).trace() / double(d)).real();
  return out;
}

PTM ptm_t1(double p) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("ptm_t1: p outside [0,1]");
  PTM out = ptm_identity(1);
  const double s = std::sqrt(1.0 - p);
  out.R(1, 1) = s;
  out.R(2, 2) = s;
  out.R(3, 3) = 1.0 - p;
  out.R(3, 0) = p;
  return out;
}

PTM ptm_tphi(double p) {
  if (p < 0.0 || p > 1.0)
    throw std::invalid_argument("ptm_tphi: p outside [0,1]");
  PTM out = ptm_identity(1);
  out.R(1, 1) = 1.0 - p;
  out.R(2, 2) = 1.0 - p;
  return out;
}

PTM ptm_depolarizing(double lambda) {
  if (lambda < 0.0 || lambda > 1.0)
    throw std::invalid_argument("ptm_depolarizing: lambda outside [0,1]");
  PTM out = ptm_identity(1);
  out.R(1, 1) = lambda;
  out.R(2, 2) = lambda;
  out.R(3, 3) = lambda;
  return out;
}

PTM ptm_compose(const PTM& r2, const PTM& r1) {
  if (r2.R.cols() != r1.R.rows() || r2.n_qubits != r1.n_qubits)
    throw std::invalid_argument("ptm_compose: dimension mismatch");
  PTM out;
  out.n_qubits = r1.n_qubits;
  out.R = r2.R * r1.R;
  return out;
}

SuperKet ptm_apply(const PTM& r, const SuperKet& v) {
  if (r.R.cols() != v.size())
    throw std::invalid_argument("ptm_apply: dimension mismatch");
  return r.R * v;
}

SuperKet superket_of_density(const Eigen::MatrixXcd& rho) {
  const int d = int(rho.rows());
  int n = 0;
  while ((1 << n) < d) ++n;
  const auto basis = pauli_basis(n);
  SuperKet v(basis.size());
  for (std::size_t k = 0; k < basis.size(); ++k)
    v(k) = ((basis[k] * rho).trace()).real() / std::sqrt(double(d));
  return v;
}

Eigen::MatrixXcd density_of_superket(const SuperKet& v) {
  int n = 0;
  while ((1 << (2 * n)) < v.size()) ++n;
  const auto basis = pauli_basis(n);
  const int d = 1 << n;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
  for (std::size_t k = 0; k < basis.size(); ++k)
    rho += v(k) / std::sqrt(double(d)) * basis[k];
  return rho;
}

double average_fidelity(const PTM& target, const PTM& r) {
  const double d = double(target.dim());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(target.R);
  if (!lu.isInvertible())
    throw std::invalid_argument("average_fidelity: singular target");
  return ((lu.inverse() * r.R).trace() + d) / (d * (d + 1.0));
}

CliffordTable load_clifford_table(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw std::runtime_error("cannot open Clifford table: " + json_path);
  nlohmann::json j;
  in >> j;
  CliffordTable table;
  for (const auto& word : j.at("elements")) {
    std::vector<std::string> names = word.get<std::vector<std::string>>();
    Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
    for (const auto& name : names) u = gate_by_name(name) * u;  // time order
    table.words.push_back(std::move(names));
    table.unitaries.push_back(u);
    table.ptms.push_back(ptm_of_unitary(u));
  }
  if (table.ptms.size() != 24)
    throw std::runtime_error("Clifford table must have 24 elements");
  return table;
}

RbResult rb_simulate(const PTM& noise_per_clifford,
                     const std::vector<int>& sequence_lengths, int n_random,
                     const CliffordTable& table, numerics::RngStream& rng,
                     const PTM* interleaved) {
  if ((noise_per_clifford.R.row(0) -
       Eigen::MatrixXd::Identity(4, 4).row(0))
          .norm() > 1e-12)
    throw std::invalid_argument("rb_simulate: noise not trace-preserving");

  // Ground state |0><0| as a superket; survival = (1 + sqrt(2) v_z)/2.
  Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(2, 2);
  rho0(0, 0) = 1.0;
  const SuperKet v0 = superket_of_density(rho0);

  auto find_inverse = [&](const PTM& ideal) {
    const Eigen::MatrixXd want = ideal.R.transpose();  // orthogonal inverse
    for (std::size_t k = 0; k < table.ptms.size(); ++k)
      if ((table.ptms[k].R - want).norm() < 1e-8) return k;
    throw std::runtime_error("rb_simulate: recovery gate not in table");
  };

  RbResult out;
  out.lengths = sequence_lengths;
  for (int m : sequence_lengths) {
    double acc = 0.0;
    for (int s = 0; s < n_random; ++s) {
      SuperKet v = v0;
      PTM ideal = ptm_identity(1);
      for (int g = 0; g < m; ++g) {
        const std::size_t k = rng.next_u64() % table.ptms.size();
        v = ptm_apply(noise_per_clifford, ptm_apply(table.ptms[k], v));
        ideal = ptm_compose(table.ptms[k], ideal);
        if (interleaved) {
          // A perfect reference copy of the interleaved gate in the ideal
          // track keeps the recovery gate exact.
          v = ptm_apply(*interleaved, v);
        }
      }
      const std::size_t inv = find_inverse(ideal);
      v = ptm_apply(noise_per_clifford, ptm_apply(table.ptms[inv], v));
      acc += 0.5 * (1.0 + std::numbers::sqrt2 * v(3));
    }
    out.survival.push_back(acc / double(n_random));
  }

  // Fit A p^m + B.
  Eigen::VectorXd x(out.lengths.size()), y(out.lengths.size());
  for (std::size_t i = 0; i < out.lengths.size(); ++i) {
    x(i) = double(out.lengths[i]);
    y(i) = out.survival[i];
  }
  auto model = [](const Eigen::VectorXd& xs, const Eigen::VectorXd& p) {
    Eigen::VectorXd yh(xs.size());
    for (int i = 0; i < xs.size(); ++i)
      yh(i) = p(0) * std::pow(p(2), xs(i)) + p(1);
    return yh;
  };
  Eigen::VectorXd p0(3);
  p0 << y(0) - 0.5, 0.5, 0.99;
  if (x.size() >= 2 && std::abs(y(0) - 0.5) > 1e-6) {
    const double ratio = (y(y.size() - 1) - 0.5) / (y(0) - 0.5);
    if (ratio > 0.0 && ratio < 1.0)
      p0(2) = std::pow(ratio, 1.0 / (x(x.size() - 1) - x(0)));
  }
  numerics::FitOptions opts;
  Eigen::VectorXd lower(3), upper(3);
  lower << -1.0, 0.0, 0.0;
  upper << 1.0, 1.0, 1.0;
  opts.lower = lower;
  opts.upper = upper;
  auto fit = numerics::least_squares_fit(model, x, y, p0, opts);
  out.fit_converged = fit.converged;
  out.amplitude = fit.params(0);
  out.offset = fit.params(1);
  out.p = fit.params(2);
  out.epsilon_per_clifford = (1.0 - out.p) * (2.0 - 1.0) / 2.0;
  return out;
}

ZZModel zz_estimate(double f_i, double f_j, double alpha_i, double alpha_j,
                    double j1) {
  const auto s = sim::two_transmon_spectrum(f_i, f_j, alpha_i, alpha_j, j1);
  ZZModel out;
  out.j1 = j1;
  out.zeta_approx = s.zeta_approx;
  out.zeta_exact = s.zeta_exact;
  out.zeta = s.zeta_exact;
  out.consistency = s.zeta_approx != 0.0 ? s.zeta_exact / s.zeta_approx : 1.0;
  return out;
}

ZZEchoResult zz_echo_experiment(sim::Device& dev,
                                const std::vector<double>& tau_grid,
                                int shots) {
  if (tau_grid.size() < 8)
    throw std::invalid_argument("zz_echo_experiment: grid too short");
  ZZEchoResult out;
  out.tau = tau_grid;
  std::vector<double> quad;
  for (double tau : tau_grid) {
    out.population.push_back(dev.zz_echo_population(tau, 0.0, shots));
    quad.push_back(dev.zz_echo_population(tau, std::numbers::pi / 2.0, shots));
  }

  // Periodogram initial guess for the oscillation frequency.
  const double span = tau_grid.back() - tau_grid.front();
  double best_f = 0.0, best_pw = 0.0, pw0 = 0.0;
  const int n_f = 400;
  const double f_max = 0.5 * double(tau_grid.size() - 1) / span;  // Nyquist
  for (int k = 0; k <= n_f; ++k) {
    const double f = f_max * k / n_f;
    cplx z = 0.0;
    for (std::size_t i = 0; i < tau_grid.size(); ++i)
      z += (out.population[i] - 0.5) *
           std::exp(cplx(0.0, -2.0 * std::numbers::pi * f * tau_grid[i]));
    const double pw = std::norm(z);
    if (k == 0) pw0 = pw;
    if (pw > best_pw) {
      best_pw = pw;
      best_f = f;
    }
  }

  // Flat signal: no resolvable oscillation.
  double mean = 0.0, var = 0.0;
  for (double p : out.population) mean += p;
  mean /= double(out.population.size());
  for (double p : out.population) var += (p - mean) * (p - mean);
  var /= double(out.population.size());
  if (best_f == 0.0 || best_pw <= 1.5 * pw0) {
    if (var < 1e-3) {  // flat within shot noise -> zeta ~ 0
      out.zeta = 0.0;
      out.oscillation_resolved = false;
      return out;
    }
    throw std::runtime_error(
        "zz_echo_experiment: contrast lost before one oscillation; extend grid");
  }
  if (best_f * span < 1.0)
    throw std::runtime_error(
        "zz_echo_experiment: grid shorter than one oscillation; extend grid");

  // Refine with a damped-cosine fit: p = 1/2 - A e^{-tau/T} cos(2 pi f tau).
  Eigen::VectorXd x(tau_grid.size()), y(tau_grid.size());
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    x(i) = tau_grid[i];
    y(i) = out.population[i];
  }
  auto model = [](const Eigen::VectorXd& xs, const Eigen::VectorXd& p) {
    Eigen::VectorXd yh(xs.size());
    for (int i = 0; i < xs.size(); ++i)
      yh(i) = 0.5 - p(0) * std::exp(-xs(i) / p(1)) *
                        std::cos(2.0 * std::numbers::pi * p(2) * xs(i));
    return yh;
  };
  Eigen::VectorXd p0(3);
  p0 << 0.5, span, best_f;
  auto fit = numerics::least_squares_fit(model, x, y, p0);
  out.frequency = fit.converged ? std::abs(fit.params(2)) : best_f;
  out.oscillation_resolved = true;

  // Sign from the quadrature arm: p_quad - 1/2 tracks +sin for zeta > 0.
  double corr = 0.0;
  for (std::size_t i = 0; i < tau_grid.size(); ++i)
    corr += (quad[i] - 0.5) *
            std::sin(2.0 * std::numbers::pi * out.frequency * tau_grid[i]);
  const double sign = corr >= 0.0 ? 1.0 : -1.0;
  out.zeta = sign * 2.0 * out.frequency;
  return out;
}

QuantumVolume quantum_volume(int n_max,
                             const std::function<double(int)>& eps_eff) {
  QuantumVolume out;
  double best = -1.0;
  for (int n = 1; n <= n_max; ++n) {
    const double eps = eps_eff(n);
    if (eps <= 0.0)
      throw std::invalid_argument("quantum_volume: eps_eff must be positive");
    const double depth = 1.0 / (double(n) * eps);
    const double score = std::min(double(n), depth);
    if (score > best) {
      best = score;
      out.n_opt = n;
      out.depth = depth;
    }
  }
  out.log2_vq = int(std::floor(best + 1e-9));
  return out;
}

}  // namespace cqed::gates
