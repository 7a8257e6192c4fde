#include "cqed/sim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "cqed/constants.hpp"
#include "cqed/numerics/lindblad.hpp"

namespace cqed::sim {

using Eigen::MatrixXcd;
using cplx = std::complex<double>;

double PulseSequence::duration() const {
  double end = 0.0;
  for (const auto& seg : channels)
    end = std::max(end, seg.start + seg.envelope.size() * sample_period);
  return end;
}

void PulseSequence::validate() const {
  if (sample_period <= 0.0)
    throw std::invalid_argument("PulseSequence: sample_period <= 0");
  for (const auto& seg : channels) {
    for (const auto& v : seg.envelope)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw std::invalid_argument("PulseSequence: non-finite envelope");
    if (std::abs(seg.carrier_detuning) >= 0.5 / sample_period)
      throw std::invalid_argument(
          "PulseSequence: detuning exceeds the Nyquist rate of the envelope");
  }
  for (std::size_t a = 0; a < channels.size(); ++a)
    for (std::size_t b = a + 1; b < channels.size(); ++b) {
      if (channels[a].target != channels[b].target) continue;
      const double a0 = channels[a].start;
      const double a1 = a0 + channels[a].envelope.size() * sample_period;
      const double b0 = channels[b].start;
      const double b1 = b0 + channels[b].envelope.size() * sample_period;
      if (a0 < b1 - 1e-15 && b0 < a1 - 1e-15)
        throw std::invalid_argument(
            "PulseSequence: overlapping segments on one channel");
    }
}

namespace {

// Complex drive amplitude (rad/s) on the qubit channel at time t.
cplx drive_at(const PulseSequence& seq, const GroundTruth& gt, double t) {
  cplx omega = 0.0;
  for (const auto& seg : seq.channels) {
    if (seg.target != Channel::Qubit) continue;
    const double local = t - seg.start;
    if (local < 0.0) continue;
    const auto k = static_cast<std::size_t>(local / seq.sample_period);
    if (k >= seg.envelope.size()) continue;
    const double ph = seg.phase - kTwoPi * seg.carrier_detuning * local;
    omega += gt.drive_scale * seg.envelope[k] * std::exp(cplx(0.0, ph));
  }
  return omega;
}

MatrixXcd lowering_op(int levels) {
  MatrixXcd q = MatrixXcd::Zero(levels, levels);
  for (int n = 1; n < levels; ++n) q(n - 1, n) = std::sqrt(double(n));
  return q;
}

MatrixXcd number_op(int levels) {
  MatrixXcd n = MatrixXcd::Zero(levels, levels);
  for (int k = 0; k < levels; ++k) n(k, k) = double(k);
  return n;
}

// Exact propagation over an interval with constant H and collapse set:
// vec(rho') = exp(L dt) vec(rho) with the vectorized Lindblad generator.
// The qubit space is tiny (<= 4 levels), so the d^2 x d^2 exponential is
// far cheaper than stepping a long drive-free gap.
MatrixXcd propagate_const(const MatrixXcd& rho, const MatrixXcd& h,
                          const std::vector<MatrixXcd>& collapse, double dt) {
  const auto d = rho.rows();
  const MatrixXcd id = MatrixXcd::Identity(d, d);
  MatrixXcd l = cplx(0.0, -1.0) * (Eigen::kroneckerProduct(id, h).eval() -
                                   Eigen::kroneckerProduct(h.transpose(), id).eval());
  for (const auto& c : collapse) {
    const MatrixXcd cdc = c.adjoint() * c;
    l += Eigen::kroneckerProduct(c.conjugate(), c).eval();
    l -= 0.5 * Eigen::kroneckerProduct(id, cdc).eval();
    l -= 0.5 * Eigen::kroneckerProduct(cdc.transpose(), id).eval();
  }
  const MatrixXcd u = (l * dt).exp();
  Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(rho.data(), d * d);
  v = u * v;
  MatrixXcd out = Eigen::Map<const MatrixXcd>(v.data(), d, d);
  return 0.5 * (out + out.adjoint().eval());
}

}  // namespace

std::vector<MatrixXcd> evolve_pulse(const PulseSequence& seq,
                                    const MatrixXcd& rho0, const GroundTruth& gt,
                                    std::vector<double> t_grid, int levels) {
  seq.validate();
  const double total = seq.duration();
  if (t_grid.empty()) {
    const int n = std::max(2, static_cast<int>(total / seq.sample_period) + 1);
    for (int i = 0; i < n; ++i) t_grid.push_back(total * i / (n - 1));
  }

  const MatrixXcd q = lowering_op(levels);
  const MatrixXcd qd = q.adjoint();
  const MatrixXcd nop = number_op(levels);
  MatrixXcd h_free = MatrixXcd::Zero(levels, levels);
  // Rotating frame at frame_freq; frame_freq = 0 means "on resonance".
  const double delta =
      seq.frame_freq > 0.0 ? kTwoPi * (gt.omega_q01 - seq.frame_freq) : 0.0;
  const double alpha_rad = kTwoPi * gt.anharmonicity;
  for (int n = 0; n < levels; ++n)
    h_free(n, n) = delta * n - 0.5 * alpha_rad * n * (n - 1);

  std::vector<MatrixXcd> collapse;
  collapse.push_back(std::sqrt(1.0 / gt.t1) * q);
  collapse.push_back(std::sqrt(2.0 / gt.tphi) * nop);

  // Readout segments dephase the qubit at the measurement-induced rate
  // (kappa/2)|alpha_g - alpha_e|^2, evaluated from the semiclassical cavity
  // trajectories for the segment's input field (cavity starts in vacuum).
  struct MeasWindow {
    double start, dt;
    std::vector<double> gamma;  // per sample interval
  };
  std::vector<MeasWindow> windows;
  for (const auto& seg : seq.channels) {
    if (seg.target != Channel::Readout || seg.envelope.empty()) continue;
    MeasWindow w;
    w.start = seg.start;
    w.dt = seq.sample_period;
    // Extend the window through the cavity ring-down (10/kappa of zero
    // drive) so the residual field keeps dephasing the qubit.
    std::vector<cplx> drive = seg.envelope;
    const auto ringdown = static_cast<std::size_t>(
        std::ceil(10.0 / gt.kappa() / seq.sample_period));
    drive.insert(drive.end(), ringdown, cplx(0.0));
    std::vector<double> grid;
    for (std::size_t k = 0; k <= drive.size(); ++k)
      grid.push_back(k * seq.sample_period);
    auto tg = readout_trajectory(0, drive, gt, grid);
    auto te = readout_trajectory(1, drive, gt, grid);
    for (std::size_t k = 0; k < drive.size(); ++k)
      w.gamma.push_back(0.5 * gt.kappa() *
                        std::norm(tg.alpha[k] - te.alpha[k]));
    windows.push_back(std::move(w));
  }
  auto meas_gamma = [&](double t) {
    double g_sum = 0.0;
    for (const auto& w : windows) {
      const double local = t - w.start;
      if (local < 0.0) continue;
      const auto k = static_cast<std::size_t>(local / w.dt);
      if (k < w.gamma.size()) g_sum += w.gamma[k];
    }
    return g_sum;
  };
  // Boundaries: requested times plus every drive sample edge, so the
  // zero-order-hold envelope is constant within each integration interval.
  std::set<double> edges(t_grid.begin(), t_grid.end());
  for (const auto& seg : seq.channels) {
    if (seg.target == Channel::Flux) continue;
    for (std::size_t k = 0; k <= seg.envelope.size(); ++k)
      edges.insert(seg.start + k * seq.sample_period);
  }
  edges.insert(0.0);

  for (const auto& w : windows) {
    for (std::size_t k = 0; k <= w.gamma.size(); ++k)
      edges.insert(w.start + k * w.dt);
  }

  std::vector<MatrixXcd> out;
  out.reserve(t_grid.size());
  MatrixXcd rho = rho0;
  double t_prev = 0.0;
  std::size_t gi = 0;
  while (gi < t_grid.size() && t_grid[gi] <= 1e-18) {
    out.push_back(rho);
    ++gi;
  }
  for (double t_next : edges) {
    if (t_prev >= t_grid.back() - 1e-18) break;
    if (t_next <= t_prev + 1e-18) continue;
    const double t_mid = 0.5 * (t_prev + t_next);
    const cplx omega = drive_at(seq, gt, t_mid);
    const MatrixXcd h =
        h_free + 0.5 * (omega * qd + std::conj(omega) * q);
    std::vector<MatrixXcd> cs = collapse;
    const double gm = meas_gamma(t_mid);
    if (gm > 0.0) cs.push_back(std::sqrt(2.0 * gm) * nop);
    rho = propagate_const(rho, h, cs, t_next - t_prev);
    while (gi < t_grid.size() && t_grid[gi] <= t_next + 1e-15) {
      out.push_back(rho);
      ++gi;
    }
    t_prev = t_next;
  }
  while (gi < t_grid.size()) {
    out.push_back(rho);
    ++gi;
  }
  return out;
}

ReadoutTrajectory readout_trajectory(int qubit_state,
                                     const std::vector<cplx>& a_in,
                                     const GroundTruth& gt,
                                     const std::vector<double>& t_grid) {
  if (t_grid.size() < 2)
    throw std::invalid_argument("readout_trajectory: need at least 2 times");
  const double kappa = gt.kappa();
  const double chi_rad = kTwoPi * gt.chi();
  const double sign = qubit_state == 0 ? -1.0 : 1.0;
  const cplx lambda(-kappa / 2.0, sign * chi_rad / 2.0);
  const double sqrt_k = std::sqrt(kappa);
  const double sqrt_kc = std::sqrt(gt.kappa_c);

  ReadoutTrajectory tr;
  tr.t = t_grid;
  tr.alpha.resize(t_grid.size());
  tr.alpha_out.resize(t_grid.size());
  auto drive = [&](std::size_t interval) {
    if (a_in.empty()) return cplx(0.0);
    return a_in.size() == 1 ? a_in[0] : a_in.at(interval);
  };
  cplx alpha = 0.0;
  tr.alpha[0] = alpha;
  tr.alpha_out[0] = drive(0) + sqrt_kc * alpha;
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const cplx ain = drive(i - 1);
    const cplx alpha_ss = sqrt_k * ain / lambda;
    const double dt = t_grid[i] - t_grid[i - 1];
    alpha = alpha_ss + (alpha - alpha_ss) * std::exp(lambda * dt);
    tr.alpha[i] = alpha;
    const cplx ain_now = drive(std::min(i, a_in.empty() ? 0 : a_in.size() - 1));
    tr.alpha_out[i] = ain_now + sqrt_kc * alpha;
  }
  return tr;
}

std::vector<cplx> normalize_weights(std::vector<cplx> w, double dt) {
  double energy = 0.0;
  for (const auto& v : w) energy += std::norm(v) * dt;
  if (energy <= 0.0)
    throw std::invalid_argument("normalize_weights: zero weights");
  const double scale = 1.0 / std::sqrt(energy);
  for (auto& v : w) v *= scale;
  return w;
}

ShotBatch acquire_shots(const ReadoutTrajectory& traj_g,
                        const ReadoutTrajectory& traj_e, int prep,
                        const std::vector<cplx>& weights, int n_shots,
                        const GroundTruth& gt, numerics::RngStream& rng,
                        bool include_prep_errors) {
  if (gt.eta <= 0.0 || gt.eta > 1.0)
    throw std::invalid_argument("acquire_shots: eta outside (0, 1]");
  if (weights.size() + 1 < traj_g.t.size() ||
      traj_g.t.size() != traj_e.t.size())
    throw std::invalid_argument("acquire_shots: weight/grid size mismatch");

  ShotBatch batch;
  batch.n_shots = n_shots;
  batch.integration_window = traj_g.t.back() - traj_g.t.front();
  const double noise_sigma = std::sqrt(gt.kappa_c / (2.0 * gt.kappa() * gt.eta));

  batch.outcomes.reserve(n_shots);
  batch.prep_labels.assign(n_shots, prep);
  for (int s = 0; s < n_shots; ++s) {
    int state = prep;
    double flip_time = std::numeric_limits<double>::infinity();
    if (include_prep_errors) {
      if (rng.bernoulli(gt.n_th)) state = 1 - state;
      if (state == 1) flip_time = rng.exponential(1.0 / gt.t1);
    }
    cplx integral = 0.0;
    for (std::size_t i = 0; i + 1 < traj_g.t.size(); ++i) {
      const double dt = traj_g.t[i + 1] - traj_g.t[i];
      const bool excited = (state == 1) && (traj_g.t[i] < flip_time);
      const cplx field = excited ? traj_e.alpha_out[i] : traj_g.alpha_out[i];
      integral += std::conj(weights[i]) * field * dt;
    }
    integral += noise_sigma * cplx(rng.normal(), rng.normal());
    batch.outcomes.push_back(integral);
  }
  return batch;
}

}  // namespace cqed::sim
