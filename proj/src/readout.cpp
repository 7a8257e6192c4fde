#include "cqed/readout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cqed::readout {

using cplx = std::complex<double>;

namespace {

double grid_dt(const sim::ReadoutTrajectory& traj) {
  if (traj.t.size() < 2) throw std::invalid_argument("trajectory too short");
  return traj.t[1] - traj.t[0];
}

}  // namespace

std::vector<cplx> optimal_weights(const sim::ReadoutTrajectory& traj_g,
                                  const sim::ReadoutTrajectory& traj_e) {
  if (traj_g.t.size() != traj_e.t.size())
    throw std::invalid_argument("optimal_weights: grid mismatch");
  const double dt = grid_dt(traj_g);
  std::vector<cplx> w;
  w.reserve(traj_g.t.size() - 1);
  double energy = 0.0;
  for (std::size_t i = 0; i + 1 < traj_g.t.size(); ++i) {
    w.push_back(std::conj(traj_g.alpha_out[i] - traj_e.alpha_out[i]));
    energy += std::norm(w.back()) * dt;
  }
  if (energy <= 0.0)
    throw std::invalid_argument("optimal_weights: identical trajectories");
  return sim::normalize_weights(std::move(w), dt);
}

DephasingCurves measurement_dephasing(const sim::ReadoutTrajectory& traj_g,
                                      const sim::ReadoutTrajectory& traj_e,
                                      double kappa) {
  if (traj_g.t.size() != traj_e.t.size())
    throw std::invalid_argument("measurement_dephasing: grid mismatch");
  DephasingCurves out;
  out.t = traj_g.t;
  out.gamma_inst.reserve(out.t.size());
  for (std::size_t i = 0; i < out.t.size(); ++i)
    out.gamma_inst.push_back(0.5 * kappa *
                             std::norm(traj_g.alpha[i] - traj_e.alpha[i]));
  out.gamma_int.assign(out.t.size(), 0.0);
  for (std::size_t i = 1; i < out.t.size(); ++i)
    out.gamma_int[i] = out.gamma_int[i - 1] +
                       0.5 * (out.gamma_inst[i - 1] + out.gamma_inst[i]) *
                           (out.t[i] - out.t[i - 1]);
  return out;
}

EfficiencyResult snr_and_efficiency(const sim::ReadoutTrajectory& traj_g,
                                    const sim::ReadoutTrajectory& traj_e,
                                    const std::vector<cplx>& weights,
                                    const sim::GroundTruth& gt, int n_shots,
                                    numerics::RngStream& rng) {
  if (n_shots < 100)
    throw std::invalid_argument("snr_and_efficiency: need >= 100 shots per label");
  const std::size_t n = traj_g.t.size() - 1;
  if (weights.size() < n)
    throw std::invalid_argument("snr_and_efficiency: weight vector too short");
  const double dt = grid_dt(traj_g);
  const double var_q = gt.kappa_c / (2.0 * gt.kappa() * gt.eta);
  const double noise_sigma = std::sqrt(var_q / dt);  // per complex sample

  // Deterministic separation and accumulated weight energy vs tau.
  std::vector<cplx> sep(n + 1, 0.0);
  std::vector<double> energy(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    sep[i + 1] = sep[i] + std::conj(weights[i]) *
                              (traj_e.alpha_out[i] - traj_g.alpha_out[i]) * dt;
    energy[i + 1] = energy[i] + std::norm(weights[i]) * dt;
  }
  std::vector<cplx> axis(n + 1, cplx(1.0, 0.0));
  for (std::size_t i = 0; i <= n; ++i) {
    const cplx ref = std::abs(sep[i]) > 0.0 ? sep[i] : sep[n];
    if (std::abs(ref) > 0.0) axis[i] = ref / std::abs(ref);
  }

  // Streaming moments of the projected partial integrals per label.
  std::vector<cplx> mean_sum[2] = {std::vector<cplx>(n + 1, 0.0),
                                   std::vector<cplx>(n + 1, 0.0)};
  std::vector<double> sq_sum[2] = {std::vector<double>(n + 1, 0.0),
                                   std::vector<double>(n + 1, 0.0)};
  for (int label = 0; label < 2; ++label) {
    const auto& traj = label == 0 ? traj_g : traj_e;
    for (int s = 0; s < n_shots; ++s) {
      cplx u = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const cplx record = traj.alpha_out[i] + rng.complex_normal(noise_sigma);
        u += std::conj(weights[i]) * record * dt;
        mean_sum[label][i + 1] += u;
        sq_sum[label][i + 1] += std::norm(u);
      }
    }
  }

  EfficiencyResult out;
  out.t = traj_g.t;
  out.shots_per_label = n_shots;
  out.snr.assign(n + 1, 0.0);
  out.snr_theory.assign(n + 1, 0.0);
  const double inv_n = 1.0 / double(n_shots);
  for (std::size_t i = 1; i <= n; ++i) {
    const cplx mg = mean_sum[0][i] * inv_n;
    const cplx me = mean_sum[1][i] * inv_n;
    // Pooled per-quadrature variance along the separation axis.
    double var = 0.0;
    for (int label = 0; label < 2; ++label) {
      const cplx m = mean_sum[label][i] * inv_n;
      // E[|u - m|^2] split evenly between quadratures (isotropic noise).
      var += 0.5 * (sq_sum[label][i] * inv_n - std::norm(m));
    }
    var /= 2.0;
    if (var > 0.0) out.snr[i] = std::abs(me - mg) / std::sqrt(var);
    if (energy[i] > 0.0)
      out.snr_theory[i] = std::abs(sep[i]) / std::sqrt(var_q * energy[i]);
  }

  const auto deph = measurement_dephasing(traj_g, traj_e, gt.kappa());
  const double gamma_end = deph.gamma_int.back();
  if (gamma_end > 0.0) {
    const double snr_end = out.snr.back();
    out.eta = snr_end * snr_end / (4.0 * gamma_end);
    const double rel_snr =
        std::sqrt(2.0 / (double(n_shots) * snr_end * snr_end) +
                  1.0 / (4.0 * double(n_shots)));
    out.eta_sigma = out.eta * 2.0 * rel_snr;
  }
  return out;
}

Digitizer make_digitizer(const std::vector<cplx>& calib_g,
                         const std::vector<cplx>& calib_e,
                         bool max_likelihood) {
  if (calib_g.size() < 2 || calib_e.size() < 2)
    throw std::invalid_argument("make_digitizer: need calibration clouds");
  cplx mg = 0.0, me = 0.0;
  for (auto v : calib_g) mg += v;
  for (auto v : calib_e) me += v;
  mg /= double(calib_g.size());
  me /= double(calib_e.size());
  if (std::abs(me - mg) == 0.0)
    throw std::invalid_argument("make_digitizer: degenerate clouds");

  Digitizer dig;
  dig.axis = (me - mg) / std::abs(me - mg);
  dig.max_likelihood = max_likelihood;
  auto proj = [&](cplx v) { return (std::conj(dig.axis) * v).real(); };
  dig.mean_g = proj(mg);
  dig.mean_e = proj(me);
  double vg = 0.0, ve = 0.0;
  for (auto v : calib_g) vg += std::pow(proj(v) - dig.mean_g, 2);
  for (auto v : calib_e) ve += std::pow(proj(v) - dig.mean_e, 2);
  dig.sigma_g = std::sqrt(vg / double(calib_g.size() - 1));
  dig.sigma_e = std::sqrt(ve / double(calib_e.size() - 1));

  dig.threshold = 0.5 * (dig.mean_g + dig.mean_e);
  if (max_likelihood && dig.sigma_g > 0.0 && dig.sigma_e > 0.0 &&
      dig.sigma_g != dig.sigma_e) {
    // Crossing of the two 1-D Gaussian densities between the means.
    const double a = 1.0 / (dig.sigma_g * dig.sigma_g) -
                     1.0 / (dig.sigma_e * dig.sigma_e);
    const double b = -2.0 * (dig.mean_g / (dig.sigma_g * dig.sigma_g) -
                             dig.mean_e / (dig.sigma_e * dig.sigma_e));
    const double c = dig.mean_g * dig.mean_g / (dig.sigma_g * dig.sigma_g) -
                     dig.mean_e * dig.mean_e / (dig.sigma_e * dig.sigma_e) +
                     2.0 * std::log(dig.sigma_g / dig.sigma_e);
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double lo = std::min(dig.mean_g, dig.mean_e);
      const double hi = std::max(dig.mean_g, dig.mean_e);
      for (double sgn : {-1.0, 1.0}) {
        const double root = (-b + sgn * std::sqrt(disc)) / (2.0 * a);
        if (root >= lo && root <= hi) {
          dig.threshold = root;
          break;
        }
      }
    }
  }
  return dig;
}

std::vector<int> threshold_digitize(const std::vector<cplx>& shots,
                                    const Digitizer& dig) {
  std::vector<int> bits;
  bits.reserve(shots.size());
  for (auto v : shots)
    bits.push_back((std::conj(dig.axis) * v).real() > dig.threshold ? 1 : 0);
  return bits;
}

AssignmentMatrix assignment_matrix(const std::vector<cplx>& shots_g,
                                   const std::vector<cplx>& shots_e,
                                   const Digitizer& dig) {
  AssignmentMatrix out;
  out.digitizer = dig;
  for (int prep = 0; prep < 2; ++prep) {
    const auto& shots = prep == 0 ? shots_g : shots_e;
    if (shots.empty())
      throw std::invalid_argument("assignment_matrix: empty batch");
    const auto bits = threshold_digitize(shots, dig);
    std::size_t ones = 0;
    for (int b : bits) ones += std::size_t(b);
    out.lambda(1, prep) = double(ones) / double(bits.size());
    out.lambda(0, prep) = 1.0 - out.lambda(1, prep);
  }
  return out;
}

AssignmentMatrix assignment_matrix(const std::vector<cplx>& shots_g,
                                   const std::vector<cplx>& shots_e,
                                   bool max_likelihood) {
  return assignment_matrix(shots_g, shots_e,
                           make_digitizer(shots_g, shots_e, max_likelihood));
}

QndResult butterfly_qndness(const std::vector<int>& m1_prep0,
                            const std::vector<int>& m2_prep0,
                            const std::vector<int>& m1_prep1,
                            const std::vector<int>& m2_prep1,
                            const AssignmentMatrix& lambda) {
  QndResult out;
  out.post_given_prep.setZero();
  if (std::abs(lambda.lambda.determinant()) <= 0.1) {
    out.valid = false;
    out.qndness = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.valid = true;
  const Eigen::Matrix2d inv = lambda.lambda.inverse();

  for (int prep = 0; prep < 2; ++prep) {
    const auto& m1 = prep == 0 ? m1_prep0 : m1_prep1;
    const auto& m2 = prep == 0 ? m2_prep0 : m2_prep1;
    if (m1.size() != m2.size() || m1.empty())
      throw std::invalid_argument("butterfly_qndness: bad record shape");
    // m2 statistics conditioned on m1, then marginalized over m1.
    double count_m1[2] = {0.0, 0.0};
    double count_m2[2][2] = {{0.0, 0.0}, {0.0, 0.0}};  // [m1][m2]
    for (std::size_t i = 0; i < m1.size(); ++i) {
      count_m1[m1[i]] += 1.0;
      count_m2[m1[i]][m2[i]] += 1.0;
    }
    Eigen::Vector2d post = Eigen::Vector2d::Zero();
    for (int b1 = 0; b1 < 2; ++b1) {
      if (count_m1[b1] == 0.0) continue;
      Eigen::Vector2d p_m2(count_m2[b1][0] / count_m1[b1],
                           count_m2[b1][1] / count_m1[b1]);
      post += (count_m1[b1] / double(m1.size())) * (inv * p_m2);
    }
    for (int s = 0; s < 2; ++s) {
      if (post(s) < 0.0 || post(s) > 1.0) out.clipped = true;
      post(s) = std::clamp(post(s), 0.0, 1.0);
    }
    const double norm = post.sum();
    if (norm > 0.0) post /= norm;
    out.post_given_prep.col(prep) = post;
  }

  double q = 1.0 -
             (out.post_given_prep(0, 1) + out.post_given_prep(1, 0)) / 2.0;
  if (q < 0.0 || q > 1.0) out.clipped = true;
  out.qndness = std::clamp(q, 0.0, 1.0);
  return out;
}

ButterflyResult run_butterfly(sim::Device& dev, int n_shots, double a_in,
                              double tau, int n_samples) {
  const auto traj_g = dev.readout_avg(0, a_in, tau, n_samples);
  const auto traj_e = dev.readout_avg(1, a_in, tau, n_samples);
  const auto weights = optimal_weights(traj_g, traj_e);

  // Calibration clouds with ideal preparation define the digitizer.
  const auto calib_g =
      dev.readout_shots(0, n_shots, a_in, tau, n_samples, weights, false);
  const auto calib_e =
      dev.readout_shots(1, n_shots, a_in, tau, n_samples, weights, false);
  const auto dig = make_digitizer(calib_g.outcomes, calib_e.outcomes);

  ButterflyResult out;
  std::vector<int> m1[2], m2[2];
  std::size_t total = 0, kept = 0;
  for (int prep = 0; prep < 2; ++prep) {
    const auto records =
        dev.butterfly_shots(prep, n_shots, a_in, tau, n_samples, weights);
    // Purify the preparation: keep shots whose M0 reads ground 2 sigma
    // beyond the decision threshold.
    const double stringent = dig.threshold - 2.0 * dig.sigma_g;
    for (const auto& r : records) {
      ++total;
      const double x0 = (std::conj(dig.axis) * r.m0).real();
      if (x0 > stringent) continue;
      ++kept;
      m1[prep].push_back((std::conj(dig.axis) * r.m1).real() > dig.threshold);
      m2[prep].push_back((std::conj(dig.axis) * r.m2).real() > dig.threshold);
    }
  }
  out.kept_fraction = total > 0 ? double(kept) / double(total) : 0.0;

  // Lambda_M from the purified M1 statistics.
  out.lambda.digitizer = dig;
  for (int prep = 0; prep < 2; ++prep) {
    if (m1[prep].empty())
      throw std::runtime_error("run_butterfly: purification kept no shots");
    double ones = 0.0;
    for (int b : m1[prep]) ones += b;
    out.lambda.lambda(1, prep) = ones / double(m1[prep].size());
    out.lambda.lambda(0, prep) = 1.0 - out.lambda.lambda(1, prep);
  }
  out.qnd = butterfly_qndness(m1[0], m2[0], m1[1], m2[1], out.lambda);
  return out;
}

}  // namespace cqed::readout
