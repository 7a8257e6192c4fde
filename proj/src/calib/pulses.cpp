#include "cqed/calib/pulses.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cqed::calib {

using cplx = std::complex<double>;

sim::PulseSegment drag_segment(double g_amp, double d_amp,
                               const PulseStyle& style, double phase,
                               double start, double detuning) {
  if (style.duration < 4.0 * style.sigma - 1e-15)
    throw std::invalid_argument("drag_segment: duration must be >= 4 sigma");
  sim::PulseSegment seg;
  seg.target = sim::Channel::Qubit;
  seg.phase = phase;
  seg.start = start;
  seg.carrier_detuning = detuning;
  const double mu = 0.5 * style.duration;
  const double edge = std::exp(-0.5 * std::pow(mu / style.sigma, 2.0));
  const double n = std::round(style.duration / style.sample_period);
  for (int k = 0; k < static_cast<int>(n); ++k) {
    const double t = (k + 0.5) * style.sample_period;
    const double x = (t - mu) / style.sigma;
    const double g = (std::exp(-0.5 * x * x) - edge) / (1.0 - edge);
    seg.envelope.push_back(g_amp * cplx(g, -d_amp * x * g));
  }
  return seg;
}

sim::PulseSequence drag_pulse(double g_amp, double d_amp, double sigma,
                              double duration, double sample_period) {
  PulseStyle style{sigma, duration, sample_period};
  sim::PulseSequence seq;
  seq.sample_period = sample_period;
  seq.channels.push_back(drag_segment(g_amp, d_amp, style));
  return seq;
}

double gaussian_area(const PulseStyle& style) {
  const double mu = 0.5 * style.duration;
  const double edge = std::exp(-0.5 * std::pow(mu / style.sigma, 2.0));
  double area = 0.0;
  const double n = std::round(style.duration / style.sample_period);
  for (int k = 0; k < static_cast<int>(n); ++k) {
    const double t = (k + 0.5) * style.sample_period;
    const double x = (t - mu) / style.sigma;
    area += (std::exp(-0.5 * x * x) - edge) / (1.0 - edge);
  }
  return area * style.sample_period;
}

double append_gate(sim::PulseSequence& seq, const std::string& name,
                   const GateAmps& amps, const PulseStyle& style,
                   double start) {
  if (name == "I") return start + style.duration;
  double amp = 0.0, phase = 0.0;
  if (name == "Xp") amp = amps.pi_amp;
  else if (name == "Xm") { amp = amps.pi_amp; phase = std::numbers::pi; }
  else if (name == "Yp") { amp = amps.pi_amp; phase = 0.5 * std::numbers::pi; }
  else if (name == "Ym") { amp = amps.pi_amp; phase = -0.5 * std::numbers::pi; }
  else if (name == "X9") amp = amps.pi2_amp;
  else if (name == "X9m") { amp = amps.pi2_amp; phase = std::numbers::pi; }
  else if (name == "Y9") { amp = amps.pi2_amp; phase = 0.5 * std::numbers::pi; }
  else if (name == "Y9m") { amp = amps.pi2_amp; phase = -0.5 * std::numbers::pi; }
  else throw std::invalid_argument("append_gate: unknown gate " + name);
  if (seq.sample_period != style.sample_period && !seq.channels.empty())
    throw std::invalid_argument("append_gate: sample-period mismatch");
  seq.sample_period = style.sample_period;
  seq.channels.push_back(drag_segment(amp, amps.drag, style, phase, start));
  return start + style.duration;
}

void append_idle(sim::PulseSequence& seq, double until) {
  const double end = seq.duration();
  if (until <= end + 0.5 * seq.sample_period) return;
  sim::PulseSegment seg;
  seg.target = sim::Channel::Qubit;
  seg.start = std::max(until - seq.sample_period, end);
  seg.envelope.push_back(cplx(0.0, 0.0));
  seq.channels.push_back(seg);
}

}  // namespace cqed::calib
