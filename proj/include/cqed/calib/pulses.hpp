#pragma once

// Pulse-building blocks used by the calibration drivers: mean-subtracted
// Gaussian envelopes with a derivative quadrature (DRAG), named single-qubit
// gates, and idle padding.

#include <string>

#include "cqed/sim/dynamics.hpp"

namespace cqed::calib {

struct PulseStyle {
  double sigma = 4e-9;          // Gaussian width, s
  double duration = 16e-9;      // total gate length (>= 4 sigma), s
  double sample_period = 1e-9;  // s
};

// Calibrated amplitudes shared by the gate builders. `drag` is the DRAG
// coefficient D: the quadrature is Q = -D * ((t - mu)/sigma) * I.
struct GateAmps {
  double pi_amp = 0.0;
  double pi2_amp = 0.0;
  double drag = 0.0;
};

// Mean-subtracted DRAG envelope: I is a Gaussian with its edge value removed
// (so the envelope starts and ends below 1e-3 * g_amp), Q the scaled
// derivative. Throws if duration < 4 sigma.
sim::PulseSegment drag_segment(double g_amp, double d_amp,
                               const PulseStyle& style, double phase = 0.0,
                               double start = 0.0, double detuning = 0.0);

// Single-segment sequence wrapping drag_segment (fragment form).
sim::PulseSequence drag_pulse(double g_amp, double d_amp, double sigma,
                              double duration, double sample_period = 1e-9);

// Integral of the unit-amplitude mean-subtracted envelope (s); the rotation
// angle of a gate is drive_scale * amp * gaussian_area(style).
double gaussian_area(const PulseStyle& style);

// Appends a named gate at time `start` and returns the end time. Names:
// I, Xp, Xm, Yp, Ym (pi rotations), X9, X9m, Y9, Y9m (pi/2 rotations).
double append_gate(sim::PulseSequence& seq, const std::string& name,
                   const GateAmps& amps, const PulseStyle& style, double start);

// Extends the sequence duration to `until` with an empty marker segment.
void append_idle(sim::PulseSequence& seq, double until);

}  // namespace cqed::calib
