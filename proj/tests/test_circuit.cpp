#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cqed/circuit.hpp"
#include "cqed/constants.hpp"

using namespace cqed;
using namespace cqed::circuit;

TEST_CASE("oscillator: Z0 = R_Q symmetry point gives phi_zpf = n_zpf = 1/sqrt(2)") {
  const double c = 1e-12;
  const double l = kResistanceQuantum * kResistanceQuantum * c;
  Oscillator o = oscillator_params(l, c);
  CHECK(std::abs(o.phi_zpf - 1.0 / std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(o.n_zpf - 1.0 / std::sqrt(2.0)) < 1e-12);
}

TEST_CASE("oscillator: 10 nH, 1 pF gives 1.5915 GHz at 100 ohm") {
  Oscillator o = oscillator_params(10e-9, 1e-12);
  CHECK(std::abs(o.omega / kTwoPi / 1.5915e9 - 1.0) < 1e-4);
  CHECK(std::abs(o.z0 - 100.0) < 1e-9);
}

TEST_CASE("oscillator: phi_zpf * n_zpf = 1/2 for arbitrary L, C") {
  for (double l : {0.1e-9, 3e-9, 80e-9})
    for (double c : {5e-15, 0.3e-12, 7e-12}) {
      Oscillator o = oscillator_params(l, c);
      CHECK(std::abs(o.phi_zpf * o.n_zpf - 0.5) < 1e-12);
    }
  CHECK_THROWS_AS(oscillator_params(-1e-9, 1e-12), std::invalid_argument);
}

TEST_CASE("transmon: EJ=12.5 GHz, EC=250 MHz gives 4.75 GHz and alpha=EC") {
  TransmonParams t = transmon_spectrum(12.5e9, 250e6);
  CHECK(std::abs(t.omega_t / kTwoPi - 4.75e9) < 1.0);
  CHECK(t.anharmonicity == 250e6);
  CHECK(t.in_transmon_regime);  // EJ/EC = 50
  CHECK_FALSE(transmon_spectrum(1e9, 250e6).in_transmon_regime);
}

TEST_CASE("squid: effective EJ vs external flux") {
  const double ej = 20e9;
  CHECK(squid_effective_ej(ej, 0.0) == ej);
  CHECK(std::abs(squid_effective_ej(ej, std::numbers::pi)) < 1e-6 * ej);
  CHECK(std::abs(squid_effective_ej(ej, std::numbers::pi / 2.0) / ej - 0.70711) <
        1e-5);
  // 4-pi periodic and even
  for (double phi : {0.3, 1.1, 2.9}) {
    CHECK(std::abs(squid_effective_ej(ej, phi) -
                   squid_effective_ej(ej, phi + 4.0 * std::numbers::pi)) <
          1e-6 * ej);
    CHECK(squid_effective_ej(ej, phi) == squid_effective_ej(ej, -phi));
  }
}

TEST_CASE("dispersive: worked numbers for g=100 MHz, Delta=1.5 GHz, EC=250 MHz") {
  const double kappa = kTwoPi * 1e6;
  DispersiveCoupling d = dispersive_params(100e6, 6.5e9, 5.0e9, 250e6, kappa);
  CHECK(std::abs(d.chi / 2.2222e6 - 1.0) < 1e-4);
  CHECK(std::abs(d.kerr / 4.938e3 - 1.0) < 1e-3);
  CHECK(std::abs(d.lamb_shift / 6.6667e6 - 1.0) < 1e-4);
  CHECK(std::abs(d.purcell_rate - 2.0 * std::pow(1.0 / 15.0, 2) * kappa) < 1e-9);
  CHECK(d.dispersive_valid);
  CHECK(std::abs(d.theta - 0.5 * std::atan(2.0 * 100e6 / 1.5e9)) < 1e-12);
}

TEST_CASE("dispersive: degenerate and uncoupled limits") {
  DispersiveCoupling d = dispersive_params(0.0, 6.5e9, 5.0e9, 250e6, 1e6);
  CHECK(d.theta == 0.0);
  CHECK(d.chi == 0.0);
  CHECK(d.kerr == 0.0);
  CHECK(d.lamb_shift == 0.0);
  CHECK(d.purcell_rate == 0.0);
  CHECK_FALSE(dispersive_params(750e6, 6.5e9, 5.0e9, 250e6, 1e6).dispersive_valid);
  CHECK_THROWS_AS(dispersive_params(1e8, 5e9, 5e9, 250e6, 1e6),
                  std::invalid_argument);
}

TEST_CASE("dispersive: chi/K = 2 (Delta/g)^2 identity") {
  for (double g : {20e6, 100e6, 180e6}) {
    DispersiveCoupling d = dispersive_params(g, 6.3e9, 4.9e9, 220e6, 1e6);
    const double want = 2.0 * std::pow(d.delta / g, 2);
    CHECK(std::abs(d.chi / d.kerr / want - 1.0) < 1e-12);
  }
}

TEST_CASE("dispersive: 2x2 matrix eigenvalue cross-check of Lamb shift and Purcell") {
  const double kappa = kTwoPi * 2e6;
  const double wr = 5.0e9, wt = 7.0e9, g = 0.05 * (wt - wr);  // g/Delta = 0.05
  DispersiveCoupling d = dispersive_params(g, wt, wr, 250e6, kappa);
  auto ev = dressed_resonator_eigenvalue(g, wt, wr, kappa);
  // Real part: dressed resonator pushed by the Lamb shift g^2/Delta.
  const double shift = wr - ev.real();
  CHECK(std::abs(shift / d.lamb_shift - 1.0) < 0.05);
  // Imaginary part: -kappa/2 + (g/Delta)^2 kappa, i.e. Purcell transfer.
  const double im_hz = ev.imag() * kTwoPi;  // back to angular
  const double want = -kappa / 2.0 + d.purcell_rate / 2.0;
  CHECK(std::abs(im_hz / want - 1.0) < 0.05);
}

TEST_CASE("junction: 6 kOhm, 180 ueV, aging 1.15 gives LJ near 8 nH") {
  JunctionParams j = junction_from_resistance(6e3, 180e-6, 1.15);
  CHECK(std::abs(j.lj / 8e-9 - 1.0) < 0.10);
  // Consistency identities between EJ, LJ, Ic.
  CHECK(std::abs(j.ic * j.lj / kReducedFluxQuantum - 1.0) < 1e-12);
  CHECK(std::abs(j.ej * kPlanck / (kReducedFluxQuantum * j.ic) - 1.0) < 1e-12);
}

TEST_CASE("junction: LJ linear in aged resistance; tanh factor limits") {
  JunctionParams a = junction_from_resistance(6e3, 180e-6, 1.15);
  JunctionParams b = junction_from_resistance(12e3, 180e-6, 1.15);
  CHECK(std::abs(b.lj / a.lj - 2.0) < 1e-12);
  // T -> 0 reduces the finite-T product to the zero-T form.
  CHECK(std::abs(icrn_product(180e-6, 1e-6) / icrn_product(180e-6, 0.0) - 1.0) <
        1e-12);
  // At the gap temperature scale the product is visibly suppressed.
  const double t_gap = 180e-6 * 1.602176634e-19 / 1.380649e-23;
  CHECK(icrn_product(180e-6, t_gap) < 0.5 * icrn_product(180e-6, 0.0));
  CHECK_THROWS_AS(junction_from_resistance(6e3, 180e-6, 0.5),
                  std::invalid_argument);
}
