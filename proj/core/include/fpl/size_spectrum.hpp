#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fpl/errors.hpp"

namespace fpl {

// Spectra are stored in mass form: v_k = k * c_k where c_k is the number
// density of size-k components. finite_support means the spectrum is the
// whole law; truncated means entries above size `truncation` were cut off,
// so tail-sensitive consumers must account for the missing mass.
enum class SpectrumKind { finite_support, truncated };

struct SizeSpectrum {
  std::vector<std::pair<std::int64_t, double>> entries;  // ascending k, v_k > 0
  SpectrumKind kind = SpectrumKind::finite_support;
  std::int64_t truncation = 0;  // cut size K when kind == truncated
};

struct Moments {
  double m0 = 0.0;  // total mass      sum v_k
  double m1 = 0.0;  // sum k v_k
  double m2 = 0.0;  // sum k^2 v_k
  double m3 = 0.0;  // sum k^3 v_k
  // True for truncated spectra: m1..m3 of the full law may diverge, the
  // values above only cover the stored support.
  bool truncated = false;
};

struct SizeBiasedPmf {
  // p_k = k v_k / m1, ascending k, sums to 1 over the stored support.
  std::vector<std::pair<std::int64_t, double>> probs;
};

// Validates and normalizes entries: sizes must be positive, masses
// nonnegative, keys unique. Zero-mass entries are dropped.
SizeSpectrum make_spectrum(
    std::vector<std::pair<std::int64_t, double>> entries,
    SpectrumKind kind = SpectrumKind::finite_support,
    std::int64_t truncation = 0);

// All mass in size-1 components.
SizeSpectrum monodisperse(double mass);

// Dense solver output v[1..K] (index 0 unused) as a truncated spectrum.
SizeSpectrum spectrum_from_dense(const std::vector<double>& v,
                                 std::int64_t K);

Moments moments(const SizeSpectrum& s);

// Derivatives of the Laplace generating function V(x) = sum v_k e^{-kx}:
// returns sum (-k)^order v_k e^{-kx} for order in 0..3, i.e. V, V', V'', V'''.
// A truncated spectrum stands for a law whose transform need not converge
// for x <= 0, so that evaluation raises DivergentAtX.
double laplace_V(const SizeSpectrum& s, double x, int order = 0);

// sum of v_k over stored entries with k >= K.
double tail_mass(const SizeSpectrum& s, std::int64_t K);

// Single Borel mass (1/t) k^{k-1} e^{-k} / k!, evaluated in log space.
double borel_mass(std::int64_t k, double t = 1.0);

// First K Borel masses at time t >= 1 (raises PreGelTime otherwise).
SizeSpectrum borel_spectrum(double t, std::int64_t K);

// Exponential tilt v_k -> v_k e^{-k x_star}; kind is preserved.
SizeSpectrum tilt(const SizeSpectrum& s, double x_star);

// Law of the size of the component containing a uniformly chosen vertex.
SizeBiasedPmf size_biased_pmf(const SizeSpectrum& s);

// CSV interchange: header "k,v", one entry per line, ascending k.
std::string spectrum_to_csv(const SizeSpectrum& s);
SizeSpectrum spectrum_from_csv(const std::string& text);

}  // namespace fpl
