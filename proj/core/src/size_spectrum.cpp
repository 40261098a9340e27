#include "fpl/size_spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fpl {

SizeSpectrum make_spectrum(std::vector<std::pair<std::int64_t, double>> entries,
                           SpectrumKind kind, std::int64_t truncation) {
  std::sort(entries.begin(), entries.end());
  SizeSpectrum s;
  s.kind = kind;
  s.truncation = truncation;
  s.entries.reserve(entries.size());
  std::int64_t prev = 0;
  for (const auto& [k, v] : entries) {
    if (k <= 0) raise(Errc::NonPositiveSize, "size " + std::to_string(k));
    if (v < 0.0) {
      raise(Errc::NegativeMass,
            "v_" + std::to_string(k) + " = " + std::to_string(v));
    }
    if (k == prev) raise(Errc::DuplicateKey, "size " + std::to_string(k));
    prev = k;
    if (v == 0.0) continue;
    s.entries.emplace_back(k, v);
  }
  return s;
}

SizeSpectrum monodisperse(double mass) {
  return make_spectrum({{1, mass}});
}

SizeSpectrum spectrum_from_dense(const std::vector<double>& v,
                                 std::int64_t K) {
  std::vector<std::pair<std::int64_t, double>> entries;
  entries.reserve(static_cast<std::size_t>(K));
  for (std::int64_t k = 1; k <= K && k < static_cast<std::int64_t>(v.size());
       ++k) {
    if (v[static_cast<std::size_t>(k)] != 0.0) {
      entries.emplace_back(k, v[static_cast<std::size_t>(k)]);
    }
  }
  return make_spectrum(std::move(entries), SpectrumKind::truncated, K);
}

Moments moments(const SizeSpectrum& s) {
  Moments m;
  m.truncated = s.kind == SpectrumKind::truncated;
  for (const auto& [k, v] : s.entries) {
    const double kd = static_cast<double>(k);
    m.m0 += v;
    m.m1 += kd * v;
    m.m2 += kd * kd * v;
    m.m3 += kd * kd * kd * v;
  }
  return m;
}

double laplace_V(const SizeSpectrum& s, double x, int order) {
  if (order < 0 || order > 3) raise(Errc::OutOfRange, "laplace_V order");
  if (s.kind == SpectrumKind::truncated && x <= 0.0) {
    raise(Errc::DivergentAtX,
          "transform of a truncated law is only defined for x > 0");
  }
  double acc = 0.0;
  for (const auto& [k, v] : s.entries) {
    const double kd = static_cast<double>(k);
    double term = v * std::exp(-kd * x);
    for (int i = 0; i < order; ++i) term *= -kd;
    acc += term;
  }
  return acc;
}

double tail_mass(const SizeSpectrum& s, std::int64_t K) {
  // Summed smallest-first: the tail of a critical spectrum is a sum of many
  // comparable k^{-3/2} terms, descending order keeps rounding in check.
  double acc = 0.0;
  const auto it = std::lower_bound(
      s.entries.begin(), s.entries.end(), K,
      [](const auto& e, std::int64_t key) { return e.first < key; });
  for (auto r = s.entries.rbegin();
       r != std::make_reverse_iterator(it); ++r) {
    acc += r->second;
  }
  return acc;
}

double borel_mass(std::int64_t k, double t) {
  const double kd = static_cast<double>(k);
  return std::exp((kd - 1.0) * std::log(kd) - kd - std::lgamma(kd + 1.0) -
                  std::log(t));
}

SizeSpectrum borel_spectrum(double t, std::int64_t K) {
  if (t < 1.0) raise(Errc::PreGelTime, "Borel shape requires t >= 1");
  if (K < 1) raise(Errc::OutOfRange, "borel_spectrum needs K >= 1");
  std::vector<std::pair<std::int64_t, double>> entries;
  entries.reserve(static_cast<std::size_t>(K));
  // v_{k+1}/v_k = (1 + 1/k)^{k-1} / e; the recurrence avoids K lgamma calls.
  double v = 1.0 / (std::exp(1.0) * t);  // v_1
  for (std::int64_t k = 1; k <= K; ++k) {
    entries.emplace_back(k, v);
    const double kd = static_cast<double>(k);
    v *= std::exp((kd - 1.0) * std::log1p(1.0 / kd) - 1.0);
  }
  SizeSpectrum s;
  s.kind = SpectrumKind::truncated;
  s.truncation = K;
  s.entries = std::move(entries);
  return s;
}

SizeSpectrum tilt(const SizeSpectrum& s, double x_star) {
  SizeSpectrum out = s;
  for (auto& [k, v] : out.entries) {
    v *= std::exp(-static_cast<double>(k) * x_star);
  }
  return out;
}

SizeBiasedPmf size_biased_pmf(const SizeSpectrum& s) {
  double m1 = 0.0;
  for (const auto& [k, v] : s.entries) m1 += static_cast<double>(k) * v;
  if (m1 <= 0.0) raise(Errc::ZeroFirstMoment, "size_biased_pmf");
  SizeBiasedPmf pmf;
  pmf.probs.reserve(s.entries.size());
  for (const auto& [k, v] : s.entries) {
    pmf.probs.emplace_back(k, static_cast<double>(k) * v / m1);
  }
  return pmf;
}

std::string spectrum_to_csv(const SizeSpectrum& s) {
  std::ostringstream os;
  os.precision(17);
  os << "k,v\n";
  for (const auto& [k, v] : s.entries) os << k << ',' << v << '\n';
  return os.str();
}

SizeSpectrum spectrum_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) raise(Errc::ParseError, "empty spectrum CSV");
  // tolerate trailing \r from foreign line endings
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "k,v") raise(Errc::ParseError, "expected header 'k,v'");
  std::vector<std::pair<std::int64_t, double>> entries;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      raise(Errc::ParseError, "line " + std::to_string(lineno) + ": no comma");
    }
    try {
      std::size_t used = 0;
      const std::int64_t k = std::stoll(line.substr(0, comma), &used);
      const double v = std::stod(line.substr(comma + 1));
      if (used != comma) throw std::invalid_argument("trailing");
      entries.emplace_back(k, v);
    } catch (const std::logic_error&) {
      raise(Errc::ParseError, "line " + std::to_string(lineno) + ": bad row");
    }
  }
  return make_spectrum(std::move(entries));
}

}  // namespace fpl
