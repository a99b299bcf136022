#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "tdzsim/errors.hpp"
#include "tdzsim/waveform.hpp"

namespace tdzsim {

namespace detail {

// Cooley-Tukey with radix-2 splits; odd lengths fall back to the direct
// sum. Buffers here are n0 * periods, so the odd factor stays small.
inline void dft_rec(std::vector<std::complex<double>>& x, bool inverse) {
  const std::size_t n = x.size();
  if (n <= 1) return;
  const double sign = inverse ? 1.0 : -1.0;
  if (n % 2 == 0) {
    std::vector<std::complex<double>> even(n / 2), odd(n / 2);
    for (std::size_t i = 0; i < n / 2; ++i) {
      even[i] = x[2 * i];
      odd[i] = x[2 * i + 1];
    }
    dft_rec(even, inverse);
    dft_rec(odd, inverse);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double ang = sign * 2.0 * std::numbers::pi * k / n;
      const std::complex<double> tw(std::cos(ang), std::sin(ang));
      x[k] = even[k] + tw * odd[k];
      x[k + n / 2] = even[k] - tw * odd[k];
    }
    return;
  }
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      const std::uint64_t idx = (static_cast<std::uint64_t>(k) * j) % n;
      const double ang = sign * 2.0 * std::numbers::pi * idx / n;
      acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  x.swap(out);
}

}  // namespace detail

inline std::vector<std::complex<double>> dft(
    const std::vector<std::complex<double>>& in, bool inverse = false) {
  std::vector<std::complex<double>> x = in;
  detail::dft_rec(x, inverse);
  if (inverse) {
    for (auto& v : x) v /= static_cast<double>(x.size());
  }
  return x;
}

// Complex amplitude of the bin `bin` (cycles per buffer), i.e.
// (2/N) * sum x[n] exp(-2*pi*i*bin*n/N). The angle argument is kept exact
// through an integer modulus so long buffers do not accumulate drift.
inline std::complex<double> bin_projection(const std::vector<double>& x,
                                           std::uint64_t bin) {
  const std::uint64_t n = x.size();
  std::complex<double> acc{0.0, 0.0};
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t idx = (bin * i) % n;
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(idx) / n;
    acc += x[i] * std::complex<double>(std::cos(ang), std::sin(ang));
  }
  return 2.0 * acc / static_cast<double>(n);
}

// Integer count of fundamental periods held by the waveform; throws if the
// buffer does not contain a whole number of them.
inline std::uint64_t periods_in(const Waveform& w, double fundamental_hz) {
  if (w.rate <= 0 || fundamental_hz <= 0)
    throw config_error("periods_in: rate and fundamental must be positive");
  const double p = w.samples.size() * fundamental_hz / w.rate;
  const double pr = std::round(p);
  if (pr < 1.0 || std::abs(p - pr) > 1e-6 * std::max(1.0, pr))
    throw config_error("waveform does not hold an integer period count");
  return static_cast<std::uint64_t>(pr);
}

// Single-bin amplitude of harmonic k of `fundamental_hz`.
inline double harmonic_amplitude(const Waveform& w, double fundamental_hz,
                                 unsigned k) {
  const std::uint64_t p = periods_in(w, fundamental_hz);
  return std::abs(bin_projection(w.samples, p * k));
}

// Total harmonic distortion from single-bin projections at harmonics
// 2..n_harmonics. Harmonics beyond Nyquist are dropped.
inline double thd(const Waveform& w, double fundamental_hz,
                  unsigned n_harmonics = 10) {
  if (n_harmonics < 2) throw config_error("thd: need n_harmonics >= 2");
  const std::uint64_t p = periods_in(w, fundamental_hz);
  const std::uint64_t half = w.samples.size() / 2;
  const double a1 = std::abs(bin_projection(w.samples, p));
  if (!(a1 > 1e-300)) throw demod_error("thd undefined: zero fundamental");
  double acc = 0.0;
  for (unsigned k = 2; k <= n_harmonics; ++k) {
    if (p * k >= half) break;
    const double ak = std::abs(bin_projection(w.samples, p * k));
    acc += ak * ak;
  }
  return std::sqrt(acc) / a1;
}

// Behavioral transimpedance filter: exact DC block plus a single-pole
// low-pass applied in the frequency domain, normalized by the pole's
// response at +/-fundamental so the fundamental passes with unity complex
// gain. Harmonic k keeps the relative attenuation |H(k f)| / |H(f)|.
inline Waveform ti_filter(const Waveform& w, double cutoff_hz,
                          double fundamental_hz) {
  if (!(cutoff_hz > fundamental_hz))
    throw config_error("ti_filter: cutoff must exceed the fundamental");
  if (w.samples.empty()) return w;
  const std::size_t n = w.samples.size();
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = w.samples[i];
  detail::dft_rec(buf, false);

  const auto pole = [cutoff_hz](double f) {
    return 1.0 / std::complex<double>(1.0, f / cutoff_hz);
  };
  buf[0] = 0.0;  // DC removed exactly
  for (std::size_t k = 1; k < n; ++k) {
    const double f_signed =
        (k <= n / 2 ? static_cast<double>(k)
                    : static_cast<double>(k) - static_cast<double>(n)) *
        w.rate / n;
    const double ref = f_signed >= 0 ? fundamental_hz : -fundamental_hz;
    buf[k] *= pole(f_signed) / pole(ref);
  }
  detail::dft_rec(buf, true);
  Waveform out;
  out.rate = w.rate;
  out.unit = w.unit;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.samples[i] = buf[i].real() / static_cast<double>(n);
  return out;
}

}  // namespace tdzsim
