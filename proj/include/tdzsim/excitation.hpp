#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "tdzsim/errors.hpp"
#include "tdzsim/waveform.hpp"

namespace tdzsim {

// Direct-digital-synthesis excitation settings. Amplitude is programmed in
// 64 steps of 1/64 Vpp; the clock must divide into an integer number of
// ticks per excitation period.
struct ExcitationSpec {
  double f_exc = 125e3;       // Hz
  double f_clk = 64e6;        // Hz, DDS/comparator clock
  int amp_code = 16;          // 1..64, Vpp = amp_code / 64
  int lut_bits = 8;           // quarter-wave table address width
  int lut_value_bits = 10;    // table amplitude quantization
  int phases = 6;             // interleaved clock phases
  bool enforce_paper_range = true;  // 125 kHz .. 1 MHz
  bool allow_zero_amp = false;      // amp_code = 0 permitted in test setups
};

inline void validate(const ExcitationSpec& s) {
  if (s.f_clk <= 0 || s.f_exc <= 0)
    throw config_error("excitation: frequencies must be positive");
  const double ratio = s.f_clk / s.f_exc;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 8.0)
    throw config_error("excitation: f_clk/f_exc must be an integer >= 8");
  const int amp_min = s.allow_zero_amp ? 0 : 1;
  if (s.amp_code < amp_min || s.amp_code > 64)
    throw config_error("excitation: amp_code out of range");
  if (s.enforce_paper_range && (s.f_exc < 125e3 || s.f_exc > 1e6))
    throw config_error("excitation: f_exc outside 125 kHz..1 MHz");
  if (s.lut_bits < 2 || s.lut_bits > 16 || s.lut_value_bits < 2 ||
      s.lut_value_bits > 24)
    throw config_error("excitation: LUT geometry out of range");
  if (s.phases < 1) throw config_error("excitation: phases must be >= 1");
}

inline std::int64_t ticks_per_period(const ExcitationSpec& s) {
  validate(s);
  return static_cast<std::int64_t>(std::llround(s.f_clk / s.f_exc));
}

inline double amplitude_vpp(int amp_code) { return amp_code / 64.0; }
inline double amplitude_peak(int amp_code) { return amp_code / 128.0; }

// Quarter-wave sine table, value-quantized. Entry Q is stored too so the
// quarter boundary reproduces the exact peak.
class SineLut {
 public:
  SineLut(int addr_bits, int value_bits) : quarter_(1 << addr_bits) {
    const double m = static_cast<double>((1 << value_bits) - 1);
    table_.resize(quarter_ + 1);
    for (std::int64_t r = 0; r <= quarter_; ++r) {
      const double v = std::sin(std::numbers::pi / 2.0 * r / quarter_);
      table_[r] = std::round(v * m) / m;
    }
  }

  std::int64_t positions() const { return 4 * quarter_; }

  // Unit-amplitude quantized sine at table position idx in [0, 4Q).
  double at(std::int64_t idx) const {
    const std::int64_t q = idx / quarter_;
    const std::int64_t r = idx % quarter_;
    switch (q) {
      case 0: return table_[r];
      case 1: return table_[quarter_ - r];
      case 2: return -table_[r];
      default: return -table_[quarter_ - r];
    }
  }

 private:
  std::int64_t quarter_;
  std::vector<double> table_;
};

// Phase-accumulator sine source: tick -> LUT-quantized, amplitude-scaled
// voltage sample. Wraps exactly every f_clk/f_exc ticks.
class DdsSynth {
 public:
  explicit DdsSynth(const ExcitationSpec& spec)
      : spec_(spec),
        n0_(ticks_per_period(spec)),
        lut_(spec.lut_bits, spec.lut_value_bits) {}

  double sample(std::int64_t tick) const {
    if (tick < 0) throw config_error("dds: tick must be >= 0");
    const std::int64_t p = tick % n0_;
    std::int64_t idx = static_cast<std::int64_t>(std::llround(
        static_cast<double>(p) * lut_.positions() / static_cast<double>(n0_)));
    idx %= lut_.positions();
    return amplitude_peak(spec_.amp_code) * lut_.at(idx);
  }

  std::int64_t n0() const { return n0_; }
  const ExcitationSpec& spec() const { return spec_; }

  Waveform waveform(int periods) const {
    Waveform w;
    w.rate = spec_.f_clk;
    w.unit = "V";
    w.samples.reserve(static_cast<std::size_t>(periods) * n0_);
    for (std::int64_t t = 0; t < periods * n0_; ++t)
      w.samples.push_back(sample(t));
    return w;
  }

 private:
  ExcitationSpec spec_;
  std::int64_t n0_;
  SineLut lut_;
};

inline double dds_sample(const ExcitationSpec& spec, std::int64_t tick) {
  return DdsSynth(spec).sample(tick);
}

}  // namespace tdzsim
