#pragma once

#include <string>
#include <vector>

namespace tdzsim {

// Sampled real-valued signal. `rate` is samples per second, `unit` a tag
// ("V" or "A") carried through to CSV export.
struct Waveform {
  std::vector<double> samples;
  double rate = 0.0;
  std::string unit = "V";

  std::size_t size() const { return samples.size(); }
  double duration() const { return rate > 0 ? samples.size() / rate : 0.0; }
};

}  // namespace tdzsim
