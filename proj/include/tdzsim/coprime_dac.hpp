#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tdzsim/errors.hpp"
#include "tdzsim/rng.hpp"

namespace tdzsim {

// Segmented current DAC with co-prime bank sizes: 15 coarse units of
// weight (fine_units + 1) plus 16 fine units of weight 1 give
// 16 * 17 = 272 distinct levels from 31 unit elements.
struct CoPrimeDacSpec {
  int coarse_units = 15;
  int fine_units = 16;
  double unit_mismatch_sigma = 0.0;  // relative sigma per unit element
  double i_lsb = 1e-6;               // A per fine unit
  bool dem_enabled = false;

  int coarse_weight() const { return fine_units + 1; }
  int levels() const { return (coarse_units + 1) * (fine_units + 1); }
};

// code = weight * coarse + fine, unique for 0 <= code < levels.
inline std::pair<int, int> coprime_encode(int code,
                                          const CoPrimeDacSpec& spec = {}) {
  if (code < 0 || code >= spec.levels())
    throw std::domain_error("coprime_encode: code out of range");
  return {code / spec.coarse_weight(), code % spec.coarse_weight()};
}

inline int coprime_decode(int coarse, int fine,
                          const CoPrimeDacSpec& spec = {}) {
  return coarse * spec.coarse_weight() + fine;
}

// One conversion stream. Mismatch values are drawn once from the seed and
// frozen; the DEM pointers are the only mutable state.
class CoPrimeDac {
 public:
  CoPrimeDac(const CoPrimeDacSpec& spec, std::uint64_t mismatch_seed)
      : spec_(spec),
        eps_coarse_(spec.coarse_units, 0.0),
        eps_fine_(spec.fine_units, 0.0),
        use_coarse_(spec.coarse_units, 0),
        use_fine_(spec.fine_units, 0) {
    if (spec.unit_mismatch_sigma > 0.0) {
      Rng rng = Rng::stream(mismatch_seed, dac_tag(), 0, 0);
      for (auto& e : eps_coarse_) e = spec.unit_mismatch_sigma * rng.gauss();
      for (auto& e : eps_fine_) e = spec.unit_mismatch_sigma * rng.gauss();
    }
  }

  // Output current for a code; advances the per-bank barrel pointers when
  // DEM is on so long-run unit usage is uniform.
  double convert(int code) {
    const auto [c, f] = coprime_encode(code, spec_);
    double err_units = 0.0;
    err_units += select(c, eps_coarse_, use_coarse_, ptr_c_) * spec_.coarse_weight();
    err_units += select(f, eps_fine_, use_fine_, ptr_f_);
    const std::int64_t nominal_units =
        static_cast<std::int64_t>(c) * spec_.coarse_weight() + f;
    return spec_.i_lsb * (static_cast<double>(nominal_units) + err_units);
  }

  double nominal(int code) const {
    coprime_encode(code, spec_);  // range check
    return spec_.i_lsb * code;
  }

  const std::vector<std::int64_t>& coarse_usage() const { return use_coarse_; }
  const std::vector<std::int64_t>& fine_usage() const { return use_fine_; }
  const CoPrimeDacSpec& spec() const { return spec_; }

 private:
  static constexpr std::uint64_t dac_tag() { return 0x64616373ull; }

  // Returns the mean mismatch of the selected units times the count, i.e.
  // the additive unit-error in LSB-of-this-bank units.
  double select(int count, const std::vector<double>& eps,
                std::vector<std::int64_t>& usage, int& ptr) {
    const int n = static_cast<int>(eps.size());
    double err = 0.0;
    if (count > 0) {
      const int start = spec_.dem_enabled ? ptr : 0;
      for (int k = 0; k < count; ++k) {
        const int u = (start + k) % n;
        err += eps[u];
        ++usage[u];
      }
    }
    if (spec_.dem_enabled) ptr = (ptr + count) % n;
    return err;
  }

  CoPrimeDacSpec spec_;
  std::vector<double> eps_coarse_, eps_fine_;
  std::vector<std::int64_t> use_coarse_, use_fine_;
  int ptr_c_ = 0;
  int ptr_f_ = 0;
};

// Stateless single conversion, mismatch frozen per seed.
inline double dac_output(const CoPrimeDacSpec& spec, int code,
                         std::uint64_t mismatch_seed) {
  CoPrimeDac dac(spec, mismatch_seed);
  return dac.convert(code);
}

}  // namespace tdzsim
