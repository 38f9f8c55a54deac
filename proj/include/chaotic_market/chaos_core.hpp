#pragma once

// Logistic Bimap: two logistic maps multiplicatively coupled,
//
//   x' = lambda_a (3y + 1) x (1 - x)
//   y' = lambda_b (3x + 1) y (1 - y)
//
// plus orbit generation and the attractor diagnostics (sub-space occupancy,
// spectrum of the x coordinate).

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chaotic_market/errors.hpp"

namespace chaotic_market {

// Parameter window in which the bimap has a chaotic attractor. The upper
// end is 1.08429 (not 1.0843) so that the last sweep case counts as inside.
inline constexpr double kChaoticWindowLow = 1.032;
inline constexpr double kChaoticWindowHigh = 1.08429;

class MapParams {
 public:
  MapParams(double lambda_a, double lambda_b) : lambda_a_(lambda_a), lambda_b_(lambda_b) {
    if (!(std::isfinite(lambda_a) && lambda_a > 0.0) ||
        !(std::isfinite(lambda_b) && lambda_b > 0.0)) {
      throw std::invalid_argument("map parameters must be finite and positive");
    }
  }

  double lambda_a() const noexcept { return lambda_a_; }
  double lambda_b() const noexcept { return lambda_b_; }

  // Out-of-window parameters are allowed; callers may warn on this flag.
  bool in_chaotic_window() const noexcept {
    return in_window(lambda_a_) && in_window(lambda_b_);
  }

  // (lambda_b, lambda_a).
  MapParams exchanged() const { return {lambda_b_, lambda_a_}; }

  friend bool operator==(const MapParams&, const MapParams&) = default;

 private:
  static bool in_window(double v) noexcept {
    return v >= kChaoticWindowLow && v <= kChaoticWindowHigh;
  }

  double lambda_a_;
  double lambda_b_;
};

struct ChaoticState {
  double x = 0.0;
  double y = 0.0;

  bool valid() const noexcept { return x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0; }
  ChaoticState swapped() const noexcept { return {y, x}; }

  friend bool operator==(const ChaoticState&, const ChaoticState&) = default;
};

inline constexpr ChaoticState kDefaultMapStart{0.3, 0.6};
inline constexpr std::uint64_t kDefaultMapDiscard = 1000;

// Both coordinates are computed from the previous state.
inline ChaoticState step(const ChaoticState& s, const MapParams& p) {
  const ChaoticState next{p.lambda_a() * (3.0 * s.y + 1.0) * s.x * (1.0 - s.x),
                          p.lambda_b() * (3.0 * s.x + 1.0) * s.y * (1.0 - s.y)};
  if (!next.valid()) {
    throw MapRangeError("bimap iterate left the unit square: (" + std::to_string(next.x) +
                        ", " + std::to_string(next.y) + ")");
  }
  return next;
}

// Applies `step` discard + n times and returns the last n states.
inline std::vector<ChaoticState> iterate(ChaoticState start, const MapParams& params,
                                         std::size_t n, std::uint64_t discard = 0) {
  if (n < 1) throw std::invalid_argument("iterate: n must be >= 1");
  if (!start.valid()) throw MapRangeError("iterate: start state outside the unit square");
  for (std::uint64_t k = 0; k < discard; ++k) start = step(start, params);
  std::vector<ChaoticState> orbit;
  orbit.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    start = step(start, params);
    orbit.push_back(start);
  }
  return orbit;
}

struct OrbitStats {
  std::size_t n_points = 0;
  std::size_t count_x_gt_y = 0;
  std::size_t count_y_gt_x = 0;
  std::size_t count_diag = 0;
  double frac_x_gt_y = 0.0;
  double frac_y_gt_x = 0.0;
  double frac_diag = 0.0;

  double asymmetry() const noexcept { return frac_x_gt_y - frac_y_gt_x; }
};

inline OrbitStats occupancy_asymmetry(std::span<const ChaoticState> orbit) {
  if (orbit.empty()) throw std::invalid_argument("occupancy_asymmetry: empty orbit");
  OrbitStats st;
  st.n_points = orbit.size();
  for (const auto& p : orbit) {
    if (p.x > p.y) {
      ++st.count_x_gt_y;
    } else if (p.y > p.x) {
      ++st.count_y_gt_x;
    } else {
      ++st.count_diag;
    }
  }
  const auto n = static_cast<double>(st.n_points);
  st.frac_x_gt_y = static_cast<double>(st.count_x_gt_y) / n;
  st.frac_y_gt_x = static_cast<double>(st.count_y_gt_x) / n;
  st.frac_diag = static_cast<double>(st.count_diag) / n;
  return st;
}

struct Spectrum {
  std::vector<double> freqs;       // cycles per iteration, k / window for k = 1..window/2
  std::vector<double> magnitudes;  // |DFT_k| of the mean-removed window

  // Index into freqs/magnitudes of the largest magnitude (first on ties).
  std::size_t peak_index() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < magnitudes.size(); ++k) {
      if (magnitudes[k] > magnitudes[best]) best = k;
    }
    return best;
  }
};

inline constexpr std::size_t kDefaultSpectrumWindow = 4096;

namespace detail {

// In-place iterative radix-2 Cooley-Tukey; data.size() must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& data) {
  const std::size_t n = data.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        // Twiddles from std::polar each time; the recurrence form drifts for large windows.
        const auto w = std::polar(1.0, angle * static_cast<double>(k));
        const auto u = data[start + k];
        const auto v = data[start + k + half] * w;
        data[start + k] = u + v;
        data[start + k + half] = u - v;
      }
    }
  }
}

}  // namespace detail

// Mean-removed DFT magnitude of the last `window_length` samples,
// rectangular window. window_length must be a power of two >= 8.
inline Spectrum power_spectrum(std::span<const double> series,
                               std::size_t window_length = kDefaultSpectrumWindow) {
  if (window_length < 8 || !std::has_single_bit(window_length)) {
    throw std::invalid_argument("power_spectrum: window must be a power of two >= 8");
  }
  if (series.size() < window_length) {
    throw std::length_error("power_spectrum: series shorter than window");
  }
  const auto window = series.last(window_length);
  double mean = 0.0;
  for (double v : window) mean += v;
  mean /= static_cast<double>(window_length);

  std::vector<std::complex<double>> buf(window_length);
  for (std::size_t i = 0; i < window_length; ++i) buf[i] = window[i] - mean;
  detail::fft_radix2(buf);

  Spectrum out;
  const std::size_t half = window_length / 2;
  out.freqs.reserve(half);
  out.magnitudes.reserve(half);
  for (std::size_t k = 1; k <= half; ++k) {
    out.freqs.push_back(static_cast<double>(k) / static_cast<double>(window_length));
    out.magnitudes.push_back(std::abs(buf[k]));
  }
  return out;
}

inline std::vector<double> x_series(std::span<const ChaoticState> orbit) {
  std::vector<double> xs;
  xs.reserve(orbit.size());
  for (const auto& p : orbit) xs.push_back(p.x);
  return xs;
}

}  // namespace chaotic_market
