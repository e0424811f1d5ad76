#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace curvealign {

/// A signal sampled at t_i = i * 2pi / n, i = 0..n-1.
struct SampledCurve {
  int id = 0;
  std::vector<double> samples;
};

/// Ordered curves of equal length; curve 0 is the reference (known shift 0).
class CurveSet {
 public:
  static constexpr std::size_t reference_index = 0;
  static constexpr std::size_t min_samples = 4;

  CurveSet() = default;
  /// Throws Error(Format) on unequal lengths, n < 4 or non-finite samples.
  explicit CurveSet(std::vector<SampledCurve> curves);
  static CurveSet from_rows(std::vector<std::vector<double>> rows);

  std::size_t size() const { return curves_.size(); }
  /// Number of non-reference curves.
  std::size_t M() const { return curves_.empty() ? 0 : curves_.size() - 1; }
  std::size_t n() const { return curves_.empty() ? 0 : curves_.front().samples.size(); }
  bool empty() const { return curves_.empty(); }

  const SampledCurve& operator[](std::size_t l) const { return curves_[l]; }
  std::span<const double> samples(std::size_t l) const { return curves_[l].samples; }
  const std::vector<SampledCurve>& curves() const { return curves_; }

 private:
  std::vector<SampledCurve> curves_;
};

/// Sample time of index i (0-based) on [0, 2pi).
double sample_time(std::size_t i, std::size_t n);
/// Width of one grid bin, 2pi / n.
double bin_width(std::size_t n);

/// Block partition: every block is {0} followed by K consecutive non-reference indices.
struct BlockPlan {
  std::size_t K = 0;
  std::vector<std::vector<std::size_t>> blocks;

  std::size_t N() const { return blocks.size(); }
};

/// Parses wide-csv text: one curve per row, '#' comment lines and blank lines skipped.
CurveSet parse_curves(std::string_view text);
CurveSet load_curves(const std::filesystem::path& path);
/// Wide-csv with 17 significant digits, bit-exact on reload.
std::string format_curves(const CurveSet& set);
void save_curves(const std::filesystem::path& path, const CurveSet& set);

/// Cuts windows of `window_len` samples centred on accepted local maxima
/// (peak lands at local index window_len / 2). Peaks closer than
/// `min_separation` samples are resolved in favour of the larger one.
CurveSet segment_maxima(std::span<const double> signal, std::size_t window_len,
                        std::size_t min_separation, double threshold);

/// Block m (1-based) holds {0, (m-1)K+1, ..., mK}. Requires K | M.
BlockPlan make_blocks(const CurveSet& set, std::size_t K);

}  // namespace curvealign
