#include "curvealign/curves.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "curvealign/csv.hpp"
#include "curvealign/error.hpp"

namespace curvealign {

CurveSet::CurveSet(std::vector<SampledCurve> curves) : curves_(std::move(curves)) {
  if (curves_.empty()) throw Error(ErrorKind::InsufficientData, "curve set is empty");
  const std::size_t len = curves_.front().samples.size();
  if (len < min_samples)
    throw Error(ErrorKind::Format, fmt::format("curves need at least {} samples, got {}", min_samples, len));
  for (std::size_t l = 0; l < curves_.size(); ++l) {
    const auto& s = curves_[l].samples;
    if (s.size() != len)
      throw Error(ErrorKind::Format,
                  fmt::format("curve {} has {} samples, expected {}", l, s.size(), len));
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!std::isfinite(s[i]))
        throw Error(ErrorKind::Format, fmt::format("curve {} sample {} is not finite", l, i));
    }
  }
}

CurveSet CurveSet::from_rows(std::vector<std::vector<double>> rows) {
  std::vector<SampledCurve> curves;
  curves.reserve(rows.size());
  for (std::size_t l = 0; l < rows.size(); ++l)
    curves.push_back(SampledCurve{static_cast<int>(l), std::move(rows[l])});
  return CurveSet(std::move(curves));
}

double bin_width(std::size_t n) { return 2.0 * std::numbers::pi / static_cast<double>(n); }

double sample_time(std::size_t i, std::size_t n) { return static_cast<double>(i) * bin_width(n); }

CurveSet parse_curves(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
      line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty() || line.front() == '#') continue;

    std::vector<double> row;
    std::size_t col = 0;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
      ++col;
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
      if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw Error(ErrorKind::Parse,
                    fmt::format("row {} (line {}), column {}: '{}' is not a finite number",
                                rows.size() + 1, line_no, col, cell));
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(ErrorKind::Format, fmt::format("row {} (line {}) has {} fields, expected {}",
                                                 rows.size() + 1, line_no, row.size(),
                                                 rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2)
    throw Error(ErrorKind::InsufficientData,
                fmt::format("need at least 2 curves (reference + 1), got {}", rows.size()));
  return CurveSet::from_rows(std::move(rows));
}

CurveSet load_curves(const std::filesystem::path& path) { return parse_curves(csv::read_file(path)); }

std::string format_curves(const CurveSet& set) {
  std::string out;
  for (const auto& c : set.curves()) {
    for (std::size_t i = 0; i < c.samples.size(); ++i) {
      if (i > 0) out += ',';
      out += csv::format_double(c.samples[i]);
    }
    out += '\n';
  }
  return out;
}

void save_curves(const std::filesystem::path& path, const CurveSet& set) {
  csv::write_file(path, format_curves(set));
}

CurveSet segment_maxima(std::span<const double> signal, std::size_t window_len,
                        std::size_t min_separation, double threshold) {
  if (window_len > signal.size())
    throw Error(ErrorKind::Input, fmt::format("window_len {} exceeds signal length {}", window_len,
                                              signal.size()));
  if (min_separation < 1) throw Error(ErrorKind::Input, "min_separation must be >= 1");
  if (window_len < CurveSet::min_samples)
    throw Error(ErrorKind::Input, fmt::format("window_len must be >= {}", CurveSet::min_samples));

  // Local maxima; a plateau counts once, at its first sample.
  std::vector<std::size_t> candidates;
  const std::size_t len = signal.size();
  for (std::size_t i = 0; i < len; ++i) {
    const double v = signal[i];
    if (!(v > threshold)) continue;
    const bool left_ok = i == 0 || v > signal[i - 1];
    std::size_t j = i + 1;
    while (j < len && signal[j] == v) ++j;
    const bool right_ok = j == len || v > signal[j];
    if (left_ok && right_ok) candidates.push_back(i);
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return signal[a] > signal[b]; });
  std::vector<std::size_t> accepted;
  for (std::size_t c : candidates) {
    const bool clear = std::all_of(accepted.begin(), accepted.end(), [&](std::size_t a) {
      return (a > c ? a - c : c - a) >= min_separation;
    });
    if (clear) accepted.push_back(c);
  }
  std::sort(accepted.begin(), accepted.end());

  const std::size_t half = window_len / 2;
  std::vector<SampledCurve> windows;
  for (std::size_t p : accepted) {
    if (p < half || p - half + window_len > len) continue;
    const std::size_t start = p - half;
    windows.push_back(SampledCurve{static_cast<int>(windows.size()),
                                   std::vector<double>(signal.begin() + static_cast<std::ptrdiff_t>(start),
                                                       signal.begin() + static_cast<std::ptrdiff_t>(start + window_len))});
  }
  if (windows.empty())
    throw Error(ErrorKind::EmptySegmentation,
                fmt::format("no complete window around a peak above threshold {}", threshold));
  return CurveSet(std::move(windows));
}

BlockPlan make_blocks(const CurveSet& set, std::size_t K) {
  const std::size_t M = set.M();
  if (K < 1) throw Error(ErrorKind::Partition, "block size K must be >= 1");
  if (M == 0) throw Error(ErrorKind::Partition, "no non-reference curves to partition");
  if (M % K != 0)
    throw Error(ErrorKind::Partition,
                fmt::format("M = {} non-reference curves cannot be split into blocks of K = {}", M, K));
  BlockPlan plan;
  plan.K = K;
  const std::size_t N = M / K;
  plan.blocks.reserve(N);
  for (std::size_t m = 0; m < N; ++m) {
    std::vector<std::size_t> block{CurveSet::reference_index};
    for (std::size_t j = 1; j <= K; ++j) block.push_back(m * K + j);
    plan.blocks.push_back(std::move(block));
  }
  return plan;
}

}  // namespace curvealign
