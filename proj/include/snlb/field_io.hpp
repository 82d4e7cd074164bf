#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "snlb/field.hpp"

namespace snlb {

/// Binary field files. All integers and floats little-endian.
///
///   header (24 bytes): "B4DF", u32 version, u32 d, u32 M, u32 layout, u32 components
///   frames until EOF:  f64 time, then `components` complex arrays (re, im f64 interleaved)
///
/// layout 0: the half-spectrum storage order of Grid (last axis 0..M/2,
///           other axes slot order), M^{d-1} (M/2 + 1) entries per array
/// layout 1: the full spectrum, M^d entries, row-major over n_i mod M
enum class FieldLayout : std::uint32_t { half = 0, full = 1 };

inline constexpr std::uint32_t kFieldFormatVersion = 1;

struct FieldFrame {
  double time = 0.0;
  std::vector<SpectralField> components;
};

struct FieldFile {
  Grid grid;
  FieldLayout layout = FieldLayout::half;
  int components = 1;
  std::vector<FieldFrame> frames;
};

class FieldWriter {
 public:
  FieldWriter(const std::filesystem::path& path, const Grid& g, int components,
              FieldLayout layout = FieldLayout::half);
  void write(double time, std::span<const SpectralField* const> fields);
  void write(const SpectralField& f, double time);
  /// Two components: position then velocity.
  void write(const PairState& st);
  std::size_t frames() const { return frames_; }

 private:
  std::ofstream os_;
  Grid grid_;
  int components_;
  FieldLayout layout_;
  std::size_t frames_ = 0;
};

/// Throws std::runtime_error on a bad magic, unknown version or layout, or a truncated frame.
FieldFile read_field_file(const std::filesystem::path& path);

/// Full-spectrum array (layout 1 order) of a field, and back.
std::vector<cplx> to_full_spectrum(const SpectralField& f);
SpectralField from_full_spectrum(const Grid& g, std::span<const cplx> full);

}  // namespace snlb
