#include "snlb/field_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <stdexcept>

namespace snlb {
namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b.data(), 4);
}

void put_f64(std::ostream& os, double x) {
  const auto v = std::bit_cast<std::uint64_t>(x);
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b.data(), 8);
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::size_t full_index(const Wavevector& n, int d, int M) {
  std::size_t idx = 0;
  for (int i = 0; i < d; ++i) idx = idx * M + static_cast<std::size_t>(((n[i] % M) + M) % M);
  return idx;
}

}  // namespace

std::vector<cplx> to_full_spectrum(const SpectralField& f) {
  const Grid& g = f.grid();
  const int d = g.dim(), M = g.points();
  std::vector<cplx> out(g.physical_size(), cplx{0.0, 0.0});
  for_each_mode(g, [&](const ModeRef& m) {
    if (m.weight == 0) return;
    out[full_index(m.n, d, M)] = f[m.index];
    if (m.n[d - 1] > 0) out[full_index(negate(m.n), d, M)] = std::conj(f[m.index]);
  });
  return out;
}

SpectralField from_full_spectrum(const Grid& g, std::span<const cplx> full) {
  if (full.size() != g.physical_size()) throw std::invalid_argument("full spectrum has the wrong size");
  SpectralField f(g);
  for_each_mode(g, [&](const ModeRef& m) {
    if (m.weight == 0) return;
    f[m.index] = full[full_index(m.n, g.dim(), g.points())];
  });
  return f;
}

FieldWriter::FieldWriter(const std::filesystem::path& path, const Grid& g, int components, FieldLayout layout)
    : os_(path, std::ios::binary | std::ios::trunc), grid_(g), components_(components), layout_(layout) {
  if (!os_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  if (components < 1) throw std::invalid_argument("field file needs at least one component");
  os_.write("B4DF", 4);
  put_u32(os_, kFieldFormatVersion);
  put_u32(os_, static_cast<std::uint32_t>(g.dim()));
  put_u32(os_, static_cast<std::uint32_t>(g.points()));
  put_u32(os_, static_cast<std::uint32_t>(layout));
  put_u32(os_, static_cast<std::uint32_t>(components));
}

void FieldWriter::write(double time, std::span<const SpectralField* const> fields) {
  if (static_cast<int>(fields.size()) != components_)
    throw std::invalid_argument("frame has " + std::to_string(fields.size()) + " components, file expects " +
                                std::to_string(components_));
  put_f64(os_, time);
  for (const SpectralField* f : fields) {
    if (f->grid() != grid_) throw std::invalid_argument("frame field lives on a different grid than the file");
    if (layout_ == FieldLayout::half) {
      for (const cplx& z : f->coeffs()) {
        put_f64(os_, z.real());
        put_f64(os_, z.imag());
      }
    } else {
      for (const cplx& z : to_full_spectrum(*f)) {
        put_f64(os_, z.real());
        put_f64(os_, z.imag());
      }
    }
  }
  if (!os_) throw std::runtime_error("write failed");
  ++frames_;
}

void FieldWriter::write(const SpectralField& f, double time) {
  const SpectralField* p[] = {&f};
  write(time, p);
}

void FieldWriter::write(const PairState& st) {
  const SpectralField* p[] = {&st.position, &st.velocity};
  write(st.time, p);
}

FieldFile read_field_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < 24 || std::memcmp(buf.data(), "B4DF", 4) != 0)
    throw std::runtime_error(path.string() + " is not a B4DF field file");
  const auto version = static_cast<std::uint32_t>(get_le(&buf[4], 4));
  if (version != kFieldFormatVersion)
    throw std::runtime_error("unsupported field file version " + std::to_string(version));
  FieldFile out;
  const int d = static_cast<int>(get_le(&buf[8], 4));
  const int M = static_cast<int>(get_le(&buf[12], 4));
  const auto layout = static_cast<std::uint32_t>(get_le(&buf[16], 4));
  if (layout > 1) throw std::runtime_error("unknown field layout tag " + std::to_string(layout));
  out.grid = Grid(d, M);
  out.layout = static_cast<FieldLayout>(layout);
  out.components = static_cast<int>(get_le(&buf[20], 4));
  const std::size_t entries =
      out.layout == FieldLayout::half ? out.grid.spectral_size() : out.grid.physical_size();
  const std::size_t frame_bytes = 8 + static_cast<std::size_t>(out.components) * entries * 16;
  std::size_t pos = 24;
  auto f64 = [&] {
    const double x = std::bit_cast<double>(get_le(&buf[pos], 8));
    pos += 8;
    return x;
  };
  while (pos < buf.size()) {
    if (buf.size() - pos < frame_bytes) throw std::runtime_error("truncated frame in " + path.string());
    FieldFrame fr;
    fr.time = f64();
    for (int c = 0; c < out.components; ++c) {
      std::vector<cplx> data(entries);
      for (auto& z : data) {
        const double re = f64();
        z = {re, f64()};
      }
      if (out.layout == FieldLayout::half) {
        SpectralField f(out.grid);
        std::copy(data.begin(), data.end(), f.coeffs().begin());
        fr.components.push_back(std::move(f));
      } else {
        fr.components.push_back(from_full_spectrum(out.grid, data));
      }
    }
    out.frames.push_back(std::move(fr));
  }
  return out;
}

}  // namespace snlb
