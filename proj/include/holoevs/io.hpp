#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "holoevs/events.hpp"
#include "holoevs/field.hpp"

namespace holoevs::io {

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr char kFieldMagic[8] = {'H', 'O', 'L', 'O', 'C', 'F', 'L', 'D'};
inline constexpr char kFrameMagic[8] = {'H', 'O', 'L', 'O', 'F', 'R', 'M', 'E'};
inline constexpr char kEventMagic[8] = {'H', 'O', 'L', 'O', 'E', 'V', 'T', 'S'};

namespace detail {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <typename U>
  void le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i)
      buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void header(const char (&magic)[8]) {
    bytes(magic, 8);
    le<std::uint32_t>(kFormatVersion);
    le<std::uint32_t>(0);
  }
  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), "cannot open for writing: " + path.string());
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    require(static_cast<bool>(out), "write failed: " + path.string());
  }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : name_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open for reading: " + name_);
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  void bytes(void* p, std::size_t n) {
    require(pos_ + n <= buf_.size(), "truncated file: " + name_);
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  template <typename U>
  U le() {
    std::array<unsigned char, sizeof(U)> b{};
    bytes(b.data(), b.size());
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(b[i]) << (8 * i));
    return v;
  }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  void header(const char (&magic)[8]) {
    char m[8];
    bytes(m, 8);
    require(std::memcmp(m, magic, 8) == 0, "bad magic in " + name_);
    const auto version = le<std::uint32_t>();
    require(version == kFormatVersion, "unsupported format version in " + name_);
    le<std::uint32_t>();
  }
  void finish() const { require(pos_ == buf_.size(), "trailing bytes in " + name_); }

 private:
  std::string name_;
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

inline void write_geometry(Writer& w, const Geometry& g) {
  w.le<std::uint32_t>(static_cast<std::uint32_t>(g.width));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(g.height));
  w.f64(g.pitch);
  w.f64(g.wavelength);
}

inline Geometry read_geometry(Reader& r) {
  Geometry g;
  g.width = r.le<std::uint32_t>();
  g.height = r.le<std::uint32_t>();
  g.pitch = r.f64();
  g.wavelength = r.f64();
  g.validate();
  return g;
}

}  // namespace detail

inline void write_cfield(const std::filesystem::path& path, const ComplexField& field) {
  detail::Writer w;
  w.header(kFieldMagic);
  detail::write_geometry(w, field.geometry());
  for (const auto& v : field) {
    w.f64(v.real());
    w.f64(v.imag());
  }
  w.save(path);
}

inline ComplexField read_cfield(const std::filesystem::path& path) {
  detail::Reader r(path);
  r.header(kFieldMagic);
  ComplexField field(detail::read_geometry(r));
  for (auto& v : field) {
    const double re = r.f64();
    const double im = r.f64();
    v = Complex(re, im);
  }
  r.finish();
  return field;
}

inline void write_frame(const std::filesystem::path& path, const RealGrid& frame) {
  detail::Writer w;
  w.header(kFrameMagic);
  detail::write_geometry(w, frame.geometry());
  for (double v : frame) w.f64(v);
  w.save(path);
}

inline RealGrid read_frame(const std::filesystem::path& path) {
  detail::Reader r(path);
  r.header(kFrameMagic);
  RealGrid frame(detail::read_geometry(r));
  for (double& v : frame) v = r.f64();
  r.finish();
  return frame;
}

/// Timestamp in integer microseconds.
inline std::uint32_t to_microseconds(double t) {
  return static_cast<std::uint32_t>(std::llround(t * 1e6));
}

inline void write_events(const std::filesystem::path& path, const EventStream& stream) {
  stream.validate();
  require(stream.width <= 65536 && stream.height <= 65536, "events: sensor too large for .evt");
  detail::Writer w;
  w.header(kEventMagic);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(stream.width));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(stream.height));
  w.f64(stream.threshold);
  w.f64(stream.t_sens);
  w.le<std::uint64_t>(stream.records.size());
  for (const auto& e : stream.records) {
    w.le<std::uint32_t>(to_microseconds(e.t));
    w.le<std::uint16_t>(static_cast<std::uint16_t>(e.x));
    w.le<std::uint16_t>(static_cast<std::uint16_t>(e.y));
    w.le<std::uint8_t>(static_cast<std::uint8_t>(e.polarity));
  }
  w.save(path);
}

inline EventStream read_events(const std::filesystem::path& path) {
  detail::Reader r(path);
  r.header(kEventMagic);
  EventStream s;
  s.width = r.le<std::uint32_t>();
  s.height = r.le<std::uint32_t>();
  s.threshold = r.f64();
  s.t_sens = r.f64();
  const auto count = r.le<std::uint64_t>();
  s.records.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    EventRecord e;
    e.t = static_cast<double>(r.le<std::uint32_t>()) * 1e-6;
    e.x = r.le<std::uint16_t>();
    e.y = r.le<std::uint16_t>();
    e.polarity = static_cast<std::int8_t>(r.le<std::uint8_t>());
    s.records.push_back(e);
  }
  r.finish();
  s.validate();
  return s;
}

inline void write_events_csv(const std::filesystem::path& path, const EventStream& stream) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), "cannot open for writing: " + path.string());
  out << "t_us,x,y,p\n";
  for (const auto& e : stream.records)
    out << to_microseconds(e.t) << ',' << e.x << ',' << e.y << ',' << int(e.polarity) << '\n';
}

/// CSV carries no metadata; geometry, threshold and t_sens come from the caller.
inline EventStream read_events_csv(const std::filesystem::path& path, std::size_t width,
                                   std::size_t height, double threshold, double t_sens) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open for reading: " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == "t_us,x,y,p",
          "events csv: missing header t_us,x,y,p");
  EventStream s{width, height, threshold, t_sens, {}};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    long long t_us = 0, x = 0, y = 0, p = 0;
    char c1 = 0, c2 = 0, c3 = 0;
    row >> t_us >> c1 >> x >> c2 >> y >> c3 >> p;
    require(!row.fail() && c1 == ',' && c2 == ',' && c3 == ',' && t_us >= 0 && x >= 0 && y >= 0,
            "events csv: malformed row: " + line);
    s.records.push_back({static_cast<double>(t_us) * 1e-6, static_cast<std::uint32_t>(x),
                         static_cast<std::uint32_t>(y), static_cast<std::int8_t>(p)});
  }
  s.sort();
  s.validate();
  return s;
}

/// Binary PGM (P5). Values are mapped linearly from [lo, hi] to [0, maxval] and clamped.
inline void write_pgm(const std::filesystem::path& path, const RealGrid& values, double lo,
                      double hi, int bits = 8) {
  require(bits == 8 || bits == 16, "pgm: bits must be 8 or 16");
  require(hi > lo, "pgm: empty value range");
  const int maxval = bits == 8 ? 255 : 65535;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), "cannot open for writing: " + path.string());
  out << "P5\n" << values.width() << ' ' << values.height() << '\n' << maxval << '\n';
  std::vector<unsigned char> data;
  data.reserve(values.size() * (bits / 8));
  for (double v : values) {
    const double u = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    const auto q = static_cast<unsigned>(std::lround(u * maxval));
    if (bits == 16) data.push_back(static_cast<unsigned char>(q >> 8));  // PGM is big-endian
    data.push_back(static_cast<unsigned char>(q & 0xFF));
  }
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

inline void write_intensity_preview(const std::filesystem::path& path, const ComplexField& f) {
  const RealGrid i = intensity(f);
  const double hi = *std::max_element(i.begin(), i.end());
  write_pgm(path, i, 0.0, hi > 0.0 ? hi : 1.0);
}

inline void write_phase_preview(const std::filesystem::path& path, const ComplexField& f) {
  write_pgm(path, phase(f), -kPi, kPi);
}

struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  int maxval = 255;
  std::vector<unsigned> samples;

  /// Luminance in [0, 1] on the given geometry.
  RealGrid luminance(Geometry geometry) const {
    require(geometry.width == width && geometry.height == height,
            "pgm: image size does not match geometry");
    RealGrid out(geometry);
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = static_cast<double>(samples[i]) / static_cast<double>(maxval);
    return out;
  }
};

inline PgmImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open for reading: " + path.string());
  auto token = [&]() {
    std::string tok;
    char c = 0;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(c);
    }
    return tok;
  };
  require(token() == "P5", "pgm: only binary P5 is supported");
  PgmImage img;
  try {
    img.width = std::stoul(token());
    img.height = std::stoul(token());
    img.maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw Error("pgm: malformed header in " + path.string());
  }
  require(img.width >= 1 && img.height >= 1, "pgm: empty image");
  require(img.maxval >= 1 && img.maxval <= 65535, "pgm: maxval out of range");
  const std::size_t bpp = img.maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(img.width * img.height * bpp);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  require(in.gcount() == static_cast<std::streamsize>(raw.size()), "pgm: truncated pixel data");
  img.samples.resize(img.width * img.height);
  for (std::size_t i = 0; i < img.samples.size(); ++i) {
    img.samples[i] = bpp == 1 ? raw[i] : (unsigned(raw[2 * i]) << 8) | raw[2 * i + 1];
    require(img.samples[i] <= static_cast<unsigned>(img.maxval), "pgm: sample exceeds maxval");
  }
  return img;
}

}  // namespace holoevs::io
