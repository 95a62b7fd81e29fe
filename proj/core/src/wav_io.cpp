#include "aed/wav_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "aed/error.hpp"

namespace aed {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatIeeeFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

double decode_sample(const unsigned char* p, std::uint16_t format,
                     std::uint16_t bits) {
  if (format == kFormatIeeeFloat) {
    float f;
    std::memcpy(&f, p, 4);
    double v = static_cast<double>(f);
    if (v > 1.0) v = 1.0;
    if (v < -1.0) v = -1.0;
    return v;
  }
  switch (bits) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16: {
      auto v = static_cast<std::int16_t>(read_u16(p));
      return v / 32768.0;
    }
    case 24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v |= ~0xFFFFFF;  // sign extend
      return v / 8388608.0;
    }
    case 32: {
      auto v = static_cast<std::int32_t>(read_u32(p));
      return v / 2147483648.0;
    }
    default:
      throw FormatError("wav: unsupported bit depth");
  }
}

}  // namespace

DecodedWav read_wav(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("wav: cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  if (f.bad()) throw IoError("wav: read failure on " + path.string());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw FormatError("wav: not a RIFF/WAVE file: " + path.string());

  FmtChunk fmt;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t size = read_u32(bytes.data() + pos + 4);
    pos += 8;
    if (pos + size > bytes.size())
      throw FormatError("wav: truncated chunk in " + path.string());
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError("wav: fmt chunk too small");
      const unsigned char* p = bytes.data() + pos;
      fmt.format = read_u16(p);
      fmt.channels = read_u16(p + 2);
      fmt.sample_rate = read_u32(p + 4);
      fmt.bits = read_u16(p + 14);
      if (fmt.format == kFormatExtensible) {
        if (size < 40) throw FormatError("wav: extensible fmt chunk too small");
        fmt.format = read_u16(p + 24);  // first 2 bytes of the SubFormat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + pos;
      data_len = size;
    }
    pos += size + (size & 1);  // chunks are word aligned
  }

  if (!have_fmt || data == nullptr)
    throw FormatError("wav: missing fmt or data chunk in " + path.string());
  if (fmt.channels == 0 || fmt.sample_rate == 0)
    throw FormatError("wav: bad fmt fields in " + path.string());
  if (fmt.format == kFormatIeeeFloat) {
    if (fmt.bits != 32) throw FormatError("wav: only 32-bit float supported");
  } else if (fmt.format == kFormatPcm) {
    if (fmt.bits != 8 && fmt.bits != 16 && fmt.bits != 24 && fmt.bits != 32)
      throw FormatError("wav: unsupported PCM bit depth");
  } else {
    throw FormatError("wav: unsupported encoding tag " +
                      std::to_string(fmt.format));
  }

  const std::size_t bytes_per_sample = fmt.bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
  const std::size_t frames = data_len / frame_bytes;
  if (frames == 0) throw EmptyAudioError("wav: no audio frames in " + path.string());

  DecodedWav out;
  out.sample_rate = static_cast<int>(fmt.sample_rate);
  out.channels.assign(fmt.channels, std::vector<double>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    const unsigned char* frame = data + i * frame_bytes;
    for (std::size_t c = 0; c < fmt.channels; ++c)
      out.channels[c][i] =
          decode_sample(frame + c * bytes_per_sample, fmt.format, fmt.bits);
  }
  return out;
}

Waveform load_clip(const std::filesystem::path& path) {
  DecodedWav wav = read_wav(path);
  Waveform mono{mix_to_mono(wav.channels), wav.sample_rate};
  return canonicalize(mono);
}

void write_wav16(const std::filesystem::path& path, const Waveform& w) {
  if (w.sample_rate <= 0)
    throw InvalidArgument("write_wav16: waveform has no sample rate");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("wav: cannot create " + path.string());

  const std::uint32_t n = static_cast<std::uint32_t>(w.samples.size());
  const std::uint32_t data_bytes = n * 2;
  const std::uint32_t rate = static_cast<std::uint32_t>(w.sample_rate);
  const std::uint32_t byte_rate = rate * 2;

  auto put_u32 = [&](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    f.write(reinterpret_cast<const char*>(b), 4);
  };
  auto put_u16 = [&](std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF)};
    f.write(reinterpret_cast<const char*>(b), 2);
  };

  f.write("RIFF", 4);
  put_u32(36 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  put_u32(16);
  put_u16(kFormatPcm);
  put_u16(1);  // mono
  put_u32(rate);
  put_u32(byte_rate);
  put_u16(2);   // block align
  put_u16(16);  // bits
  f.write("data", 4);
  put_u32(data_bytes);

  for (double s : w.samples) {
    if (s > 1.0) s = 1.0;
    if (s < -1.0) s = -1.0;
    put_u16(static_cast<std::uint16_t>(
        static_cast<std::int16_t>(std::lrint(s * 32767.0))));
  }
  if (!f) throw IoError("wav: write failure on " + path.string());
}

}  // namespace aed
