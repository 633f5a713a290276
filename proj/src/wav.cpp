#include "delayrank/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "delayrank/errors.hpp"

namespace delayrank {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_le(std::span<const std::uint8_t> bytes, std::size_t offset, int width) {
  std::uint32_t v = 0;
  for (int i = 0; i < width; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
  return v;
}

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int width) {
  for (int i = 0; i < width; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

bool tag_is(std::span<const std::uint8_t> bytes, std::size_t offset, const char* tag) {
  return std::memcmp(bytes.data() + offset, tag, 4) == 0;
}

struct Format {
  std::uint16_t code = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
};

double decode_sample(std::span<const std::uint8_t> bytes, std::size_t offset, const Format& fmt) {
  if (fmt.code == kFormatFloat) {
    if (fmt.bits == 32) return static_cast<double>(std::bit_cast<float>(read_le(bytes, offset, 4)));
    const std::uint64_t lo = read_le(bytes, offset, 4);
    const std::uint64_t hi = read_le(bytes, offset + 4, 4);
    return std::bit_cast<double>(lo | (hi << 32));
  }
  switch (fmt.bits) {
    case 8:
      return (static_cast<double>(bytes[offset]) - 128.0) / 128.0;
    case 16:
      return static_cast<double>(static_cast<std::int16_t>(read_le(bytes, offset, 2))) / 32768.0;
    case 24: {
      std::uint32_t v = read_le(bytes, offset, 3);
      if (v & 0x800000u) v |= 0xFF000000u;
      return static_cast<double>(static_cast<std::int32_t>(v)) / 8388608.0;
    }
    case 32:
      return static_cast<double>(static_cast<std::int32_t>(read_le(bytes, offset, 4))) / 2147483648.0;
  }
  throw IoError("unsupported PCM width");
}

}  // namespace

WavData decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    throw IoError("not a RIFF/WAVE file");
  }
  Format fmt;
  bool have_fmt = false;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_le(bytes, pos + 4, 4);
    const std::size_t body = pos + 8;
    // Truncated trailing chunks are clamped to what is present.
    const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
    if (tag_is(bytes, pos, "fmt ")) {
      if (avail < 16) throw IoError("fmt chunk too short");
      fmt.code = static_cast<std::uint16_t>(read_le(bytes, body, 2));
      fmt.channels = static_cast<std::uint16_t>(read_le(bytes, body + 2, 2));
      fmt.rate = read_le(bytes, body + 4, 4);
      fmt.bits = static_cast<std::uint16_t>(read_le(bytes, body + 14, 2));
      if (fmt.code == kFormatExtensible) {
        if (avail < 26) throw IoError("extensible fmt chunk too short");
        fmt.code = static_cast<std::uint16_t>(read_le(bytes, body + 24, 2));
      }
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      data = bytes.subspan(body, avail);
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw IoError("missing fmt chunk");
  if (!have_data) throw IoError("missing data chunk");
  if (fmt.channels == 0) throw IoError("fmt chunk declares zero channels");

  const bool pcm_ok = fmt.code == kFormatPcm &&
                      (fmt.bits == 8 || fmt.bits == 16 || fmt.bits == 24 || fmt.bits == 32);
  const bool float_ok = fmt.code == kFormatFloat && (fmt.bits == 32 || fmt.bits == 64);
  if (!pcm_ok && !float_ok) {
    throw IoError("unsupported WAV encoding: format code " + std::to_string(fmt.code) + ", " +
                  std::to_string(fmt.bits) + " bits (need PCM 8/16/24/32 or float 32/64)");
  }

  const std::size_t width = fmt.bits / 8;
  const std::size_t frame = width * fmt.channels;
  const std::size_t frames = data.size() / frame;
  WavData out;
  out.sample_rate = fmt.rate;
  out.samples.resize(static_cast<Eigen::Index>(frames));
  for (std::size_t f = 0; f < frames; ++f) {
    double sum = 0.0;
    for (std::size_t c = 0; c < fmt.channels; ++c) {
      sum += decode_sample(data, f * frame + c * width, fmt);
    }
    out.samples(static_cast<Eigen::Index>(f)) = sum / fmt.channels;
  }
  return out;
}

WavData load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(const Eigen::VectorXd& samples, std::uint32_t sample_rate,
                                     SampleFormat format) {
  int bits = 16;
  std::uint16_t code = kFormatPcm;
  switch (format) {
    case SampleFormat::pcm8: bits = 8; break;
    case SampleFormat::pcm16: bits = 16; break;
    case SampleFormat::pcm24: bits = 24; break;
    case SampleFormat::pcm32: bits = 32; break;
    case SampleFormat::float32: bits = 32; code = kFormatFloat; break;
  }
  const int width = bits / 8;
  const std::uint64_t data_size = static_cast<std::uint64_t>(samples.size()) * width;

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_le(out, 36 + data_size, 4);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_le(out, 16, 4);
  put_le(out, code, 2);
  put_le(out, 1, 2);
  put_le(out, sample_rate, 4);
  put_le(out, static_cast<std::uint64_t>(sample_rate) * width, 4);
  put_le(out, width, 2);
  put_le(out, bits, 2);
  put_tag(out, "data");
  put_le(out, data_size, 4);

  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    const double x = samples(i);
    if (format == SampleFormat::float32) {
      put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)), 4);
      continue;
    }
    if (format == SampleFormat::pcm8) {
      const double q = std::clamp(std::round(x * 128.0), -128.0, 127.0);
      out.push_back(static_cast<std::uint8_t>(static_cast<int>(q) + 128));
      continue;
    }
    const double full = std::ldexp(1.0, bits - 1);
    const double q = std::clamp(std::round(x * full), -full, full - 1.0);
    put_le(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(q)), width);
  }
  return out;
}

void write_wav(const std::string& path, const Eigen::VectorXd& samples, std::uint32_t sample_rate,
               SampleFormat format) {
  const auto bytes = encode_wav(samples, sample_rate, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace delayrank
