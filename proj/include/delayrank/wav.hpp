#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace delayrank {

enum class SampleFormat { pcm8, pcm16, pcm24, pcm32, float32 };

/// Mono samples in [-1, 1] and their rate.
struct WavData {
  Eigen::VectorXd samples;
  std::uint32_t sample_rate = 16000;
};

/// Decodes RIFF/WAVE bytes: integer PCM (8/16/24/32-bit), IEEE float
/// (32/64-bit) and WAVE_FORMAT_EXTENSIBLE wrappers of either. Integer samples
/// are divided by 2^(bits-1); channels are averaged to mono. Throws IoError.
WavData decode_wav(std::span<const std::uint8_t> bytes);

WavData load_wav(const std::string& path);

/// Encodes mono samples. Integer formats round and saturate.
std::vector<std::uint8_t> encode_wav(const Eigen::VectorXd& samples, std::uint32_t sample_rate,
                                     SampleFormat format = SampleFormat::pcm16);

void write_wav(const std::string& path, const Eigen::VectorXd& samples, std::uint32_t sample_rate,
               SampleFormat format = SampleFormat::pcm16);

}  // namespace delayrank
