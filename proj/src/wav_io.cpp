#include "excitnet/wav_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace excitnet {

namespace {

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error("read_wav: " + path.string() + ": " + what);
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open file");

  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12) fail(path, "file too short for RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0) fail(path, "not a RIFF container");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) fail(path, "not a WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t chunk_size = read_u32le(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) fail(path, "truncated chunk");

    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_size < 16) fail(path, "fmt chunk too short");
      format = read_u16le(bytes.data() + body);
      channels = read_u16le(bytes.data() + body + 2);
      sample_rate = read_u32le(bytes.data() + body + 4);
      bits = read_u16le(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt) fail(path, "missing fmt chunk");
  if (data == nullptr) fail(path, "missing data chunk");
  if (format != 1) fail(path, "unsupported encoding (want PCM, got format tag " + std::to_string(format) + ")");
  if (channels != 1) fail(path, "unsupported channel count " + std::to_string(channels) + " (want mono)");
  if (bits != 16) fail(path, "unsupported bit depth " + std::to_string(bits) + " (want 16)");
  if (sample_rate == 0) fail(path, "zero sample rate");

  Waveform w;
  w.sample_rate_hz = static_cast<int>(sample_rate);
  const std::size_t n = data_size / 2;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int16_t v = static_cast<std::int16_t>(read_u16le(data + 2 * i));
    w.samples[i] = static_cast<double>(v) / 32768.0;
  }
  return w;
}

WavWriteResult write_wav(const Waveform& waveform, const std::filesystem::path& path) {
  if (waveform.sample_rate_hz <= 0)
    throw std::runtime_error("write_wav: sample rate must be positive");

  WavWriteResult result;
  const std::size_t n = waveform.samples.size();
  std::string payload;
  payload.reserve(44 + 2 * n);

  const std::uint32_t data_bytes = static_cast<std::uint32_t>(2 * n);
  const std::uint32_t rate = static_cast<std::uint32_t>(waveform.sample_rate_hz);
  payload.append("RIFF");
  put_u32le(payload, 36 + data_bytes);
  payload.append("WAVE");
  payload.append("fmt ");
  put_u32le(payload, 16);
  put_u16le(payload, 1);   // PCM
  put_u16le(payload, 1);   // mono
  put_u32le(payload, rate);
  put_u32le(payload, rate * 2);  // byte rate
  put_u16le(payload, 2);   // block align
  put_u16le(payload, 16);  // bits per sample
  payload.append("data");
  put_u32le(payload, data_bytes);

  for (std::size_t i = 0; i < n; ++i) {
    double x = waveform.samples[i];
    if (!std::isfinite(x)) throw std::runtime_error("write_wav: non-finite sample");
    if (x > 1.0 || x < -1.0) {
      ++result.clipped;
      x = std::clamp(x, -1.0, 1.0);
    }
    const long q = std::lround(x * 32768.0);
    const std::int16_t v = static_cast<std::int16_t>(std::clamp<long>(q, -32768, 32767));
    put_u16le(payload, static_cast<std::uint16_t>(v));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_wav: cannot open " + path.string());
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw std::runtime_error("write_wav: write failed for " + path.string());
  return result;
}

}  // namespace excitnet
