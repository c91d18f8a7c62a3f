#include "aero/wave.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace aero::dsp {

void validate(const WaveSignal& x, const std::string& what) {
  if (x.sample_rate <= 0) throw std::invalid_argument(what + ": sample rate must be positive");
  if (x.samples.empty()) throw std::invalid_argument(what + ": signal is empty");
  for (double v : x.samples) {
    if (!std::isfinite(v)) throw std::invalid_argument(what + ": non-finite sample");
  }
}

torch::Tensor to_tensor(const WaveSignal& x, torch::Dtype dtype) {
  auto t = torch::from_blob(const_cast<double*>(x.samples.data()),
                            {static_cast<int64_t>(x.samples.size())}, torch::kFloat64)
               .clone();
  return dtype == torch::kFloat64 ? t : t.to(dtype);
}

WaveSignal from_tensor(const torch::Tensor& t, int sample_rate) {
  auto c = t.detach().reshape({-1}).to(torch::kFloat64).contiguous();
  WaveSignal out;
  out.sample_rate = sample_rate;
  out.samples.assign(c.data_ptr<double>(), c.data_ptr<double>() + c.numel());
  return out;
}

namespace {

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
  std::uint16_t block_align = 0;
};

template <typename T>
T read_le(const unsigned char* p) {
  T v{};
  std::memcpy(&v, p, sizeof(T));
  return v;
}

struct ParsedWav {
  FmtChunk fmt;
  std::vector<unsigned char> data;
  std::int64_t data_bytes = 0;
};

ParsedWav parse(const std::filesystem::path& path, bool load_data) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::array<unsigned char, 12> riff{};
  if (!in.read(reinterpret_cast<char*>(riff.data()), 12) ||
      std::memcmp(riff.data(), "RIFF", 4) != 0 || std::memcmp(riff.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error(path.string() + ": not a RIFF/WAVE file");
  }
  ParsedWav out;
  bool have_fmt = false;
  bool have_data = false;
  std::array<unsigned char, 8> hdr{};
  while (in.read(reinterpret_cast<char*>(hdr.data()), 8)) {
    const auto size = read_le<std::uint32_t>(hdr.data() + 4);
    if (std::memcmp(hdr.data(), "fmt ", 4) == 0) {
      std::vector<unsigned char> buf(size);
      if (size < 16 || !in.read(reinterpret_cast<char*>(buf.data()), size)) {
        throw std::runtime_error(path.string() + ": truncated fmt chunk");
      }
      out.fmt.format = read_le<std::uint16_t>(buf.data());
      out.fmt.channels = read_le<std::uint16_t>(buf.data() + 2);
      out.fmt.sample_rate = read_le<std::uint32_t>(buf.data() + 4);
      out.fmt.block_align = read_le<std::uint16_t>(buf.data() + 12);
      out.fmt.bits = read_le<std::uint16_t>(buf.data() + 14);
      // WAVE_FORMAT_EXTENSIBLE: the real format tag leads the sub-format GUID.
      if (out.fmt.format == 0xFFFE && size >= 26) out.fmt.format = read_le<std::uint16_t>(buf.data() + 24);
      have_fmt = true;
    } else if (std::memcmp(hdr.data(), "data", 4) == 0) {
      if (!have_fmt) throw std::runtime_error(path.string() + ": data chunk before fmt chunk");
      out.data_bytes = size;
      if (load_data) {
        out.data.resize(size);
        in.read(reinterpret_cast<char*>(out.data.data()), size);
        if (in.gcount() != static_cast<std::streamsize>(size)) {
          throw std::runtime_error(path.string() + ": truncated data chunk");
        }
      }
      have_data = true;
      break;
    } else {
      in.seekg(size + (size & 1u), std::ios::cur);
    }
    if (size & 1u && std::memcmp(hdr.data(), "fmt ", 4) == 0) in.seekg(1, std::ios::cur);
  }
  if (!have_fmt || !have_data) throw std::runtime_error(path.string() + ": missing fmt or data chunk");
  const auto& f = out.fmt;
  if (f.channels == 0 || f.sample_rate == 0) throw std::runtime_error(path.string() + ": invalid fmt chunk");
  const bool pcm16 = f.format == 1 && f.bits == 16;
  const bool flt32 = f.format == 3 && f.bits == 32;
  if (!pcm16 && !flt32) {
    throw std::runtime_error(path.string() + ": unsupported sample format (need 16-bit PCM or 32-bit float)");
  }
  return out;
}

}  // namespace

WavInfo probe_wav(const std::filesystem::path& path) {
  auto p = parse(path, false);
  WavInfo info;
  info.sample_rate = static_cast<int>(p.fmt.sample_rate);
  info.channels = p.fmt.channels;
  info.frames = p.data_bytes / (p.fmt.bits / 8 * p.fmt.channels);
  return info;
}

WavReadResult read_wav_ex(const std::filesystem::path& path) {
  auto p = parse(path, true);
  const int ch = p.fmt.channels;
  const int bytes = p.fmt.bits / 8;
  const std::size_t frames = p.data.size() / (static_cast<std::size_t>(bytes) * ch);
  WavReadResult r;
  r.source_channels = ch;
  r.downmixed = ch > 1;
  r.signal.sample_rate = static_cast<int>(p.fmt.sample_rate);
  r.signal.samples.assign(frames, 0.0);
  const unsigned char* src = p.data.data();
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < ch; ++c, src += bytes) {
      acc += bytes == 2 ? read_le<std::int16_t>(src) / 32768.0 : static_cast<double>(read_le<float>(src));
    }
    r.signal.samples[i] = acc / ch;
  }
  if (r.downmixed) {
    std::cerr << "warning: " << path.string() << ": " << ch << " channels downmixed to mono\n";
  }
  return r;
}

WaveSignal read_wav(const std::filesystem::path& path) { return read_wav_ex(path).signal; }

void write_wav(const std::filesystem::path& path, const WaveSignal& x, WavSampleFormat format) {
  if (x.sample_rate <= 0) throw std::invalid_argument("write_wav: sample rate must be positive");
  const std::uint16_t bits = format == WavSampleFormat::pcm16 ? 16 : 32;
  const std::uint16_t tag = format == WavSampleFormat::pcm16 ? 1 : 3;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(x.samples.size() * (bits / 8));
  std::vector<unsigned char> buf(44 + data_bytes);
  auto put = [&buf](std::size_t off, auto v) { std::memcpy(buf.data() + off, &v, sizeof(v)); };
  std::memcpy(buf.data(), "RIFF", 4);
  put(4, static_cast<std::uint32_t>(36 + data_bytes));
  std::memcpy(buf.data() + 8, "WAVEfmt ", 8);
  put(16, std::uint32_t{16});
  put(20, tag);
  put(22, std::uint16_t{1});
  put(24, static_cast<std::uint32_t>(x.sample_rate));
  put(28, static_cast<std::uint32_t>(x.sample_rate * bits / 8));
  put(32, static_cast<std::uint16_t>(bits / 8));
  put(34, bits);
  std::memcpy(buf.data() + 36, "data", 4);
  put(40, data_bytes);
  std::size_t off = 44;
  for (double v : x.samples) {
    if (format == WavSampleFormat::pcm16) {
      const double c = std::clamp(v, -1.0, 1.0);
      put(off, static_cast<std::int16_t>(std::lround(c * 32767.0)));
      off += 2;
    } else {
      put(off, static_cast<float>(v));
      off += 4;
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace aero::dsp
