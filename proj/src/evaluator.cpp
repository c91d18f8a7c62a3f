#include "aero/evaluator.hpp"

#include <png.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <random>
#include <regex>
#include <sstream>

#include <boost/algorithm/string.hpp>

#include "aero/resample.hpp"

namespace aero::eval {

namespace fs = std::filesystem;
using torch::Tensor;

namespace {

Tensor log_power(const dsp::WaveSignal& w, const LsdConfig& cfg) {
  auto s = dsp::stft(w, cfg.stft_config()).values;
  return torch::log10(torch::clamp_min(s.abs().square(), kLsdPowerFloor));
}

void check_pair(const dsp::WaveSignal& y, const dsp::WaveSignal& yhat, const LsdConfig& cfg) {
  dsp::validate(y, "lsd reference");
  dsp::validate(yhat, "lsd estimate");
  if (y.size() != yhat.size() || y.sample_rate != yhat.sample_rate) {
    throw std::invalid_argument("lsd: length/rate mismatch (" + std::to_string(y.size()) + " @ " +
                                std::to_string(y.sample_rate) + " vs " + std::to_string(yhat.size()) + " @ " +
                                std::to_string(yhat.sample_rate) + ")");
  }
  if (static_cast<int64_t>(y.size()) < cfg.fft_size) {
    throw std::invalid_argument("lsd: signals of " + std::to_string(y.size()) + " samples are shorter than one " +
                                std::to_string(cfg.fft_size) + "-sample window");
  }
}

double lsd_rows(const Tensor& a, const Tensor& b) {
  // [bins, frames]: RMS over bins, mean over frames.
  return (a - b).square().mean(0).sqrt().mean().item<double>();
}

}  // namespace

double lsd(const dsp::WaveSignal& y, const dsp::WaveSignal& yhat, const LsdConfig& cfg) {
  check_pair(y, yhat, cfg);
  return lsd_rows(log_power(y, cfg), log_power(yhat, cfg));
}

double lsd_band(const dsp::WaveSignal& y, const dsp::WaveSignal& yhat, double lo_hz, double hi_hz,
                const LsdConfig& cfg) {
  check_pair(y, yhat, cfg);
  const double bin_hz = static_cast<double>(y.sample_rate) / cfg.fft_size;
  const int64_t bins = cfg.fft_size / 2 + 1;
  const auto lo = std::clamp<int64_t>(static_cast<int64_t>(std::ceil(lo_hz / bin_hz)), 0, bins);
  const auto hi = std::clamp<int64_t>(static_cast<int64_t>(std::ceil(hi_hz / bin_hz)), 0, bins);
  if (hi <= lo) throw std::invalid_argument("lsd_band: empty band");
  return lsd_rows(log_power(y, cfg).slice(0, lo, hi), log_power(yhat, cfg).slice(0, lo, hi));
}

// ---------------------------------------------------------------------------
// ViSQOL

VisqolMode parse_visqol_mode(const std::string& name) {
  if (name == "speech") return VisqolMode::speech;
  if (name == "audio") return VisqolMode::audio;
  throw std::invalid_argument("unknown ViSQOL mode '" + name + "' (expected speech or audio)");
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

fs::path resolve_binary(const fs::path& binary) {
  if (binary.has_parent_path()) return binary;
  const char* path_env = std::getenv("PATH");
  if (path_env == nullptr) return binary;
  std::vector<std::string> dirs;
  boost::split(dirs, std::string(path_env), boost::is_any_of(":"));
  for (const auto& d : dirs) {
    auto candidate = fs::path(d) / binary;
    if (!d.empty() && access(candidate.c_str(), X_OK) == 0) return candidate;
  }
  return binary;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("aero_visqol_" + std::to_string(getpid()) + "_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace

double visqol_score(const dsp::WaveSignal& ref, const dsp::WaveSignal& deg, VisqolMode mode, const fs::path& binary) {
  const auto exe = resolve_binary(binary);
  if (access(exe.c_str(), X_OK) != 0) {
    throw MetricUnavailable("metric unavailable: ViSQOL binary '" + binary.string() + "' not found or not executable");
  }
  const int rate = mode == VisqolMode::speech ? 16000 : 48000;
  TempDir tmp;
  const auto ref_path = tmp.path() / "reference.wav";
  const auto deg_path = tmp.path() / "degraded.wav";
  dsp::write_wav(ref_path, ref.sample_rate == rate ? ref : dsp::sinc_resample(ref, rate), dsp::WavSampleFormat::pcm16);
  dsp::write_wav(deg_path, deg.sample_rate == rate ? deg : dsp::sinc_resample(deg, rate), dsp::WavSampleFormat::pcm16);

  std::string cmd = shell_quote(exe.string()) + " --reference_file " + shell_quote(ref_path.string()) +
                    " --degraded_file " + shell_quote(deg_path.string());
  if (mode == VisqolMode::speech) cmd += " --use_speech_mode";
  cmd += " 2>&1";

  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) throw std::runtime_error("visqol: cannot start '" + exe.string() + "'");
  std::string output;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) output += buf.data();
  const int status = pclose(pipe);
  if (status != 0) {
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    throw std::runtime_error("visqol exited with status " + std::to_string(code) + ":\n" + output);
  }
  static const std::regex mos(R"(MOS-LQO:\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?))");
  std::smatch m;
  if (!std::regex_search(output, m, mos)) throw std::runtime_error("visqol output has no MOS-LQO line:\n" + output);
  return std::stod(m[1].str());
}

// ---------------------------------------------------------------------------
// Test-set evaluation

MetricSelection parse_metrics(const std::string& list) {
  MetricSelection sel;
  sel.lsd = false;
  std::vector<std::string> parts;
  boost::split(parts, list, boost::is_any_of(","));
  for (auto& p : parts) {
    boost::trim(p);
    if (p == "lsd") {
      sel.lsd = true;
    } else if (p == "visqol") {
      sel.visqol = true;
    } else if (!p.empty()) {
      throw std::invalid_argument("unknown metric '" + p + "' (expected lsd, visqol)");
    }
  }
  if (!sel.lsd && !sel.visqol) throw std::invalid_argument("no metrics selected");
  return sel;
}

EvalResult evaluate_testset(const Upsampler& upsample, const std::vector<data::PairRecord>& pairs,
                            const MetricSelection& metrics) {
  if (pairs.empty()) throw std::invalid_argument("evaluate: empty test set");
  EvalResult result;
  for (const auto& rec : pairs) {
    EvalRow row;
    row.path = rec.hr;
    try {
      const auto p = data::load_pair(rec);
      const auto yhat = upsample(p.lr);
      if (metrics.lsd) row.lsd = lsd(p.hr, yhat, metrics.lsd_config);
      if (metrics.visqol) row.visqol = visqol_score(p.hr, yhat, metrics.visqol_mode, metrics.visqol_binary);
    } catch (const MetricUnavailable&) {
      throw;
    } catch (const std::exception& e) {
      row.lsd.reset();
      row.visqol.reset();
      row.error = e.what();
    }
    result.rows.push_back(std::move(row));
  }
  std::stable_sort(result.rows.begin(), result.rows.end(),
                   [](const EvalRow& a, const EvalRow& b) { return a.path < b.path; });
  double sum_lsd = 0.0, sum_visqol = 0.0;
  for (const auto& r : result.rows) {
    if (!r.error.empty()) {
      ++result.failures;
      continue;
    }
    ++result.count;
    if (r.lsd) sum_lsd += *r.lsd;
    if (r.visqol) sum_visqol += *r.visqol;
  }
  if (result.count > 0) {
    if (metrics.lsd) result.mean_lsd = sum_lsd / static_cast<double>(result.count);
    if (metrics.visqol) result.mean_visqol = sum_visqol / static_cast<double>(result.count);
  }
  return result;
}

namespace {

std::string fmt(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << *v;
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  return "\"" + boost::replace_all_copy(s, "\"", "\"\"") + "\"";
}

}  // namespace

std::string EvalResult::to_csv() const {
  std::ostringstream os;
  os << "path,lsd,visqol,error\n";
  for (const auto& r : rows) {
    os << csv_field(r.path) << "," << fmt(r.lsd) << "," << fmt(r.visqol) << "," << csv_field(r.error) << "\n";
  }
  os << "MEAN," << fmt(mean_lsd) << "," << fmt(mean_visqol) << ",n=" << count << " failed=" << failures << "\n";
  return os.str();
}

std::string EvalResult::to_table() const {
  std::size_t width = 4;
  for (const auto& r : rows) width = std::max(width, r.path.size());
  std::ostringstream os;
  auto line = [&](const std::string& a, const std::string& b, const std::string& c, const std::string& d) {
    os << std::left << std::setw(static_cast<int>(width)) << a << "  " << std::right << std::setw(10) << b << "  "
       << std::setw(10) << c;
    if (!d.empty()) os << "  " << d;
    os << "\n";
  };
  line("file", "LSD", "ViSQOL", "");
  for (const auto& r : rows) line(r.path, fmt(r.lsd), fmt(r.visqol), r.error.empty() ? "" : "error: " + r.error);
  line("mean (n=" + std::to_string(count) + ", failed=" + std::to_string(failures) + ")", fmt(mean_lsd),
       fmt(mean_visqol), "");
  return os.str();
}

// ---------------------------------------------------------------------------
// Spectrogram images

namespace {

// 3x5 glyphs, one row per byte (low 3 bits, MSB on the left).
const std::map<char, std::array<uint8_t, 5>>& glyphs() {
  static const std::map<char, std::array<uint8_t, 5>> g{
      {'0', {7, 5, 5, 5, 7}}, {'1', {2, 6, 2, 2, 7}}, {'2', {7, 1, 7, 4, 7}}, {'3', {7, 1, 7, 1, 7}},
      {'4', {5, 5, 7, 1, 1}}, {'5', {7, 4, 7, 1, 7}}, {'6', {7, 4, 7, 5, 7}}, {'7', {7, 1, 1, 1, 1}},
      {'8', {7, 5, 7, 5, 7}}, {'9', {7, 5, 7, 1, 7}}, {'.', {0, 0, 0, 0, 2}}, {'k', {4, 5, 6, 5, 5}}};
  return g;
}

struct Rgb {
  uint8_t r, g, b;
};

Rgb colormap(double t) {
  // black -> purple -> orange -> pale yellow
  static const std::array<std::array<double, 3>, 5> stops{
      {{0, 0, 4}, {80, 18, 123}, {183, 55, 121}, {252, 137, 97}, {252, 253, 191}}};
  t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  auto mix = [&](int c) { return static_cast<uint8_t>(std::lround(stops[i][c] * (1 - f) + stops[i + 1][c] * f)); };
  return {mix(0), mix(1), mix(2)};
}

void write_png(const fs::path& path, int width, int height, const std::vector<uint8_t>& rgb) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (fp == nullptr) throw std::runtime_error("cannot write image " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    std::fclose(fp);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(y) * width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

std::string khz_label(double hz) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(hz < 10000 ? 1 : 0) << hz / 1000.0 << "k";
  return os.str();
}

}  // namespace

void render_spectrogram_image(const dsp::ComplexSpectrogram& s, const fs::path& path,
                              const SpectrogramImageOptions& opts) {
  if (!s.values.defined() || s.values.dim() != 2 || s.frames() < 1) {
    throw std::invalid_argument("render_spectrogram_image: empty spectrogram");
  }
  auto db = (10.0 * torch::log10(torch::clamp_min(s.values.abs().square(), kLsdPowerFloor))).to(torch::kFloat64);
  const double top = std::max(db.max().item<double>(), 10.0 * std::log10(kLsdPowerFloor) + opts.dynamic_range_db);
  const double bottom = top - opts.dynamic_range_db;
  db = ((db - bottom) / opts.dynamic_range_db).clamp(0.0, 1.0).contiguous();
  const auto* v = db.data_ptr<double>();

  const int bins = static_cast<int>(s.bins());
  const int frames = static_cast<int>(s.frames());
  const int plot_h = std::min(bins, opts.max_height);
  const int margin = 28;
  const int pad = 4;
  const int xscale = std::max(1, (256 + frames - 1) / frames);  // keep short clips legible
  const int width = margin + frames * xscale;
  const int height = std::max(plot_h + 2 * pad, 5 + 2 * pad);
  std::vector<uint8_t> rgb(static_cast<std::size_t>(width) * height * 3, 255);
  auto put = [&](int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    auto* p = rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  };

  for (int row = 0; row < plot_h; ++row) {
    const int bin = static_cast<int>(std::lround(static_cast<double>(plot_h - 1 - row) * (bins - 1) / std::max(1, plot_h - 1)));
    for (int x = 0; x < frames * xscale; ++x) {
      put(margin + x, pad + row, colormap(v[static_cast<std::size_t>(bin) * frames + x / xscale]));
    }
  }

  // Axis ticks and labels at 0, 1/4, ..., 1 of Nyquist.
  const double nyquist = s.source_rate / 2.0;
  for (int q = 0; q <= 4; ++q) {
    const int y = pad + static_cast<int>(std::lround((plot_h - 1) * (1.0 - q / 4.0)));
    for (int x = margin - 3; x < margin; ++x) put(x, y, {0, 0, 0});
    if (s.source_rate <= 0) continue;
    const auto label = khz_label(nyquist * q / 4.0);
    int x0 = 1;
    const int y0 = std::clamp(y - 2, 0, height - 5);
    for (char ch : label) {
      const auto it = glyphs().find(ch);
      if (it != glyphs().end()) {
        for (int gy = 0; gy < 5; ++gy) {
          for (int gx = 0; gx < 3; ++gx) {
            if (it->second[gy] & (4 >> gx)) put(x0 + gx, y0 + gy, {0, 0, 0});
          }
        }
      }
      x0 += 4;
    }
  }
  write_png(path, width, height, rgb);
}

void render_spectrogram_image(const dsp::WaveSignal& w, const fs::path& path, const SpectrogramImageOptions& opts) {
  dsp::validate(w, "spectrogram input");
  dsp::StftConfig cfg{opts.fft_size, opts.fft_size, opts.hop_length, dsp::WindowKind::hann, true};
  if (static_cast<int64_t>(w.size()) <= cfg.fft_size / 2) {
    // Reflect padding needs more than half a window; zero-extend very short input.
    auto padded = w;
    padded.samples.resize(static_cast<std::size_t>(cfg.fft_size), 0.0);
    render_spectrogram_image(dsp::stft(padded, cfg), path, opts);
    return;
  }
  render_spectrogram_image(dsp::stft(w, cfg), path, opts);
}

}  // namespace aero::eval
