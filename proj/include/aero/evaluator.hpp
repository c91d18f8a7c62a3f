#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aero/data.hpp"
#include "aero/stft.hpp"
#include "aero/wave.hpp"

namespace aero::eval {

struct LsdConfig {
  int fft_size = 2048;
  int hop_length = 512;
  dsp::WindowKind window = dsp::WindowKind::hann;

  dsp::StftConfig stft_config() const { return {fft_size, fft_size, hop_length, window, true}; }
};

inline constexpr double kLsdPowerFloor = 1e-10;

/// Mean over frames of the RMS (over bins) difference of log10 power spectra.
/// Throws std::invalid_argument on length or rate mismatch.
double lsd(const dsp::WaveSignal& y, const dsp::WaveSignal& yhat, const LsdConfig& cfg = {});

/// Same distance restricted to bins with lo_hz <= f < hi_hz.
double lsd_band(const dsp::WaveSignal& y, const dsp::WaveSignal& yhat, double lo_hz, double hi_hz,
                const LsdConfig& cfg = {});

class MetricUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class VisqolMode { speech, audio };
VisqolMode parse_visqol_mode(const std::string& name);

/// Runs the external ViSQOL binary on temporary WAV copies resampled to 16 kHz
/// (speech) or 48 kHz (audio) and parses its MOS-LQO line.
/// Missing/non-executable binary -> MetricUnavailable; tool failure -> std::runtime_error.
double visqol_score(const dsp::WaveSignal& ref, const dsp::WaveSignal& deg, VisqolMode mode,
                    const std::filesystem::path& binary);

struct MetricSelection {
  bool lsd = true;
  bool visqol = false;
  VisqolMode visqol_mode = VisqolMode::speech;
  std::filesystem::path visqol_binary = "visqol";
  LsdConfig lsd_config;
};

/// Parses a comma list such as "lsd,visqol".
MetricSelection parse_metrics(const std::string& list);

struct EvalRow {
  std::string path;
  std::optional<double> lsd;
  std::optional<double> visqol;
  std::string error;  ///< non-empty when this file failed
};

struct EvalResult {
  std::vector<EvalRow> rows;  ///< sorted by path
  std::optional<double> mean_lsd;
  std::optional<double> mean_visqol;
  std::size_t count = 0;     ///< rows that succeeded
  std::size_t failures = 0;

  std::string to_csv() const;
  std::string to_table() const;
};

using Upsampler = std::function<dsp::WaveSignal(const dsp::WaveSignal&)>;

/// Evaluates `upsample(lr)` against hr for each pair. Per-file failures are
/// recorded on their row and excluded from the means. Empty input throws.
EvalResult evaluate_testset(const Upsampler& upsample, const std::vector<data::PairRecord>& pairs,
                            const MetricSelection& metrics);

struct SpectrogramImageOptions {
  int fft_size = 1024;
  int hop_length = 256;
  double dynamic_range_db = 80.0;
  int max_height = 512;
};

/// Log-magnitude (dB) raster, low frequencies at the bottom, kHz labels up to Nyquist.
void render_spectrogram_image(const dsp::WaveSignal& w, const std::filesystem::path& path,
                              const SpectrogramImageOptions& opts = {});
void render_spectrogram_image(const dsp::ComplexSpectrogram& s, const std::filesystem::path& path,
                              const SpectrogramImageOptions& opts = {});

}  // namespace aero::eval
