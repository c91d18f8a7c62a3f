#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aero/wave.hpp"

namespace aero::data {

struct ManifestEntry {
  std::string path;
  int64_t duration_samples = 0;
  int sample_rate = 0;
  std::optional<std::string> speaker_id;
  std::optional<std::string> mic_id;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct SkippedFile {
  std::string path;
  std::string reason;
};

struct ManifestScan {
  std::vector<ManifestEntry> entries;
  std::vector<SkippedFile> skipped;
};

/// Recursively scans `root` for files whose name matches the glob `pattern`.
/// Entries come back sorted by path; unreadable files are skipped with a
/// warning and listed in `skipped`.
ManifestScan build_manifest(const std::filesystem::path& root, const std::string& pattern = "*.wav");

/// JSON-lines, one ManifestEntry object per line.
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Speaker and microphone ids from VCTK-style names such as "p225_001_mic1.wav".
std::pair<std::optional<std::string>, std::optional<std::string>> parse_vctk_name(const std::string& filename);

struct Split {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> test;
};

/// Drops speakers p280/p315 and every non-mic1 recording, then assigns the
/// first 100 remaining speakers (sorted by id) to train and the rest to test.
/// Entries without a mic id are kept. Throws std::invalid_argument when fewer
/// than 108 speakers remain.
Split split_vctk(const std::vector<ManifestEntry>& entries);

/// MusDB layout: keeps "mixture" files and splits on a "train"/"test" path component.
Split split_musdb(const std::vector<ManifestEntry>& entries);

struct PairSpec {
  int source_rate = 8000;
  int target_rate = 16000;

  int scale() const noexcept { return source_rate > 0 ? target_rate / source_rate : 0; }
};

/// Throws unless the target rate is an integer multiple of the source rate.
void validate(const PairSpec& p);
/// The evaluated settings: 8-16, 8-24, 4-16, 11.025-44.1 and 12-48 kHz.
const std::vector<PairSpec>& supported_pairs();

/// Low-rate input by sinc resampling, with the reference trimmed to exactly
/// scale * len(lr). Rejects references shorter than `min_hr_samples`.
std::pair<dsp::WaveSignal, dsp::WaveSignal> make_lr_hr_pair(const dsp::WaveSignal& y, const PairSpec& pair,
                                                            int64_t min_hr_samples = 512);

/// `<cache_root>/lr_<rate>/<relative>`
std::filesystem::path lr_cache_path(const std::filesystem::path& cache_root, int rate,
                                    const std::filesystem::path& relative);

struct PairRecord {
  std::string lr;
  std::string hr;
};
void write_pairs(const std::filesystem::path& path, const std::vector<PairRecord>& pairs);
std::vector<PairRecord> read_pairs(const std::filesystem::path& path);

/// Loads one pair, trimming the reference to scale * len(lr).
struct SignalPair {
  dsp::WaveSignal lr;
  dsp::WaveSignal hr;
};
SignalPair load_pair(const PairRecord& rec);

struct TrainChunk {
  dsp::WaveSignal lr;
  dsp::WaveSignal hr;
  std::size_t source = 0;  ///< index into the pair list
  int64_t offset = 0;      ///< low-rate sample offset; the reference starts at scale * offset
};

/// Fixed-length aligned chunks over a list of pairs in a seeded order.
/// Chunk and hop lengths are given in seconds and rounded on the low-rate side.
/// `pairs` must outlive the stream.
class ChunkStream {
 public:
  ChunkStream(const std::vector<SignalPair>& pairs, double chunk_seconds, double hop_seconds, uint64_t seed);

  std::optional<TrainChunk> next();
  /// Materialises chunk `i` of the seeded order.
  TrainChunk at(std::size_t i) const;
  std::size_t size() const noexcept { return order_.size(); }
  int64_t lr_chunk_length() const noexcept { return lr_len_; }

 private:
  struct Ref {
    std::size_t source;
    int64_t offset;
  };
  const std::vector<SignalPair>* pairs_;
  std::vector<Ref> order_;
  int64_t lr_len_ = 0;
  std::size_t cursor_ = 0;
};

}  // namespace aero::data
