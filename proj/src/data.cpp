#include "aero/data.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <regex>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "aero/resample.hpp"

namespace aero::data {

namespace fs = std::filesystem;
using nlohmann::json;

std::pair<std::optional<std::string>, std::optional<std::string>> parse_vctk_name(const std::string& filename) {
  static const std::regex re(R"(^([ps]\d+)_\d+(?:_(mic\d+))?\.[A-Za-z0-9]+$)");
  std::smatch m;
  if (!std::regex_match(filename, m, re)) return {std::nullopt, std::nullopt};
  std::optional<std::string> mic;
  if (m[2].matched) mic = m[2].str();
  return {m[1].str(), mic};
}

ManifestScan build_manifest(const fs::path& root, const std::string& pattern) {
  ManifestScan scan;
  if (!fs::is_directory(root)) throw std::invalid_argument("manifest root is not a directory: " + root.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (fnmatch(pattern.c_str(), name.c_str(), 0) == 0) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      const auto info = dsp::probe_wav(f);
      if (info.frames <= 0) throw std::runtime_error("no audio frames");
      ManifestEntry entry;
      entry.path = f.string();
      entry.duration_samples = info.frames;
      entry.sample_rate = info.sample_rate;
      std::tie(entry.speaker_id, entry.mic_id) = parse_vctk_name(f.filename().string());
      scan.entries.push_back(std::move(entry));
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping " << f.string() << ": " << e.what() << "\n";
      scan.skipped.push_back({f.string(), e.what()});
    }
  }
  return scan;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  for (const auto& e : entries) {
    json j{{"path", e.path}, {"duration_samples", e.duration_samples}, {"sample_rate", e.sample_rate}};
    if (e.speaker_id) j["speaker_id"] = *e.speaker_id;
    if (e.mic_id) j["mic_id"] = *e.mic_id;
    out << j.dump() << "\n";
  }
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read manifest " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line);
    ManifestEntry e;
    e.path = j.at("path").get<std::string>();
    e.duration_samples = j.at("duration_samples").get<int64_t>();
    e.sample_rate = j.at("sample_rate").get<int>();
    if (j.contains("speaker_id")) e.speaker_id = j["speaker_id"].get<std::string>();
    if (j.contains("mic_id")) e.mic_id = j["mic_id"].get<std::string>();
    entries.push_back(std::move(e));
  }
  return entries;
}

Split split_vctk(const std::vector<ManifestEntry>& entries) {
  static const std::set<std::string> omitted{"p280", "p315"};
  std::map<std::string, std::vector<ManifestEntry>> by_speaker;
  for (const auto& e : entries) {
    if (!e.speaker_id || omitted.count(*e.speaker_id)) continue;
    if (e.mic_id && *e.mic_id != "mic1") continue;
    by_speaker[*e.speaker_id].push_back(e);
  }
  if (by_speaker.size() < 108) {
    throw std::invalid_argument("VCTK split needs at least 108 speakers after omitting p280/p315, found " +
                                std::to_string(by_speaker.size()));
  }
  Split split;
  std::size_t rank = 0;
  for (auto& [speaker, list] : by_speaker) {
    auto& dst = rank++ < 100 ? split.train : split.test;
    dst.insert(dst.end(), list.begin(), list.end());
  }
  return split;
}

Split split_musdb(const std::vector<ManifestEntry>& entries) {
  Split split;
  for (const auto& e : entries) {
    const fs::path p(e.path);
    if (p.stem() != "mixture") continue;
    bool train = false, test = false;
    for (const auto& part : p) {
      train |= part == "train";
      test |= part == "test";
    }
    if (test) {
      split.test.push_back(e);
    } else if (train) {
      split.train.push_back(e);
    }
  }
  return split;
}

void validate(const PairSpec& p) {
  if (p.source_rate <= 0 || p.target_rate <= 0) throw std::invalid_argument("pair rates must be positive");
  if (p.target_rate % p.source_rate != 0 || p.target_rate == p.source_rate) {
    throw std::invalid_argument("target rate " + std::to_string(p.target_rate) +
                                " is not an integer multiple (> 1) of source rate " + std::to_string(p.source_rate));
  }
}

const std::vector<PairSpec>& supported_pairs() {
  static const std::vector<PairSpec> pairs{{8000, 16000}, {8000, 24000}, {4000, 16000}, {11025, 44100}, {12000, 48000}};
  return pairs;
}

std::pair<dsp::WaveSignal, dsp::WaveSignal> make_lr_hr_pair(const dsp::WaveSignal& y, const PairSpec& pair,
                                                            int64_t min_hr_samples) {
  validate(pair);
  dsp::validate(y, "reference");
  if (y.sample_rate != pair.target_rate) {
    throw std::invalid_argument("reference rate " + std::to_string(y.sample_rate) + " differs from target rate " +
                                std::to_string(pair.target_rate));
  }
  if (static_cast<int64_t>(y.size()) < min_hr_samples) {
    throw std::invalid_argument("reference of " + std::to_string(y.size()) + " samples is shorter than one analysis window (" +
                                std::to_string(min_hr_samples) + ")");
  }
  const int s = pair.scale();
  dsp::WaveSignal hr = y;
  hr.samples.resize(y.size() / static_cast<std::size_t>(s) * static_cast<std::size_t>(s));
  auto lr = dsp::sinc_resample(hr, pair.source_rate);
  return {std::move(lr), std::move(hr)};
}

fs::path lr_cache_path(const fs::path& cache_root, int rate, const fs::path& relative) {
  return cache_root / ("lr_" + std::to_string(rate)) / relative;
}

void write_pairs(const fs::path& path, const std::vector<PairRecord>& pairs) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& p : pairs) out << json{{"lr", p.lr}, {"hr", p.hr}}.dump() << "\n";
}

std::vector<PairRecord> read_pairs(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<PairRecord> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line);
    pairs.push_back({j.at("lr").get<std::string>(), j.at("hr").get<std::string>()});
  }
  return pairs;
}

SignalPair load_pair(const PairRecord& rec) {
  SignalPair p{dsp::read_wav(rec.lr), dsp::read_wav(rec.hr)};
  if (p.lr.sample_rate <= 0 || p.hr.sample_rate % p.lr.sample_rate != 0) {
    throw std::runtime_error("pair " + rec.lr + " / " + rec.hr + ": rates are not an integer ratio");
  }
  const auto s = static_cast<std::size_t>(p.hr.sample_rate / p.lr.sample_rate);
  if (p.hr.size() < s * p.lr.size()) {
    throw std::runtime_error("pair " + rec.hr + ": reference shorter than scale x low-rate length");
  }
  p.hr.samples.resize(s * p.lr.size());
  return p;
}

ChunkStream::ChunkStream(const std::vector<SignalPair>& pairs, double chunk_seconds, double hop_seconds, uint64_t seed)
    : pairs_(&pairs) {
  if (pairs.empty()) throw std::invalid_argument("chunk stream: no pairs");
  if (chunk_seconds <= 0 || hop_seconds <= 0) throw std::invalid_argument("chunk and hop durations must be positive");
  const int lr_rate = pairs.front().lr.sample_rate;
  lr_len_ = std::llround(chunk_seconds * lr_rate);
  const int64_t hop = std::max<int64_t>(1, std::llround(hop_seconds * lr_rate));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (p.lr.sample_rate != lr_rate) throw std::invalid_argument("chunk stream: mixed low-rate sample rates");
    const auto len = static_cast<int64_t>(p.lr.size());
    if (len < lr_len_) {
      throw std::invalid_argument("chunk of " + std::to_string(chunk_seconds) + " s exceeds pair " + std::to_string(i) +
                                  " (" + std::to_string(p.lr.duration_seconds()) + " s)");
    }
    for (int64_t off = 0; off + lr_len_ <= len; off += hop) order_.push_back({i, off});
  }
  std::mt19937_64 rng(seed);
  std::shuffle(order_.begin(), order_.end(), rng);
}

TrainChunk ChunkStream::at(std::size_t i) const {
  const auto& ref = order_.at(i);
  const auto& p = (*pairs_)[ref.source];
  const int64_t s = p.hr.sample_rate / p.lr.sample_rate;
  TrainChunk c;
  c.source = ref.source;
  c.offset = ref.offset;
  c.lr.sample_rate = p.lr.sample_rate;
  c.hr.sample_rate = p.hr.sample_rate;
  c.lr.samples.assign(p.lr.samples.begin() + ref.offset, p.lr.samples.begin() + ref.offset + lr_len_);
  c.hr.samples.assign(p.hr.samples.begin() + s * ref.offset, p.hr.samples.begin() + s * (ref.offset + lr_len_));
  return c;
}

std::optional<TrainChunk> ChunkStream::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  return at(cursor_++);
}

}  // namespace aero::data
