// callkit/signal.cpp
//
// Copyright 2026 The callkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "callkit/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "callkit/errors.hpp"

namespace callkit {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatMulaw = 0x0007;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

Signal load_wav(const std::string& path, WavInfo* info) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::io_error, "cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) raise(ErrorCode::io_error, "read failure on '" + path + "'");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    raise(ErrorCode::bad_format, "'" + path + "' is not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_size = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const char* tag = bytes.data() + pos;
    const std::uint32_t chunk_size = read_u32(p + pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > n)
      raise(ErrorCode::bad_format, "truncated chunk in '" + path + "'");
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (chunk_size < 16) raise(ErrorCode::bad_format, "short fmt chunk");
      format = read_u16(p + body);
      channels = read_u16(p + body + 2);
      sample_rate = read_u32(p + body + 4);
      bits = read_u16(p + body + 14);
      if (format == kFormatExtensible) {
        // Sub-format GUID starts with the effective format code.
        if (chunk_size < 40) raise(ErrorCode::bad_format, "short extensible fmt chunk");
        format = read_u16(p + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data = p + body;
      data_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr)
    raise(ErrorCode::bad_format, "missing fmt or data chunk in '" + path + "'");
  if (format == kFormatFloat)
    raise(ErrorCode::unsupported_encoding, "float WAV not supported");
  if (format == kFormatMulaw)
    raise(ErrorCode::unsupported_encoding, "mu-law WAV not supported");
  if (format != kFormatPcm)
    raise(ErrorCode::unsupported_encoding,
          "WAV format tag " + std::to_string(format) + " not supported");
  if (bits != 16 && bits != 24)
    raise(ErrorCode::unsupported_encoding,
          std::to_string(bits) + "-bit PCM not supported (16/24 only)");
  if (channels == 0 || sample_rate == 0)
    raise(ErrorCode::bad_format, "invalid fmt chunk");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t frames = data_size / frame_bytes;
  const double scale = 1.0 / static_cast<double>(1 << (bits - 1));

  Signal out;
  out.sample_rate = static_cast<int>(sample_rate);
  out.onset_index = 0;
  out.samples.resize(static_cast<Eigen::Index>(frames));
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    const unsigned char* fp = data + f * frame_bytes;
    for (int c = 0; c < channels; ++c) {
      const unsigned char* sp = fp + c * bytes_per_sample;
      std::int32_t v;
      if (bits == 16) {
        v = static_cast<std::int16_t>(sp[0] | (sp[1] << 8));
      } else {
        v = static_cast<std::int32_t>(sp[0] | (sp[1] << 8) | (sp[2] << 16));
        if (v & 0x800000) v -= 0x1000000;
      }
      acc += static_cast<double>(v) * scale;
    }
    out.samples[static_cast<Eigen::Index>(f)] = acc / channels;
  }

  if (info) {
    info->bits_per_sample = bits;
    info->channels = channels;
    info->sample_rate = static_cast<int>(sample_rate);
  }
  return out;
}

void save_wav(const std::string& path, const Signal& signal, int bits) {
  if (bits != 16 && bits != 24)
    raise(ErrorCode::invalid_argument, "save_wav supports 16 or 24 bits");
  if (signal.sample_rate <= 0)
    raise(ErrorCode::invalid_argument, "signal has no sample rate");

  const int bytes_per_sample = bits / 8;
  const std::int64_t full_scale = static_cast<std::int64_t>(1) << (bits - 1);
  const std::int64_t max_code = full_scale - 1;

  std::string out;
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(signal.samples.size() * bytes_per_sample);
  out.reserve(44 + data_size);
  out.append("RIFF");
  put_u32(out, 36 + data_size);
  out.append("WAVE");
  out.append("fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(signal.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(signal.sample_rate * bytes_per_sample));
  put_u16(out, static_cast<std::uint16_t>(bytes_per_sample));
  put_u16(out, static_cast<std::uint16_t>(bits));
  out.append("data");
  put_u32(out, data_size);

  for (Eigen::Index i = 0; i < signal.samples.size(); ++i) {
    double v = signal.samples[i];
    if (v > 1.0) v = 1.0;
    if (v < -1.0) v = -1.0;
    std::int64_t code = std::llround(v * static_cast<double>(full_scale));
    if (code > max_code) code = max_code;
    if (code < -full_scale) code = -full_scale;
    out.push_back(static_cast<char>(code & 0xFF));
    out.push_back(static_cast<char>((code >> 8) & 0xFF));
    if (bits == 24) out.push_back(static_cast<char>((code >> 16) & 0xFF));
  }

  std::ofstream of(path, std::ios::binary | std::ios::trunc);
  if (!of) raise(ErrorCode::io_error, "cannot open '" + path + "' for writing");
  of.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!of) raise(ErrorCode::io_error, "write failure on '" + path + "'");
}

Eigen::Index detect_onset(const Signal& signal, double frame_ms,
                          double threshold_db) {
  if (signal.samples.size() == 0) raise(ErrorCode::empty_signal, "empty signal");
  const Eigen::Index frame =
      std::max<Eigen::Index>(1, static_cast<Eigen::Index>(
                                    std::lround(frame_ms * 1e-3 * signal.sample_rate)));
  const Eigen::Index n_frames = (signal.samples.size() + frame - 1) / frame;

  Eigen::ArrayXd rms(n_frames);
  for (Eigen::Index f = 0; f < n_frames; ++f) {
    const Eigen::Index start = f * frame;
    const Eigen::Index len = std::min(frame, signal.samples.size() - start);
    rms[f] = std::sqrt(signal.samples.segment(start, len).square().mean());
  }

  const double peak = rms.maxCoeff();
  if (peak <= 0.0) raise(ErrorCode::no_onset, "signal is silent");
  const double threshold = peak * std::pow(10.0, threshold_db / 20.0);
  for (Eigen::Index f = 0; f < n_frames; ++f)
    if (rms[f] > threshold) return f * frame;
  raise(ErrorCode::no_onset, "no frame above threshold");
}

Signal trim_to_onset(const Signal& signal) {
  Signal out;
  out.sample_rate = signal.sample_rate;
  out.onset_index = 0;
  const Eigen::Index start =
      std::min(signal.onset_index, std::max<Eigen::Index>(signal.samples.size() - 1, 0));
  out.samples = signal.samples.segment(start, signal.samples.size() - start);
  return out;
}

std::vector<std::pair<std::string, std::string>> read_labels_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::io_error, "cannot open labels CSV '" + path + "'");
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      raise(ErrorCode::bad_format, "labels CSV line without comma: " + line);
    std::string key = line.substr(0, comma);
    std::string value = line.substr(comma + 1);
    if (first) {
      first = false;
      if (value == "individual_id" || value == "label" || value == "individual")
        continue;  // header
    }
    rows.emplace_back(std::move(key), std::move(value));
  }
  return rows;
}

std::vector<LabelledCall> load_corpus(const std::string& dir,
                                      const std::string& labels_csv) {
  const auto rows = read_labels_csv(labels_csv);
  if (rows.empty()) raise(ErrorCode::bad_format, "labels CSV is empty");
  std::vector<LabelledCall> corpus;
  corpus.reserve(rows.size());
  for (const auto& [file, label] : rows) {
    LabelledCall call;
    call.call_id = file;
    call.individual_id = label;
    const auto path = std::filesystem::path(dir) / file;
    call.signal = load_wav(path.string());
    call.signal.onset_index = detect_onset(call.signal);
    corpus.push_back(std::move(call));
  }
  return corpus;
}

}  // namespace callkit
