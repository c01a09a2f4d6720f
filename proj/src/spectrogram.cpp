// callkit/spectrogram.cpp
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

#include "callkit/spectrogram.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "callkit/errors.hpp"

namespace callkit {

namespace detail {

void fft_radix2(Eigen::VectorXcd& data) {
  const Eigen::Index n = data.size();
  if (n == 0 || (n & (n - 1)) != 0)
    raise(ErrorCode::invalid_argument, "FFT size must be a power of two");

  // Bit-reversal permutation.
  for (Eigen::Index i = 1, j = 0; i < n; ++i) {
    Eigen::Index bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  const double pi = 3.14159265358979323846;
  for (Eigen::Index len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * pi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(angle), std::sin(angle));
    for (Eigen::Index i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (Eigen::Index k = 0; k < len / 2; ++k) {
        const std::complex<double> u = data[i + k];
        const std::complex<double> v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

Eigen::ArrayXd hann_window(Eigen::Index n) {
  // Periodic form: a bin-centered sine leaks only into adjacent bins.
  Eigen::ArrayXd w(n);
  const double pi = 3.14159265358979323846;
  for (Eigen::Index i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

}  // namespace detail

Spectrogram stft_magnitude(const Signal& signal, Eigen::Index frame_size,
                           double overlap) {
  if (signal.samples.size() < frame_size)
    raise(ErrorCode::invalid_argument, "signal shorter than one frame");
  if (overlap < 0.0 || overlap >= 1.0)
    raise(ErrorCode::invalid_argument, "overlap must be in [0, 1)");
  const Eigen::Index hop =
      static_cast<Eigen::Index>(std::lround(frame_size * (1.0 - overlap)));
  if (hop < 1) raise(ErrorCode::invalid_argument, "hop underflow");

  const Eigen::Index n_frames = (signal.samples.size() - frame_size) / hop + 1;
  const Eigen::Index n_bins = frame_size / 2 + 1;
  const Eigen::ArrayXd window = detail::hann_window(frame_size);
  const double norm = 1.0 / window.sum();

  Spectrogram spec;
  spec.values.resize(n_frames, n_bins);
  spec.frame_hop = hop;
  spec.frame_size = frame_size;
  spec.sample_rate = signal.sample_rate;
  spec.is_log = false;
  spec.time_origin = frame_size / 2;

  Eigen::VectorXcd buffer(frame_size);
  for (Eigen::Index f = 0; f < n_frames; ++f) {
    const Eigen::ArrayXd frame =
        signal.samples.segment(f * hop, frame_size) * window;
    for (Eigen::Index i = 0; i < frame_size; ++i)
      buffer[i] = std::complex<double>(frame[i], 0.0);
    detail::fft_radix2(buffer);
    for (Eigen::Index b = 0; b < n_bins; ++b)
      spec.values(f, b) = static_cast<float>(std::abs(buffer[b]) * norm);
  }
  return spec;
}

Spectrogram log_magnitude(const Spectrogram& spec, double floor_db,
                          double reference_max) {
  if (spec.is_log)
    raise(ErrorCode::invalid_argument, "spectrogram is already log-scaled");
  double ref = reference_max;
  if (!std::isfinite(ref)) ref = static_cast<double>(spec.values.maxCoeff());

  Spectrogram out = spec;
  out.is_log = true;
  out.log_floor_db = static_cast<float>(floor_db);
  if (ref <= 0.0) {
    out.values.setConstant(static_cast<float>(floor_db));
    return out;
  }
  const double inv_ref = 1.0 / ref;
  for (Eigen::Index f = 0; f < out.values.rows(); ++f) {
    for (Eigen::Index b = 0; b < out.values.cols(); ++b) {
      const double m = static_cast<double>(spec.values(f, b)) * inv_ref;
      const double db = m > 0.0 ? 20.0 * std::log10(m) : floor_db;
      out.values(f, b) = static_cast<float>(std::max(db, floor_db));
    }
  }
  return out;
}

Spectrogram tiled_spectrogram(const Eigen::VectorXd& spectrum,
                              Eigen::Index n_frames, Eigen::Index frame_hop,
                              Eigen::Index frame_size, int sample_rate) {
  if (spectrum.size() == 0 || n_frames < 1)
    raise(ErrorCode::invalid_argument, "empty spectrum or no frames");
  Spectrogram spec;
  spec.values = spectrum.cast<float>().transpose().replicate(n_frames, 1);
  spec.frame_hop = frame_hop;
  spec.frame_size = frame_size;
  spec.sample_rate = sample_rate;
  spec.is_log = false;
  spec.time_origin = frame_size / 2;
  return spec;
}

void write_spectrogram_binary(const std::string& path, const Spectrogram& spec) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::io_error, "cannot open '" + path + "' for writing");
  const std::uint32_t header[4] = {
      static_cast<std::uint32_t>(spec.n_frames()),
      static_cast<std::uint32_t>(spec.n_bins()),
      static_cast<std::uint32_t>(spec.frame_hop),
      static_cast<std::uint32_t>(spec.frame_size)};
  out.write(reinterpret_cast<const char*>(header), 16);
  out.write(reinterpret_cast<const char*>(spec.values.data()),
            static_cast<std::streamsize>(sizeof(float) * spec.values.size()));
  if (!out) raise(ErrorCode::io_error, "write failure on '" + path + "'");
}

Spectrogram read_spectrogram_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::io_error, "cannot open '" + path + "'");
  std::uint32_t header[4];
  in.read(reinterpret_cast<char*>(header), 16);
  if (!in) raise(ErrorCode::bad_format, "short spectrogram header");
  Spectrogram spec;
  spec.values.resize(header[0], header[1]);
  spec.frame_hop = header[2];
  spec.frame_size = header[3];
  in.read(reinterpret_cast<char*>(spec.values.data()),
          static_cast<std::streamsize>(sizeof(float) * spec.values.size()));
  if (!in) raise(ErrorCode::bad_format, "truncated spectrogram data");
  spec.time_origin = spec.frame_size / 2;
  return spec;
}

void write_spectrogram_csv(const std::string& path, const Spectrogram& spec) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorCode::io_error, "cannot open '" + path + "' for writing");
  std::ostringstream line;
  line.precision(9);
  for (Eigen::Index f = 0; f < spec.n_frames(); ++f) {
    line.str("");
    for (Eigen::Index b = 0; b < spec.n_bins(); ++b) {
      if (b) line << ',';
      line << spec.values(f, b);
    }
    out << line.str() << '\n';
  }
  if (!out) raise(ErrorCode::io_error, "write failure on '" + path + "'");
}

}  // namespace callkit
