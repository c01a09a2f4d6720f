// callkit/lpc.cpp
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

#include "callkit/lpc.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>

#include "callkit/errors.hpp"

namespace callkit {

Eigen::VectorXd autocorrelate(const Signal& signal, Eigen::Index max_lag) {
  const Eigen::Index n = signal.samples.size();
  if (n == 0) raise(ErrorCode::empty_signal, "autocorrelate on empty signal");
  if (max_lag >= n)
    raise(ErrorCode::invalid_argument, "max_lag must be < signal length");
  Eigen::VectorXd r(max_lag + 1);
  const Eigen::VectorXd x = signal.samples.matrix();
  for (Eigen::Index k = 0; k <= max_lag; ++k)
    r[k] = x.head(n - k).dot(x.tail(n - k));
  return r;
}

LpcModel fit_lpc(const Signal& signal, int order) {
  if (order < 1) raise(ErrorCode::invalid_argument, "order must be >= 1");
  if (signal.samples.size() <= order)
    raise(ErrorCode::invalid_argument, "signal shorter than LPC order");
  const Eigen::VectorXd r = autocorrelate(signal, order);
  if (r[0] <= 0.0)
    raise(ErrorCode::degenerate_autocorrelation, "zero-energy signal");

  // Levinson-Durbin on the Toeplitz normal equations R a = r[1..p].
  Eigen::VectorXd a = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd prev(order);
  double error = r[0];
  for (int i = 1; i <= order; ++i) {
    double acc = r[i];
    for (int j = 1; j < i; ++j) acc -= a[j - 1] * r[i - j];
    const double k = acc / error;
    prev.head(i - 1) = a.head(i - 1);
    a[i - 1] = k;
    for (int j = 1; j < i; ++j) a[j - 1] = prev[j - 1] - k * prev[i - j - 1];
    error *= (1.0 - k * k);
    if (!std::isfinite(error) || error < 0.0)
      raise(ErrorCode::not_finite, "Levinson recursion diverged");
  }
  if (!a.allFinite()) raise(ErrorCode::not_finite, "non-finite coefficients");

  LpcModel model;
  model.order = order;
  model.coefficients = a;
  model.gain = std::sqrt(error);
  return model;
}

Signal residual(const Signal& signal, const LpcModel& model) {
  const Eigen::Index n = signal.samples.size();
  const int p = model.order;
  Signal out;
  out.sample_rate = signal.sample_rate;
  out.onset_index = signal.onset_index;
  out.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double pred = 0.0;
    const int kmax = static_cast<int>(std::min<Eigen::Index>(p, i));
    for (int k = 1; k <= kmax; ++k)
      pred += model.coefficients[k - 1] * signal.samples[i - k];
    out.samples[i] = signal.samples[i] - pred;
  }
  return out;
}

Signal all_pole_synthesis(const Signal& excitation, const LpcModel& model) {
  const Eigen::Index n = excitation.samples.size();
  const int p = model.order;
  Signal out;
  out.sample_rate = excitation.sample_rate;
  out.onset_index = excitation.onset_index;
  out.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double pred = 0.0;
    const int kmax = static_cast<int>(std::min<Eigen::Index>(p, i));
    for (int k = 1; k <= kmax; ++k)
      pred += model.coefficients[k - 1] * out.samples[i - k];
    out.samples[i] = excitation.samples[i] + pred;
  }
  return out;
}

double max_pole_magnitude(const LpcModel& model) {
  const int p = model.order;
  if (p == 0) return 0.0;
  // Roots of z^p - a1 z^{p-1} - ... - ap via the companion matrix.
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  companion.row(0) = model.coefficients.transpose();
  companion.block(1, 0, p - 1, p - 1).setIdentity();
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::VectorXd lpc_spectrum(const LpcModel& model, Eigen::Index n_bins) {
  if (n_bins < 2) raise(ErrorCode::invalid_argument, "n_bins must be >= 2");
  if (max_pole_magnitude(model) >= 1.0 - 1e-9)
    raise(ErrorCode::unstable_model, "pole on or outside the unit circle");

  Eigen::VectorXd spectrum(n_bins);
  const double pi = 3.14159265358979323846;
  for (Eigen::Index i = 0; i < n_bins; ++i) {
    const double omega = pi * static_cast<double>(i) / static_cast<double>(n_bins - 1);
    std::complex<double> a(1.0, 0.0);
    for (int k = 1; k <= model.order; ++k)
      a -= model.coefficients[k - 1] *
           std::exp(std::complex<double>(0.0, -omega * k));
    spectrum[i] = model.gain / std::abs(a);
  }
  if (!spectrum.allFinite())
    raise(ErrorCode::not_finite, "non-finite LPC spectrum");
  return spectrum;
}

}  // namespace callkit
