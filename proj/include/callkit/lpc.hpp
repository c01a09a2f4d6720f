// callkit/lpc.hpp
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

#pragma once

#include <Eigen/Dense>

#include "callkit/signal.hpp"

namespace callkit {

/// Whole-clip linear predictor x^(n) = sum_k a[k] x(n-k). The prediction
/// polynomial is A(z) = 1 - sum_k a[k] z^-k; gain is the square root of
/// the final Levinson recursion error.
struct LpcModel {
  int order = 0;
  Eigen::VectorXd coefficients;  // a[1..order]
  double gain = 0.0;
};

/// r[k] = sum_n x(n) x(n+k) for k = 0..max_lag.
Eigen::VectorXd autocorrelate(const Signal& signal, Eigen::Index max_lag);

/// Levinson-Durbin fit of the autocorrelation normal equations.
LpcModel fit_lpc(const Signal& signal, int order = 10);

/// Prediction error e(n) = x(n) - sum_k a[k] x(n-k), zero initial state.
/// Same length, sample rate and onset as the input.
Signal residual(const Signal& signal, const LpcModel& model);

/// Inverse of `residual`: drives 1/A(z) with the excitation.
Signal all_pole_synthesis(const Signal& excitation, const LpcModel& model);

/// Magnitude of gain / |A(e^{jw})| on n_bins frequencies uniformly spanning
/// [0, Nyquist] inclusive. Throws for models with roots on or outside the
/// unit circle (tolerance 1e-9).
Eigen::VectorXd lpc_spectrum(const LpcModel& model, Eigen::Index n_bins);

/// Largest pole magnitude of 1/A(z), from the companion-matrix eigenvalues.
double max_pole_magnitude(const LpcModel& model);

}  // namespace callkit
