// callkit/experiment.hpp
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

#include <optional>
#include <string>
#include <vector>

#include "callkit/distance.hpp"
#include "callkit/signal.hpp"
#include "callkit/spectrogram.hpp"
#include "callkit/synth.hpp"

namespace callkit {

enum class SourceKind { raw, lpc_residual, lpc_filter };
enum class TransformKind { stft, adft_unrefined, adft_refined };
enum class Scale { mag, log };

struct Representation {
  SourceKind source = SourceKind::raw;
  TransformKind transform = TransformKind::stft;
};

std::string representation_name(const Representation& rep);
std::optional<Representation> parse_representation(const std::string& name);
const char* scale_name(Scale scale);

/// Signal-processing knobs shared by every pipeline stage.
struct PipelineParams {
  Eigen::Index frame_size = 1024;
  double overlap = 0.75;
  int lpc_order = 10;
  double f_min = 80.0;
  double f_max = 2000.0;
  double window_periods = 3.0;
  int refine_iters = 8;
  double refine_tol_hz = 0.1;
  double floor_db = -80.0;
  int n_threads = 0;
};

/// Onset-aligned magnitude spectrograms for one representation, one per
/// call, all on the common STFT grid (aDFT output is regridded, the LPC
/// filter spectrum is tiled).
std::vector<Spectrogram> compute_representation(
    const std::vector<LabelledCall>& corpus, const Representation& rep,
    const PipelineParams& params);

/// mag passes through; log applies log_magnitude with the corpus-wide
/// maximum as the shared reference.
std::vector<Spectrogram> apply_scale(const std::vector<Spectrogram>& specs,
                                     Scale scale, double floor_db);

struct ExperimentGrid {
  std::vector<Representation> representations;
  std::vector<Scale> scales;
  std::vector<Metric> metrics;
  int k = 3;
  double max_shift_ms = 20.0;
  PipelineParams params;
  std::string cache_dir;  // empty disables caching
};

/// Every valid cell: {raw, lpc_residual} x {stft, adft_unrefined,
/// adft_refined} plus lpc_filter x stft, both scales, both metrics.
ExperimentGrid default_grid();

/// Throws for an empty selection or an lpc_filter/aDFT combination.
void validate_grid(const ExperimentGrid& grid);

struct CellResult {
  Representation rep;
  Scale scale = Scale::mag;
  Metric metric = Metric::manhattan;
  std::string status;  // "ok" or the error message
  double accuracy = 0.0;
  double chance_level = 0.0;
  double wall_ms = 0.0;

  bool ok() const { return status == "ok"; }
};

struct GridResults {
  std::vector<CellResult> cells;
  int n_calls = 0;
};

/// Runs every cell; a failing cell records its error and the grid
/// continues. Representation spectrograms and distance matrices are reused
/// across cells and cached on disk by content hash when cache_dir is set.
GridResults run_grid(const std::vector<LabelledCall>& corpus,
                     const ExperimentGrid& grid);

/// Stable results table (no timing column; timings live in the JSON).
std::string results_csv(const GridResults& results);

/// Writes results.csv, results.json and a grouped-bar results.svg with the
/// chance level drawn as a dashed line.
void emit_report(const GridResults& results, const std::string& out_dir);

/// `callkit run` configuration: key = value lines, # comments.
struct RunConfig {
  std::string corpus;  // "synth" or a directory of WAVs
  std::string labels;  // labels CSV for a directory corpus
  CorpusOptions synth;
  ExperimentGrid grid;
  std::string out_dir = "callkit_out";
};

RunConfig parse_run_config(const std::string& path);
std::vector<LabelledCall> load_config_corpus(const RunConfig& config);

/// Full pipeline: corpus, grid, report files. Returns the number of
/// failed cells (0 means success).
int run_from_config(const RunConfig& config);

}  // namespace callkit
