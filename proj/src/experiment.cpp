// callkit/experiment.cpp
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

#include "callkit/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "callkit/adft.hpp"
#include "callkit/errors.hpp"
#include "callkit/knn.hpp"
#include "callkit/lpc.hpp"
#include "callkit/parallel.hpp"
#include "callkit/rng.hpp"

namespace callkit {

namespace {

namespace fs = std::filesystem;

std::uint64_t hash_corpus(const std::vector<LabelledCall>& corpus) {
  std::uint64_t h = fnv1a("corpus-v1");
  for (const auto& call : corpus) {
    h = fnv1a(call.call_id, h);
    h = fnv1a(call.individual_id, h);
    h = fnv1a(&call.signal.sample_rate, sizeof(int), h);
    h = fnv1a(&call.signal.onset_index, sizeof(Eigen::Index), h);
    h = fnv1a(call.signal.samples.data(),
              sizeof(double) * static_cast<std::size_t>(call.signal.samples.size()), h);
  }
  return h;
}

std::uint64_t hash_params(const PipelineParams& params, std::uint64_t h) {
  h = fnv1a(&params.frame_size, sizeof(params.frame_size), h);
  h = fnv1a(&params.overlap, sizeof(params.overlap), h);
  h = fnv1a(&params.lpc_order, sizeof(params.lpc_order), h);
  h = fnv1a(&params.f_min, sizeof(params.f_min), h);
  h = fnv1a(&params.f_max, sizeof(params.f_max), h);
  h = fnv1a(&params.window_periods, sizeof(params.window_periods), h);
  h = fnv1a(&params.refine_iters, sizeof(params.refine_iters), h);
  h = fnv1a(&params.refine_tol_hz, sizeof(params.refine_tol_hz), h);
  return h;
}

std::string hex16(std::uint64_t h) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(h));
  return buffer;
}

// Spectrogram stack cache: u32 count, then per spectrogram six u32 fields
// (n_frames, n_bins, hop, frame_size, sample_rate, time_origin) and the
// row-major float payload. Floats round-trip exactly, so warm runs
// reproduce cold runs byte for byte.
void write_stack(const std::string& path, const std::vector<Spectrogram>& specs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::io_error, "cannot write cache '" + path + "'");
  const std::uint32_t count = static_cast<std::uint32_t>(specs.size());
  out.write(reinterpret_cast<const char*>(&count), 4);
  for (const auto& spec : specs) {
    const std::uint32_t header[6] = {
        static_cast<std::uint32_t>(spec.n_frames()),
        static_cast<std::uint32_t>(spec.n_bins()),
        static_cast<std::uint32_t>(spec.frame_hop),
        static_cast<std::uint32_t>(spec.frame_size),
        static_cast<std::uint32_t>(spec.sample_rate),
        static_cast<std::uint32_t>(spec.time_origin)};
    out.write(reinterpret_cast<const char*>(header), 24);
    out.write(reinterpret_cast<const char*>(spec.values.data()),
              static_cast<std::streamsize>(sizeof(float) * spec.values.size()));
  }
  if (!out) raise(ErrorCode::io_error, "write failure on '" + path + "'");
}

std::optional<std::vector<Spectrogram>> read_stack(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::uint32_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 4);
  if (!in) return std::nullopt;
  std::vector<Spectrogram> specs(count);
  for (auto& spec : specs) {
    std::uint32_t header[6];
    in.read(reinterpret_cast<char*>(header), 24);
    if (!in) return std::nullopt;
    spec.values.resize(header[0], header[1]);
    spec.frame_hop = header[2];
    spec.frame_size = header[3];
    spec.sample_rate = static_cast<int>(header[4]);
    spec.time_origin = header[5];
    in.read(reinterpret_cast<char*>(spec.values.data()),
            static_cast<std::streamsize>(sizeof(float) * spec.values.size()));
    if (!in) return std::nullopt;
  }
  return specs;
}

// Distance cache holds exact doubles (u32 n, then n*n doubles).
void write_dm_cache(const std::string& path, const DistanceMatrix& dm) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::io_error, "cannot write cache '" + path + "'");
  const std::uint32_t n = static_cast<std::uint32_t>(dm.size());
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(dm.values.data()),
            static_cast<std::streamsize>(sizeof(double) * dm.values.size()));
  if (!out) raise(ErrorCode::io_error, "write failure on '" + path + "'");
}

std::optional<Eigen::MatrixXd> read_dm_cache(const std::string& path,
                                             Eigen::Index expected_n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), 4);
  if (!in || static_cast<Eigen::Index>(n) != expected_n) return std::nullopt;
  Eigen::MatrixXd values(n, n);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(sizeof(double) * values.size()));
  if (!in) return std::nullopt;
  return values;
}

Spectrogram adft_pipeline(const Signal& signal, bool refined,
                          const PipelineParams& params) {
  const Spectrogram tmpl =
      stft_magnitude(signal, params.frame_size, params.overlap);
  F0Track track = estimate_f0_track(signal, params.f_min, params.f_max);
  track = halve_f0(track);
  if (refined)
    track = refine_f0(signal, track, params.refine_iters, params.refine_tol_hz);
  const HarmonicSpectrogram hspec =
      adft_spectrogram(signal, track, params.window_periods);
  return regrid(hspec, tmpl);
}

}  // namespace

std::string representation_name(const Representation& rep) {
  std::string name;
  switch (rep.source) {
    case SourceKind::raw: name = "raw"; break;
    case SourceKind::lpc_residual: name = "lpc_residual"; break;
    case SourceKind::lpc_filter: name = "lpc_filter"; break;
  }
  switch (rep.transform) {
    case TransformKind::stft: name += "_stft"; break;
    case TransformKind::adft_unrefined: name += "_adft_unrefined"; break;
    case TransformKind::adft_refined: name += "_adft_refined"; break;
  }
  return name;
}

std::optional<Representation> parse_representation(const std::string& name) {
  for (SourceKind source : {SourceKind::raw, SourceKind::lpc_residual,
                            SourceKind::lpc_filter})
    for (TransformKind transform :
         {TransformKind::stft, TransformKind::adft_unrefined,
          TransformKind::adft_refined}) {
      const Representation rep{source, transform};
      if (representation_name(rep) == name) return rep;
    }
  return std::nullopt;
}

const char* scale_name(Scale scale) {
  return scale == Scale::mag ? "mag" : "log";
}

std::vector<Spectrogram> compute_representation(
    const std::vector<LabelledCall>& corpus, const Representation& rep,
    const PipelineParams& params) {
  if (rep.source == SourceKind::lpc_filter &&
      rep.transform != TransformKind::stft)
    raise(ErrorCode::invalid_argument,
          "lpc_filter is a per-call spectrum; only the stft grid applies");

  std::vector<Spectrogram> specs(corpus.size());
  parallel_for(
      static_cast<std::int64_t>(corpus.size()),
      [&](std::int64_t i) {
        const auto& call = corpus[static_cast<std::size_t>(i)];
        const Signal aligned = trim_to_onset(call.signal);
        Signal source = aligned;
        if (rep.source != SourceKind::raw) {
          const LpcModel model = fit_lpc(aligned, params.lpc_order);
          if (rep.source == SourceKind::lpc_residual) {
            source = residual(aligned, model);
          } else {
            const Spectrogram tmpl =
                stft_magnitude(aligned, params.frame_size, params.overlap);
            const Eigen::VectorXd spectrum =
                lpc_spectrum(model, params.frame_size / 2 + 1);
            specs[static_cast<std::size_t>(i)] = tiled_spectrogram(
                spectrum, tmpl.n_frames(), tmpl.frame_hop, tmpl.frame_size,
                tmpl.sample_rate);
            return;
          }
        }
        switch (rep.transform) {
          case TransformKind::stft:
            specs[static_cast<std::size_t>(i)] =
                stft_magnitude(source, params.frame_size, params.overlap);
            break;
          case TransformKind::adft_unrefined:
            specs[static_cast<std::size_t>(i)] = adft_pipeline(source, false, params);
            break;
          case TransformKind::adft_refined:
            specs[static_cast<std::size_t>(i)] = adft_pipeline(source, true, params);
            break;
        }
      },
      params.n_threads);
  return specs;
}

std::vector<Spectrogram> apply_scale(const std::vector<Spectrogram>& specs,
                                     Scale scale, double floor_db) {
  if (scale == Scale::mag) return specs;
  float corpus_max = 0.0f;
  for (const auto& spec : specs)
    corpus_max = std::max(corpus_max, spec.values.maxCoeff());
  std::vector<Spectrogram> out;
  out.reserve(specs.size());
  for (const auto& spec : specs)
    out.push_back(log_magnitude(spec, floor_db, corpus_max));
  return out;
}

ExperimentGrid default_grid() {
  ExperimentGrid grid;
  for (SourceKind source : {SourceKind::raw, SourceKind::lpc_residual})
    for (TransformKind transform :
         {TransformKind::stft, TransformKind::adft_unrefined,
          TransformKind::adft_refined})
      grid.representations.push_back({source, transform});
  grid.representations.push_back({SourceKind::lpc_filter, TransformKind::stft});
  grid.scales = {Scale::mag, Scale::log};
  grid.metrics = {Metric::euclidean, Metric::manhattan};
  return grid;
}

void validate_grid(const ExperimentGrid& grid) {
  if (grid.representations.empty() || grid.scales.empty() ||
      grid.metrics.empty())
    raise(ErrorCode::invalid_argument, "empty grid selection");
  for (const auto& rep : grid.representations)
    if (rep.source == SourceKind::lpc_filter &&
        rep.transform != TransformKind::stft)
      raise(ErrorCode::invalid_argument,
            "lpc_filter combines only with stft");
  if (grid.k < 1) raise(ErrorCode::invalid_argument, "k must be >= 1");
}

GridResults run_grid(const std::vector<LabelledCall>& corpus,
                     const ExperimentGrid& grid) {
  validate_grid(grid);
  if (corpus.size() < 2)
    raise(ErrorCode::invalid_argument, "need at least two calls");

  const bool use_cache = !grid.cache_dir.empty();
  if (use_cache) fs::create_directories(grid.cache_dir);
  const std::uint64_t corpus_hash = hash_corpus(corpus);

  std::vector<std::string> ids;
  std::vector<std::string> labels;
  for (const auto& call : corpus) {
    ids.push_back(call.call_id);
    labels.push_back(call.individual_id);
  }

  GridResults results;
  results.n_calls = static_cast<int>(corpus.size());

  for (const auto& rep : grid.representations) {
    const std::string rep_name = representation_name(rep);
    std::vector<Spectrogram> mag_stack;
    std::string rep_error;

    const std::uint64_t rep_hash =
        hash_params(grid.params, fnv1a(rep_name, corpus_hash));
    const std::string stack_path =
        use_cache ? (fs::path(grid.cache_dir) /
                     ("stack_" + rep_name + "_" + hex16(rep_hash) + ".bin"))
                        .string()
                  : std::string();
    try {
      bool loaded = false;
      if (use_cache) {
        if (auto cached = read_stack(stack_path)) {
          mag_stack = std::move(*cached);
          loaded = true;
        }
      }
      if (!loaded) {
        mag_stack = compute_representation(corpus, rep, grid.params);
        if (use_cache) write_stack(stack_path, mag_stack);
      }
    } catch (const std::exception& e) {
      rep_error = e.what();
    }

    for (const Scale scale : grid.scales) {
      std::vector<Spectrogram> scaled;
      std::string scale_error = rep_error;
      if (scale_error.empty()) {
        try {
          scaled = apply_scale(mag_stack, scale, grid.params.floor_db);
        } catch (const std::exception& e) {
          scale_error = e.what();
        }
      }
      for (const Metric metric : grid.metrics) {
        CellResult cell;
        cell.rep = rep;
        cell.scale = scale;
        cell.metric = metric;
        const auto start = std::chrono::steady_clock::now();
        if (!scale_error.empty()) {
          cell.status = std::string("error: ") + scale_error;
          results.cells.push_back(std::move(cell));
          continue;
        }
        try {
          std::uint64_t cell_hash = rep_hash;
          cell_hash = fnv1a(scale_name(scale), cell_hash);
          cell_hash = fnv1a(metric_name(metric), cell_hash);
          cell_hash = fnv1a(&grid.max_shift_ms, sizeof(double), cell_hash);
          cell_hash = fnv1a(&grid.params.floor_db, sizeof(double), cell_hash);
          const std::string dm_path =
              use_cache
                  ? (fs::path(grid.cache_dir) / ("dm_" + hex16(cell_hash) + ".bin"))
                        .string()
                  : std::string();

          DistanceMatrix dm;
          dm.call_ids = ids;
          dm.metric_tag = std::string(metric_name(metric)) + "_" +
                          scale_name(scale);
          dm.representation_tag = rep_name;
          bool dm_loaded = false;
          if (use_cache) {
            if (auto cached = read_dm_cache(
                    dm_path, static_cast<Eigen::Index>(corpus.size()))) {
              dm.values = std::move(*cached);
              dm_loaded = true;
            }
          }
          if (!dm_loaded) {
            DistanceMatrix computed = pairwise_matrix(
                scaled, ids, metric, grid.max_shift_ms, grid.params.n_threads);
            dm.values = std::move(computed.values);
            if (use_cache) write_dm_cache(dm_path, dm);
          }

          const ClassificationReport report = loo_accuracy(dm, labels, grid.k);
          cell.accuracy = report.accuracy;
          cell.chance_level = report.chance_level;
          cell.status = "ok";
        } catch (const std::exception& e) {
          cell.status = std::string("error: ") + e.what();
        }
        cell.wall_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
        results.cells.push_back(std::move(cell));
      }
    }
  }
  return results;
}

std::string results_csv(const GridResults& results) {
  std::ostringstream out;
  out << "representation,scale,metric,status,accuracy,chance_level\n";
  out.setf(std::ios::fixed);
  out.precision(6);
  for (const auto& cell : results.cells) {
    std::string status = cell.status;
    std::replace(status.begin(), status.end(), ',', ';');
    out << representation_name(cell.rep) << ',' << scale_name(cell.scale)
        << ',' << metric_name(cell.metric) << ',' << status << ',';
    if (cell.ok())
      out << cell.accuracy << ',' << cell.chance_level;
    else
      out << ',';
    out << '\n';
  }
  return out.str();
}

namespace {

void write_results_svg(const std::string& path, const GridResults& results) {
  // Grouped bars: one cluster per representation, one bar per scale/metric
  // combination, chance level as a dashed line.
  std::vector<std::string> rep_order;
  std::map<std::string, std::vector<const CellResult*>> by_rep;
  for (const auto& cell : results.cells) {
    const std::string name = representation_name(cell.rep);
    if (!by_rep.count(name)) rep_order.push_back(name);
    by_rep[name].push_back(&cell);
  }

  double chance = 0.0;
  for (const auto& cell : results.cells)
    if (cell.ok()) chance = std::max(chance, cell.chance_level);

  const int width = 980, height = 460;
  const int left = 70, right = 20, top = 30, bottom = 110;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  const std::size_t n_groups = rep_order.size();
  std::size_t bars_per_group = 0;
  for (const auto& name : rep_order)
    bars_per_group = std::max(bars_per_group, by_rep[name].size());
  const double group_w = plot_w / static_cast<double>(n_groups);
  const double bar_w = 0.8 * group_w / static_cast<double>(bars_per_group);

  const char* palette[4] = {"#4878a8", "#90b8d8", "#b85450", "#e0a8a0"};

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "'>\n";
  svg << "<rect width='100%' height='100%' fill='white'/>\n";
  // y axis with 0..100% gridlines every 20 points
  for (int pct = 0; pct <= 100; pct += 20) {
    const double y = top + plot_h * (1.0 - pct / 100.0);
    svg << "<line x1='" << left << "' y1='" << y << "' x2='" << (width - right)
        << "' y2='" << y << "' stroke='#dddddd'/>\n";
    svg << "<text x='" << (left - 8) << "' y='" << (y + 4)
        << "' text-anchor='end' font-size='12'>" << pct << "%</text>\n";
  }
  std::size_t group = 0;
  for (const auto& name : rep_order) {
    const auto& cells = by_rep[name];
    const double gx = left + group_w * static_cast<double>(group);
    for (std::size_t b = 0; b < cells.size(); ++b) {
      const auto& cell = *cells[b];
      const double value = cell.ok() ? cell.accuracy : 0.0;
      const double bx = gx + 0.1 * group_w + bar_w * static_cast<double>(b);
      const double bh = plot_h * value;
      svg << "<rect x='" << bx << "' y='" << (top + plot_h - bh) << "' width='"
          << (bar_w * 0.92) << "' height='" << bh << "' fill='"
          << palette[b % 4] << "'/>\n";
      if (!cell.ok())
        svg << "<text x='" << (bx + bar_w / 2) << "' y='" << (top + plot_h - 6)
            << "' text-anchor='middle' font-size='10' fill='#b00'>x</text>\n";
    }
    svg << "<text x='" << (gx + group_w / 2) << "' y='" << (height - bottom + 16)
        << "' text-anchor='middle' font-size='11' transform='rotate(25 "
        << (gx + group_w / 2) << ' ' << (height - bottom + 16) << ")'>" << name
        << "</text>\n";
    ++group;
  }
  const double chance_y = top + plot_h * (1.0 - chance);
  svg << "<line x1='" << left << "' y1='" << chance_y << "' x2='"
      << (width - right) << "' y2='" << chance_y
      << "' stroke='#b02020' stroke-dasharray='6,4'/>\n";
  svg << "<text x='" << (width - right - 4) << "' y='" << (chance_y - 5)
      << "' text-anchor='end' font-size='11' fill='#b02020'>chance</text>\n";
  // legend: scale/metric combos in the order of the first group
  if (!rep_order.empty()) {
    double lx = static_cast<double>(left);
    const double ly = height - 40;
    const auto& cells = by_rep[rep_order.front()];
    for (std::size_t b = 0; b < cells.size(); ++b) {
      const std::string label = std::string(scale_name(cells[b]->scale)) + "/" +
                                metric_name(cells[b]->metric);
      svg << "<rect x='" << lx << "' y='" << (ly - 10)
          << "' width='12' height='12' fill='" << palette[b % 4] << "'/>\n";
      svg << "<text x='" << (lx + 16) << "' y='" << ly
          << "' font-size='12'>" << label << "</text>\n";
      lx += 150;
    }
  }
  svg << "</svg>\n";

  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(ErrorCode::io_error, "cannot open '" + path + "' for writing");
  out << svg.str();
  if (!out) raise(ErrorCode::io_error, "write failure on '" + path + "'");
}

}  // namespace

void emit_report(const GridResults& results, const std::string& out_dir) {
  if (results.cells.empty())
    raise(ErrorCode::invalid_argument, "no grid results to report");
  fs::create_directories(out_dir);
  const auto base = fs::path(out_dir);

  {
    std::ofstream csv(base / "results.csv", std::ios::trunc);
    if (!csv) raise(ErrorCode::io_error, "cannot write results.csv");
    csv << results_csv(results);
  }

  nlohmann::json j;
  j["n_calls"] = results.n_calls;
  for (const auto& cell : results.cells) {
    nlohmann::json c;
    c["representation"] = representation_name(cell.rep);
    c["scale"] = scale_name(cell.scale);
    c["metric"] = metric_name(cell.metric);
    c["status"] = cell.status;
    c["accuracy"] = cell.accuracy;
    c["chance_level"] = cell.chance_level;
    c["wall_ms"] = cell.wall_ms;
    j["cells"].push_back(c);
  }
  {
    std::ofstream json_out(base / "results.json", std::ios::trunc);
    if (!json_out) raise(ErrorCode::io_error, "cannot write results.json");
    json_out << j.dump(2) << '\n';
  }
  write_results_svg((base / "results.svg").string(), results);
}

namespace {

bool parse_bool(const std::string& value) {
  return value == "1" || value == "true" || value == "yes" || value == "on";
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::istringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

}  // namespace

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::io_error, "cannot open config '" + path + "'");

  RunConfig config;
  config.corpus = "synth";
  config.grid = default_grid();

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        raise(ErrorCode::bad_format,
              "config line " + std::to_string(line_no) + " is not key = value");
      continue;
    }
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      raise(ErrorCode::bad_format,
            "config line " + std::to_string(line_no) + " missing key or value");

    if (key == "corpus") config.corpus = value;
    else if (key == "labels") config.labels = value;
    else if (key == "out") config.out_dir = value;
    else if (key == "cache") config.grid.cache_dir = value == "none" ? "" : value;
    else if (key == "individuals") config.synth.n_individuals = std::stoi(value);
    else if (key == "calls") config.synth.calls_each = std::stoi(value);
    else if (key == "seed") config.synth.master_seed = std::stoull(value);
    else if (key == "identity_f0") config.synth.identity_in_f0 = parse_bool(value);
    else if (key == "identity_source") config.synth.identity_in_source = parse_bool(value);
    else if (key == "identity_formants") config.synth.identity_in_formants = parse_bool(value);
    else if (key == "identity_scale") config.synth.identity_scale = std::stod(value);
    else if (key == "two_voice_fraction") config.synth.two_voice_fraction = std::stod(value);
    else if (key == "noise_floor_db") config.synth.noise_floor_db = std::stod(value);
    else if (key == "k") config.grid.k = std::stoi(value);
    else if (key == "max_shift_ms") config.grid.max_shift_ms = std::stod(value);
    else if (key == "frame_size") config.grid.params.frame_size = std::stol(value);
    else if (key == "overlap") config.grid.params.overlap = std::stod(value);
    else if (key == "lpc_order") config.grid.params.lpc_order = std::stoi(value);
    else if (key == "f_min") config.grid.params.f_min = std::stod(value);
    else if (key == "f_max") config.grid.params.f_max = std::stod(value);
    else if (key == "window_periods") config.grid.params.window_periods = std::stod(value);
    else if (key == "refine_iters") config.grid.params.refine_iters = std::stoi(value);
    else if (key == "refine_tol_hz") config.grid.params.refine_tol_hz = std::stod(value);
    else if (key == "floor_db") config.grid.params.floor_db = std::stod(value);
    else if (key == "threads") config.grid.params.n_threads = std::stoi(value);
    else if (key == "representations") {
      if (value != "all") {
        config.grid.representations.clear();
        for (const auto& name : split_list(value)) {
          const auto rep = parse_representation(name);
          if (!rep)
            raise(ErrorCode::bad_format, "unknown representation '" + name + "'");
          config.grid.representations.push_back(*rep);
        }
      }
    } else if (key == "scales") {
      if (value != "all") {
        config.grid.scales.clear();
        for (const auto& name : split_list(value)) {
          if (name == "mag") config.grid.scales.push_back(Scale::mag);
          else if (name == "log") config.grid.scales.push_back(Scale::log);
          else raise(ErrorCode::bad_format, "unknown scale '" + name + "'");
        }
      }
    } else if (key == "metrics") {
      if (value != "all") {
        config.grid.metrics.clear();
        for (const auto& name : split_list(value)) {
          if (name == "euclidean") config.grid.metrics.push_back(Metric::euclidean);
          else if (name == "manhattan") config.grid.metrics.push_back(Metric::manhattan);
          else raise(ErrorCode::bad_format, "unknown metric '" + name + "'");
        }
      }
    } else {
      raise(ErrorCode::bad_format, "unknown config key '" + key + "'");
    }
  }
  return config;
}

std::vector<LabelledCall> load_config_corpus(const RunConfig& config) {
  if (config.corpus == "synth") {
    SynthCorpus synth = generate_corpus(config.synth);
    for (auto& call : synth.calls)
      call.signal.onset_index = detect_onset(call.signal);
    return std::move(synth.calls);
  }
  if (config.labels.empty())
    raise(ErrorCode::invalid_argument,
          "a directory corpus needs labels = <csv>");
  return load_corpus(config.corpus, config.labels);
}

int run_from_config(const RunConfig& config) {
  ExperimentGrid grid = config.grid;
  if (grid.cache_dir.empty())
    grid.cache_dir = (fs::path(config.out_dir) / "cache").string();
  const std::vector<LabelledCall> corpus = load_config_corpus(config);
  const GridResults results = run_grid(corpus, grid);
  emit_report(results, config.out_dir);
  int failures = 0;
  for (const auto& cell : results.cells)
    if (!cell.ok()) ++failures;
  return failures;
}

}  // namespace callkit
