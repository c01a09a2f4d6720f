// tools/callkit.cpp
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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"

#include "callkit/adft.hpp"
#include "callkit/distance.hpp"
#include "callkit/errors.hpp"
#include "callkit/experiment.hpp"
#include "callkit/knn.hpp"
#include "callkit/lmnn.hpp"
#include "callkit/lpc.hpp"
#include "callkit/signal.hpp"
#include "callkit/spectrogram.hpp"
#include "callkit/synth.hpp"
#include "callkit/tsne.hpp"

namespace fs = std::filesystem;
using namespace callkit;

namespace {

std::vector<std::string> corpus_labels(const std::vector<LabelledCall>& corpus) {
  std::vector<std::string> labels;
  labels.reserve(corpus.size());
  for (const auto& call : corpus) labels.push_back(call.individual_id);
  return labels;
}

std::vector<std::string> corpus_ids(const std::vector<LabelledCall>& corpus) {
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const auto& call : corpus) ids.push_back(call.call_id);
  return ids;
}

std::string stem_of(const std::string& call_id) {
  return fs::path(call_id).stem().string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"callkit: individual identification from call recordings"};
  app.require_subcommand(1);

  // ---- synth -------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic call corpus");
  CorpusOptions synth_opts;
  std::string synth_out = "synth_corpus";
  synth_cmd->add_option("--individuals", synth_opts.n_individuals, "number of individuals");
  synth_cmd->add_option("--calls", synth_opts.calls_each, "calls per individual");
  synth_cmd->add_option("--seed", synth_opts.master_seed, "master seed");
  synth_cmd->add_option("--noise-floor-db", synth_opts.noise_floor_db, "noise level");
  synth_cmd->add_option("--two-voice-fraction", synth_opts.two_voice_fraction,
                        "fraction of individuals with a second voice");
  synth_cmd->add_flag("!--no-identity-f0", synth_opts.identity_in_f0,
                      "redraw the f0 contour per call");
  synth_cmd->add_flag("!--no-identity-source", synth_opts.identity_in_source,
                      "redraw source amplitudes per call");
  synth_cmd->add_flag("!--no-identity-formants", synth_opts.identity_in_formants,
                      "redraw the channel per call");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();

  // ---- ingest ------------------------------------------------------------
  auto* ingest_cmd = app.add_subcommand("ingest", "load, validate and onset-align a corpus");
  std::string ingest_dir, ingest_labels, ingest_export, ingest_manifest;
  ingest_cmd->add_option("dir", ingest_dir, "directory of WAV files")->required();
  ingest_cmd->add_option("--labels", ingest_labels, "CSV mapping filename to individual")->required();
  ingest_cmd->add_option("--export", ingest_export, "re-export normalized WAVs here");
  ingest_cmd->add_option("--manifest", ingest_manifest, "write a corpus manifest CSV");

  // ---- lpc ---------------------------------------------------------------
  auto* lpc_cmd = app.add_subcommand("lpc", "whole-clip LPC: residual WAVs or filter spectra");
  std::string lpc_dir, lpc_labels, lpc_out = "lpc_out", lpc_emit = "residual";
  int lpc_order = 10;
  lpc_cmd->add_option("dir", lpc_dir, "directory of WAV files")->required();
  lpc_cmd->add_option("--labels", lpc_labels, "labels CSV")->required();
  lpc_cmd->add_option("--order", lpc_order, "LPC order");
  lpc_cmd->add_option("--emit", lpc_emit, "residual | filter")
      ->check(CLI::IsMember({"residual", "filter"}));
  lpc_cmd->add_option("--out", lpc_out, "output directory");

  // ---- adft --------------------------------------------------------------
  auto* adft_cmd = app.add_subcommand("adft", "adaptive DFT spectrograms");
  std::string adft_dir, adft_labels, adft_out = "adft_out";
  bool adft_refine = true;
  PipelineParams adft_params;
  adft_cmd->add_option("dir", adft_dir, "directory of WAV files")->required();
  adft_cmd->add_option("--labels", adft_labels, "labels CSV")->required();
  adft_cmd->add_flag("--refine,!--no-refine", adft_refine, "iterative F0 refinement");
  adft_cmd->add_option("--fmin", adft_params.f_min, "F0 search floor (Hz)");
  adft_cmd->add_option("--fmax", adft_params.f_max, "F0 search ceiling (Hz)");
  adft_cmd->add_option("--out", adft_out, "output directory");

  // ---- distances ---------------------------------------------------------
  auto* dist_cmd = app.add_subcommand("distances", "pairwise spectrogram distances");
  std::string dist_dir, dist_labels, dist_out = "distances.csv";
  std::string dist_metric = "manhattan", dist_scale = "log", dist_rep = "raw_stft";
  double dist_shift = 20.0;
  PipelineParams dist_params;
  dist_cmd->add_option("dir", dist_dir, "directory of WAV files")->required();
  dist_cmd->add_option("--labels", dist_labels, "labels CSV")->required();
  dist_cmd->add_option("--metric", dist_metric, "euclidean | manhattan")
      ->check(CLI::IsMember({"euclidean", "manhattan"}));
  dist_cmd->add_option("--scale", dist_scale, "mag | log")
      ->check(CLI::IsMember({"mag", "log"}));
  dist_cmd->add_option("--rep", dist_rep, "signal representation, e.g. lpc_residual_stft");
  dist_cmd->add_option("--max-shift-ms", dist_shift, "alignment search window");
  dist_cmd->add_option("--threads", dist_params.n_threads, "worker threads (0 = auto)");
  dist_cmd->add_option("--out", dist_out, "output CSV (a .bin sidecar is written too)");

  // ---- classify ----------------------------------------------------------
  auto* classify_cmd = app.add_subcommand("classify", "leave-one-out kNN over a distance matrix");
  std::string classify_dm, classify_labels, classify_json;
  int classify_k = 3;
  classify_cmd->add_option("distance-file", classify_dm, "distance CSV")->required();
  classify_cmd->add_option("labels-csv", classify_labels, "CSV mapping call id to individual")->required();
  classify_cmd->add_option("--k", classify_k, "neighbour count");
  classify_cmd->add_option("--json", classify_json, "also write the report as JSON");

  // ---- lmnn --------------------------------------------------------------
  auto* lmnn_cmd = app.add_subcommand("lmnn", "metric learning and importance maps");
  std::string lmnn_dir, lmnn_labels, lmnn_out = "lmnn_out";
  std::string lmnn_rep = "raw_stft", lmnn_scale = "log", lmnn_pool = "48x64";
  LmnnOptions lmnn_opts;
  PipelineParams lmnn_params;
  lmnn_cmd->add_option("dir", lmnn_dir, "directory of WAV files")->required();
  lmnn_cmd->add_option("--labels", lmnn_labels, "labels CSV")->required();
  lmnn_cmd->add_option("--k", lmnn_opts.k, "target neighbours");
  lmnn_cmd->add_option("--mu", lmnn_opts.mu, "push/pull balance");
  lmnn_cmd->add_option("--iters", lmnn_opts.max_iters, "max gradient iterations");
  lmnn_cmd->add_option("--pool", lmnn_pool, "TxF feature pooling, e.g. 48x64");
  lmnn_cmd->add_option("--rep", lmnn_rep, "signal representation");
  lmnn_cmd->add_option("--scale", lmnn_scale, "mag | log")
      ->check(CLI::IsMember({"mag", "log"}));
  lmnn_cmd->add_option("--out", lmnn_out, "output directory");

  // ---- tsne --------------------------------------------------------------
  auto* tsne_cmd = app.add_subcommand("tsne", "2-D embedding of a distance matrix");
  std::string tsne_dm, tsne_labels, tsne_out = "tsne.csv";
  TsneOptions tsne_opts;
  tsne_cmd->add_option("distance-file", tsne_dm, "distance CSV")->required();
  tsne_cmd->add_option("--labels", tsne_labels, "optional labels CSV for the output");
  tsne_cmd->add_option("--perplexity", tsne_opts.perplexity, "perplexity");
  tsne_cmd->add_option("--iters", tsne_opts.iters, "gradient iterations");
  tsne_cmd->add_option("--seed", tsne_opts.seed, "initialization seed");
  tsne_cmd->add_option("--out", tsne_out, "output CSV");

  // ---- run ---------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "full experiment grid from a config file");
  std::string run_config;
  run_cmd->add_option("--config", run_config, "key = value config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      const SynthCorpus corpus = generate_corpus(synth_opts);
      write_corpus(synth_out, corpus);
      std::cout << "wrote " << corpus.calls.size() << " calls for "
                << corpus.profiles.size() << " individuals to " << synth_out
                << '\n';
    } else if (*ingest_cmd) {
      const auto corpus = load_corpus(ingest_dir, ingest_labels);
      double total_s = 0.0;
      for (const auto& call : corpus) total_s += call.signal.duration_s();
      std::cout << "loaded " << corpus.size() << " calls, "
                << total_s << " s of audio\n";
      if (!ingest_export.empty()) {
        fs::create_directories(ingest_export);
        for (const auto& call : corpus)
          save_wav((fs::path(ingest_export) / call.call_id).string(),
                   call.signal, 16);
        std::cout << "exported normalized WAVs to " << ingest_export << '\n';
      }
      if (!ingest_manifest.empty()) {
        std::ofstream manifest(ingest_manifest, std::ios::trunc);
        manifest << "call_id,individual_id,sample_rate,samples,onset_index\n";
        for (const auto& call : corpus)
          manifest << call.call_id << ',' << call.individual_id << ','
                   << call.signal.sample_rate << ',' << call.signal.size()
                   << ',' << call.signal.onset_index << '\n';
        std::cout << "wrote manifest " << ingest_manifest << '\n';
      }
    } else if (*lpc_cmd) {
      const auto corpus = load_corpus(lpc_dir, lpc_labels);
      fs::create_directories(lpc_out);
      for (const auto& call : corpus) {
        const Signal aligned = trim_to_onset(call.signal);
        const LpcModel model = fit_lpc(aligned, lpc_order);
        const std::string stem = stem_of(call.call_id);
        if (lpc_emit == "residual") {
          Signal res = residual(aligned, model);
          const double peak = res.samples.abs().maxCoeff();
          if (peak > 1.0) res.samples /= peak;
          save_wav((fs::path(lpc_out) / (stem + "_residual.wav")).string(), res, 16);
        } else {
          const Eigen::VectorXd spectrum = lpc_spectrum(model, 513);
          std::ofstream csv(fs::path(lpc_out) / (stem + "_filter.csv"),
                            std::ios::trunc);
          csv.precision(9);
          for (Eigen::Index i = 0; i < spectrum.size(); ++i)
            csv << spectrum[i] << '\n';
        }
      }
      std::cout << "wrote " << corpus.size() << " " << lpc_emit
                << " files to " << lpc_out << '\n';
    } else if (*adft_cmd) {
      const auto corpus = load_corpus(adft_dir, adft_labels);
      fs::create_directories(adft_out);
      for (const auto& call : corpus) {
        const Signal aligned = trim_to_onset(call.signal);
        F0Track track =
            estimate_f0_track(aligned, adft_params.f_min, adft_params.f_max);
        track = halve_f0(track);
        if (adft_refine)
          track = refine_f0(aligned, track, adft_params.refine_iters,
                            adft_params.refine_tol_hz);
        const HarmonicSpectrogram hspec =
            adft_spectrogram(aligned, track, adft_params.window_periods);
        const Spectrogram tmpl = stft_magnitude(aligned, adft_params.frame_size,
                                                adft_params.overlap);
        const Spectrogram gridded = regrid(hspec, tmpl);
        const std::string stem = stem_of(call.call_id);
        write_harmonics_csv((fs::path(adft_out) / (stem + "_harmonics.csv")).string(), hspec);
        write_spectrogram_binary((fs::path(adft_out) / (stem + "_adft.spec")).string(), gridded);
      }
      std::cout << "wrote aDFT output for " << corpus.size() << " calls to "
                << adft_out << '\n';
    } else if (*dist_cmd) {
      const auto corpus = load_corpus(dist_dir, dist_labels);
      const auto rep = parse_representation(dist_rep);
      if (!rep) raise(ErrorCode::invalid_argument, "unknown representation '" + dist_rep + "'");
      auto specs = compute_representation(corpus, *rep, dist_params);
      specs = apply_scale(specs, dist_scale == "log" ? Scale::log : Scale::mag,
                          dist_params.floor_db);
      const Metric metric =
          dist_metric == "euclidean" ? Metric::euclidean : Metric::manhattan;
      DistanceMatrix dm = pairwise_matrix(specs, corpus_ids(corpus), metric,
                                          dist_shift, dist_params.n_threads);
      dm.representation_tag = dist_rep;
      write_distance_csv(dist_out, dm);
      write_distance_binary(fs::path(dist_out).replace_extension(".bin").string(), dm);
      std::cout << "wrote " << dm.size() << "x" << dm.size()
                << " distance matrix to " << dist_out << '\n';
    } else if (*classify_cmd) {
      const DistanceMatrix dm = read_distance_csv(classify_dm);
      const auto rows = read_labels_csv(classify_labels);
      std::map<std::string, std::string> label_of;
      for (const auto& [file, label] : rows) {
        label_of[file] = label;
        label_of[fs::path(file).stem().string()] = label;
      }
      std::vector<std::string> labels;
      for (const auto& id : dm.call_ids) {
        const auto it = label_of.find(id);
        if (it == label_of.end())
          raise(ErrorCode::invalid_argument, "no label for call '" + id + "'");
        labels.push_back(it->second);
      }
      const ClassificationReport report = loo_accuracy(dm, labels, classify_k);
      std::cout << report_table(report);
      if (!classify_json.empty()) write_report_json(classify_json, report);
    } else if (*lmnn_cmd) {
      const auto corpus = load_corpus(lmnn_dir, lmnn_labels);
      const auto rep = parse_representation(lmnn_rep);
      if (!rep) raise(ErrorCode::invalid_argument, "unknown representation '" + lmnn_rep + "'");
      auto specs = compute_representation(corpus, *rep, lmnn_params);
      specs = apply_scale(specs, lmnn_scale == "log" ? Scale::log : Scale::mag,
                          lmnn_params.floor_db);
      Eigen::Index pool_t = 48, pool_f = 64;
      if (std::sscanf(lmnn_pool.c_str(), "%ldx%ld", &pool_t, &pool_f) != 2)
        raise(ErrorCode::invalid_argument, "--pool expects TxF, e.g. 48x64");
      const FeatureMatrix features =
          build_feature_matrix(specs, corpus_labels(corpus), pool_t, pool_f);
      const LinearMetric metric = lmnn_fit(features, lmnn_opts);

      fs::create_directories(lmnn_out);
      Spectrogram projection;
      projection.values = metric.projection.cast<float>();
      write_spectrogram_binary((fs::path(lmnn_out) / "projection.bin").string(),
                               projection);
      const Eigen::MatrixXd map = importance_map(metric);
      const Eigen::MatrixXd ranked = rank_transform(map);
      auto write_matrix_csv = [](const std::string& path, const Eigen::MatrixXd& m) {
        std::ofstream out(path, std::ios::trunc);
        out.precision(9);
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
          for (Eigen::Index c = 0; c < m.cols(); ++c)
            out << (c ? "," : "") << m(r, c);
          out << '\n';
        }
      };
      write_matrix_csv((fs::path(lmnn_out) / "importance.csv").string(), map);
      write_matrix_csv((fs::path(lmnn_out) / "importance_ranked.csv").string(), ranked);
      std::cout << "final LMNN loss "
                << (metric.loss_history.empty() ? 0.0 : metric.loss_history.back())
                << " after " << metric.loss_history.size() - 1
                << " accepted steps; wrote maps to " << lmnn_out << '\n';
    } else if (*tsne_cmd) {
      const DistanceMatrix dm = read_distance_csv(tsne_dm);
      const Embedding embedding = tsne(dm, tsne_opts);
      std::vector<std::string> labels;
      if (!tsne_labels.empty()) {
        std::map<std::string, std::string> label_of;
        for (const auto& [file, label] : read_labels_csv(tsne_labels)) {
          label_of[file] = label;
          label_of[fs::path(file).stem().string()] = label;
        }
        for (const auto& id : dm.call_ids) labels.push_back(label_of.count(id) ? label_of[id] : "");
      }
      write_embedding_csv(tsne_out, embedding, labels);
      std::cout << "wrote embedding (" << embedding.coords.rows()
                << " points, final KL " << embedding.kl_history.back()
                << ") to " << tsne_out << '\n';
    } else if (*run_cmd) {
      const RunConfig config = parse_run_config(run_config);
      const int failures = run_from_config(config);
      std::cout << "grid finished, " << failures << " failed cell(s); report in "
                << config.out_dir << '\n';
      return failures == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "callkit: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
