#include "scwt/pipeline.hpp"

#include <chrono>
#include <cstdio>

#include "scwt/error.hpp"
#include "scwt/eval.hpp"
#include "scwt/inverse.hpp"
#include "scwt/scout.hpp"
#include "scwt/signal.hpp"
#include "scwt/tensor_io.hpp"
#include "scwt/tfr.hpp"

namespace scwt {
namespace fs = std::filesystem;

namespace {

struct SubjectEntry {
  std::string subject;
  ClassLabel label = ClassLabel::HC;
  std::uint64_t seed = 0;
};

struct EpochEntry {
  std::string subject;
  int label = 0;
  int index_in_subject = 0;
};

void log(const PipelineContext& ctx, const std::string& msg) {
  if (ctx.verbose) std::fprintf(stderr, "[scwt] %s\n", msg.c_str());
}

nlohmann::json read_json(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("cannot parse " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text_file(path, j.dump(2) + "\n"); }

nlohmann::json subjects_to_json(const std::vector<SubjectEntry>& subjects) {
  auto arr = nlohmann::json::array();
  for (const auto& s : subjects) {
    arr.push_back({{"subject", s.subject}, {"label", std::string(class_name(s.label))}, {"seed", s.seed}});
  }
  return arr;
}

std::vector<SubjectEntry> subjects_from_manifest(const fs::path& manifest_path) {
  const auto m = read_json(manifest_path);
  std::vector<SubjectEntry> out;
  for (const auto& s : m.at("subjects")) {
    const auto label = parse_class_label(s.at("label").get<std::string>());
    if (!label) throw FormatError("bad label in " + manifest_path.string());
    out.push_back({s.at("subject").get<std::string>(), *label, s.at("seed").get<std::uint64_t>()});
  }
  return out;
}

void write_manifest(const PipelineContext& ctx, const fs::path& dir, const std::vector<SubjectEntry>& subjects,
                    double sampling_rate, nlohmann::json extra = nlohmann::json::object()) {
  extra["config_hash"] = config_hash(ctx.config);
  extra["sampling_rate"] = sampling_rate;
  extra["subjects"] = subjects_to_json(subjects);
  write_json(dir / "manifest.json", extra);
}

double manifest_rate(const fs::path& manifest_path) { return read_json(manifest_path).at("sampling_rate").get<double>(); }

fs::path subject_file(const fs::path& dir, const std::string& subject) { return dir / (subject + ".scwt"); }

std::vector<EpochEntry> read_epoch_index(const fs::path& path) {
  const auto doc = read_json(path);
  std::vector<EpochEntry> out;
  for (const auto& e : doc.at("epochs")) {
    const auto label = parse_class_label(e.at("label").get<std::string>());
    if (!label) throw FormatError("bad epoch label in " + path.string());
    out.push_back({e.at("subject").get<std::string>(), class_index(*label), e.at("index_in_subject").get<int>()});
  }
  return out;
}

std::vector<Image> load_images(const fs::path& path) { return images_from_tensor(read_tensor(path)); }

struct Dataset {
  std::vector<EpochEntry> epochs;
  std::vector<Image> left;
  std::vector<Image> right;
  SplitManifest split;
};

Dataset load_dataset(const PipelineContext& ctx, bool need_split) {
  Dataset d;
  d.epochs = read_epoch_index(ctx.out / "cwt" / "epochs.json");
  d.left = load_images(ctx.out / "cwt" / "left.scwt");
  d.right = load_images(ctx.out / "cwt" / "right.scwt");
  if (d.left.size() != d.epochs.size() || d.right.size() != d.epochs.size()) {
    throw FormatError("scalogram batches disagree with the epoch index");
  }
  if (need_split) d.split = SplitManifest::from_json(read_json(ctx.out / "train" / "split.json"));
  return d;
}

std::vector<Sample> make_samples(const std::vector<Image>& images, const std::vector<EpochEntry>& epochs,
                                 const std::vector<std::size_t>& ids) {
  std::vector<Sample> out;
  out.reserve(ids.size());
  for (auto i : ids) out.push_back({&images.at(i), epochs.at(i).label});
  return out;
}

std::vector<PairSample> make_pairs(const Dataset& d, const std::vector<std::size_t>& ids) {
  std::vector<PairSample> out;
  out.reserve(ids.size());
  for (auto i : ids) out.push_back({&d.left.at(i), &d.right.at(i), d.epochs.at(i).label});
  return out;
}

TrainConfig train_config(const PipelineContext& ctx, const ClassWeights& weights) {
  const auto& t = ctx.config.train;
  return {t.learning_rate, t.batch_size, weights, t.patience, t.max_steps, t.seed};
}

ClassWeights class_weights_for(const PipelineContext& ctx, const Dataset& d) {
  if (ctx.config.train.class_weights) return *ctx.config.train.class_weights;
  std::array<long long, kNumClasses> counts{};
  for (auto i : d.split.train) ++counts[static_cast<std::size_t>(d.epochs.at(i).label)];
  return compute_class_weights(counts);
}

nlohmann::json history_to_json(const TrainHistory& h) {
  return {{"train_loss", h.train_loss},     {"val_accuracy", h.val_accuracy},
          {"best_step", h.best_step},       {"best_val_accuracy", h.best_val_accuracy},
          {"steps_run", h.steps_run},       {"stopped_early", h.stopped_early}};
}

std::string stage_dir_name(FusionStrategy s) { return std::string(to_string(s)); }

}  // namespace

const std::vector<std::string_view>& upstream_stages() {
  static const std::vector<std::string_view> stages{"simulate", "preprocess", "localize", "scout",
                                                    "epoch",    "cwt",        "train"};
  return stages;
}

void run_simulate(const PipelineContext& ctx) {
  const auto& cfg = ctx.config;
  const fs::path dir = ctx.out / "simulate";
  log(ctx, "simulate: building head model");
  const SyntheticHead head = build_synthetic_head(cfg.geometry);
  const LeadField lead_field = build_spherical_lead_field(head.geometry, cfg.inverse.series_order);

  write_json(dir / "geometry.json", head.geometry.to_json());
  write_json(dir / "atlas.json", head.atlas.to_json());
  save_lead_field(dir / "leadfield.scwt", lead_field);

  log(ctx, "simulate: generating cohort");
  const auto cohort = generate_cohort(cfg.cohort, lead_field, head.atlas);
  std::vector<SubjectEntry> subjects;
  for (const auto& s : cohort) {
    write_matrix(subject_file(dir / "recordings", s.subject), s.recording.data);
    subjects.push_back({s.subject, s.label, s.seed});
  }
  write_manifest(ctx, dir, subjects, cfg.cohort.sampling_rate,
                 {{"channels", lead_field.channels()}, {"sources", lead_field.sources()}});
}

void run_preprocess(const PipelineContext& ctx) {
  const auto& p = ctx.config.preprocess;
  const fs::path in = ctx.out / "simulate";
  const fs::path dir = ctx.out / "preprocess";
  const auto subjects = subjects_from_manifest(in / "manifest.json");
  const double rate = manifest_rate(in / "manifest.json");
  log(ctx, "preprocess: " + std::to_string(subjects.size()) + " recordings");
  for (const auto& s : subjects) {
    ScalpRecording rec;
    rec.data = read_matrix(subject_file(in / "recordings", s.subject));
    rec.sampling_rate = rate;
    rec.channel_labels = default_channel_labels(rec.data.rows());
    rec = butterworth_bandpass(rec, p.low_hz, p.high_hz, p.order, p.zero_phase);
    rec = average_rereference(rec);
    rec = downsample(rec, p.target_rate);
    write_matrix(subject_file(dir, s.subject), rec.data);
  }
  write_manifest(ctx, dir, subjects, p.target_rate);
}

void run_localize(const PipelineContext& ctx) {
  const auto& inv = ctx.config.inverse;
  const fs::path in = ctx.out / "preprocess";
  const fs::path dir = ctx.out / "localize";
  const LeadField raw = load_lead_field(ctx.out / "simulate" / "leadfield.scwt");
  // Recordings were re-referenced to the channel average, so the lead field is too.
  const LeadField lead_field = average_reference_lead_field(raw);
  const double lambda = inv.lambda ? *inv.lambda : regularization_parameter(lead_field, inv.snr);
  InverseKernel kernel = min_norm_kernel(lead_field, lambda);
  if (inv.standardized) kernel = sloreta_standardize(kernel, lead_field);
  write_matrix(dir / "kernel.scwt", kernel.kernel);
  write_json(dir / "kernel.json", {{"lambda", kernel.lambda}, {"standardized", kernel.standardized}});

  const auto subjects = subjects_from_manifest(in / "manifest.json");
  const double rate = manifest_rate(in / "manifest.json");
  log(ctx, "localize: lambda = " + std::to_string(lambda));
  for (const auto& s : subjects) {
    ScalpRecording rec;
    rec.data = read_matrix(subject_file(in, s.subject));
    rec.sampling_rate = rate;
    rec.channel_labels = default_channel_labels(rec.data.rows());
    const SourceEstimate est = apply_inverse(kernel, rec);
    write_matrix(subject_file(dir / "sources", s.subject), est.currents);
  }
  write_manifest(ctx, dir, subjects, rate);
}

void run_scout(const PipelineContext& ctx) {
  const fs::path in = ctx.out / "localize";
  const fs::path dir = ctx.out / "scout";
  const Atlas atlas = Atlas::from_json(read_json(ctx.out / "simulate" / "atlas.json"));
  const auto subjects = subjects_from_manifest(in / "manifest.json");
  const double rate = manifest_rate(in / "manifest.json");
  for (const auto& s : subjects) {
    const SourceEstimate est{read_matrix(subject_file(in / "sources", s.subject)), rate};
    atlas.validate(est.currents.rows());
    write_matrix(subject_file(dir, s.subject), extract_scout_series(est, atlas).series);
  }
  write_manifest(ctx, dir, subjects, rate);
}

void run_epoch(const PipelineContext& ctx) {
  const fs::path in = ctx.out / "scout";
  const fs::path dir = ctx.out / "epoch";
  const auto subjects = subjects_from_manifest(in / "manifest.json");
  const double rate = manifest_rate(in / "manifest.json");
  std::vector<double> values;
  auto index = nlohmann::json::array();
  std::uint32_t count = 0;
  for (const auto& s : subjects) {
    const ScoutMatrix scouts{read_matrix(subject_file(in, s.subject)), rate};
    for (const auto& e : segment_epochs(scouts, s.subject, s.label)) {
      for (Eigen::Index t = 0; t < e.samples.rows(); ++t) {
        for (Eigen::Index c = 0; c < e.samples.cols(); ++c) values.push_back(e.samples(t, c));
      }
      index.push_back({{"subject", e.subject},
                       {"label", std::string(class_name(e.label))},
                       {"index_in_subject", e.index_in_subject}});
      ++count;
    }
  }
  if (count == 0) throw ValidationError("recordings are too short for a single epoch");
  write_tensor(dir / "epochs.scwt", Tensor::make_f64({count, static_cast<std::uint32_t>(kEpochLength),
                                                      static_cast<std::uint32_t>(kNumRegions)},
                                                     std::move(values)));
  write_json(dir / "epochs.json", {{"config_hash", config_hash(ctx.config)}, {"epochs", index}});
  log(ctx, "epoch: " + std::to_string(count) + " epochs");
}

void run_cwt(const PipelineContext& ctx) {
  const auto& w = ctx.config.wavelet;
  const fs::path in = ctx.out / "epoch";
  const fs::path dir = ctx.out / "cwt";
  const Tensor t = read_tensor(in / "epochs.scwt");
  if (t.rank() != 3 || t.dims[1] != kEpochLength || t.dims[2] != kNumRegions) {
    throw FormatError("epoch tensor must be (E, 128, 6)");
  }
  const auto epochs_json = read_json(in / "epochs.json");
  const auto index = read_epoch_index(in / "epochs.json");
  if (index.size() != t.dims[0]) throw FormatError("epoch index and tensor disagree");

  const WaveletParams params = WaveletParams::standard(w.omega0, kEpochSamplingRate, w.fmin_hz, w.fmax_hz);
  std::vector<Image> left;
  std::vector<Image> right;
  left.reserve(index.size());
  right.reserve(index.size());
  std::size_t k = 0;
  for (std::size_t e = 0; e < index.size(); ++e) {
    Epoch ep;
    ep.samples.resize(kEpochLength, kNumRegions);
    for (Eigen::Index r = 0; r < kEpochLength; ++r) {
      for (Eigen::Index c = 0; c < kNumRegions; ++c) ep.samples(r, c) = t.f64[k++];
    }
    ep.subject = index[e].subject;
    ep.label = class_from_index(index[e].label);
    ep.index_in_subject = index[e].index_in_subject;
    ScalogramPair pair = epoch_to_images(ep, params);
    left.push_back(std::move(pair.left));
    right.push_back(std::move(pair.right));
  }
  const DType dtype = w.f32_images ? DType::F32 : DType::F64;
  write_tensor(dir / "left.scwt", images_to_tensor(left, dtype));
  write_tensor(dir / "right.scwt", images_to_tensor(right, dtype));
  write_json(dir / "epochs.json", epochs_json);
  log(ctx, "cwt: " + std::to_string(index.size()) + " scalogram pairs");
}

void run_train(const PipelineContext& ctx) {
  const fs::path dir = ctx.out / "train";
  Dataset d = load_dataset(ctx, false);
  std::vector<std::size_t> ids(d.epochs.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  if (ctx.config.split.subject_level) {
    std::vector<std::string> subjects;
    for (const auto& e : d.epochs) subjects.push_back(e.subject);
    d.split = split_by_subject(ids, subjects, ctx.config.split.seed);
  } else {
    d.split = split_dataset(ids, ctx.config.split.seed);
  }
  write_json(dir / "split.json", d.split.to_json());

  const ClassWeights weights = class_weights_for(ctx, d);
  const TrainConfig tc = train_config(ctx, weights);
  nlohmann::json history{{"class_weights", weights}};
  for (const auto& [name, images] : {std::pair<std::string, const std::vector<Image>*>{"left", &d.left},
                                     std::pair<std::string, const std::vector<Image>*>{"right", &d.right}}) {
    const auto train = make_samples(*images, d.epochs, d.split.train);
    const auto val = make_samples(*images, d.epochs, d.split.val);
    log(ctx, "train: " + name + " tower on " + std::to_string(train.size()) + " epochs");
    const auto result = train_classifier(ctx.config.network, train, val, tc);
    save_checkpoint(dir / (name + ".ckpt"), result.params, result.history.best_step,
                    result.history.best_val_accuracy);
    history[name] = history_to_json(result.history);
    log(ctx, "train: " + name + " best val acc " + std::to_string(result.history.best_val_accuracy) + " at step " +
                 std::to_string(result.history.best_step));
  }
  write_json(dir / "history.json", history);
}

void run_fuse(const PipelineContext& ctx, FusionStrategy strategy) {
  const fs::path dir = ctx.out / "fuse" / stage_dir_name(strategy);
  const Dataset d = load_dataset(ctx, true);
  std::vector<int> predictions;
  std::vector<ScoreRow> scores;
  std::size_t fallbacks = 0;

  if (is_feature_level(strategy)) {
    const ClassWeights weights = class_weights_for(ctx, d);
    const auto train = make_pairs(d, d.split.train);
    const auto val = make_pairs(d, d.split.val);
    log(ctx, "fuse: training " + stage_dir_name(strategy) + " model end to end");
    const auto result = train_fusion(strategy, ctx.config.network, train, val, train_config(ctx, weights));
    save_fusion_checkpoint(dir / "model.ckpt", result.params, result.history.best_step,
                           result.history.best_val_accuracy);
    write_json(dir / "history.json", history_to_json(result.history));
    for (const auto& s : make_pairs(d, d.split.test)) {
      const Posterior p = predict(result.params, s);
      predictions.push_back(argmax(p.probs));
      scores.push_back(p.probs);
    }
  } else {
    const ModelParams left = load_checkpoint(ctx.out / "train" / "left.ckpt");
    const ModelParams right = load_checkpoint(ctx.out / "train" / "right.ckpt");
    for (auto i : d.split.test) {
      const Probs pl = forward_pass(left, d.left.at(i)).probs;
      const Probs pr = forward_pass(right, d.right.at(i)).probs;
      FusedPrediction f;
      switch (strategy) {
        case FusionStrategy::LeftOnly: f = {argmax(pl), pl, false}; break;
        case FusionStrategy::RightOnly: f = {argmax(pr), pr, false}; break;
        case FusionStrategy::SumProb: f = fuse_sum(pl, pr); break;
        default: f = fuse_product(pl, pr); break;
      }
      if (f.fallback) ++fallbacks;
      predictions.push_back(f.prediction);
      scores.push_back(f.scores);
    }
  }

  std::vector<int> labels;
  for (auto i : d.split.test) labels.push_back(d.epochs.at(i).label);
  write_json(dir / "predictions.json", {{"strategy", stage_dir_name(strategy)},
                                        {"ids", d.split.test},
                                        {"labels", labels},
                                        {"predictions", predictions},
                                        {"scores", scores},
                                        {"fallbacks", fallbacks}});
}

nlohmann::json run_evaluate(const PipelineContext& ctx, FusionStrategy strategy) {
  const auto name = stage_dir_name(strategy);
  const auto pred = read_json(ctx.out / "fuse" / name / "predictions.json");
  const auto predictions = pred.at("predictions").get<std::vector<int>>();
  const auto labels = pred.at("labels").get<std::vector<int>>();
  const auto scores = pred.at("scores").get<std::vector<ScoreRow>>();
  const MetricsReport report = evaluate_predictions(predictions, scores, labels);
  nlohmann::json j = report.to_json();
  j["strategy"] = name;
  write_json(ctx.out / "evaluate" / name / "metrics.json", j);
  log(ctx, "evaluate: " + name + " accuracy " + std::to_string(report.summary.accuracy));
  return j;
}

nlohmann::json run_report(const PipelineContext& ctx) {
  const fs::path dir = ctx.out / "report";
  nlohmann::json summary = nlohmann::json::object();
  for (auto s : {FusionStrategy::LeftOnly, FusionStrategy::RightOnly, FusionStrategy::SumProb,
                 FusionStrategy::ProductProb, FusionStrategy::EarlyFusion, FusionStrategy::TensorFusion}) {
    const auto name = stage_dir_name(s);
    const fs::path pred_path = ctx.out / "fuse" / name / "predictions.json";
    const fs::path metrics_path = ctx.out / "evaluate" / name / "metrics.json";
    if (!fs::exists(pred_path) || !fs::exists(metrics_path)) continue;
    const auto pred = read_json(pred_path);
    const MetricsReport report =
        evaluate_predictions(pred.at("predictions").get<std::vector<int>>(),
                             pred.at("scores").get<std::vector<ScoreRow>>(), pred.at("labels").get<std::vector<int>>());
    write_curve_csvs(dir / name, report);
    const nlohmann::json m = report.to_json();
    write_json(dir / name / "metrics.json", m);
    summary[name] = {{"accuracy", m.at("accuracy")}, {"auc_macro", m.at("auc_macro")}, {"ap_macro", m.at("ap_macro")}};
  }
  if (summary.empty()) throw MissingArtifactError("no evaluated strategy found under " + (ctx.out / "evaluate").string());
  const nlohmann::json doc{{"config_hash", config_hash(ctx.config)}, {"strategies", summary}};
  write_json(dir / "summary.json", doc);
  return doc;
}

void run_stage(std::string_view stage, const PipelineContext& ctx, FusionStrategy strategy) {
  if (stage == "simulate") return run_simulate(ctx);
  if (stage == "preprocess") return run_preprocess(ctx);
  if (stage == "localize") return run_localize(ctx);
  if (stage == "scout") return run_scout(ctx);
  if (stage == "epoch") return run_epoch(ctx);
  if (stage == "cwt") return run_cwt(ctx);
  if (stage == "train") return run_train(ctx);
  if (stage == "fuse") return run_fuse(ctx, strategy);
  if (stage == "evaluate") {
    run_evaluate(ctx, strategy);
    return;
  }
  if (stage == "report") {
    run_report(ctx);
    return;
  }
  throw ValidationError("unknown stage '" + std::string(stage) + "'");
}

nlohmann::json run_all(const PipelineContext& ctx, const std::vector<FusionStrategy>& strategies) {
  for (auto stage : upstream_stages()) {
    const auto start = std::chrono::steady_clock::now();
    run_stage(stage, ctx, ctx.config.fusion);
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    log(ctx, std::string(stage) + " done in " + std::to_string(took.count()) + " s");
  }
  for (auto s : strategies) {
    run_fuse(ctx, s);
    run_evaluate(ctx, s);
  }
  return run_report(ctx);
}

}  // namespace scwt
