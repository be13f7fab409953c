// ictus: EEG seizure risk assessment pipeline, stage per subcommand with file
// handoff. synth -> preprocess -> train (x12) -> sweep -> report, plus `risk`
// for a single likelihood/alarm trace. Exit codes: 0 ok, 1 usage, 2 data
// error, 3 internal.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ictus/dataset_io.hpp"
#include "ictus/manifest.hpp"
#include "ictus/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ictus;

namespace {

// ---------------------------------------------------------------------------
// `--config <path>` key-value files override flags (the file wins when both
// name a setting).
// ---------------------------------------------------------------------------

struct ConfigOverride {
  std::map<std::string, std::string> kv;

  void apply(const char* key, double& slot) const {
    if (const auto it = kv.find(key); it != kv.end()) slot = std::stod(it->second);
  }
  void apply(const char* key, int& slot) const {
    if (const auto it = kv.find(key); it != kv.end()) slot = std::stoi(it->second);
  }
  void apply(const char* key, uint64_t& slot) const {
    if (const auto it = kv.find(key); it != kv.end()) slot = std::stoull(it->second);
  }
  void apply(const char* key, bool& slot) const {
    if (const auto it = kv.find(key); it != kv.end()) {
      slot = it->second == "1" || it->second == "true" || it->second == "yes";
    }
  }
  void apply(const char* key, std::string& slot) const {
    if (const auto it = kv.find(key); it != kv.end()) slot = it->second;
  }
};

ConfigOverride load_override(const std::string& path, RunManifest& manifest) {
  ConfigOverride over;
  if (!path.empty()) {
    over.kv = load_key_value_file(path);
    manifest.config_files.push_back(path);
  }
  return over;
}

RunManifest make_manifest(const std::string& command, int argc, char** argv) {
  RunManifest m;
  m.command = command;
  for (int i = 0; i < argc; ++i) m.args.push_back(argv[i]);
  return m;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

ImageType type_from_flag(const std::string& s) { return parse_image_type(s); }

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::string config;
  double duration_h = 4.0;
  int seizures = 2;
  std::string onsets;  // comma-separated seconds, optional
  double seizure_duration_s = 60.0;
  double signature_min = 10.0;
  double signature_amplitude = 40.0;
  double background_amplitude = 15.0;
  double gap_min = 60.0;
  uint64_t seed = 0;
  std::string patient = "synth";
};

int run_synth(const SynthArgs& args_in, int argc, char** argv) {
  auto manifest = make_manifest("synth", argc, argv);
  SynthArgs args = args_in;
  const auto over = load_override(args.config, manifest);
  over.apply("duration-h", args.duration_h);
  over.apply("seizures", args.seizures);
  over.apply("onsets", args.onsets);
  over.apply("seizure-duration-s", args.seizure_duration_s);
  over.apply("signature-min", args.signature_min);
  over.apply("signature-amplitude", args.signature_amplitude);
  over.apply("background-amplitude", args.background_amplitude);
  over.apply("gap-min", args.gap_min);
  over.apply("seed", args.seed);
  over.apply("patient", args.patient);

  SynthConfig cfg;
  cfg.duration_s = args.duration_h * 3600.0;
  cfg.seizure_duration_s = args.seizure_duration_s;
  cfg.preictal_signature_minutes = args.signature_min;
  cfg.signature_peak_amplitude = args.signature_amplitude;
  cfg.background_amplitude = args.background_amplitude;
  cfg.min_gap_minutes = args.gap_min;
  cfg.seed = args.seed;
  cfg.patient_id = args.patient;

  if (!args.onsets.empty()) {
    std::stringstream ss(args.onsets);
    std::string field;
    while (std::getline(ss, field, ',')) cfg.seizure_onsets_s.push_back(std::stod(field));
  } else {
    // Evenly slotted onsets, each seizure at the end of its slot.
    const double first = std::max(cfg.preictal_signature_minutes, args.gap_min) * 60.0;
    const double slot = (cfg.duration_s - first) / std::max(1, args.seizures);
    for (int i = 0; i < args.seizures; ++i) {
      cfg.seizure_onsets_s.push_back(first + slot * (i + 1) - cfg.seizure_duration_s - 60.0);
    }
  }

  manifest.seeds["synth"] = cfg.seed;
  Recording rec;
  {
    StageTimer timer(manifest, "synth");
    rec = synth_generate(cfg);
  }
  {
    StageTimer timer(manifest, "save");
    save_recording(rec, args.out);
  }
  manifest.add_output(args.out + ".json");
  manifest.add_output(args.out + ".f32");
  manifest.save(args.out + ".manifest.json");
  std::cout << "wrote " << args.out << ".{json,f32} (" << rec.annotations.size()
            << " seizures, " << rec.duration_s() / 3600.0 << " h)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// preprocess
// ---------------------------------------------------------------------------

struct PreprocessArgs {
  std::string in, out;
  std::string config;
  std::string preprocess_config;  // PreprocessConfig key-value file
  double band_low = 0.5, band_high = 100.0;
  int band_order = 4;
  bool no_bandpass = false;
  double notch_hz = 50.0, notch_q = 25.0;
  bool no_notch = false;
  bool no_average_reference = false;
  std::string ica_hook;
};

int run_preprocess(const PreprocessArgs& args_in, int argc, char** argv) {
  auto manifest = make_manifest("preprocess", argc, argv);
  PreprocessArgs args = args_in;
  const auto over = load_override(args.config, manifest);
  over.apply("band-low", args.band_low);
  over.apply("band-high", args.band_high);
  over.apply("band-order", args.band_order);
  over.apply("no-bandpass", args.no_bandpass);
  over.apply("notch-hz", args.notch_hz);
  over.apply("notch-q", args.notch_q);
  over.apply("no-notch", args.no_notch);
  over.apply("no-average-reference", args.no_average_reference);
  over.apply("ica-hook", args.ica_hook);

  PreprocessConfig cfg;
  if (!args.preprocess_config.empty()) {
    cfg = load_preprocess_config(args.preprocess_config);
    manifest.config_files.push_back(args.preprocess_config);
  }
  cfg.band_low_hz = args.band_low;
  cfg.band_high_hz = args.band_high;
  cfg.band_order = args.band_order;
  if (args.no_bandpass) cfg.bandpass_enabled = false;
  cfg.notch_hz = args.notch_hz;
  cfg.notch_q = args.notch_q;
  if (args.no_notch) cfg.notch_enabled = false;
  if (args.no_average_reference) cfg.apply_average_reference = false;
  if (!args.ica_hook.empty()) cfg.ica_hook_command = args.ica_hook;

  Recording rec;
  {
    StageTimer timer(manifest, "load");
    rec = load_recording(args.in);
  }
  {
    StageTimer timer(manifest, "preprocess");
    rec = preprocess_recording(std::move(rec), cfg);
  }
  {
    StageTimer timer(manifest, "save");
    save_recording(rec, args.out);
  }
  manifest.add_output(args.out + ".json");
  manifest.add_output(args.out + ".f32");
  manifest.save(args.out + ".manifest.json");
  std::cout << "wrote " << args.out << ".{json,f32}\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string rec, out;
  std::string config;
  std::string image_type = "1s";
  int preictal_min = 10;
  int epochs = 50;
  int batch = 64;
  double lr = 0.001;
  double momentum = 0.9;
  uint64_t seed = 0;
  double guard_min = 60.0;
  std::string norm = "paper";  // paper | train-only
  std::string save_dataset;
};

int run_train(const TrainArgs& args_in, int argc, char** argv) {
  auto manifest = make_manifest("train", argc, argv);
  TrainArgs args = args_in;
  const auto over = load_override(args.config, manifest);
  over.apply("image-type", args.image_type);
  over.apply("preictal-min", args.preictal_min);
  over.apply("epochs", args.epochs);
  over.apply("batch", args.batch);
  over.apply("lr", args.lr);
  over.apply("momentum", args.momentum);
  over.apply("seed", args.seed);
  over.apply("guard-min", args.guard_min);
  over.apply("norm", args.norm);

  TrainStageConfig cfg;
  cfg.type = type_from_flag(args.image_type);
  cfg.preictal_min = args.preictal_min;
  cfg.guard_minutes = args.guard_min;
  cfg.train_only_norm = args.norm == "train-only";
  if (args.norm != "paper" && args.norm != "train-only") {
    throw DataError("train: --norm must be 'paper' or 'train-only'");
  }
  cfg.train.epochs = args.epochs;
  cfg.train.batch_size = args.batch;
  cfg.train.learning_rate = args.lr;
  cfg.train.momentum = args.momentum;
  cfg.train.seed = args.seed;
  manifest.seeds["train"] = args.seed;

  Recording rec;
  {
    StageTimer timer(manifest, "load");
    rec = load_recording(args.rec);
  }
  TrainStageResult result;
  {
    StageTimer timer(manifest, "train");
    result = train_network(rec, cfg);
  }
  print_warnings(result.warnings);
  for (size_t e = 0; e < result.history.epochs.size(); ++e) {
    std::cout << "epoch " << e + 1 << ": loss " << result.history.epochs[e].loss << ", accuracy "
              << result.history.epochs[e].accuracy << "\n";
  }
  {
    StageTimer timer(manifest, "save");
    nn::save_model(result.net, result.stats, cfg.preictal_min, args.out);
  }
  manifest.add_output(args.out);
  if (!args.save_dataset.empty()) {
    ictus::save_dataset(result.dataset, args.save_dataset);
    manifest.add_output(fs::path(args.save_dataset) / "meta.json");
    manifest.add_output(fs::path(args.save_dataset) / "images.f32");
    manifest.add_output(fs::path(args.save_dataset) / "labels.u8");
  }
  manifest.save(args.out + ".manifest.json");
  std::cout << "wrote " << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// risk
// ---------------------------------------------------------------------------

struct RiskArgs {
  std::string rec, model, out;
  std::string config;
  double z = 0.5;
  double y = 0.5;
  double guard_min = 60.0;
  int batch = 64;
  std::string span = "test";  // test | full
};

int run_risk(const RiskArgs& args_in, int argc, char** argv) {
  auto manifest = make_manifest("risk", argc, argv);
  RiskArgs args = args_in;
  const auto over = load_override(args.config, manifest);
  over.apply("z", args.z);
  over.apply("y", args.y);
  over.apply("guard-min", args.guard_min);
  over.apply("span", args.span);

  Recording rec;
  {
    StageTimer timer(manifest, "load");
    rec = load_recording(args.rec);
  }
  auto model = nn::load_model(args.model);

  double span_start = 0.0;
  if (args.span == "test") {
    span_start = test_span_start_s(rec, split_seizures(rec));
  } else if (args.span != "full") {
    throw DataError("risk: --span must be 'test' or 'full'");
  }
  const auto start_sample = static_cast<int64_t>(std::llround(span_start * rec.fs));

  std::vector<double> raw_p;
  {
    StageTimer timer(manifest, "inference");
    const auto sig = normalize(rec, model.stats);
    raw_p = predict_test_stream(model.net, sig, model.net.spec.image_type, start_sample,
                                args.batch);
  }

  ForecastParams params;
  params.z = args.z;
  params.y = args.y;
  params.preictal_minutes = static_cast<double>(model.preictal_min);
  const double t0 = span_start + image_seconds(model.net.spec.image_type);
  ForecastTrace trace;
  {
    StageTimer timer(manifest, "forecast");
    trace = run_forecaster(raw_p, t0, params);
  }
  std::vector<SeizureAnnotation> span_seizures;
  for (const auto& a : rec.annotations) {
    if (a.onset_s >= span_start) span_seizures.push_back(a);
  }
  classify_alarms(trace.alarms, span_seizures);

  fs::create_directories(args.out);
  write_timeline_csv(trace, fs::path(args.out) / "timeline.csv");
  write_alarms_csv(trace.alarms, fs::path(args.out) / "alarms.csv");
  manifest.add_output(fs::path(args.out) / "timeline.csv");
  manifest.add_output(fs::path(args.out) / "alarms.csv");
  manifest.save(fs::path(args.out) / "manifest.json");
  std::cout << "wrote " << args.out << "/timeline.csv (" << trace.timeline.size()
            << " points), " << trace.alarms.size() << " alarms\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string rec, models, out;
  std::string config;
  double guard_min = 60.0;
  int batch = 64;
  std::string fpr_mode = "interictal";  // interictal | total
};

int run_sweep(const SweepArgs& args_in, int argc, char** argv) {
  auto manifest = make_manifest("sweep", argc, argv);
  SweepArgs args = args_in;
  const auto over = load_override(args.config, manifest);
  over.apply("guard-min", args.guard_min);
  over.apply("fpr-mode", args.fpr_mode);

  FprMode mode;
  if (args.fpr_mode == "interictal") {
    mode = FprMode::InterictalHoursOnly;
  } else if (args.fpr_mode == "total") {
    mode = FprMode::TotalTestHours;
  } else {
    throw DataError("sweep: --fpr-mode must be 'interictal' or 'total'");
  }

  Recording rec;
  {
    StageTimer timer(manifest, "load");
    rec = load_recording(args.rec);
  }

  // All 12 (image type, pre-ictal time) models must be present.
  std::vector<nn::LoadedModel> models;
  {
    StageTimer timer(manifest, "load_models");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(args.models)) {
      if (entry.path().extension() == ".bin") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) models.push_back(nn::load_model(f));
  }
  const SweepGrid grid = SweepGrid::paper();
  for (const ImageType type : grid.image_types) {
    for (const int x : grid.x_values) {
      const bool found = std::any_of(models.begin(), models.end(), [&](const auto& m) {
        return m.net.spec.image_type == type && m.preictal_min == x;
      });
      if (!found) {
        throw DataError("sweep: missing model for " + std::string(to_string(type)) + "/" +
                        std::to_string(x) + "min in " + args.models);
      }
    }
  }

  PatientBundle bundle;
  {
    StageTimer timer(manifest, "streams");
    bundle = make_bundle(rec, models, args.guard_min, mode, args.batch);
  }
  std::vector<EvalResult> results;
  {
    StageTimer timer(manifest, "sweep");
    results = sweep(bundle, grid);
  }
  const auto& best = select_best(results);

  fs::create_directories(args.out);
  write_results_csv(results, bundle.patient_id, fs::path(args.out) / "results.csv");
  write_best_json(best, bundle.patient_id, fs::path(args.out) / "best.json");
  manifest.add_output(fs::path(args.out) / "results.csv");
  manifest.add_output(fs::path(args.out) / "best.json");

  // One likelihood timeline per network at its own best thresholds.
  for (const auto& stream : bundle.streams) {
    const EvalResult* net_best = nullptr;
    for (const auto& r : results) {
      if (r.params.type == stream.type && r.params.preictal_min == stream.preictal_min &&
          (!net_best || better_than(r, *net_best))) {
        net_best = &r;
      }
    }
    ForecastParams params;
    params.z = net_best->params.z;
    params.y = net_best->params.y;
    params.preictal_minutes = static_cast<double>(stream.preictal_min);
    auto trace = run_forecaster(stream.raw_p, stream.t0_s, params);
    classify_alarms(trace.alarms, bundle.test_seizures);
    const auto name = "timeline_" + std::string(to_string(stream.type)) + "_" +
                      std::to_string(stream.preictal_min) + "min.csv";
    write_timeline_csv(trace, fs::path(args.out) / name);
    manifest.add_output(fs::path(args.out) / name);
  }

  manifest.save(fs::path(args.out) / "manifest.json");
  std::cout << "wrote " << args.out << "/results.csv (" << results.size() << " rows)\n"
            << "best: " << report_row(best, bundle.patient_id) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string results, out;
  std::string config;
};

int run_report(const ReportArgs& args, int argc, char** argv) {
  auto manifest = make_manifest("report", argc, argv);
  const auto parsed = read_results_csv(args.results);
  if (parsed.results.empty()) throw DataError("report: no rows in " + args.results);
  const auto& best = select_best(parsed.results);
  {
    StageTimer timer(manifest, "report");
    report(parsed.results, best, parsed.patient_id, args.out);
  }
  manifest.add_output(fs::path(args.out) / "report.csv");
  manifest.add_output(fs::path(args.out) / "report.txt");
  manifest.save(fs::path(args.out) / "manifest.json");
  std::cout << report_row(best, parsed.patient_id) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG seizure risk assessment pipeline"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic annotated recording");
  synth_cmd->add_option("--out", synth_args.out, "output base path")->required();
  synth_cmd->add_option("--duration-h", synth_args.duration_h, "recording length, hours");
  synth_cmd->add_option("--seizures", synth_args.seizures, "seizure count (auto layout)");
  synth_cmd->add_option("--onsets", synth_args.onsets, "explicit onsets, seconds, comma separated");
  synth_cmd->add_option("--seizure-duration-s", synth_args.seizure_duration_s, "ictal length");
  synth_cmd->add_option("--signature-min", synth_args.signature_min,
                        "pre-ictal signature length, minutes");
  synth_cmd->add_option("--signature-amplitude", synth_args.signature_amplitude,
                        "signature peak amplitude, uV");
  synth_cmd->add_option("--background-amplitude", synth_args.background_amplitude,
                        "background noise scale, uV");
  synth_cmd->add_option("--gap-min", synth_args.gap_min, "minimum inter-ictal gap, minutes");
  synth_cmd->add_option("--seed", synth_args.seed, "rng seed");
  synth_cmd->add_option("--patient", synth_args.patient, "patient id");
  synth_cmd->add_option("--config", synth_args.config, "key-value file overriding flags");

  PreprocessArgs pp_args;
  auto* pp_cmd = app.add_subcommand("preprocess", "bandpass + notch + average reference");
  pp_cmd->add_option("--in", pp_args.in, "input recording base path")->required();
  pp_cmd->add_option("--out", pp_args.out, "output recording base path")->required();
  pp_cmd->add_option("--preprocess-config", pp_args.preprocess_config,
                     "PreprocessConfig key-value file");
  pp_cmd->add_option("--band-low", pp_args.band_low, "bandpass low cutoff, Hz");
  pp_cmd->add_option("--band-high", pp_args.band_high, "bandpass high cutoff, Hz");
  pp_cmd->add_option("--band-order", pp_args.band_order, "Butterworth prototype order");
  pp_cmd->add_flag("--no-bandpass", pp_args.no_bandpass, "skip the bandpass stage");
  pp_cmd->add_option("--notch-hz", pp_args.notch_hz, "notch frequency, Hz");
  pp_cmd->add_option("--notch-q", pp_args.notch_q, "notch quality factor");
  pp_cmd->add_flag("--no-notch", pp_args.no_notch, "skip the notch stage");
  pp_cmd->add_flag("--no-average-reference", pp_args.no_average_reference,
                   "skip average referencing");
  pp_cmd->add_option("--ica-hook", pp_args.ica_hook,
                     "external command run as '<cmd> <in> <out>'");
  pp_cmd->add_option("--config", pp_args.config, "key-value file overriding flags");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train one CNN for (image type, pre-ictal time)");
  train_cmd->add_option("--rec", train_args.rec, "preprocessed recording base path")->required();
  train_cmd->add_option("--out", train_args.out, "model output path")->required();
  train_cmd->add_option("--image-type", train_args.image_type, "1s, 5s, or 10s");
  train_cmd->add_option("--preictal-min", train_args.preictal_min, "pre-ictal time X, minutes");
  train_cmd->add_option("--epochs", train_args.epochs, "training epochs");
  train_cmd->add_option("--batch", train_args.batch, "mini-batch size");
  train_cmd->add_option("--lr", train_args.lr, "learning rate");
  train_cmd->add_option("--momentum", train_args.momentum, "SGD momentum");
  train_cmd->add_option("--seed", train_args.seed, "rng seed");
  train_cmd->add_option("--guard-min", train_args.guard_min, "inter-ictal guard, minutes");
  train_cmd->add_option("--norm", train_args.norm, "'paper' (global) or 'train-only'");
  train_cmd->add_option("--save-dataset", train_args.save_dataset,
                        "also persist the balanced dataset to this directory");
  train_cmd->add_option("--config", train_args.config, "key-value file overriding flags");

  RiskArgs risk_args;
  auto* risk_cmd = app.add_subcommand("risk", "likelihood timeline and alarms for one model");
  risk_cmd->add_option("--rec", risk_args.rec, "recording base path")->required();
  risk_cmd->add_option("--model", risk_args.model, "trained model path")->required();
  risk_cmd->add_option("--out", risk_args.out, "output directory")->required();
  risk_cmd->add_option("--z", risk_args.z, "likelihood threshold");
  risk_cmd->add_option("--y", risk_args.y, "firing power threshold");
  risk_cmd->add_option("--guard-min", risk_args.guard_min, "inter-ictal guard, minutes");
  risk_cmd->add_option("--batch", risk_args.batch, "inference batch size");
  risk_cmd->add_option("--span", risk_args.span, "'test' (held-out) or 'full'");
  risk_cmd->add_option("--config", risk_args.config, "key-value file overriding flags");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "evaluate the full threshold grid over 12 models");
  sweep_cmd->add_option("--rec", sweep_args.rec, "recording base path")->required();
  sweep_cmd->add_option("--models", sweep_args.models, "directory of 12 model .bin files")
      ->required();
  sweep_cmd->add_option("--out", sweep_args.out, "output directory")->required();
  sweep_cmd->add_option("--guard-min", sweep_args.guard_min, "inter-ictal guard, minutes");
  sweep_cmd->add_option("--batch", sweep_args.batch, "inference batch size");
  sweep_cmd->add_option("--fpr-mode", sweep_args.fpr_mode, "'interictal' or 'total' hours");
  sweep_cmd->add_option("--config", sweep_args.config, "key-value file overriding flags");

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "best-combination table from results.csv");
  report_cmd->add_option("--results", report_args.results, "results.csv path")->required();
  report_cmd->add_option("--out", report_args.out, "output directory")->required();
  report_cmd->add_option("--config", report_args.config, "key-value file overriding flags");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (*synth_cmd) return run_synth(synth_args, argc, argv);
    if (*pp_cmd) return run_preprocess(pp_args, argc, argv);
    if (*train_cmd) return run_train(train_args, argc, argv);
    if (*risk_cmd) return run_risk(risk_args, argc, argv);
    if (*sweep_cmd) return run_sweep(sweep_args, argc, argv);
    if (*report_cmd) return run_report(report_args, argc, argv);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 3;
}
