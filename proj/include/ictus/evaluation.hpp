#pragma once
// Scoring and the parameter sweep: alarms versus annotations (sensitivity,
// FPR/h), the Z x Y x pre-ictal-time x image-type grid, per-patient best
// selection, and Table-style reporting.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ictus/forecast.hpp"
#include "ictus/imaging.hpp"
#include "ictus/recording.hpp"
#include "ictus/recording_io.hpp"

namespace ictus {

struct EvalParams {
  ImageType type{ImageType::OneSec};
  int preictal_min{10};
  double z{0.5};
  double y{0.5};
};

struct EvalResult {
  EvalParams params;
  double sensitivity{0.0};
  double fpr_h{0.0};
  int n_test_seizures{0};
  double test_hours{0.0};
  double denominator_hours{0.0};
  int predicted_seizures{0};
  int false_alarms{0};
  std::vector<AlarmEvent> alarms;
};

enum class FprMode : uint8_t { InterictalHoursOnly, TotalTestHours };

// ---------------------------------------------------------------------------
// Verdicts and rates.
// ---------------------------------------------------------------------------

// Marks every alarm true/false positive and returns how many of the given
// seizures were predicted. An alarm is a true positive iff some onset falls
// inside its [sop_start, sop_end]; onsets during the SPH do not count.
inline int classify_alarms(std::vector<AlarmEvent>& alarms,
                           std::span<const SeizureAnnotation> test_seizures) {
  std::vector<bool> predicted(test_seizures.size(), false);
  for (auto& alarm : alarms) {
    alarm.verdict = Verdict::FalsePositive;
    for (size_t s = 0; s < test_seizures.size(); ++s) {
      const double onset = test_seizures[s].onset_s;
      if (onset >= alarm.sop_start_s && onset <= alarm.sop_end_s) {
        alarm.verdict = Verdict::TruePositive;
        predicted[s] = true;
      }
    }
  }
  int count = 0;
  for (bool p : predicted) count += p ? 1 : 0;
  return count;
}

inline double sensitivity(int predicted_seizures, int n_test_seizures) {
  if (n_test_seizures < 1) throw DataError("sensitivity: need at least one test seizure");
  return static_cast<double>(predicted_seizures) / static_cast<double>(n_test_seizures);
}

inline double fpr_per_hour(int false_alarms, double denominator_hours) {
  if (!(denominator_hours > 0.0)) throw DataError("fpr_per_hour: denominator must be positive");
  return static_cast<double>(false_alarms) / denominator_hours;
}

// Count consistency: sensitivity * n must be an integer (predicted count).
inline void validate_count_consistency(const EvalResult& r) {
  const double product = r.sensitivity * static_cast<double>(r.n_test_seizures);
  if (std::abs(product - std::round(product)) > 1e-9) {
    throw DataError("eval result: sensitivity * n_test_seizures is not an integer");
  }
}

// ---------------------------------------------------------------------------
// Sweep.
// ---------------------------------------------------------------------------

struct SweepGrid {
  std::vector<double> z_values;
  std::vector<double> y_values;
  std::vector<int> x_values;
  std::vector<ImageType> image_types;

  // Z in {0.05..0.90 step 0.05}, Y in {0.2..0.9 step 0.1}, X in {10,20,30,40}
  // minutes, all three image types: 18*8*4*3 = 1728 combinations.
  static SweepGrid paper() {
    SweepGrid g;
    for (int i = 1; i <= 18; ++i) g.z_values.push_back(0.05 * i);
    for (int j = 2; j <= 9; ++j) g.y_values.push_back(0.1 * j);
    g.x_values = {10, 20, 30, 40};
    g.image_types = {ImageType::OneSec, ImageType::FiveSec, ImageType::TenSec};
    return g;
  }
};

// One trained network's per-second probability stream over the test span.
struct NetworkStream {
  ImageType type{ImageType::OneSec};
  int preictal_min{10};
  double t0_s{0.0};
  std::vector<double> raw_p;
};

struct PatientBundle {
  std::string patient_id;
  std::vector<NetworkStream> streams;  // one per (image type, pre-ictal time)
  std::vector<SeizureAnnotation> test_seizures;
  double test_hours{0.0};
  double interictal_hours{0.0};  // inter-ictal time inside the test span
  FprMode fpr_mode{FprMode::InterictalHoursOnly};
};

inline const NetworkStream& find_stream(const PatientBundle& bundle, ImageType type,
                                        int preictal_min) {
  for (const auto& s : bundle.streams) {
    if (s.type == type && s.preictal_min == preictal_min) return s;
  }
  throw DataError("sweep: missing network stream for " + std::string(to_string(type)) + "/" +
                  std::to_string(preictal_min) + "min");
}

inline EvalResult evaluate_cell(const PatientBundle& bundle, const NetworkStream& stream,
                                const EvalParams& params) {
  ForecastParams fparams;
  fparams.z = params.z;
  fparams.y = params.y;
  fparams.preictal_minutes = static_cast<double>(params.preictal_min);
  auto trace = run_forecaster(stream.raw_p, stream.t0_s, fparams);

  EvalResult r;
  r.params = params;
  r.n_test_seizures = static_cast<int>(bundle.test_seizures.size());
  r.test_hours = bundle.test_hours;
  r.denominator_hours =
      bundle.fpr_mode == FprMode::TotalTestHours ? bundle.test_hours : bundle.interictal_hours;
  r.predicted_seizures = classify_alarms(trace.alarms, bundle.test_seizures);
  r.false_alarms = 0;
  for (const auto& a : trace.alarms) r.false_alarms += a.verdict == Verdict::FalsePositive ? 1 : 0;
  r.sensitivity = sensitivity(r.predicted_seizures, r.n_test_seizures);
  r.fpr_h = fpr_per_hour(r.false_alarms, r.denominator_hours);
  r.alarms = std::move(trace.alarms);
  validate_count_consistency(r);
  return r;
}

// Every stream is computed once by the caller and shared across its 144
// threshold pairs; cells are evaluated in fixed grid order.
inline std::vector<EvalResult> sweep(const PatientBundle& bundle, const SweepGrid& grid) {
  if (bundle.test_seizures.empty()) throw DataError("sweep: no test seizures");
  const double denom = bundle.fpr_mode == FprMode::TotalTestHours ? bundle.test_hours
                                                                  : bundle.interictal_hours;
  if (!(denom > 0.0)) {
    throw DataError(
        "sweep: FPR denominator is zero (no inter-ictal time in the test span); "
        "use total-test-hours mode or a longer recording");
  }
  std::vector<EvalResult> results;
  results.reserve(grid.image_types.size() * grid.x_values.size() * grid.z_values.size() *
                  grid.y_values.size());
  for (const ImageType type : grid.image_types) {
    for (const int x_min : grid.x_values) {
      const NetworkStream& stream = find_stream(bundle, type, x_min);
      for (const double z : grid.z_values) {
        for (const double y : grid.y_values) {
          results.push_back(evaluate_cell(bundle, stream, {type, x_min, z, y}));
        }
      }
    }
  }
  return results;
}

// ---------------------------------------------------------------------------
// Best selection: maximize sensitivity, then minimize FPR/h, then prefer the
// larger Z, the larger Y, the smaller pre-ictal time, and finally the shorter
// image for a total order.
// ---------------------------------------------------------------------------

inline bool better_than(const EvalResult& a, const EvalResult& b) {
  if (a.sensitivity != b.sensitivity) return a.sensitivity > b.sensitivity;
  if (a.fpr_h != b.fpr_h) return a.fpr_h < b.fpr_h;
  if (a.params.z != b.params.z) return a.params.z > b.params.z;
  if (a.params.y != b.params.y) return a.params.y > b.params.y;
  if (a.params.preictal_min != b.params.preictal_min) {
    return a.params.preictal_min < b.params.preictal_min;
  }
  return static_cast<int>(a.params.type) < static_cast<int>(b.params.type);
}

inline const EvalResult& select_best(const std::vector<EvalResult>& results) {
  if (results.empty()) throw DataError("select_best: empty results");
  const EvalResult* best = &results[0];
  for (const auto& r : results) {
    if (better_than(r, *best)) best = &r;
  }
  return *best;
}

// ---------------------------------------------------------------------------
// CSV / JSON output. Comma separator, '.' decimals, shortest representation.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace detail

inline constexpr const char* kResultsCsvHeader =
    "patient,image_seconds,preictal_min,z,y,sensitivity,fpr_h,n_test_seizures,test_hours,"
    "denominator_hours,n_alarms,n_false_alarms";

inline void write_results_csv(const std::vector<EvalResult>& results,
                              const std::string& patient_id,
                              const std::filesystem::path& path) {
  std::string out = std::string(kResultsCsvHeader) + "\n";
  for (const auto& r : results) {
    out += patient_id + "," + std::to_string(image_seconds(r.params.type)) + "," +
           std::to_string(r.params.preictal_min) + "," + detail::num(r.params.z) + "," +
           detail::num(r.params.y) + "," + detail::num(r.sensitivity) + "," +
           detail::num(r.fpr_h) + "," + std::to_string(r.n_test_seizures) + "," +
           detail::num(r.test_hours) + "," + detail::num(r.denominator_hours) + "," +
           std::to_string(r.alarms.size()) + "," + std::to_string(r.false_alarms) + "\n";
  }
  detail::atomic_write_text(path, out);
}

struct ResultsCsv {
  std::string patient_id;
  std::vector<EvalResult> results;
};

inline ResultsCsv read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kResultsCsvHeader) {
    throw DataError("results csv: unexpected header in " + path.string());
  }
  ResultsCsv out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 12) throw DataError("results csv: bad row: " + line);
    out.patient_id = fields[0];
    EvalResult r;
    const int seconds = std::stoi(fields[1]);
    r.params.type = seconds == 1    ? ImageType::OneSec
                    : seconds == 5  ? ImageType::FiveSec
                    : seconds == 10 ? ImageType::TenSec
                                    : throw DataError("results csv: bad image seconds");
    r.params.preictal_min = std::stoi(fields[2]);
    r.params.z = std::stod(fields[3]);
    r.params.y = std::stod(fields[4]);
    r.sensitivity = std::stod(fields[5]);
    r.fpr_h = std::stod(fields[6]);
    r.n_test_seizures = std::stoi(fields[7]);
    r.test_hours = std::stod(fields[8]);
    r.denominator_hours = std::stod(fields[9]);
    r.alarms.resize(std::stoul(fields[10]));
    r.false_alarms = std::stoi(fields[11]);
    r.predicted_seizures =
        static_cast<int>(std::llround(r.sensitivity * r.n_test_seizures));
    out.results.push_back(std::move(r));
  }
  return out;
}

inline void write_best_json(const EvalResult& best, const std::string& patient_id,
                            const std::filesystem::path& path) {
  nlohmann::json j;
  j["patient"] = patient_id;
  j["image_seconds"] = image_seconds(best.params.type);
  j["preictal_min"] = best.params.preictal_min;
  j["z"] = best.params.z;
  j["y"] = best.params.y;
  j["sensitivity"] = best.sensitivity;
  j["fpr_h"] = best.fpr_h;
  j["n_test_seizures"] = best.n_test_seizures;
  j["test_hours"] = best.test_hours;
  detail::atomic_write_text(path, j.dump(2) + "\n");
}

inline constexpr const char* kReportCsvHeader =
    "Patient,PreIctalMinutes,ImageSeconds,LikelihoodThresholdZ,FiringPowerThresholdY,"
    "Sensitivity,FPRperHour,HoursOfTestingGroup";

inline std::string report_row(const EvalResult& best, const std::string& patient_id) {
  return patient_id + "," + std::to_string(best.params.preictal_min) + "," +
         std::to_string(image_seconds(best.params.type)) + "," + detail::num(best.params.z) +
         "," + detail::num(best.params.y) + "," + detail::num(best.sensitivity) + "," +
         detail::num(best.fpr_h) + "," + detail::num(best.test_hours);
}

// Table-shaped best-combination report, as CSV and as aligned text.
inline void report(const std::vector<EvalResult>& results, const EvalResult& best,
                   const std::string& patient_id, const std::filesystem::path& out_dir) {
  if (results.empty()) throw DataError("report: empty results");
  std::filesystem::create_directories(out_dir);
  detail::atomic_write_text(out_dir / "report.csv",
                            std::string(kReportCsvHeader) + "\n" + report_row(best, patient_id) +
                                "\n");

  std::ostringstream text;
  text << "Best seizure prediction combination, patient " << patient_id << "\n"
       << "  pre-ictal time     : " << best.params.preictal_min << " min\n"
       << "  image length       : " << image_seconds(best.params.type) << " s\n"
       << "  likelihood thr Z   : " << detail::num(best.params.z) << "\n"
       << "  firing power thr Y : " << detail::num(best.params.y) << "\n"
       << "  sensitivity        : " << detail::num(best.sensitivity) << "\n"
       << "  FPR/h              : " << detail::num(best.fpr_h) << "\n"
       << "  hours of testing   : " << detail::num(best.test_hours) << "\n"
       << "  evaluated cells    : " << results.size() << "\n";
  detail::atomic_write_text(out_dir / "report.txt", text.str());
}

}  // namespace ictus
