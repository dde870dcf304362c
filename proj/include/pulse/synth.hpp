#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "pulse/random.hpp"
#include "pulse/segment.hpp"

namespace pulse {

// Per-class beat morphology distributions (normal, truncated to sane ranges).
struct ClassMorphology {
  double hr_bpm_mean = 75.0, hr_bpm_sd = 12.0;
  double qrs_width_ms_mean = 90.0, qrs_width_ms_sd = 10.0;
  double qrs_amp_mv_mean = 1.0, qrs_amp_mv_sd = 0.2;
  double p_wave_frac = 0.12;  // of QRS amplitude
  double t_wave_frac = 0.3;
};

struct CprArtifactSpec {
  double rate_cpm_mean = 110.0, rate_cpm_sd = 1.0;
  double artifact_amp_mv = 0.2;
  double artifact_amp_log_sd = 0.1;  // per-check log-normal spread
  int n_harmonics = 5;
};

struct SynthSpec {
  std::size_t n_patients = 400;
  std::size_t pairs_per_patient = 2;
  double fs = 250.0;
  double pulse_prevalence = 0.38;
  ClassMorphology pulse{95.0, 12.0, 75.0, 8.0, 1.3, 0.25, 0.12, 0.30};
  ClassMorphology pulseless{70.0, 14.0, 150.0, 25.0, 0.6, 0.2, 0.05, 0.20};
  CprArtifactSpec cpr;
  double rr_jitter = 0.1;        // RR standard deviation as a fraction of RR
  double patient_amp_sd = 0.15;  // log-normal per-patient gain
  double noise_rms_mv = 0.03;
  std::uint64_t seed = 7;
};

// Throws Config unless counts are positive, sds are non-negative, the class
// contrast is ordered (Pulse: narrower, taller, faster) and the compression
// rate mean lies in [100, 120] cpm.
void validate_synth_spec(const SynthSpec& spec);

/// Concrete parameters for one pulse check.
struct BeatParams {
  double hr_bpm = 75.0;
  double qrs_width_s = 0.09;
  double qrs_amp_mv = 1.0;
  double p_wave_frac = 0.12;
  double t_wave_frac = 0.3;
  double rr_jitter = 0.0;
  double cpr_rate_cpm = 110.0;
  double artifact_amp_mv = 0.0;
  int n_harmonics = 5;
  double noise_rms_mv = 0.0;
};

BeatParams draw_beat_params(const SynthSpec& spec, Label label, double patient_gain, Rng& rng);

// One standalone window: 10 s with artifact for CPR, 5 s without for NoCPR.
EcgSegment synth_segment(const BeatParams& params, Condition condition, Label label, double fs, Rng& rng);

struct SegmentTruth {
  std::string patient_id;
  std::int64_t check_id = 0;
  Condition condition = Condition::CPR;
  Label label = Label::Pulse;
  BeatParams params;
};

struct SynthCorpus {
  SegmentSet set;
  std::vector<SegmentTruth> truth;  // parallel to set.segments
};

/// Each check renders one continuous 15 s trace: the first 10 s carry CPR
/// artifact and form the CPR segment, the last 5 s form the NoCPR segment.
/// Patient p uses the RNG substream (seed, p).
SynthCorpus synth_corpus(const SynthSpec& spec);

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j, SynthSpec base = {});
nlohmann::json truth_json(const SynthCorpus& corpus);

}  // namespace pulse
