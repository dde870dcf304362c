#include "pulse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "pulse/error.hpp"

namespace pulse {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPairSeconds = 15.0;

void check_morphology(const ClassMorphology& m, const char* name) {
  const bool ok = m.hr_bpm_mean > 0 && m.hr_bpm_sd >= 0 && m.qrs_width_ms_mean > 0 &&
                  m.qrs_width_ms_sd >= 0 && m.qrs_amp_mv_mean >= 0 && m.qrs_amp_mv_sd >= 0 &&
                  m.p_wave_frac >= 0 && m.t_wave_frac >= 0;
  if (!ok) fail(ErrorKind::Config, std::string(name) + " morphology has invalid values");
}

// Sum of beats, artifact and noise over [0, duration); artifact stops at artifact_until.
std::vector<double> render_trace(const BeatParams& p, double duration, double fs, double artifact_until,
                                 Rng& rng) {
  const auto n = static_cast<std::size_t>(std::llround(duration * fs));
  std::vector<double> x(n, 0.0);
  const double rr0 = 60.0 / p.hr_bpm;

  std::vector<double> beats;
  const double first = rng.uniform(0.1, 0.9) * rr0;
  beats.push_back(first - rr0);
  for (double t = first; t < duration + 0.5;) {
    beats.push_back(t);
    const double rr = std::clamp(rr0 * (1.0 + p.rr_jitter * rng.normal()), 0.5 * rr0, 1.5 * rr0);
    t += rr;
  }

  const double half_qrs = 0.5 * p.qrs_width_s;
  const double p_amp = p.p_wave_frac * p.qrs_amp_mv;
  const double t_amp = p.t_wave_frac * p.qrs_amp_mv;
  constexpr double p_offset = -0.16, p_sd = 0.025;
  const double t_offset = 0.18 + 0.5 * p.qrs_width_s;
  constexpr double t_sd = 0.05;
  for (double tb : beats) {
    const auto lo = static_cast<std::ptrdiff_t>(std::floor((tb - 0.4) * fs));
    const auto hi = static_cast<std::ptrdiff_t>(std::ceil((tb + 0.6) * fs));
    for (auto i = std::max<std::ptrdiff_t>(lo, 0); i < std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(n)); ++i) {
      const double t = static_cast<double>(i) / fs - tb;
      double v = 0.0;
      if (std::abs(t) < half_qrs) v += p.qrs_amp_mv * (1.0 - std::abs(t) / half_qrs);
      const double dp = (t - p_offset) / p_sd;
      const double dt = (t - t_offset) / t_sd;
      v += p_amp * std::exp(-0.5 * dp * dp) + t_amp * std::exp(-0.5 * dt * dt);
      x[static_cast<std::size_t>(i)] += v;
    }
  }

  if (p.artifact_amp_mv > 0.0 && artifact_until > 0.0) {
    const double fc = p.cpr_rate_cpm / 60.0;
    std::vector<double> phase(static_cast<std::size_t>(std::max(p.n_harmonics, 0)));
    for (auto& ph : phase) ph = rng.uniform(0.0, kTwoPi);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      if (t >= artifact_until) break;
      double v = 0.0;
      for (std::size_t h = 0; h < phase.size(); ++h) {
        const double k = static_cast<double>(h + 1);
        v += std::sin(kTwoPi * k * fc * t + phase[h]) / k;
      }
      x[i] += p.artifact_amp_mv * v;
    }
  }

  if (p.noise_rms_mv > 0.0) {
    for (double& v : x) v += p.noise_rms_mv * rng.normal();
  }
  return x;
}

}  // namespace

void validate_synth_spec(const SynthSpec& s) {
  if (s.n_patients == 0 || s.pairs_per_patient == 0) fail(ErrorKind::Config, "corpus must have patients and pairs");
  if (!(s.fs > 0.0)) fail(ErrorKind::Config, "sampling rate must be positive");
  if (!(s.pulse_prevalence >= 0.0 && s.pulse_prevalence <= 1.0)) {
    fail(ErrorKind::Config, "pulse prevalence must lie in [0, 1]");
  }
  check_morphology(s.pulse, "pulse");
  check_morphology(s.pulseless, "pulseless");
  if (!(s.pulse.qrs_width_ms_mean < s.pulseless.qrs_width_ms_mean)) {
    fail(ErrorKind::Config, "pulse QRS must be narrower than pulseless QRS");
  }
  if (!(s.pulse.qrs_amp_mv_mean > s.pulseless.qrs_amp_mv_mean)) {
    fail(ErrorKind::Config, "pulse QRS must be taller than pulseless QRS");
  }
  if (!(s.pulse.hr_bpm_mean > s.pulseless.hr_bpm_mean)) {
    fail(ErrorKind::Config, "pulse heart rate must exceed pulseless heart rate");
  }
  if (!(s.cpr.rate_cpm_mean >= 100.0 && s.cpr.rate_cpm_mean <= 120.0) || s.cpr.rate_cpm_sd < 0) {
    fail(ErrorKind::Config, "compression rate mean must lie in [100, 120] cpm");
  }
  if (s.cpr.artifact_amp_mv < 0 || s.cpr.artifact_amp_log_sd < 0 || s.cpr.n_harmonics < 0) fail(ErrorKind::Config, "invalid CPR artifact");
  if (s.noise_rms_mv < 0 || s.rr_jitter < 0 || s.patient_amp_sd < 0) {
    fail(ErrorKind::Config, "noise, jitter and gain spread must be non-negative");
  }
}

BeatParams draw_beat_params(const SynthSpec& spec, Label label, double patient_gain, Rng& rng) {
  const auto& m = label == Label::Pulse ? spec.pulse : spec.pulseless;
  BeatParams p;
  p.hr_bpm = std::clamp(rng.normal(m.hr_bpm_mean, m.hr_bpm_sd), 30.0, 200.0);
  p.qrs_width_s = std::clamp(rng.normal(m.qrs_width_ms_mean, m.qrs_width_ms_sd), 40.0, 250.0) / 1000.0;
  p.qrs_amp_mv = std::max(0.05, rng.normal(m.qrs_amp_mv_mean, m.qrs_amp_mv_sd)) * patient_gain;
  p.p_wave_frac = m.p_wave_frac;
  p.t_wave_frac = m.t_wave_frac;
  p.rr_jitter = spec.rr_jitter;
  p.cpr_rate_cpm = std::clamp(rng.normal(spec.cpr.rate_cpm_mean, spec.cpr.rate_cpm_sd), 100.0, 120.0);
  p.artifact_amp_mv = spec.cpr.artifact_amp_mv * std::exp(spec.cpr.artifact_amp_log_sd * rng.normal());
  p.n_harmonics = spec.cpr.n_harmonics;
  p.noise_rms_mv = spec.noise_rms_mv;
  return p;
}

EcgSegment synth_segment(const BeatParams& params, Condition condition, Label label, double fs, Rng& rng) {
  const double duration = nominal_duration_s(condition);
  EcgSegment seg;
  seg.fs = fs;
  seg.condition = condition;
  seg.label = label;
  seg.samples = render_trace(params, duration, fs, condition == Condition::CPR ? duration : 0.0, rng);
  return seg;
}

SynthCorpus synth_corpus(const SynthSpec& spec) {
  validate_synth_spec(spec);
  SynthCorpus out;
  out.set.provenance.source_path = "synthetic";
  const auto cpr_len = static_cast<std::size_t>(std::llround(nominal_duration_s(Condition::CPR) * spec.fs));
  const auto nocpr_len = static_cast<std::size_t>(std::llround(nominal_duration_s(Condition::NoCPR) * spec.fs));
  for (std::size_t p = 0; p < spec.n_patients; ++p) {
    Rng rng(spec.seed, p);
    char id[32];
    std::snprintf(id, sizeof id, "P%04zu", p + 1);
    const double gain = std::exp(spec.patient_amp_sd * rng.normal());
    for (std::size_t c = 0; c < spec.pairs_per_patient; ++c) {
      const Label label = rng.uniform() < spec.pulse_prevalence ? Label::Pulse : Label::Pulseless;
      const BeatParams params = draw_beat_params(spec, label, gain, rng);
      const auto trace = render_trace(params, kPairSeconds, spec.fs, nominal_duration_s(Condition::CPR), rng);
      for (Condition cond : kConditions) {
        EcgSegment seg;
        seg.fs = spec.fs;
        seg.patient_id = id;
        seg.check_id = static_cast<std::int64_t>(c + 1);
        seg.condition = cond;
        seg.label = label;
        if (cond == Condition::CPR) {
          seg.samples.assign(trace.begin(), trace.begin() + static_cast<std::ptrdiff_t>(cpr_len));
        } else {
          seg.samples.assign(trace.begin() + static_cast<std::ptrdiff_t>(cpr_len),
                             trace.begin() + static_cast<std::ptrdiff_t>(cpr_len + nocpr_len));
        }
        out.truth.push_back({seg.patient_id, seg.check_id, cond, label, params});
        out.set.segments.push_back(std::move(seg));
      }
    }
  }
  out.set.provenance.record_count = out.set.segments.size();
  return out;
}

namespace {

nlohmann::json morph_json(const ClassMorphology& m) {
  return {{"hr_bpm_mean", m.hr_bpm_mean},         {"hr_bpm_sd", m.hr_bpm_sd},
          {"qrs_width_ms_mean", m.qrs_width_ms_mean}, {"qrs_width_ms_sd", m.qrs_width_ms_sd},
          {"qrs_amp_mv_mean", m.qrs_amp_mv_mean}, {"qrs_amp_mv_sd", m.qrs_amp_mv_sd},
          {"p_wave_frac", m.p_wave_frac},         {"t_wave_frac", m.t_wave_frac}};
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

ClassMorphology morph_from(const nlohmann::json& j, ClassMorphology m) {
  read_opt(j, "hr_bpm_mean", m.hr_bpm_mean);
  read_opt(j, "hr_bpm_sd", m.hr_bpm_sd);
  read_opt(j, "qrs_width_ms_mean", m.qrs_width_ms_mean);
  read_opt(j, "qrs_width_ms_sd", m.qrs_width_ms_sd);
  read_opt(j, "qrs_amp_mv_mean", m.qrs_amp_mv_mean);
  read_opt(j, "qrs_amp_mv_sd", m.qrs_amp_mv_sd);
  read_opt(j, "p_wave_frac", m.p_wave_frac);
  read_opt(j, "t_wave_frac", m.t_wave_frac);
  return m;
}

nlohmann::json beat_json(const BeatParams& p) {
  return {{"hr_bpm", p.hr_bpm},
          {"qrs_width_s", p.qrs_width_s},
          {"qrs_amp_mv", p.qrs_amp_mv},
          {"p_wave_frac", p.p_wave_frac},
          {"t_wave_frac", p.t_wave_frac},
          {"cpr_rate_cpm", p.cpr_rate_cpm},
          {"artifact_amp_mv", p.artifact_amp_mv},
          {"n_harmonics", p.n_harmonics}};
}

}  // namespace

nlohmann::json to_json(const SynthSpec& s) {
  return {{"n_patients", s.n_patients},
          {"pairs_per_patient", s.pairs_per_patient},
          {"fs", s.fs},
          {"pulse_prevalence", s.pulse_prevalence},
          {"pulse", morph_json(s.pulse)},
          {"pulseless", morph_json(s.pulseless)},
          {"cpr",
           {{"rate_cpm_mean", s.cpr.rate_cpm_mean},
            {"rate_cpm_sd", s.cpr.rate_cpm_sd},
            {"artifact_amp_mv", s.cpr.artifact_amp_mv},
            {"artifact_amp_log_sd", s.cpr.artifact_amp_log_sd},
            {"n_harmonics", s.cpr.n_harmonics}}},
          {"rr_jitter", s.rr_jitter},
          {"patient_amp_sd", s.patient_amp_sd},
          {"noise_rms_mv", s.noise_rms_mv},
          {"seed", s.seed}};
}

SynthSpec synth_spec_from_json(const nlohmann::json& j, SynthSpec s) {
  read_opt(j, "n_patients", s.n_patients);
  read_opt(j, "pairs_per_patient", s.pairs_per_patient);
  read_opt(j, "fs", s.fs);
  read_opt(j, "pulse_prevalence", s.pulse_prevalence);
  if (auto it = j.find("pulse"); it != j.end()) s.pulse = morph_from(*it, s.pulse);
  if (auto it = j.find("pulseless"); it != j.end()) s.pulseless = morph_from(*it, s.pulseless);
  if (auto it = j.find("cpr"); it != j.end()) {
    read_opt(*it, "rate_cpm_mean", s.cpr.rate_cpm_mean);
    read_opt(*it, "rate_cpm_sd", s.cpr.rate_cpm_sd);
    read_opt(*it, "artifact_amp_mv", s.cpr.artifact_amp_mv);
    read_opt(*it, "artifact_amp_log_sd", s.cpr.artifact_amp_log_sd);
    read_opt(*it, "n_harmonics", s.cpr.n_harmonics);
  }
  read_opt(j, "rr_jitter", s.rr_jitter);
  read_opt(j, "patient_amp_sd", s.patient_amp_sd);
  read_opt(j, "noise_rms_mv", s.noise_rms_mv);
  read_opt(j, "seed", s.seed);
  return s;
}

nlohmann::json truth_json(const SynthCorpus& corpus) {
  auto segments = nlohmann::json::array();
  for (const auto& t : corpus.truth) {
    segments.push_back({{"patient_id", t.patient_id},
                        {"check_id", t.check_id},
                        {"condition", to_string(t.condition)},
                        {"label", to_string(t.label)},
                        {"true_hr_bpm", t.params.hr_bpm},
                        {"params", beat_json(t.params)}});
  }
  return {{"segments", std::move(segments)}};
}

}  // namespace pulse
