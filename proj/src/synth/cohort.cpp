#include "keratoflow/synth/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "keratoflow/domain/grader.hpp"
#include "keratoflow/error.hpp"
#include "keratoflow/random.hpp"

namespace keratoflow::synth {

namespace {

std::vector<std::pair<std::string, double>> default_nationalities() {
  return {{"AU", 0.42}, {"CN", 0.10}, {"IN", 0.10}, {"LB", 0.08}, {"GB", 0.06},
          {"GR", 0.05}, {"VN", 0.05}, {"NZ", 0.04}, {"PH", 0.04}, {"OTHER", 0.06}};
}

GradeProfile separable_grade(int grade) {
  GradeProfile p;
  switch (grade) {
    case 1:
      p.mean_k = {43.5, 46.5};
      p.refraction = {1.0, 3.75};
      p.cylinder_share = {0.2, 0.4};
      p.k_astigmatism = {0.5, 1.5};
      p.thinnest = {470.0, 530.0};
      p.central_offset = {5.0, 15.0};
      p.vogts_striae = 0.02;
      p.fleischers_ring = 0.05;
      p.cdva = {0.0, 0.1};
      p.udva_offset = {0.2, 0.4};
      p.eye_rubbing = {0.6, 0.3, 0.1};
      p.optical_aid = {0.2, 0.7, 0.1, 0.0};
      p.years_since_diagnosis = {0.0, 3.0};
      p.decentration = 0.3;
      p.inferior_shift = -0.2;
      p.atopy = 0.10;
      p.allergy = 0.20;
      p.known_eye_history = 0.10;
      break;
    case 2:
      p.mean_k = {48.5, 51.0};
      p.refraction = {5.75, 7.25};
      p.cylinder_share = {0.3, 0.5};
      p.k_astigmatism = {1.5, 2.5};
      p.thinnest = {420.0, 460.0};
      p.central_offset = {15.0, 30.0};
      p.vogts_striae = 0.2;
      p.fleischers_ring = 0.35;
      p.cdva = {0.15, 0.25};
      p.udva_offset = {0.4, 0.6};
      p.eye_rubbing = {0.4, 0.4, 0.2};
      p.optical_aid = {0.1, 0.4, 0.4, 0.1};
      p.years_since_diagnosis = {2.0, 6.0};
      p.decentration = 0.5;
      p.inferior_shift = -0.5;
      p.atopy = 0.15;
      p.allergy = 0.25;
      p.known_eye_history = 0.25;
      break;
    case 3:
      p.mean_k = {53.75, 54.5};
      p.refraction = {8.5, 9.5};
      p.cylinder_share = {0.4, 0.6};
      p.k_astigmatism = {3.0, 4.0};
      p.thinnest = {320.0, 380.0};
      p.central_offset = {30.0, 50.0};
      p.hydrops = 0.05;
      p.vogts_striae = 0.7;
      p.fleischers_ring = 0.75;
      p.cdva = {0.35, 0.5};
      p.udva_offset = {0.6, 0.8};
      p.eye_rubbing = {0.2, 0.4, 0.4};
      p.optical_aid = {0.0, 0.1, 0.3, 0.6};
      p.years_since_diagnosis = {5.0, 10.0};
      p.decentration = 0.7;
      p.inferior_shift = -0.8;
      p.atopy = 0.20;
      p.allergy = 0.30;
      p.known_eye_history = 0.45;
      break;
    default:
      p.mean_k = {57.0, 62.0};
      p.refraction = {10.5, 15.0};
      p.cylinder_share = {0.4, 0.6};
      p.k_astigmatism = {4.5, 7.0};
      p.thinnest = {210.0, 280.0};
      p.central_offset = {50.0, 80.0};
      p.scarring = 0.8;
      p.hydrops = 0.3;
      p.vogts_striae = 0.95;
      p.fleischers_ring = 0.95;
      p.cdva = {0.7, 1.0};
      p.udva_offset = {0.5, 0.8};
      p.eye_rubbing = {0.1, 0.3, 0.6};
      p.optical_aid = {0.1, 0.0, 0.1, 0.8};
      p.years_since_diagnosis = {8.0, 18.0};
      p.decentration = 0.9;
      p.inferior_shift = -1.1;
      p.atopy = 0.25;
      p.allergy = 0.35;
      p.known_eye_history = 0.7;
      break;
  }
  return p;
}

GradeProfile realistic_grade(int grade) {
  GradeProfile p;
  switch (grade) {
    case 1:
      p.mean_k = {43.0, 48.0};
      p.refraction = {0.5, 5.0};
      p.cylinder_share = {0.2, 0.6};
      p.k_astigmatism = {0.5, 3.0};
      p.thinnest = {430.0, 540.0};
      p.central_offset = {5.0, 35.0};
      p.vogts_striae = 0.10;
      p.fleischers_ring = 0.20;
      p.cdva = {0.0, 0.3};
      p.udva_offset = {0.2, 0.7};
      p.eye_rubbing = {0.45, 0.35, 0.2};
      p.optical_aid = {0.15, 0.5, 0.25, 0.1};
      p.years_since_diagnosis = {0.0, 6.0};
      p.decentration = 0.5;
      p.inferior_shift = -0.4;
      p.atopy = 0.15;
      p.allergy = 0.25;
      p.known_eye_history = 0.2;
      break;
    case 2:
      // Shares the 5 D refraction boundary with grade 1; kept clear of the
      // gaps above it so jitter mostly mixes grades 1 and 2.
      p.mean_k = {46.0, 52.2};
      p.refraction = {5.0, 7.6};
      p.cylinder_share = {0.2, 0.6};
      p.k_astigmatism = {0.5, 3.5};
      p.thinnest = {415.0, 480.0};
      p.central_offset = {5.0, 40.0};
      p.vogts_striae = 0.15;
      p.fleischers_ring = 0.25;
      p.cdva = {0.05, 0.35};
      p.udva_offset = {0.2, 0.7};
      p.eye_rubbing = {0.4, 0.35, 0.25};
      p.optical_aid = {0.1, 0.45, 0.3, 0.15};
      p.years_since_diagnosis = {0.0, 8.0};
      p.decentration = 0.55;
      p.inferior_shift = -0.5;
      p.atopy = 0.17;
      p.allergy = 0.27;
      p.known_eye_history = 0.25;
      break;
    case 3:
      // About one jitter sd inside the rule window on every side.
      p.mean_k = {53.4, 54.6};
      p.refraction = {8.4, 9.6};
      p.cylinder_share = {0.3, 0.6};
      p.k_astigmatism = {2.0, 5.0};
      p.thinnest = {320.0, 380.0};
      p.central_offset = {20.0, 60.0};
      p.hydrops = 0.03;
      p.vogts_striae = 0.5;
      p.fleischers_ring = 0.55;
      p.cdva = {0.2, 0.6};
      p.udva_offset = {0.4, 0.9};
      p.eye_rubbing = {0.3, 0.35, 0.35};
      p.optical_aid = {0.05, 0.2, 0.3, 0.45};
      p.years_since_diagnosis = {3.0, 12.0};
      p.decentration = 0.7;
      p.inferior_shift = -0.8;
      p.atopy = 0.2;
      p.allergy = 0.3;
      p.known_eye_history = 0.4;
      break;
    default:
      p.mean_k = {55.5, 62.0};
      p.refraction = {9.0, 16.0};
      p.cylinder_share = {0.3, 0.7};
      p.k_astigmatism = {3.5, 7.5};
      p.thinnest = {200.0, 320.0};
      p.central_offset = {40.0, 90.0};
      p.scarring = 0.7;
      p.hydrops = 0.2;
      p.vogts_striae = 0.8;
      p.fleischers_ring = 0.85;
      p.cdva = {0.5, 1.2};
      p.udva_offset = {0.4, 0.9};
      p.eye_rubbing = {0.2, 0.3, 0.5};
      p.optical_aid = {0.15, 0.05, 0.15, 0.65};
      p.years_since_diagnosis = {6.0, 20.0};
      p.decentration = 0.9;
      p.inferior_shift = -1.0;
      p.atopy = 0.25;
      p.allergy = 0.35;
      p.known_eye_history = 0.6;
      break;
  }
  return p;
}

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError(what + " must be a probability, got " + std::to_string(p));
  }
}

void check_range(const Range& r, const std::string& what) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) {
    throw ValidationError(what + " range is invalid");
  }
}

template <std::size_t N>
void check_distribution(const std::array<double, N>& probs, const std::string& what) {
  double total = 0.0;
  for (double p : probs) {
    check_probability(p, what);
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError(what + " must sum to 1");
}

template <std::size_t N>
std::size_t draw_index(Rng& rng, const std::array<double, N>& probs) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    cumulative += probs[i];
    if (u < cumulative && probs[i] > 0.0) return i;
  }
  for (std::size_t i = N; i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return N - 1;
}

/// Rounds to 1/per_unit steps; dividing by the integer count lands on the
/// nearest double, so 0.01 steps print as two decimals.
double round_to(double value, double per_unit) { return std::round(value * per_unit) / per_unit; }

double draw(Rng& rng, const Range& r) { return rng.uniform(r.lo, r.hi); }

std::string patient_id(std::size_t index) {
  std::string digits = std::to_string(index + 1);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return "P" + digits;
}

struct PatientTraits {
  domain::Gender gender;
  double age;
  std::string nationality;
  bool diabetes, hypertension, other_disease, family_history, atopy, allergy;
  int eye_rubbing;
};

PatientTraits draw_patient(Rng& rng, const CohortConfig& config, const GradeProfile& lead) {
  const auto& demo = config.demographics;
  PatientTraits t;
  t.gender = rng.bernoulli(config.male_fraction) ? domain::Gender::male : domain::Gender::female;
  t.age = std::round(std::clamp(rng.normal(demo.age_mean, demo.age_sd), demo.age_clip.lo,
                                demo.age_clip.hi));
  double total = 0.0;
  for (const auto& [level, weight] : demo.nationality) total += weight;
  double u = rng.uniform() * total;
  t.nationality = demo.nationality.back().first;
  for (const auto& [level, weight] : demo.nationality) {
    if (u < weight) {
      t.nationality = level;
      break;
    }
    u -= weight;
  }
  t.diabetes = rng.bernoulli(demo.diabetes);
  t.hypertension = rng.bernoulli(demo.hypertension);
  t.other_disease = rng.bernoulli(demo.other_disease);
  t.family_history = rng.bernoulli(demo.family_history);
  t.atopy = rng.bernoulli(lead.atopy);
  t.allergy = rng.bernoulli(lead.allergy);
  t.eye_rubbing = static_cast<int>(draw_index(rng, lead.eye_rubbing));
  return t;
}

domain::PatientRecord draw_eye(Rng& rng, const CohortConfig& config, const PatientTraits& traits,
                               const GradeProfile& p) {
  domain::PatientRecord r;
  r.gender = traits.gender;
  r.age = traits.age;
  r.nationality = traits.nationality;
  r.diabetes = traits.diabetes;
  r.atopy = traits.atopy;
  r.allergy = traits.allergy;
  r.hypertension = traits.hypertension;
  r.other_disease = traits.other_disease;
  r.family_history = traits.family_history;
  r.eye_rubbing = traits.eye_rubbing;

  const double noise = config.noise_level;
  double mean_k = draw(rng, p.mean_k) + noise * config.jitter.mean_k * rng.normal();
  double refraction = draw(rng, p.refraction) + noise * config.jitter.refraction * rng.normal();
  double thinnest = draw(rng, p.thinnest) + noise * config.jitter.thinnest * rng.normal();
  refraction = std::max(refraction, 0.0);
  thinnest = std::max(thinnest, 150.0);

  const double astig = draw(rng, p.k_astigmatism);
  r.flat_k = round_to(mean_k - 0.5 * astig, 100.0);
  r.steep_k = round_to(mean_k + 0.5 * astig, 100.0);

  const double cylinder = round_to(refraction * draw(rng, p.cylinder_share), 4.0);
  r.refractive_cylinder = -cylinder;
  r.refractive_sphere = -round_to(std::max(refraction - cylinder, 0.0), 4.0);
  if (r.refractive_sphere == 0.0) r.refractive_sphere = 0.0;  // no negative zero
  if (r.refractive_cylinder == 0.0) r.refractive_cylinder = 0.0;
  r.refractive_axis = std::fmod(std::round(rng.uniform(0.0, 180.0)), 180.0);

  r.thinnest_pachymetry = std::round(thinnest);
  r.central_pachymetry = r.thinnest_pachymetry + std::round(draw(rng, p.central_offset));
  r.thinnest_loc_x = round_to(rng.normal(0.0, p.decentration), 100.0);
  r.thinnest_loc_y = round_to(rng.normal(p.inferior_shift, p.decentration), 100.0);

  r.corneal_scarring = rng.bernoulli(p.scarring);
  r.hydrops = rng.bernoulli(p.hydrops);
  r.vogts_striae = rng.bernoulli(p.vogts_striae);
  r.fleischers_ring = rng.bernoulli(p.fleischers_ring);
  r.known_eye_history = rng.bernoulli(p.known_eye_history);

  r.cdva = round_to(draw(rng, p.cdva), 100.0);
  r.udva = round_to(r.cdva + draw(rng, p.udva_offset), 100.0);
  r.primary_optical_aid = static_cast<domain::OpticalAid>(draw_index(rng, p.optical_aid));
  r.years_since_diagnosis = round_to(draw(rng, p.years_since_diagnosis), 10.0);
  return r;
}

}  // namespace

CohortConfig CohortConfig::separable(std::uint64_t seed) {
  CohortConfig c;
  c.seed = seed;
  c.preset = "separable";
  c.noise_level = 0.0;
  for (int g = 0; g < 4; ++g) {
    c.grades[g] = separable_grade(g + 1);
    // Rare binary flags standardize to 3-4 sd outliers that the 2-D latent
    // spreads into a halo around the grade clusters; this preset leaves them out.
    c.grades[g].atopy = c.grades[g].allergy = c.grades[g].hydrops = 0.0;
  }
  c.demographics.nationality = default_nationalities();
  c.demographics.diabetes = c.demographics.hypertension = 0.0;
  c.demographics.other_disease = c.demographics.family_history = 0.0;
  return c;
}

CohortConfig CohortConfig::realistic(std::uint64_t seed) {
  CohortConfig c;
  c.seed = seed;
  c.preset = "realistic";
  c.noise_level = 0.5;
  for (int g = 0; g < 4; ++g) c.grades[g] = realistic_grade(g + 1);
  c.demographics.nationality = default_nationalities();
  return c;
}

CohortConfig CohortConfig::preset_named(const std::string& name, std::uint64_t seed) {
  if (name == "separable") return separable(seed);
  if (name == "realistic") return realistic(seed);
  throw ValidationError("unknown preset '" + name + "' (expected separable or realistic)");
}

void CohortConfig::validate() const {
  if (n_patients < 1) throw ValidationError("n_patients must be at least 1");
  check_probability(both_eyes_fraction, "both_eyes_fraction");
  check_probability(male_fraction, "male_fraction");
  check_distribution(grade_mixture, "grade_mixture");
  if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) {
    throw ValidationError("noise_level must be non-negative");
  }
  for (std::size_t g = 0; g < grades.size(); ++g) {
    const auto& p = grades[g];
    const std::string tag = "grade " + std::to_string(g + 1) + " ";
    for (const auto& [range, name] :
         {std::pair{p.mean_k, "mean_k"}, std::pair{p.refraction, "refraction"},
          std::pair{p.cylinder_share, "cylinder_share"}, std::pair{p.k_astigmatism, "k_astigmatism"},
          std::pair{p.thinnest, "thinnest"}, std::pair{p.central_offset, "central_offset"},
          std::pair{p.cdva, "cdva"}, std::pair{p.udva_offset, "udva_offset"},
          std::pair{p.years_since_diagnosis, "years_since_diagnosis"}}) {
      check_range(range, tag + name);
    }
    for (const auto& [prob, name] :
         {std::pair{p.scarring, "scarring"}, std::pair{p.hydrops, "hydrops"},
          std::pair{p.vogts_striae, "vogts_striae"}, std::pair{p.fleischers_ring, "fleischers_ring"},
          std::pair{p.atopy, "atopy"}, std::pair{p.allergy, "allergy"},
          std::pair{p.known_eye_history, "known_eye_history"}}) {
      check_probability(prob, tag + name);
    }
    check_distribution(p.eye_rubbing, tag + "eye_rubbing");
    check_distribution(p.optical_aid, tag + "optical_aid");
    if (p.k_astigmatism.lo < 0.0) throw ValidationError(tag + "k_astigmatism must be >= 0");
    if (p.central_offset.lo < 0.0) throw ValidationError(tag + "central_offset must be >= 0");
  }
  if (demographics.nationality.empty()) throw ValidationError("no nationality levels");
}

nlohmann::json CohortConfig::to_json() const {
  return {{"preset", preset},
          {"n_patients", n_patients},
          {"both_eyes_fraction", both_eyes_fraction},
          {"male_fraction", male_fraction},
          {"grade_mixture", grade_mixture},
          {"noise_level", noise_level},
          {"seed", seed}};
}

CohortConfig CohortConfig::from_json(const nlohmann::json& doc) {
  try {
    const std::uint64_t seed = doc.value("seed", std::uint64_t{7});
    CohortConfig c = preset_named(doc.value("preset", std::string("separable")), seed);
    c.n_patients = doc.value("n_patients", c.n_patients);
    c.both_eyes_fraction = doc.value("both_eyes_fraction", c.both_eyes_fraction);
    c.male_fraction = doc.value("male_fraction", c.male_fraction);
    if (doc.contains("grade_mixture")) {
      c.grade_mixture = doc.at("grade_mixture").get<std::array<double, 4>>();
    }
    c.noise_level = doc.value("noise_level", c.noise_level);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed cohort config: ") + e.what());
  }
}

GeneratedCohort generate_cohort_with_targets(const CohortConfig& config) {
  config.validate();
  GeneratedCohort out;
  for (std::size_t i = 0; i < config.n_patients; ++i) {
    Rng rng(config.seed, i);
    const std::size_t eyes = rng.bernoulli(config.both_eyes_fraction) ? 2 : 1;
    std::array<std::size_t, 2> targets{};
    for (std::size_t e = 0; e < eyes; ++e) targets[e] = draw_index(rng, config.grade_mixture);
    const PatientTraits traits = draw_patient(rng, config, config.grades[targets[0]]);
    for (std::size_t e = 0; e < eyes; ++e) {
      auto record = draw_eye(rng, config, traits, config.grades[targets[e]]);
      record.patient_id = patient_id(i);
      record.eye = e == 0 ? domain::Eye::od : domain::Eye::os;
      record.ak_grade = domain::grade_ak(record);
      domain::validate(record);
      out.records.push_back(std::move(record));
      out.targets.push_back(domain::AkGrade::from_class_index(targets[e]));
    }
  }
  return out;
}

std::vector<domain::PatientRecord> generate_cohort(const CohortConfig& config) {
  return generate_cohort_with_targets(config).records;
}

}  // namespace keratoflow::synth
