#include <gtest/gtest.h>

#include "keratoflow/domain/cohort_csv.hpp"
#include "keratoflow/domain/grader.hpp"
#include "keratoflow/error.hpp"
#include "keratoflow/synth/cohort.hpp"

using namespace keratoflow;
using namespace keratoflow::synth;

TEST(Synth, DefaultPresetSizes) {
  const auto config = CohortConfig::separable(7);
  EXPECT_EQ(config.n_patients, 124u);
  EXPECT_DOUBLE_EQ(config.male_fraction, 0.637);
  const auto records = generate_cohort(config);
  // 124 * (1 + 0.91) ~ 237 eyes
  EXPECT_GE(records.size(), 225u);
  EXPECT_LE(records.size(), 248u);
}

TEST(Synth, LabelsAreRuleConsistentAndValid) {
  for (const auto& config : {CohortConfig::separable(3), CohortConfig::realistic(3)}) {
    for (const auto& r : generate_cohort(config)) {
      ASSERT_TRUE(r.ak_grade.has_value());
      ASSERT_EQ(*r.ak_grade, domain::grade_ak(r));
      ASSERT_NO_THROW(domain::validate(r));
    }
  }
}

TEST(Synth, NoiseFreeTargetsAreKept) {
  const auto g = generate_cohort_with_targets(CohortConfig::separable(21));
  for (std::size_t i = 0; i < g.records.size(); ++i) EXPECT_EQ(*g.records[i].ak_grade, g.targets[i]);
}

TEST(Synth, RealisticPresetMislabelsSomeTargets) {
  auto config = CohortConfig::realistic(21);
  config.n_patients = 500;
  const auto g = generate_cohort_with_targets(config);
  std::size_t moved = 0;
  for (std::size_t i = 0; i < g.records.size(); ++i) moved += *g.records[i].ak_grade != g.targets[i];
  EXPECT_GT(moved, 0u);
}

TEST(Synth, DegenerateMixture) {
  auto config = CohortConfig::separable(1);
  config.grade_mixture = {1.0, 0.0, 0.0, 0.0};
  for (const auto& r : generate_cohort(config)) EXPECT_EQ(r.ak_grade->value(), 1);
}

TEST(Synth, DeterministicPerSeed) {
  const auto a = domain::format_cohort_csv(generate_cohort(CohortConfig::realistic(5)));
  const auto b = domain::format_cohort_csv(generate_cohort(CohortConfig::realistic(5)));
  const auto c = domain::format_cohort_csv(generate_cohort(CohortConfig::realistic(6)));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Synth, MaleFractionMarginal) {
  auto config = CohortConfig::realistic(8);
  config.n_patients = 10000;
  config.both_eyes_fraction = 0.0;
  const auto records = generate_cohort(config);
  std::size_t male = 0;
  for (const auto& r : records) male += r.gender == domain::Gender::male;
  EXPECT_NEAR(static_cast<double>(male) / records.size(), 0.637, 0.02);
}

TEST(Synth, ConfigValidation) {
  auto config = CohortConfig::separable(1);
  config.grade_mixture = {0.5, 0.5, 0.5, 0.0};
  EXPECT_THROW(config.validate(), ValidationError);
  config = CohortConfig::separable(1);
  config.n_patients = 0;
  EXPECT_THROW(config.validate(), ValidationError);
  config = CohortConfig::separable(1);
  config.male_fraction = 1.5;
  EXPECT_THROW(config.validate(), ValidationError);
  EXPECT_THROW(CohortConfig::preset_named("chaotic"), ValidationError);
}

TEST(Synth, ConfigJsonRoundTrip) {
  auto config = CohortConfig::realistic(99);
  config.n_patients = 10;
  const auto back = CohortConfig::from_json(config.to_json());
  EXPECT_EQ(back.to_json(), config.to_json());
  EXPECT_EQ(domain::format_cohort_csv(generate_cohort(back)),
            domain::format_cohort_csv(generate_cohort(config)));
}
