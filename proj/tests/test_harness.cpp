#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "ergmeter/counters.hpp"
#include "ergmeter/error.hpp"
#include "ergmeter/harness.hpp"
#include "oracles.hpp"

using namespace ergmeter;
using counters::SyntheticBackend;
using counters::SyntheticScript;
using harness::MeasurementRecord;

namespace {

SyntheticScript script_of(std::vector<counters::PowerSegment> segs, double hz = 10.0) {
  SyntheticScript s;
  s.segments = std::move(segs);
  s.update_hz = hz;
  return s;
}

SyntheticBackend realtime(double watts, const std::string& id = "synthetic") {
  return SyntheticBackend(script_of({{3600.0, watts}}), SyntheticBackend::ClockMode::real_time,
                          id);
}

// Moves every attached synthetic backend forward when slept.
class VirtualClock final : public harness::Clock {
 public:
  explicit VirtualClock(std::vector<SyntheticBackend*> backends) : backends_(std::move(backends)) {}
  double now() override { return t_; }
  void sleep_for(double s) override {
    t_ += s;
    for (auto* b : backends_) b->advance(s);
  }

 private:
  std::vector<SyntheticBackend*> backends_;
  double t_ = 0.0;
};

MeasurementRecord record(std::vector<std::string> cmd, double ms, double j) {
  MeasurementRecord r;
  r.command = std::move(cmd);
  r.walltime_ms = ms;
  r.energy_j = j;
  r.per_backend = {{"synthetic", j}};
  return r;
}

}  // namespace

TEST(Measure, ConstantPowerSleep) {
  auto backend = realtime(300.0);
  counters::CounterBackend* list[] = {&backend};
  const auto rec = harness::measure({"sleep", "2"}, list);
  EXPECT_EQ(rec.exit_status, 0);
  EXPECT_TRUE(rec.valid);
  EXPECT_NEAR(rec.energy_j, 600.0, 30.0);
  EXPECT_NEAR(rec.walltime_ms, 2000.0, 150.0);
  EXPECT_TRUE(rec.warnings.empty());
  ASSERT_EQ(rec.per_backend.size(), 1u);
  EXPECT_EQ(rec.per_backend[0].backend, "synthetic");
}

TEST(Measure, FailedCommandKeepsRecord) {
  auto backend = realtime(100.0);
  counters::CounterBackend* list[] = {&backend};
  const auto rec = harness::measure({"false"}, list);
  EXPECT_NE(rec.exit_status, 0);
  EXPECT_TRUE(rec.command_failed());
  EXPECT_NE(std::find(rec.warnings.begin(), rec.warnings.end(), harness::kWarnCommandFailed),
            rec.warnings.end());
}

TEST(Measure, ShortRunIsLowConfidence) {
  auto backend = realtime(100.0);
  counters::CounterBackend* list[] = {&backend};
  const auto rec = harness::measure({"true"}, list);
  EXPECT_NE(std::find(rec.warnings.begin(), rec.warnings.end(), harness::kWarnLowConfidence),
            rec.warnings.end());
}

TEST(Measure, UnknownCommandFailsToSpawn) {
  auto backend = realtime(100.0);
  counters::CounterBackend* list[] = {&backend};
  try {
    harness::measure({"/nonexistent/ergmeter-no-such-binary"}, list);
    FAIL() << "expected CommandSpawnFailed";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::command_spawn_failed);
  }
}

TEST(Measure, StartupEventMidRunInvalidates) {
  auto s = script_of({{3600.0, 200.0}});
  s.startup_events = {0.3};
  SyntheticBackend backend(s, SyntheticBackend::ClockMode::real_time);
  counters::CounterBackend* list[] = {&backend};
  try {
    harness::measure({"sleep", "0.6"}, list);
    FAIL() << "expected InvalidRun";
  } catch (const harness::InvalidRunError& e) {
    EXPECT_EQ(e.code(), Errc::invalid_run);
    EXPECT_FALSE(e.record().valid);
  }
}

TEST(Measure, MultipleBackendsSumAndStayWithinBound) {
  auto a = realtime(100.0, "node0");
  auto b = realtime(250.0, "node1");
  counters::CounterBackend* list[] = {&a, &b};
  const auto rec = harness::measure({"sleep", "1"}, list);
  ASSERT_EQ(rec.per_backend.size(), 2u);
  EXPECT_DOUBLE_EQ(rec.energy_j, rec.per_backend[0].energy_j + rec.per_backend[1].energy_j);
  const double truth = 350.0 * rec.walltime_ms / 1000.0;
  EXPECT_LE(std::abs(rec.energy_j - truth), 2 * 250.0 / 10.0);
}

TEST(Measure, TraceIsCumulativeAndMonotone) {
  auto backend = realtime(100.0, "synthetic");
  counters::CounterBackend* list[] = {&backend};
  harness::MeasureOptions opts;
  opts.sample_hz = 20.0;
  const auto rec = harness::measure({"sleep", "0.5"}, list, opts);
  ASSERT_TRUE(rec.trace.has_value());
  ASSERT_GE(rec.trace->size(), 2u);
  for (std::size_t i = 1; i < rec.trace->size(); ++i) {
    EXPECT_GE((*rec.trace)[i].t_s, (*rec.trace)[i - 1].t_s);
    EXPECT_GE((*rec.trace)[i].cumulative_j, (*rec.trace)[i - 1].cumulative_j);
  }
}

TEST(Measure, RepeatsFillStatistics) {
  auto backend = realtime(100.0);
  counters::CounterBackend* list[] = {&backend};
  harness::MeasureOptions opts;
  opts.repeats = 3;
  opts.min_duration_warn_s = 0.0;
  const auto rec = harness::measure({"sleep", "0.2"}, list, opts);
  ASSERT_TRUE(rec.repeats.has_value());
  EXPECT_EQ(rec.repeats->n, 3);
  EXPECT_DOUBLE_EQ(rec.repeats->mean_j, rec.energy_j);
}

TEST(MeasureIdle, ConstantPower) {
  SyntheticBackend b(script_of({{3600.0, 100.0}}));
  VirtualClock clock({&b});
  counters::CounterBackend* list[] = {&b};
  const auto rec = harness::measure_idle(list, 60.0, clock);
  EXPECT_NEAR(rec.idle_power_w, 100.0, 100.0 / 10.0 / 60.0 + 1e-9);
  EXPECT_NEAR(rec.energy_j, 6000.0, 10.0);
  EXPECT_DOUBLE_EQ(rec.duration_s, 60.0);
}

TEST(MeasureIdle, TimeWeightedMean) {
  SyntheticBackend b(script_of({{30.0, 90.0}, {30.0, 110.0}}));
  VirtualClock clock({&b});
  counters::CounterBackend* list[] = {&b};
  const auto rec = harness::measure_idle(list, 60.0, clock);
  EXPECT_NEAR(rec.idle_power_w,
              oracle::time_weighted_mean({{30.0, 90.0}, {30.0, 110.0}}, 0.0, 60.0), 1e-9);
}

TEST(MeasureIdle, ZeroDurationRejected) {
  SyntheticBackend b(script_of({{1.0, 1.0}}));
  counters::CounterBackend* list[] = {&b};
  try {
    harness::measure_idle(list, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_duration);
  }
}

TEST(MeasureIdle, MatchesOracleOnRandomProfiles) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dur(0.5, 20.0);
  std::uniform_real_distribution<double> pow(10.0, 400.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<counters::PowerSegment> segs;
    std::vector<oracle::Segment> osegs;
    for (int i = 0; i < 4; ++i) {
      segs.push_back({dur(rng), pow(rng)});
      osegs.push_back({segs.back().duration_s, segs.back().power_w});
    }
    SyntheticBackend b(script_of(segs));
    VirtualClock clock({&b});
    counters::CounterBackend* list[] = {&b};
    const double d = dur(rng);
    const auto rec = harness::measure_idle(list, d, clock);
    const double p_max = std::max_element(segs.begin(), segs.end(), [](auto& x, auto& y) {
                           return x.power_w < y.power_w;
                         })->power_w;
    ASSERT_NEAR(rec.idle_power_w, oracle::time_weighted_mean(osegs, 0.0, d),
                p_max / 10.0 / d + 1e-9);
  }
}

TEST(Aggregate, MeanAndHalfRange) {
  const std::vector<MeasurementRecord> recs = {record({"a"}, 1000, 600), record({"a"}, 1100, 620)};
  const auto agg = harness::aggregate(recs);
  ASSERT_TRUE(agg.repeats.has_value());
  EXPECT_DOUBLE_EQ(agg.repeats->mean_j, 610.0);
  EXPECT_DOUBLE_EQ(agg.repeats->halfrange_j, 10.0);
  EXPECT_DOUBLE_EQ(agg.repeats->mean_ms, 1050.0);
  EXPECT_DOUBLE_EQ(agg.repeats->halfrange_ms, 50.0);
  EXPECT_EQ(agg.repeats->n, 2);
}

TEST(Aggregate, SingleRecordIdentity) {
  const std::vector<MeasurementRecord> recs = {record({"a"}, 1000, 600)};
  const auto agg = harness::aggregate(recs);
  EXPECT_DOUBLE_EQ(agg.repeats->mean_j, 600.0);
  EXPECT_DOUBLE_EQ(agg.repeats->halfrange_j, 0.0);
  EXPECT_DOUBLE_EQ(agg.energy_j, 600.0);
}

TEST(Aggregate, MixedCommandsRejected) {
  const std::vector<MeasurementRecord> recs = {record({"a"}, 1000, 600), record({"b"}, 1000, 600)};
  try {
    harness::aggregate(recs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::mixed_commands);
  }
}

TEST(Aggregate, InvalidRecordsNeverContribute) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> e(1.0, 1000.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<MeasurementRecord> recs;
    double lo = 1e300;
    double hi = -1e300;
    double sum = 0.0;
    int valid = 0;
    for (int i = 0; i < 6; ++i) {
      auto r = record({"x"}, 1000, e(rng));
      r.valid = (i == 0) || (rng() % 2 == 0);
      if (!r.valid) r.energy_j = 1e9;  // would dominate any statistic
      if (r.valid) {
        lo = std::min(lo, r.energy_j);
        hi = std::max(hi, r.energy_j);
        sum += r.energy_j;
        ++valid;
      }
      recs.push_back(r);
    }
    const auto agg = harness::aggregate(recs);
    ASSERT_EQ(agg.repeats->n, valid);
    ASSERT_NEAR(agg.repeats->mean_j, sum / valid, 1e-9);
    ASSERT_NEAR(agg.repeats->halfrange_j, (hi - lo) / 2, 1e-9);
  }
  std::vector<MeasurementRecord> none = {record({"x"}, 1, 1)};
  none[0].valid = false;
  try {
    harness::aggregate(none);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::no_valid_records);
  }
}

TEST(Record, JsonRoundTripAndCsv) {
  auto r = record({"sleep", "1"}, 1000.0, 300.0);
  r.warnings = {harness::kWarnLowConfidence};
  r.trace = std::vector<harness::TracePoint>{{0.0, 0.0}, {0.5, 150.0}};
  const nlohmann::json j = r;
  EXPECT_EQ(j.get<MeasurementRecord>(), r);
  EXPECT_EQ(std::string(harness::kRecordCsvHeader),
            "command,walltime_ms,energy_j,power_w,valid,exit_status");
  EXPECT_EQ(harness::to_csv_row(r), "sleep 1,1000,300,300,true,0");
}
