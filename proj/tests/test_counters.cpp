#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "ergmeter/counters.hpp"
#include "ergmeter/error.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ergmeter;
using namespace ergmeter::counters;

namespace {

template <typename F>
Errc error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no ergmeter::Error thrown";
  return Errc::invalid_argument;
}

SyntheticScript constant_script(double watts, double hz = 10.0) {
  SyntheticScript s;
  s.segments = {{3600.0, watts}};
  s.update_hz = hz;
  return s;
}

std::vector<oracle::Segment> as_oracle(const SyntheticScript& s) {
  std::vector<oracle::Segment> out;
  for (const auto& seg : s.segments) out.push_back({seg.duration_s, seg.power_w});
  return out;
}

SyntheticScript random_script(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nseg(1, 6);
  std::uniform_real_distribution<double> dur(0.05, 3.0);
  std::uniform_real_distribution<double> pow(0.0, 500.0);
  std::uniform_real_distribution<double> hz(1.0, 50.0);
  SyntheticScript s;
  const int n = nseg(rng);
  for (int i = 0; i < n; ++i) s.segments.push_back({dur(rng), pow(rng)});
  s.update_hz = hz(rng);
  return s;
}

}  // namespace

TEST(PmDir, ParsesEnergyAndStartupFiles) {
  testutil::TempDir dir;
  testutil::write_file(dir / "energy", "123456\n");
  testutil::write_file(dir / "startup", "7\n");
  PmDirBackend backend(dir.path());
  const auto s = backend.read_sample();
  EXPECT_EQ(s.energy_joules, 123456.0);
  EXPECT_EQ(s.startup_token, 7);
}

TEST(PmDir, AcceptsTrailingUnit) {
  testutil::TempDir dir;
  testutil::write_file(dir / "energy", "98765 J\n");
  testutil::write_file(dir / "startup", "1500000000\n");
  PmDirBackend backend(dir.path());
  const auto s = backend.read_sample();
  EXPECT_EQ(s.energy_joules, 98765.0);
  EXPECT_EQ(s.startup_token, 1500000000);
}

TEST(PmDir, CorruptOrMissingFilesAreUnreadable) {
  testutil::TempDir dir;
  testutil::write_file(dir / "energy", "12x34\n");
  testutil::write_file(dir / "startup", "7\n");
  PmDirBackend backend(dir.path());
  EXPECT_EQ(error_code_of([&] { backend.read_sample(); }), Errc::io_unreadable);

  testutil::TempDir empty;
  PmDirBackend missing(empty.path());
  EXPECT_EQ(error_code_of([&] { missing.read_sample(); }), Errc::io_unreadable);

  BackendDescriptor desc;
  desc.kind = BackendKind::pm_dir;
  desc.path = empty.path();
  EXPECT_EQ(error_code_of([&] { open_backend(desc); }), Errc::io_unreadable);
}

TEST(PmDir, TornReadRetriesThenFails) {
  int startup_reads = 0;
  PmDirBackend always_torn("/virtual", 10.0, [&](const std::filesystem::path& p) {
    if (p.filename() == "startup") return std::to_string(startup_reads++);
    return std::string("100");
  });
  EXPECT_EQ(error_code_of([&] { always_torn.read_sample(); }), Errc::torn_read);
  // Two startup reads per attempt, one attempt plus three retries.
  EXPECT_EQ(startup_reads, 2 * (1 + PmDirBackend::kTornReadRetries));

  int reads = 0;
  PmDirBackend torn_once("/virtual", 10.0, [&](const std::filesystem::path& p) {
    if (p.filename() == "startup") return std::string(reads++ == 0 ? "1" : "2");
    return std::string("100");
  });
  const auto s = torn_once.read_sample();
  EXPECT_EQ(s.startup_token, 2);
  EXPECT_EQ(s.energy_joules, 100.0);
}

TEST(Powercap, ConvertsMicrojoules) {
  testutil::TempDir dir;
  testutil::write_file(dir / "energy_uj", "5000000\n");
  PowercapBackend backend(dir.path());
  const auto s = backend.read_sample();
  EXPECT_DOUBLE_EQ(s.energy_joules, 5.0);
  EXPECT_EQ(s.startup_token, 0);
  EXPECT_FALSE(backend.wrap_range_uj().has_value());
}

TEST(Powercap, WrapRangeFromMaxFile) {
  testutil::TempDir dir;
  testutil::write_file(dir / "energy_uj", "1\n");
  testutil::write_file(dir / "max_energy_range_uj", "262143328850\n");
  PowercapBackend backend(dir.path());
  ASSERT_TRUE(backend.wrap_range_uj().has_value());
  EXPECT_EQ(*backend.wrap_range_uj(), 262143328851);

  PowercapBackend explicit_range(dir.path(), 1000);
  EXPECT_EQ(*explicit_range.wrap_range_uj(), 1000);
}

TEST(Synthetic, ConstantPowerReadAtTwoSeconds) {
  SyntheticBackend b(constant_script(300.0));
  b.advance(2.0);
  EXPECT_DOUBLE_EQ(b.read_sample().energy_joules, 600.0);
}

TEST(Synthetic, AdvanceZeroLeavesSampleUnchanged) {
  SyntheticBackend b(constant_script(300.0));
  b.advance(1.234);
  const auto first = b.read_sample();
  synth_advance(b, 0.0);
  const auto second = b.read_sample();
  EXPECT_EQ(first.energy_joules, second.energy_joules);
  EXPECT_EQ(first.startup_token, second.startup_token);
  EXPECT_GT(second.read_at, first.read_at);
}

TEST(Synthetic, SegmentIntegral) {
  SyntheticScript s;
  s.segments = {{1.0, 100.0}, {1.0, 200.0}};
  SyntheticBackend b(s);
  synth_advance(b, 2.0);
  EXPECT_DOUBLE_EQ(b.read_sample().energy_joules, 300.0);
}

TEST(Synthetic, StartupEventResetsEpoch) {
  auto s = constant_script(100.0);
  s.startup_events = {1.5};
  SyntheticBackend b(s);
  const auto before = b.read_sample();
  synth_advance(b, 2.0);
  const auto after = b.read_sample();
  EXPECT_EQ(after.startup_token, before.startup_token + 1);
  EXPECT_NEAR(after.energy_joules, 50.0, 1e-9);
}

TEST(Synthetic, PowerHoldsPastLastSegment) {
  SyntheticScript s;
  s.segments = {{1.0, 10.0}, {1.0, 20.0}};
  EXPECT_DOUBLE_EQ(s.integral(0.0, 5.0), 10.0 + 4 * 20.0);
  EXPECT_DOUBLE_EQ(s.power_at(100.0), 20.0);
}

TEST(Synthetic, ScriptValidation) {
  SyntheticScript empty;
  EXPECT_EQ(error_code_of([&] { empty.validate(); }), Errc::invalid_argument);
  auto neg = constant_script(-1.0);
  EXPECT_EQ(error_code_of([&] { neg.validate(); }), Errc::invalid_argument);
  auto zero_hz = constant_script(1.0, 0.0);
  EXPECT_EQ(error_code_of([&] { zero_hz.validate(); }), Errc::invalid_argument);
}

TEST(Synthetic, ScriptJsonRoundTrip) {
  SyntheticScript s;
  s.segments = {{2.5, 90.0}, {1.0, 110.0}};
  s.startup_events = {0.75};
  s.update_hz = 4.0;
  testutil::TempDir dir;
  testutil::write_file(dir / "s.json", nlohmann::json(s).dump());
  const auto back = load_synthetic_script(dir / "s.json");
  ASSERT_EQ(back.segments.size(), 2u);
  EXPECT_EQ(back.segments[1].power_w, 110.0);
  EXPECT_EQ(back.startup_events, s.startup_events);
  EXPECT_EQ(back.update_hz, 4.0);
}

TEST(EnergyDelta, SameToken) {
  EXPECT_DOUBLE_EQ(energy_delta({1000.0, 42, 0.0}, {1600.0, 42, 1.0}), 600.0);
}

TEST(EnergyDelta, TokenChangeInvalidates) {
  EXPECT_EQ(error_code_of([] { energy_delta({1000.0, 42, 0.0}, {1600.0, 43, 1.0}); }),
            Errc::startup_changed);
}

TEST(EnergyDelta, WrapUsesModularArithmetic) {
  const double d = energy_delta({0.999999, 0, 0.0}, {0.000500, 0, 1.0}, 1'000'000);
  EXPECT_NEAR(d, 0.000501, 1e-12);
}

TEST(EnergyDelta, DecreaseWithoutWrapIsError) {
  EXPECT_EQ(error_code_of([] { energy_delta({10.0, 1, 0.0}, {5.0, 1, 1.0}); }),
            Errc::negative_delta);
}

TEST(EnergyDelta, RandomWrapTriplesMatchRingOracle) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10000; ++i) {
    const std::int64_t range = std::uniform_int_distribution<std::int64_t>(2, 1LL << 38)(rng);
    std::uniform_int_distribution<std::int64_t> v(0, range - 1);
    const std::int64_t b = v(rng);
    const std::int64_t a = v(rng);
    const double d = energy_delta({b * 1e-6, 0, 0.0}, {a * 1e-6, 0, 1.0}, range);
    ASSERT_EQ(std::llround(d * 1e6), oracle::ring_delta_uj(b, a, range))
        << "before=" << b << " after=" << a << " range=" << range;
  }
}

TEST(SyntheticProperty, SameTokenReadsAreMonotone) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> step(0.0, 0.4);
  for (int trial = 0; trial < 200; ++trial) {
    SyntheticBackend b(random_script(rng));
    auto prev = b.read_sample();
    for (int i = 0; i < 50; ++i) {
      b.advance(step(rng));
      const auto cur = b.read_sample();
      ASSERT_GE(cur.energy_joules, prev.energy_joules);
      ASSERT_GT(cur.read_at, prev.read_at);
      prev = cur;
    }
  }
}

TEST(SyntheticProperty, QuantizationBound) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> watts(1.0, 1000.0);
  std::uniform_real_distribution<double> hz(0.5, 100.0);
  std::uniform_real_distribution<double> when(0.0, 100.0);
  for (int i = 0; i < 5000; ++i) {
    const double p = watts(rng);
    const double h = hz(rng);
    SyntheticBackend b(constant_script(p, h));
    const double t = when(rng);
    const double reported = b.sample_at(t).energy_joules;
    ASSERT_LE(std::abs(reported - p * t), p / h + 1e-9 * p * t);
  }
}

TEST(SyntheticProperty, DeltaMatchesAnalyticIntegral) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> when(0.0, 10.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto script = random_script(rng);
    SyntheticBackend b(script);
    double t0 = when(rng);
    double t1 = when(rng);
    if (t1 < t0) std::swap(t0, t1);
    const double d = energy_delta(b.sample_at(t0), b.sample_at(t1));
    const double truth = oracle::integral(as_oracle(script), t0, t1);
    const double step = script.max_power() / script.update_hz;
    ASSERT_LE(std::abs(d - truth), 2.0 * step + 1e-9);
  }
}

TEST(SyntheticProperty, StartupEventBetweenSamplesAlwaysInvalidates) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    auto script = random_script(rng);
    const double t0 = 10.0 * u(rng);
    const double t1 = t0 + 0.01 + 5.0 * u(rng);
    const double event = t0 + (t1 - t0) * (0.001 + 0.998 * u(rng));
    script.startup_events = {event};
    SyntheticBackend b(script);
    b.advance(t0);
    const auto before = b.read_sample();
    b.advance(t1 - t0);
    const auto after = b.read_sample();
    ASSERT_EQ(error_code_of([&] { energy_delta(before, after); }), Errc::startup_changed);
  }
}

TEST(SyntheticProperty, RealTimeClockFollowsSteadyClock) {
  SyntheticBackend b(constant_script(100.0, 1000.0), SyntheticBackend::ClockMode::real_time);
  const double t0 = b.now();
  b.advance(5.0);
  EXPECT_GE(b.now() - t0, 5.0);
}

TEST(ParseCounterText, Forms) {
  EXPECT_EQ(parse_counter_text("42", "x"), 42);
  EXPECT_EQ(parse_counter_text("  42 \n", "x"), 42);
  EXPECT_EQ(parse_counter_text("42 J\n", "x"), 42);
  EXPECT_EQ(error_code_of([] { parse_counter_text("", "x"); }), Errc::io_unreadable);
  EXPECT_EQ(error_code_of([] { parse_counter_text("-3", "x"); }), Errc::io_unreadable);
  EXPECT_EQ(error_code_of([] { parse_counter_text("4 J 5", "x"); }), Errc::io_unreadable);
}

TEST(BackendKind, StringRoundTrip) {
  for (auto k : {BackendKind::pm_dir, BackendKind::powercap, BackendKind::synthetic}) {
    EXPECT_EQ(backend_kind_from_string(to_string(k)), k);
  }
  EXPECT_EQ(error_code_of([] { backend_kind_from_string("rapl"); }), Errc::invalid_argument);
}
